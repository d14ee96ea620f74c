//! Gradient descent, natural gradient descent and mirror descent.
//!
//! Mirror descent runs in three stages per step: map `θ` to the dual point
//! `μ = E_P[O]`, take a plain gradient step `μ' = μ − α∇L` there, and map
//! back through the linearized inverse `θ' = θ + C̃⁻¹(μ' − μ)` with the
//! regularized curvature `C̃ = C + εI`. With `C` the covariance at `θ` this
//! is the natural gradient step; with `C` frozen at the target it is the
//! fixed-curvature variant.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::loss::{gradient_from_moments, kl_to, TargetDistribution};
use crate::model::{covariance, distribution, moments, CovarianceMatrix, MomentVector, ParamVector};
use crate::rng::GaussianSampler;
use crate::{Error, Result};

pub const DEFAULT_ALPHA: f64 = 1e-3;
pub const DEFAULT_EPSILON: f64 = 1e-6;
pub const DEFAULT_MAX_ITERS: usize = 5000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Gd,
    Ngd,
    Md,
    MdFixed,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Gd => "gd",
            Method::Ngd => "ngd",
            Method::Md => "md",
            Method::MdFixed => "md-fixed",
        }
    }

    pub fn uses_curvature(self) -> bool {
        self != Method::Gd
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gd" => Ok(Method::Gd),
            "ngd" => Ok(Method::Ngd),
            "md" => Ok(Method::Md),
            "md-fixed" => Ok(Method::MdFixed),
            other => Err(Error::Config(format!(
                "unknown method `{other}`, expected one of gd, ngd, md, md-fixed"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub method: Method,
    pub alpha: f64,
    /// Curvature regularizer; ignored by GD.
    pub epsilon: f64,
    pub max_iters: usize,
    /// Stop once `max_i |∇L_i| < grad_tol`. Zero disables the check.
    pub grad_tol: f64,
}

impl OptimizerConfig {
    pub fn new(method: Method, alpha: f64) -> Self {
        Self {
            method,
            alpha,
            epsilon: DEFAULT_EPSILON,
            max_iters: DEFAULT_MAX_ITERS,
            grad_tol: 0.0,
        }
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn with_grad_tol(mut self, grad_tol: f64) -> Self {
        self.grad_tol = grad_tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::Config(format!("alpha must be positive, got {}", self.alpha)));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Config(format!(
                "epsilon must be non-negative, got {}",
                self.epsilon
            )));
        }
        if self.grad_tol.is_nan() || self.grad_tol < 0.0 {
            return Err(Error::Config(format!(
                "grad_tol must be non-negative, got {}",
                self.grad_tol
            )));
        }
        Ok(())
    }

    /// The regularized step is only guaranteed bounded for `α/ε < 1`.
    pub fn stability_warning(&self) -> Option<String> {
        (self.method.uses_curvature() && self.epsilon > 0.0 && self.alpha / self.epsilon >= 1.0)
            .then(|| {
                format!(
                    "alpha/eps = {:.3e} >= 1: {} steps are not bounded by the regularizer and may diverge",
                    self.alpha / self.epsilon,
                    self.method
                )
            })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InitStrategy {
    /// Independent `N(0, sigma²)` draws, biases first, then couplings.
    Random { seed: u64, sigma: f64 },
    /// `θ⁰ = E_P̂[O]`.
    Hopfield,
}

impl InitStrategy {
    pub fn label(&self) -> &'static str {
        match self {
            InitStrategy::Random { .. } => "random",
            InitStrategy::Hopfield => "hopfield",
        }
    }
}

pub fn init_params(strategy: InitStrategy, target: &TargetDistribution) -> ParamVector {
    let shape = target.shape();
    match strategy {
        InitStrategy::Hopfield => target.target_moments().to_params(),
        InitStrategy::Random { seed, sigma } => {
            let values = GaussianSampler::new(seed).normal_vec(shape.d(), sigma);
            ParamVector::from_raw(shape, values)
        }
    }
}

pub fn gd_step(theta: &ParamVector, grad: &[f64], alpha: f64) -> ParamVector {
    let values = theta.iter().zip(grad).map(|(t, g)| t - alpha * g).collect();
    ParamVector::from_raw(theta.shape(), values)
}

/// Cholesky factor of `C + εI`, reusable across solves.
#[derive(Clone, Debug)]
pub struct RegularizedCurvature {
    factor: Cholesky<f64, Dyn>,
}

impl RegularizedCurvature {
    pub fn new(c: &CovarianceMatrix, epsilon: f64) -> Result<Self> {
        let d = c.dim();
        let shifted = c.as_matrix() + DMatrix::<f64>::identity(d, d) * epsilon;
        Cholesky::new(shifted)
            .map(|factor| Self { factor })
            .ok_or(Error::Factorization { epsilon })
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        self.factor
            .solve(&DVector::from_column_slice(rhs))
            .data
            .into()
    }
}

/// Solves `(C + εI) v = rhs` by Cholesky factorization.
pub fn regularized_solve(c: &CovarianceMatrix, epsilon: f64, rhs: &[f64]) -> Result<Vec<f64>> {
    if rhs.len() != c.dim() {
        return Err(Error::DimensionMismatch {
            expected: c.dim(),
            actual: rhs.len(),
        });
    }
    Ok(RegularizedCurvature::new(c, epsilon)?.solve(rhs))
}

fn ngd_with(theta: &ParamVector, grad: &[f64], curvature: &RegularizedCurvature, alpha: f64) -> ParamVector {
    let direction = curvature.solve(grad);
    gd_step(theta, &direction, alpha)
}

fn md_with(
    theta: &ParamVector,
    mu: &MomentVector,
    grad: &[f64],
    curvature: &RegularizedCurvature,
    alpha: f64,
) -> (ParamVector, MomentVector) {
    // The dual displacement is −αg; it is mapped back through the solve
    // directly rather than recovered as μ' − μ, which would cancel digits.
    // The scalar is applied after the solve so no extra rounding enters.
    let mu_next = mu.iter().zip(grad).map(|(m, g)| m - alpha * g).collect();
    let primal_step = curvature.solve(grad);
    let theta_next = theta.iter().zip(&primal_step).map(|(t, s)| t - alpha * s).collect();
    (
        ParamVector::from_raw(theta.shape(), theta_next),
        MomentVector::from_raw(mu.shape(), mu_next),
    )
}

/// `θ' = θ − α (C + εI)⁻¹ g`.
pub fn ngd_step(
    theta: &ParamVector,
    grad: &[f64],
    c: &CovarianceMatrix,
    alpha: f64,
    epsilon: f64,
) -> Result<ParamVector> {
    Ok(ngd_with(theta, grad, &RegularizedCurvature::new(c, epsilon)?, alpha))
}

/// One mirror-descent step from `(θ, μ)`, returning `(θ', μ')`.
///
/// `mu` must be the moments of the model at `theta`; `c` is either the
/// covariance at `theta` or a fixed curvature.
pub fn md_step(
    theta: &ParamVector,
    mu: &MomentVector,
    grad: &[f64],
    c: &CovarianceMatrix,
    alpha: f64,
    epsilon: f64,
) -> Result<(ParamVector, MomentVector)> {
    Ok(md_with(theta, mu, grad, &RegularizedCurvature::new(c, epsilon)?, alpha))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RunStatus {
    Converged,
    MaxIters,
    Diverged,
}

impl fmt::Display for RunStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RunStatus::Converged => "CONVERGED",
            RunStatus::MaxIters => "MAX_ITERS",
            RunStatus::Diverged => "DIVERGED",
        })
    }
}

/// State of the model at the start of iteration `iter`.
#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord {
    pub iter: usize,
    pub theta: Vec<f64>,
    pub mu: Vec<f64>,
    pub loss: f64,
    pub grad_norm: f64,
}

#[derive(Clone, Debug)]
pub struct RunTrajectory {
    pub config: OptimizerConfig,
    pub records: Vec<StepRecord>,
    pub status: RunStatus,
    pub warnings: Vec<String>,
}

impl RunTrajectory {
    pub fn initial(&self) -> &StepRecord {
        &self.records[0]
    }

    pub fn last(&self) -> &StepRecord {
        self.records.last().expect("trajectory always holds the initial record")
    }

    /// Last recorded parameter vector whose entries are all finite.
    pub fn final_finite_theta(&self) -> &[f64] {
        self.records
            .iter()
            .rev()
            .map(|r| r.theta.as_slice())
            .find(|t| t.iter().all(|v| v.is_finite()))
            .unwrap_or(&self.records[0].theta)
    }

    pub fn losses(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.loss)
    }

    /// First iteration whose loss is at or below `threshold`.
    pub fn first_iter_reaching(&self, threshold: f64) -> Option<usize> {
        self.records.iter().find(|r| r.loss <= threshold).map(|r| r.iter)
    }
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| if x.is_nan() { f64::NAN } else { m.max(x.abs()) })
}

/// Runs the configured optimizer from the initialization strategy.
pub fn run(target: &TargetDistribution, config: &OptimizerConfig, init: InitStrategy) -> Result<RunTrajectory> {
    run_from(target, config, init_params(init, target))
}

/// Runs the configured optimizer from an explicit `θ⁰`.
///
/// A factorization failure on the very first step is returned as an error;
/// later failures, non-finite parameters and underflowing losses end the run
/// with [`RunStatus::Diverged`].
pub fn run_from(
    target: &TargetDistribution,
    config: &OptimizerConfig,
    theta0: ParamVector,
) -> Result<RunTrajectory> {
    config.validate()?;
    if theta0.shape() != target.shape() {
        return Err(Error::DimensionMismatch {
            expected: target.shape().d(),
            actual: theta0.len(),
        });
    }
    let mut warnings: Vec<String> = config.stability_warning().into_iter().collect();
    let fixed = match config.method {
        Method::MdFixed => {
            let c0 = covariance(target.distribution());
            Some(RegularizedCurvature::new(&c0, config.epsilon)?)
        }
        _ => None,
    };

    let mut records = Vec::with_capacity(config.max_iters.min(1 << 16) + 1);
    let mut theta = theta0;
    let mut iter = 0;
    let status = loop {
        let model = distribution(&theta);
        let mu = moments(&model);
        let grad = gradient_from_moments(target, &mu);
        let grad_norm = max_norm(&grad);
        let finite = theta.is_finite();
        let loss = if finite {
            kl_to(target, &model).unwrap_or(f64::INFINITY)
        } else {
            f64::NAN
        };
        records.push(StepRecord {
            iter,
            theta: theta.as_slice().to_vec(),
            mu: mu.as_slice().to_vec(),
            loss,
            grad_norm,
        });

        if !finite || !loss.is_finite() || !grad_norm.is_finite() {
            break RunStatus::Diverged;
        }
        if grad_norm < config.grad_tol {
            break RunStatus::Converged;
        }
        if iter == config.max_iters {
            break RunStatus::MaxIters;
        }

        theta = match config.method {
            Method::Gd => gd_step(&theta, &grad, config.alpha),
            Method::MdFixed => {
                let curvature = fixed.as_ref().expect("fixed curvature is set for md-fixed");
                md_with(&theta, &mu, &grad, curvature, config.alpha).0
            }
            Method::Ngd | Method::Md => {
                let curvature = match RegularizedCurvature::new(&covariance(&model), config.epsilon) {
                    Ok(c) => c,
                    Err(e) if iter == 0 => return Err(e),
                    Err(e) => {
                        warnings.push(format!("iteration {iter}: {e}"));
                        break RunStatus::Diverged;
                    }
                };
                if config.method == Method::Ngd {
                    ngd_with(&theta, &grad, &curvature, config.alpha)
                } else {
                    md_with(&theta, &mu, &grad, &curvature, config.alpha).0
                }
            }
        };
        iter += 1;
    };

    Ok(RunTrajectory {
        config: *config,
        records,
        status,
        warnings,
    })
}
