//! KL divergence from a fixed target distribution to the model.

use crate::model::{distribution, moments, ExactDistribution, ModelShape, MomentVector, ParamVector};
use crate::{Error, Result};

/// The data distribution `P̂` together with its cached moments `E_P̂[O]`.
#[derive(Clone, Debug)]
pub struct TargetDistribution {
    dist: ExactDistribution,
    target_moments: MomentVector,
}

impl TargetDistribution {
    pub fn new(dist: ExactDistribution) -> Self {
        let target_moments = moments(&dist);
        Self {
            dist,
            target_moments,
        }
    }

    /// Infinite-sample target: the model distribution at `θ*`.
    pub fn from_params(theta: &ParamVector) -> Self {
        Self::new(distribution(theta))
    }

    pub fn shape(&self) -> ModelShape {
        self.dist.shape()
    }

    pub fn distribution(&self) -> &ExactDistribution {
        &self.dist
    }

    pub fn probs(&self) -> &[f64] {
        self.dist.probs()
    }

    pub fn target_moments(&self) -> &MomentVector {
        &self.target_moments
    }
}

/// `Σ_x P̂(x) ln(P̂(x) / P(x))` for an already evaluated model distribution.
pub fn kl_to(target: &TargetDistribution, model: &ExactDistribution) -> Result<f64> {
    let mut total = 0.0;
    let rows = target
        .probs()
        .iter()
        .zip(target.dist.log_probs())
        .zip(model.probs().iter().zip(model.log_probs()));
    for (state, ((&p_hat, &log_p_hat), (&p, &log_p))) in rows.enumerate() {
        if p_hat == 0.0 {
            continue;
        }
        if p == 0.0 || !log_p.is_finite() {
            return Err(Error::ModelSupport {
                state,
                n: target.shape().n(),
            });
        }
        total += p_hat * (log_p_hat - log_p);
    }
    Ok(total)
}

pub fn kl_loss(target: &TargetDistribution, theta: &ParamVector) -> Result<f64> {
    check_shape(target, theta)?;
    kl_to(target, &distribution(theta))
}

/// `∇L = E_P[O] − E_P̂[O]` given the model moments.
pub fn gradient_from_moments(target: &TargetDistribution, model_moments: &MomentVector) -> Vec<f64> {
    model_moments
        .iter()
        .zip(target.target_moments.iter())
        .map(|(m, t)| m - t)
        .collect()
}

pub fn loss_gradient(target: &TargetDistribution, theta: &ParamVector) -> Result<Vec<f64>> {
    check_shape(target, theta)?;
    Ok(gradient_from_moments(target, &moments(&distribution(theta))))
}

fn check_shape(target: &TargetDistribution, theta: &ParamVector) -> Result<()> {
    if target.shape() != theta.shape() {
        return Err(Error::DimensionMismatch {
            expected: target.shape().d(),
            actual: theta.len(),
        });
    }
    Ok(())
}
