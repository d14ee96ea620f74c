//! Synthetic ground truth, method comparisons and PCA views of learning paths.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::loss::{kl_loss, TargetDistribution};
use crate::model::{ModelShape, ParamVector};
use crate::optim::{run, InitStrategy, OptimizerConfig, RunTrajectory};
use crate::rng::GaussianSampler;
use crate::{Error, Result};

/// Recipe for a ground-truth model: `θ_i ~ N(0, sigma²)` drawn from `seed`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthSpec {
    pub n: usize,
    pub sigma: f64,
    pub seed: u64,
}

impl TruthSpec {
    pub fn validate(&self) -> Result<ModelShape> {
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::Config(format!("sigma must be non-negative, got {}", self.sigma)));
        }
        ModelShape::new(self.n)
    }
}

/// Samples `θ_true` and builds the infinite-sample target `P(x; θ_true)`.
pub fn make_truth(spec: &TruthSpec) -> Result<(ParamVector, TargetDistribution)> {
    let shape = spec.validate()?;
    let values = GaussianSampler::new(spec.seed).normal_vec(shape.d(), spec.sigma);
    let theta = ParamVector::new(shape, values)?;
    let target = TargetDistribution::from_params(&theta);
    Ok((theta, target))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    /// `(θ_true_i, θ_inferred_i)` per component.
    pub pairs: Vec<(f64, f64)>,
    pub rmse: f64,
    pub pearson_r: f64,
}

impl AccuracyReport {
    pub fn new(truth: &[f64], inferred: &[f64]) -> Self {
        assert_eq!(truth.len(), inferred.len(), "accuracy needs matching dimensions");
        let len = truth.len() as f64;
        let pairs: Vec<(f64, f64)> = truth.iter().copied().zip(inferred.iter().copied()).collect();
        let rmse = (pairs.iter().map(|(t, i)| (t - i).powi(2)).sum::<f64>() / len).sqrt();
        let mean_t = truth.iter().sum::<f64>() / len;
        let mean_i = inferred.iter().sum::<f64>() / len;
        let (mut cov, mut var_t, mut var_i) = (0.0, 0.0, 0.0);
        for (t, i) in &pairs {
            cov += (t - mean_t) * (i - mean_i);
            var_t += (t - mean_t).powi(2);
            var_i += (i - mean_i).powi(2);
        }
        let pearson_r = if var_t > 0.0 && var_i > 0.0 && cov.is_finite() {
            (cov / (var_t.sqrt() * var_i.sqrt())).clamp(-1.0, 1.0)
        } else {
            // Undefined for a constant vector.
            0.0
        };
        Self {
            pairs,
            rmse,
            pearson_r,
        }
    }
}

/// One labelled optimizer setup in a comparison.
#[derive(Clone, Debug, PartialEq)]
pub struct MethodSpec {
    pub label: String,
    pub config: OptimizerConfig,
    pub init: InitStrategy,
}

#[derive(Clone, Debug)]
pub struct MethodResult {
    pub label: String,
    pub init: InitStrategy,
    pub trajectory: RunTrajectory,
    pub accuracy: AccuracyReport,
}

/// Runs every method against the same target, in parallel, returning results
/// in input order. Accuracy is scored on the last finite `θ` of each run.
pub fn compare_methods(
    target: &TargetDistribution,
    theta_true: &ParamVector,
    methods: &[MethodSpec],
) -> Result<Vec<MethodResult>> {
    methods
        .par_iter()
        .map(|spec| run_method(target, theta_true, spec))
        .collect()
}

/// Runs a single method and scores it against `theta_true`.
pub fn run_method(target: &TargetDistribution, theta_true: &ParamVector, spec: &MethodSpec) -> Result<MethodResult> {
    let trajectory = run(target, &spec.config, spec.init)?;
    let accuracy = AccuracyReport::new(theta_true, trajectory.final_finite_theta());
    Ok(MethodResult {
        label: spec.label.clone(),
        init: spec.init,
        trajectory,
        accuracy,
    })
}

/// Mean Euclidean distance between two paths, index-aligned over their common
/// length.
pub fn mean_path_distance(a: &RunTrajectory, b: &RunTrajectory) -> f64 {
    let len = a.records.len().min(b.records.len());
    let total: f64 = a.records[..len]
        .iter()
        .zip(&b.records[..len])
        .map(|(x, y)| {
            x.theta
                .iter()
                .zip(&y.theta)
                .map(|(p, q)| (p - q).powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .sum();
    total / len as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub pc1: f64,
    pub pc2: f64,
    pub loss: f64,
}

/// Learning paths projected on their two leading principal axes, plus the
/// loss evaluated on a grid over that plane.
#[derive(Clone, Debug)]
pub struct PcaProjection {
    pub mean: Vec<f64>,
    pub axes: [Vec<f64>; 2],
    /// Variance of the pooled points along each axis.
    pub explained_variance: [f64; 2],
    pub paths: Vec<Vec<(f64, f64)>>,
    pub grid_size: usize,
    /// `grid_size²` points, `pc1` varying slowest.
    pub grid: Vec<GridPoint>,
}

impl PcaProjection {
    pub fn project(&self, theta: &[f64]) -> (f64, f64) {
        let dot = |axis: &[f64]| {
            theta
                .iter()
                .zip(&self.mean)
                .zip(axis)
                .map(|((t, m), a)| (t - m) * a)
                .sum::<f64>()
        };
        (dot(&self.axes[0]), dot(&self.axes[1]))
    }

    /// `mean + a·axis1 + b·axis2`.
    pub fn reconstruct(&self, a: f64, b: f64) -> Vec<f64> {
        self.mean
            .iter()
            .zip(&self.axes[0])
            .zip(&self.axes[1])
            .map(|((m, u), v)| m + a * u + b * v)
            .collect()
    }

    /// KL loss at a point of the plane; `+∞` where the model underflows.
    pub fn loss_at(&self, target: &TargetDistribution, a: f64, b: f64) -> f64 {
        plane_loss(target, self.reconstruct(a, b))
    }
}

fn plane_loss(target: &TargetDistribution, theta: Vec<f64>) -> f64 {
    ParamVector::new(target.shape(), theta)
        .and_then(|t| kl_loss(target, &t))
        .unwrap_or(f64::INFINITY)
}

fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![0.5 * (lo + hi)];
    }
    let step = (hi - lo) / (count - 1) as f64;
    (0..count).map(|i| lo + step * i as f64).collect()
}

/// Fits PCA on the pooled points of all paths and evaluates the loss grid.
///
/// Non-finite points (from diverged runs) are left out of the fit and of the
/// projected paths. A path set that collapses to a single point has no
/// principal direction and is rejected; a set spanning only one direction
/// gets an arbitrary orthogonal second axis.
pub fn pca_of_paths(
    paths: &[Vec<Vec<f64>>],
    target: &TargetDistribution,
    grid_size: usize,
    margin: f64,
) -> Result<PcaProjection> {
    let d = target.shape().d();
    if d < 2 {
        return Err(Error::Config("PCA plane needs a parameter dimension of at least 2".into()));
    }
    if grid_size == 0 || !(margin >= 0.0 && margin.is_finite()) {
        return Err(Error::Config(format!(
            "grid size must be positive and margin non-negative (got {grid_size}, {margin})"
        )));
    }
    let paths: Vec<Vec<&Vec<f64>>> = paths
        .iter()
        .map(|p| p.iter().filter(|t| t.iter().all(|v| v.is_finite())).collect())
        .collect();
    let points: Vec<&Vec<f64>> = paths.iter().flatten().copied().collect();
    if let Some(bad) = points.iter().find(|t| t.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: bad.len(),
        });
    }
    let Some(first) = points.first() else {
        return Err(Error::RankDeficient);
    };
    if points.iter().all(|t| t == first) {
        return Err(Error::RankDeficient);
    }

    let count = points.len() as f64;
    let mut mean = vec![0.0; d];
    for t in &points {
        for (m, v) in mean.iter_mut().zip(t.iter()) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= count);

    let mut scatter = DMatrix::<f64>::zeros(d, d);
    let mut centered = vec![0.0; d];
    for t in &points {
        for (c, (v, m)) in centered.iter_mut().zip(t.iter().zip(&mean)) {
            *c = v - m;
        }
        for i in 0..d {
            for j in i..d {
                scatter[(i, j)] += centered[i] * centered[j];
            }
        }
    }
    for i in 0..d {
        for j in i..d {
            let v = scatter[(i, j)] / count;
            scatter[(i, j)] = v;
            scatter[(j, i)] = v;
        }
    }

    let eigen = SymmetricEigen::new(scatter);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eigen.eigenvalues[b].total_cmp(&eigen.eigenvalues[a]));
    let axis = |k: usize| -> Vec<f64> {
        let mut v: Vec<f64> = eigen.eigenvectors.column(order[k]).iter().copied().collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        // Sign convention: the largest-magnitude component is positive.
        let pivot = v
            .iter()
            .copied()
            .fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
        let scale = if pivot < 0.0 { -1.0 / norm } else { 1.0 / norm };
        v.iter_mut().for_each(|x| *x *= scale);
        v
    };
    let axes = [axis(0), axis(1)];
    let explained_variance = [eigen.eigenvalues[order[0]].max(0.0), eigen.eigenvalues[order[1]].max(0.0)];

    let mut projection = PcaProjection {
        mean,
        axes,
        explained_variance,
        paths: Vec::new(),
        grid_size,
        grid: Vec::new(),
    };
    projection.paths = paths
        .iter()
        .map(|p| p.iter().map(|t| projection.project(t)).collect())
        .collect();

    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for &(a, b) in projection.paths.iter().flatten() {
        lo = [lo[0].min(a), lo[1].min(b)];
        hi = [hi[0].max(a), hi[1].max(b)];
    }
    let widest = (hi[0] - lo[0]).max(hi[1] - lo[1]);
    let ranges: Vec<Vec<f64>> = (0..2)
        .map(|k| {
            let mut extent = hi[k] - lo[k];
            if extent <= 1e-12 * widest {
                // Flat direction: give the grid the same extent as the other axis.
                extent = widest;
                lo[k] -= 0.5 * widest;
                hi[k] += 0.5 * widest;
            }
            linspace(lo[k] - margin * extent, hi[k] + margin * extent, grid_size)
        })
        .collect();

    let cells: Vec<(f64, f64)> = ranges[0]
        .iter()
        .flat_map(|&a| ranges[1].iter().map(move |&b| (a, b)))
        .collect();
    projection.grid = cells
        .par_iter()
        .map(|&(pc1, pc2)| GridPoint {
            pc1,
            pc2,
            loss: projection.loss_at(target, pc1, pc2),
        })
        .collect();
    Ok(projection)
}

/// [`pca_of_paths`] over the recorded `θ` of each trajectory.
pub fn pca_of_trajectories(
    trajectories: &[&RunTrajectory],
    target: &TargetDistribution,
    grid_size: usize,
    margin: f64,
) -> Result<PcaProjection> {
    let paths: Vec<Vec<Vec<f64>>> = trajectories
        .iter()
        .map(|t| t.records.iter().map(|r| r.theta.clone()).collect())
        .collect();
    pca_of_paths(&paths, target, grid_size, margin)
}
