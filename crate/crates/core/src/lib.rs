//! Exact maximum-likelihood training of the fully-visible Hopfield model.
//!
//! The model is the exponential family `P(x; θ) = exp(θ·O(x)) / Z` over spin
//! vectors `x ∈ {−1, +1}^n`, with operators `O(x) = (x_1, …, x_n, x_1 x_2, …)`.
//! Everything is evaluated by exact enumeration of all `2^n` states, so the
//! crate is meant for `n` up to about 20.
//!
//! Four optimizers are provided: gradient descent, natural gradient descent,
//! mirror descent with the curvature refreshed every step, and mirror descent
//! with a fixed curvature taken at the target distribution. The [`experiment`]
//! module reproduces the comparison protocols and the PCA view of the learning
//! paths; [`cli`] wraps those into the `hopfield-md` command.

pub mod cli;
pub mod config;
mod error;
pub mod experiment;
pub mod io;
pub mod loss;
pub mod model;
pub mod optim;
pub mod rng;

pub use error::{Error, Result};
pub use loss::{kl_loss, loss_gradient, TargetDistribution};
pub use model::{
    covariance, distribution, log_partition, moments, operator_vector, CovarianceMatrix,
    ExactDistribution, ModelShape, MomentVector, ParamVector, SpinState,
};
pub use optim::{
    gd_step, init_params, md_step, ngd_step, regularized_solve, run, InitStrategy, Method,
    OptimizerConfig, RunStatus, RunTrajectory, StepRecord,
};
