//! Imitation learning with a value-based prior.
//!
//! Estimates a mentor's time-indexed stochastic policy in a finite-horizon
//! tabular MDP from demonstrations, using `exp(α V(π))` as an unnormalized
//! prior, and ships the baselines and maze environments used to evaluate it.
//!
//! Numerical code is generic over [`Scalar`] (`f32`, `f64`); the aliases
//! below fix it to `f64`, which is what the CLI and experiments use.

pub mod baselines;
pub mod dataset;
pub mod error;
pub mod estimator;
pub mod io;
pub mod maze;
pub mod mdp;
pub mod reduction;
pub mod scalar;

pub use dataset::{count_tensor, CountTensor, Trajectory, TrajectoryDataset};
pub use error::{Error, Result};
pub use estimator::{alternating_maximize, EstimationResult, EstimatorConfig, InitMode};
pub use mdp::{Dims, FiniteHorizonMdp, Policy, TieBreak, ValueTable};
pub use scalar::Scalar;

pub type Mdp = FiniteHorizonMdp<f64>;
pub type Mdp32 = FiniteHorizonMdp<f32>;
pub type PolicyF64 = Policy<f64>;
pub type PolicyF32 = Policy<f32>;
pub type Values = ValueTable<f64>;
pub type Config = EstimatorConfig<f64>;
pub type Estimate = EstimationResult<f64>;
