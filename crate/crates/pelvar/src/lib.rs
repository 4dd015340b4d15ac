//! Risk quantification toolkit built around the Flexible Expected
//! Shortfall family: a coherent one-parameter bridge between Expected
//! Shortfall and the mean whose calibrated member reproduces Value at
//! Risk exactly at a chosen level.
//!
//! Modules:
//! - [`dist`]: parametric loss families with closed quantile / ES / θ forms
//! - [`measures`]: FES, the θ flexibility index, and VaR replication
//! - [`empirical`]: plug-in estimators from samples, kernel smoothing
//! - [`allocation`]: Euler capital allocation for portfolio components
//! - [`copula`]: dependent scenario simulation and subadditivity stress
//! - [`backtest`]: claims-panel descriptive statistics and VaR prediction

pub mod allocation;
pub mod backtest;
pub mod copula;
pub mod dist;
pub mod empirical;
pub mod error;
pub mod measures;
pub mod quad;
pub mod rng;
pub mod special;

pub use dist::{LossModel, ProbLevel};
pub use error::{Result, RiskError};
