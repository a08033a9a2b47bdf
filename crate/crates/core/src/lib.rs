//! Graph-conditioned Gaussian trust regions for query-efficient MaxCut QAOA.
//!
//! A graph neural network predicts a diagonal Gaussian over depth-p QAOA
//! angles. The Gaussian fixes a Mahalanobis trust region and, through its
//! total variance, the number of circuit evaluations spent on the instance.

pub mod baselines;
pub mod bench;
pub mod calibration;
pub mod graph;
pub mod linalg;
pub mod nelder_mead;
pub mod objective;
pub mod predictor;
pub mod qaoa;
pub mod rng;
pub mod search;
pub mod stats;
pub mod trust;
