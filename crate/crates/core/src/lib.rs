//! Kinematics-informed neural sampling of robot joint configurations.
//!
//! The crate trains networks that map task poses to joint configurations by
//! backpropagating through differentiable forward kinematics, and compares
//! them against random sampling, a supervised regressor and DDPG.

pub mod autodiff;
pub mod harness;
pub mod kinematics;
pub mod metrics;
pub mod models;
pub mod samplers;
