//! Terramechanics toolkit for legged locomotion on granular slopes.
//!
//! - [`model`]: closed-form stride model and regime classification
//! - [`calibration`]: terrain strength from force–displacement records
//! - [`phase`]: regime maps over (k_n, k_s) with the `s = R` contour
//! - [`planner`]: slope and risk maps from heightmaps, minimum-risk paths
//! - [`format`]: fixed-precision number output

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod format;
pub mod model;
pub mod phase;
pub mod planner;

pub use model::{
    net_step, RegimeLabel, RobotConfig, ShearStrengthProfile, SlopeAngle, StepKinematics,
    StrideOutcome, TerrainStrength,
};
