//! Kinematics and camera-based configuration estimation for continuum robot
//! segments that deviate from constant curvature.
//!
//! - [`geometry`]: rigid motions, Plücker lines, pinhole camera.
//! - [`pcc`]: ideal constant-curvature arcs.
//! - [`apcc`]: the two-link equivalent model and its tip-angle correction.
//! - [`calibration`]: deviation coefficient and tip-angle calibration.
//! - [`estimation`]: one-point solvers, RANSAC and chaining.
//! - [`sim`]: synthetic measurements and Monte Carlo experiments.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod apcc;
pub mod calibration;
pub mod error;
pub mod estimation;
pub mod geometry;
pub mod numeric;
pub mod pcc;
pub mod sim;

pub use error::{Error, Result};
