//! Two-link, five-joint equivalent of an approximately constant curvature
//! segment.
//!
//! In the bending plane the segment is replaced by two rigid links: the
//! proximal link `l₁ = (1-k)L` is rotated by `θ-φ` at the root, the distal
//! link `l₂ = kL` by a further `φ` at the middle joint. `φ` is tied to `θ`
//! so that the tip stays on the chord of the ideal arc:
//!
//! ```text
//! tan(θ/2) · (cos φ + r) = sin φ,     r = k / (1-k)
//! ```
//!
//! The measured tip orientation lags the ideal deflection by
//! `δ = δ_max · θ / θ_max`; joint positions keep the uncorrected geometry.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{rot_z, RigidTransform, Vec3};
use crate::pcc;

/// Upper bound accepted for the calibrated maximum deflection (rad).
pub const THETA_MAX_LIMIT: f64 = 1.6;

/// Physical and calibrated constants of one segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentParams {
    /// Segment length (m).
    pub length: f64,
    /// Deviation coefficient, the distal link fraction.
    pub k: f64,
    /// Tip-angle deviation at `theta_max` (rad).
    pub delta_max: f64,
    /// Largest calibrated deflection (rad).
    pub theta_max: f64,
}

impl SegmentParams {
    pub fn new(length: f64, k: f64, delta_max: f64, theta_max: f64) -> Result<Self> {
        let p = Self {
            length,
            k,
            delta_max,
            theta_max,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        if !(self.length > 0.0) || !self.length.is_finite() {
            return bad(format!("length must be > 0, got {}", self.length));
        }
        if !(self.k > 0.0 && self.k < 1.0) {
            return bad(format!("k must lie in (0, 1), got {}", self.k));
        }
        if !(self.theta_max > 0.0 && self.theta_max <= THETA_MAX_LIMIT) {
            return bad(format!(
                "theta_max must lie in (0, {THETA_MAX_LIMIT}], got {}",
                self.theta_max
            ));
        }
        if !(self.delta_max >= 0.0 && self.delta_max < self.theta_max) {
            return bad(format!(
                "delta_max must lie in [0, theta_max), got {}",
                self.delta_max
            ));
        }
        Ok(())
    }

    pub fn proximal_length(&self) -> f64 {
        (1.0 - self.k) * self.length
    }

    pub fn distal_length(&self) -> f64 {
        self.k * self.length
    }

    /// `k / (1-k)`.
    pub fn ratio(&self) -> f64 {
        self.k / (1.0 - self.k)
    }

    pub(crate) fn check_range(&self, theta: f64) -> Result<()> {
        if theta.is_finite() && theta.abs() <= self.theta_max * (1.0 + 1e-12) {
            Ok(())
        } else {
            Err(Error::BeyondCalibratedRange {
                theta,
                theta_max: self.theta_max,
            })
        }
    }
}

/// Frames of the linkage, all expressed in the segment root frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkagePose {
    /// Middle joint, before its rotation (frame A).
    pub joint_pose: RigidTransform,
    /// Middle joint, after its rotation (frame B).
    pub mid_pose: RigidTransform,
    /// Linkage tip (frame D).
    pub tip_pose: RigidTransform,
}

/// Residual of `tan(θ/2)(cos φ + r) = sin φ`, multiplied through by `cos(θ/2)`.
pub fn phi_constraint_residual(theta: f64, phi: f64, k: f64) -> f64 {
    let r = k / (1.0 - k);
    let (sh, ch) = (0.5 * theta).sin_cos();
    sh * (phi.cos() + r) - ch * phi.sin()
}

/// Second joint angle `φ` for the deflection `θ`.
pub fn phi_from_theta(theta: f64, k: f64) -> Result<f64> {
    let unsolvable = Err(Error::PhiUnsolvable { theta, k });
    if !(theta.abs() < std::f64::consts::PI) || !(k > 0.0 && k < 1.0) {
        return unsolvable;
    }
    let r = k / (1.0 - k);
    let s = r * (0.5 * theta).sin();
    if !(s.abs() <= 1.0) {
        return unsolvable;
    }
    let phi = 0.5 * theta + s.asin();
    if phi_constraint_residual(theta, phi, k).abs() > 1e-12 * (1.0 + r) {
        return unsolvable;
    }
    Ok(phi)
}

/// Linear tip-angle deviation model.
pub fn delta_correction(theta: f64, params: &SegmentParams) -> Result<f64> {
    params.check_range(theta)?;
    Ok(params.delta_max * theta / params.theta_max)
}

/// Modified tip deflection `θ̂ = θ - δ(θ)`.
pub fn corrected_tip_angle(theta: f64, params: &SegmentParams) -> Result<f64> {
    Ok(theta - delta_correction(theta, params)?)
}

pub fn linkage_fk(theta: f64, params: &SegmentParams) -> Result<LinkagePose> {
    params.check_range(theta)?;
    let phi = phi_from_theta(theta, params.k)?;
    let first = theta - phi;
    let r_first = rot_z(first);
    let joint = r_first * Vec3::new(0.0, params.proximal_length(), 0.0);
    let joint_pose = RigidTransform::from_parts(r_first, joint);
    let mid_pose = joint_pose * RigidTransform::from_rotation_z(phi);
    let tip_pose =
        mid_pose * RigidTransform::from_translation(Vec3::new(0.0, params.distal_length(), 0.0));
    Ok(LinkagePose {
        joint_pose,
        mid_pose,
        tip_pose,
    })
}

/// Physical tip frame: linkage tip position, orientation `rot_z(θ̂)`.
///
/// This is the frame a following segment is attached to.
pub fn segment_tip_transform(theta: f64, params: &SegmentParams) -> Result<RigidTransform> {
    let pose = linkage_fk(theta, params)?;
    let corrected = corrected_tip_angle(theta, params)?;
    Ok(RigidTransform::from_parts(
        rot_z(corrected),
        *pose.tip_pose.translation(),
    ))
}

pub fn tip_trajectory(params: &SegmentParams, theta_grid: &[f64]) -> Result<Vec<Vec3>> {
    theta_grid
        .iter()
        .map(|&t| linkage_fk(t, params).map(|p| *p.tip_pose.translation()))
        .collect()
}

/// Per-sample tip errors and their (population) standard deviations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryErrorStats {
    pub pcc_errors: Vec<f64>,
    pub apcc_errors: Vec<f64>,
    pub pcc_error_std: f64,
    pub apcc_error_std: f64,
}

fn population_std(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}

/// Compares the ideal arc and the calibrated linkage against the tip
/// trajectory of the linkage under `actual`.
pub fn trajectory_error_stats(
    actual: &SegmentParams,
    calibrated: &SegmentParams,
    theta_grid: &[f64],
) -> Result<TrajectoryErrorStats> {
    if theta_grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let truth = tip_trajectory(actual, theta_grid)?;
    let model = tip_trajectory(calibrated, theta_grid)?;
    let mut pcc_errors = Vec::with_capacity(truth.len());
    let mut apcc_errors = Vec::with_capacity(truth.len());
    for ((&theta, t), m) in theta_grid.iter().zip(&truth).zip(&model) {
        let arc = pcc::cc_transform(&pcc::CcSegmentState::planar(actual.length, theta))?;
        pcc_errors.push((arc.translation() - t).norm());
        apcc_errors.push((m - t).norm());
    }
    Ok(TrajectoryErrorStats {
        pcc_error_std: population_std(&pcc_errors),
        apcc_error_std: population_std(&apcc_errors),
        pcc_errors,
        apcc_errors,
    })
}
