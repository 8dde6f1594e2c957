//! Ideal piecewise-constant-curvature forward kinematics.
//!
//! A segment of length `L` bent by the deflection angle `θ` is a circular arc
//! leaving the base along +y. Positive `θ` bends toward -x. The tip frame is
//! `rot_z(θ)` at the arc end point
//! `(L/θ)·(cos θ - 1, sin θ, 0)`.
//!
//! The `1/θ` factor is evaluated through a Taylor series near the straight
//! configuration, where the closed form loses precision.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{rot_y, rot_z, RigidTransform, Vec3};

/// Below this deflection the series branch is used.
pub const SERIES_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CcSegmentState {
    /// Arc length in meters.
    pub length: f64,
    /// Axial rotation of the bending plane about the base tangent.
    pub psi: f64,
    /// Deflection angle.
    pub theta: f64,
}

impl CcSegmentState {
    pub fn planar(length: f64, theta: f64) -> Self {
        Self {
            length,
            psi: 0.0,
            theta,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.length > 0.0) || !self.length.is_finite() {
            return Err(Error::InvalidParams(format!(
                "segment length must be > 0, got {}",
                self.length
            )));
        }
        if !self.psi.is_finite() || !(self.theta.abs() < std::f64::consts::PI) {
            return Err(Error::DeflectionOutOfRange(self.theta));
        }
        Ok(())
    }
}

/// Closed-form planar tip position; cancellation-free but singular at `θ = 0`.
pub fn exact_translation(length: f64, theta: f64) -> Vec3 {
    let half = 0.5 * theta;
    let sh = half.sin();
    Vec3::new(
        -2.0 * length * sh * sh / theta,
        length * theta.sin() / theta,
        0.0,
    )
}

/// Two-term Taylor expansion of [`exact_translation`] about `θ = 0`.
pub fn series_translation(length: f64, theta: f64) -> Vec3 {
    let t2 = theta * theta;
    Vec3::new(
        length * (-0.5 * theta + theta * t2 / 24.0),
        length * (1.0 - t2 / 6.0),
        0.0,
    )
}

fn planar_translation(length: f64, theta: f64) -> Vec3 {
    if theta.abs() < SERIES_THRESHOLD {
        series_translation(length, theta)
    } else {
        exact_translation(length, theta)
    }
}

pub fn cc_transform(state: &CcSegmentState) -> Result<RigidTransform> {
    state.validate()?;
    let bend = RigidTransform::from_parts(
        rot_z(state.theta),
        planar_translation(state.length, state.theta),
    );
    if state.psi == 0.0 {
        return Ok(bend);
    }
    let axial = RigidTransform::from_parts(rot_y(state.psi), Vec3::zeros());
    Ok(axial * bend * axial.inverse())
}

/// Point at the fraction `s` of the arc length along a planar arc.
pub fn arc_point(length: f64, theta: f64, s: f64) -> Vec3 {
    planar_translation(length * s, theta * s)
}

/// Cumulative base-to-tip transforms of a chain of segments.
pub fn chain_fk(states: &[CcSegmentState]) -> Result<Vec<RigidTransform>> {
    let mut out = Vec::with_capacity(states.len());
    let mut acc = RigidTransform::identity();
    for state in states {
        acc = acc * cc_transform(state)?;
        out.push(acc);
    }
    Ok(out)
}

#[cfg(test)]
#[allow(clippy::approx_constant)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn straight_limit() {
        let t = cc_transform(&CcSegmentState::planar(0.5, 0.0)).unwrap();
        assert!((t.translation() - Vec3::new(0.0, 0.5, 0.0)).norm() < 1e-15);
        assert_eq!(*t.rotation(), crate::geometry::Mat3::identity());
    }

    #[test]
    fn quarter_turn() {
        let t = cc_transform(&CcSegmentState::planar(0.5, FRAC_PI_2)).unwrap();
        let expected = Vec3::new(-0.5 / FRAC_PI_2, 0.5 / FRAC_PI_2, 0.0);
        assert!((t.translation() - expected).norm() < 1e-15);
        assert!((t.translation().x + 0.31831).abs() < 1e-5);
    }

    #[test]
    fn tip_tangent_matches_arc_derivative() {
        let theta = 60f64.to_radians();
        let t = cc_transform(&CcSegmentState::planar(1.0, theta)).unwrap();
        let tangent = t.rotation() * Vec3::y();
        let h = 1e-6;
        let fd = (arc_point(1.0, theta, 1.0) - arc_point(1.0, theta, 1.0 - h)) / h;
        assert!((tangent - fd).norm() < 1e-5);
        assert!((tangent - Vec3::new(-0.86603, 0.5, 0.0)).norm() < 1e-5);
    }

    #[test]
    fn out_of_range() {
        assert_eq!(
            cc_transform(&CcSegmentState::planar(1.0, PI)),
            Err(Error::DeflectionOutOfRange(PI))
        );
        assert!(cc_transform(&CcSegmentState::planar(0.0, 0.1)).is_err());
    }

    #[test]
    fn arc_point_cases() {
        assert_eq!(arc_point(0.5, 1.0, 0.0), Vec3::zeros());
        let p = arc_point(0.5, FRAC_PI_2, 1.0);
        assert!((p - Vec3::new(-0.318309886183791, 0.318309886183791, 0.0)).norm() < 1e-12);
        assert!((arc_point(2.0, 0.0, 0.3) - Vec3::new(0.0, 0.6, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn chain_cases() {
        assert!(chain_fk(&[]).unwrap().is_empty());
        let s = CcSegmentState::planar(0.5, 0.2);
        assert_eq!(chain_fk(&[s]).unwrap(), vec![cc_transform(&s).unwrap()]);
        let straight = CcSegmentState::planar(0.5, 0.0);
        let tips = chain_fk(&[straight, straight]).unwrap();
        assert!((tips[0].translation().y - 0.5).abs() < 1e-15);
        assert!((tips[1].translation().y - 1.0).abs() < 1e-15);
    }

    #[test]
    fn axial_rotation_keeps_tip_distance() {
        let planar = cc_transform(&CcSegmentState::planar(1.0, 0.8)).unwrap();
        let spatial = cc_transform(&CcSegmentState {
            length: 1.0,
            psi: 0.9,
            theta: 0.8,
        })
        .unwrap();
        assert!((planar.translation().norm() - spatial.translation().norm()).abs() < 1e-14);
        assert!((planar.translation().y - spatial.translation().y).abs() < 1e-14);
    }
}
