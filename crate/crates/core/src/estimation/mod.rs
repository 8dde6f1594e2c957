//! Configuration estimation from a tip-mounted camera.
//!
//! Two views of one segment are related by the known root motion `T_CC'`,
//! the known first-view deflection `θ` and the unknown second-view
//! deflection `θ'`. Every bearing correspondence gives one scalar constraint
//! in `θ'` (a generalized epipolar constraint between two Plücker rays), so a
//! single correspondence is a minimal sample.

mod chain;
mod gec;
mod poly;
mod ransac;
mod solver;

pub use chain::{
    estimate_multisegment, estimate_sequence, MultiSegmentOutcome, SegmentObservation,
    SequenceOutcome,
};
pub use gec::{
    build_apcc_gec, frame_chain, gec_residual_raw, residual_in_mid_frame, residual_of_theta,
    sampson_residual, view_lines, FrameChain, GecMatrix, PairEvaluator,
};
pub use poly::Poly;
pub use ransac::{ransac_estimate, Candidate, Estimate, RansacConfig};
pub use solver::{
    residual_polynomial, solve_1pt_poly, solve_1pt_poly_frozen, solve_1pt_scan, MinimalSolution,
    SCAN_GRID_POINTS,
};

use crate::apcc::SegmentParams;
use crate::error::{Error, Result};
use crate::geometry::{RigidTransform, Vec3, BEARING_TOL};

/// One feature seen in both views, as unit bearings in the tip frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correspondence {
    pub f: Vec3,
    pub f_prime: Vec3,
}

impl Correspondence {
    pub fn new(f: Vec3, f_prime: Vec3) -> Result<Self> {
        for v in [&f, &f_prime] {
            let n = v.norm();
            if !((n - 1.0).abs() <= BEARING_TOL) {
                return Err(Error::NonUnitBearing(n));
            }
        }
        Ok(Self { f, f_prime })
    }
}

/// Everything the single-segment estimator consumes.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewPairProblem {
    pub params: SegmentParams,
    /// Deflection in the first view (known).
    pub theta_prev: f64,
    /// `T_CC'`: second-view root frame expressed in the first-view root frame.
    pub root_motion: RigidTransform,
    /// Camera center in frame B.
    pub cam_offset: Vec3,
    pub correspondences: Vec<Correspondence>,
    /// Apply the tip-angle correction to the bearings.
    pub apply_delta: bool,
}

impl ViewPairProblem {
    /// Problem with the camera at the linkage tip and correction enabled.
    pub fn new(
        params: SegmentParams,
        theta_prev: f64,
        root_motion: RigidTransform,
        correspondences: Vec<Correspondence>,
    ) -> Self {
        Self {
            cam_offset: default_cam_offset(&params),
            params,
            theta_prev,
            root_motion,
            correspondences,
            apply_delta: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.params.check_range(self.theta_prev)?;
        if self.correspondences.is_empty() {
            return Err(Error::NotEnoughCorrespondences {
                required: 1,
                got: 0,
            });
        }
        if !self.cam_offset.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParams("cam_offset must be finite".into()));
        }
        Ok(())
    }

    /// Tip-angle correction applied at `theta`.
    pub fn delta_at(&self, theta: f64) -> f64 {
        if self.apply_delta {
            self.params.delta_max * theta / self.params.theta_max
        } else {
            0.0
        }
    }

    /// Magnitude scale of raw residuals, used by degeneracy tests.
    pub(crate) fn residual_scale(&self) -> f64 {
        self.params.length + self.root_motion.translation().norm() + self.cam_offset.norm()
    }
}

/// Camera at the distal end of the linkage: `(0, kL, 0)` in frame B.
pub fn default_cam_offset(params: &SegmentParams) -> Vec3 {
    Vec3::new(0.0, params.distal_length(), 0.0)
}
