//! Chaining single-pair estimates over time and along the robot.

use serde::Serialize;

use crate::apcc::{linkage_fk, SegmentParams};
use crate::error::{Error, Result};
use crate::geometry::{RigidTransform, Vec3};

use super::ransac::{ransac_estimate, Estimate, RansacConfig};
use super::{Correspondence, ViewPairProblem};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SequenceOutcome {
    pub estimates: Vec<Estimate>,
    /// Index of the view pair that stopped the chain, with its error.
    #[serde(skip)]
    pub failure: Option<(usize, Error)>,
}

/// Solves the view pairs in order, feeding each estimate in as the next
/// pair's first-view deflection. Only the first problem's `theta_prev` is
/// used. Pair `i` is sampled with seed `config.seed + i`.
pub fn estimate_sequence(problems: &[ViewPairProblem], config: &RansacConfig) -> SequenceOutcome {
    let mut estimates = Vec::with_capacity(problems.len());
    let mut theta_prev = problems.first().map(|p| p.theta_prev);
    for (i, template) in problems.iter().enumerate() {
        let problem = ViewPairProblem {
            theta_prev: theta_prev.unwrap_or(template.theta_prev),
            ..template.clone()
        };
        let cfg = RansacConfig {
            seed: config.seed.wrapping_add(i as u64),
            ..*config
        };
        match ransac_estimate(&problem, &cfg) {
            Ok(est) => {
                theta_prev = Some(est.theta);
                estimates.push(est);
            }
            Err(e) => {
                return SequenceOutcome {
                    estimates,
                    failure: Some((i, e)),
                }
            }
        }
    }
    SequenceOutcome {
        estimates,
        failure: None,
    }
}

/// Observations of one segment's tip camera in both views.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentObservation {
    pub params: SegmentParams,
    /// Known first-view deflection.
    pub theta_prev: f64,
    pub cam_offset: Vec3,
    pub correspondences: Vec<Correspondence>,
    pub apply_delta: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiSegmentOutcome {
    pub estimates: Vec<Estimate>,
    #[serde(skip)]
    pub failure: Option<(usize, Error)>,
}

/// Frame the next segment is attached to, under the estimator's correction
/// setting.
fn attachment_frame(problem: &ViewPairProblem, theta: f64) -> Result<RigidTransform> {
    let tip = linkage_fk(theta, &problem.params)?.tip_pose;
    Ok(RigidTransform::planar(
        theta - problem.delta_at(theta),
        *tip.translation(),
    ))
}

/// Solves segments from the root outward. Segment `i+1`'s root motion is
/// `tip_i(θ)⁻¹ · T_CC'ᵢ · tip_i(θ̂')`.
pub fn estimate_multisegment(
    segments: &[SegmentObservation],
    base_motion: RigidTransform,
    config: &RansacConfig,
) -> MultiSegmentOutcome {
    let mut estimates = Vec::with_capacity(segments.len());
    let mut root_motion = base_motion;
    for (i, seg) in segments.iter().enumerate() {
        let problem = ViewPairProblem {
            params: seg.params,
            theta_prev: seg.theta_prev,
            root_motion,
            cam_offset: seg.cam_offset,
            correspondences: seg.correspondences.clone(),
            apply_delta: seg.apply_delta,
        };
        let cfg = RansacConfig {
            seed: config.seed.wrapping_add(i as u64),
            ..*config
        };
        let step = ransac_estimate(&problem, &cfg).and_then(|est| {
            let before = attachment_frame(&problem, problem.theta_prev)?;
            let after = attachment_frame(&problem, est.theta)?;
            Ok((est, before.inverse() * root_motion * after))
        });
        match step {
            Ok((est, next)) => {
                estimates.push(est);
                root_motion = next;
            }
            Err(e) => {
                return MultiSegmentOutcome {
                    estimates,
                    failure: Some((i, e)),
                }
            }
        }
    }
    MultiSegmentOutcome {
        estimates,
        failure: None,
    }
}
