use crate::apcc::{linkage_fk, phi_from_theta, SegmentParams};
use crate::error::Result;
use crate::geometry::{rot_z, skew, Mat3, PluckerLine, RigidTransform, Vec3};

use super::{Correspondence, ViewPairProblem};

/// Frames of one view: root C, middle joint A (before and B after its
/// rotation) and the camera D.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameChain {
    pub t_ca: RigidTransform,
    /// Pure rotation `rot_z(φ)`.
    pub t_ab: RigidTransform,
    /// Pure translation by the camera offset.
    pub t_bd: RigidTransform,
    pub t_cd: RigidTransform,
}

pub fn frame_chain(theta: f64, params: &SegmentParams, cam_offset: &Vec3) -> Result<FrameChain> {
    let pose = linkage_fk(theta, params)?;
    let phi = phi_from_theta(theta, params.k)?;
    let t_ca = pose.joint_pose;
    let t_ab = RigidTransform::from_rotation_z(phi);
    let t_bd = RigidTransform::from_translation(*cam_offset);
    let t_cd = t_ca * t_ab * t_bd;
    Ok(FrameChain {
        t_ca,
        t_ab,
        t_bd,
        t_cd,
    })
}

/// Block matrix `[[E, R], [R, 0]]` of the generalized epipolar constraint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GecMatrix {
    pub essential_block: Mat3,
    pub rotation_block: Mat3,
}

/// `[f; m]ᵀ [[E, R], [R, 0]] [f'; m']`.
pub fn gec_residual_raw(line1: &PluckerLine, line2: &PluckerLine, gec: &GecMatrix) -> f64 {
    let r = &gec.rotation_block;
    line1.direction.dot(&(gec.essential_block * line2.direction))
        + line1.direction.dot(&(r * line2.moment))
        + line1.moment.dot(&(r * line2.direction))
}

/// Constraint matrix between the two views expressed in the root frames C
/// and C'. The offsets `t_CA` and `t_C'A'` enter through the essential block:
///
/// ```text
/// E = [t_CC']ₓ R_CC' + R_CC' [t_C'A']ₓ - [t_CA]ₓ R_CC'
/// ```
pub fn build_apcc_gec(
    theta: f64,
    theta_prime: f64,
    params: &SegmentParams,
    root_motion: &RigidTransform,
) -> Result<GecMatrix> {
    let t_ca = *linkage_fk(theta, params)?.joint_pose.translation();
    let t_cpap = *linkage_fk(theta_prime, params)?.joint_pose.translation();
    let r = root_motion.rotation();
    let t = root_motion.translation();
    Ok(GecMatrix {
        essential_block: skew(t) * r + r * skew(&t_cpap) - skew(&t_ca) * r,
        rotation_block: *r,
    })
}

/// Ray of a bearing in the root-aligned frame of the middle joint: direction
/// `rot_z(θ) rot_z(-δ) f`, moment `(rot_z(θ) t_BD) × direction`.
pub fn view_lines(theta: f64, delta: f64, f: &Vec3, cam_offset: &Vec3) -> PluckerLine {
    let direction = rot_z(theta - delta) * f;
    let moment = (rot_z(theta) * cam_offset).cross(&direction);
    PluckerLine { direction, moment }
}

/// Constraint value for a trial second-view deflection `θ'`.
pub fn residual_of_theta(
    problem: &ViewPairProblem,
    correspondence: &Correspondence,
    theta_prime: f64,
) -> Result<f64> {
    let gec = build_apcc_gec(
        problem.theta_prev,
        theta_prime,
        &problem.params,
        &problem.root_motion,
    )?;
    let l1 = view_lines(
        problem.theta_prev,
        problem.delta_at(problem.theta_prev),
        &correspondence.f,
        &problem.cam_offset,
    );
    problem.params.check_range(theta_prime)?;
    let l2 = view_lines(
        theta_prime,
        problem.delta_at(theta_prime),
        &correspondence.f_prime,
        &problem.cam_offset,
    );
    Ok(gec_residual_raw(&l1, &l2, &gec))
}

/// The same constraint written between the two middle-joint frames B and B'
/// with `T_BB' = T_AB⁻¹ T_CA⁻¹ T_CC' T_C'A' T_A'B'`.
pub fn residual_in_mid_frame(
    problem: &ViewPairProblem,
    correspondence: &Correspondence,
    theta_prime: f64,
) -> Result<f64> {
    let first = frame_chain(problem.theta_prev, &problem.params, &problem.cam_offset)?;
    let second = frame_chain(theta_prime, &problem.params, &problem.cam_offset)?;
    let t_cb = first.t_ca * first.t_ab;
    let t_cpbp = second.t_ca * second.t_ab;
    let t_bbp = t_cb.inverse() * problem.root_motion * t_cpbp;
    let gec = GecMatrix {
        essential_block: skew(t_bbp.translation()) * t_bbp.rotation(),
        rotation_block: *t_bbp.rotation(),
    };
    let line = |delta: f64, f: &Vec3| {
        let direction = rot_z(-delta) * f;
        PluckerLine {
            direction,
            moment: problem.cam_offset.cross(&direction),
        }
    };
    let l1 = line(problem.delta_at(problem.theta_prev), &correspondence.f);
    let l2 = line(problem.delta_at(theta_prime), &correspondence.f_prime);
    Ok(gec_residual_raw(&l1, &l2, &gec))
}

/// Pose of the camera in the first-view root frame: rotation `rot_z(θ - δ)`
/// and center at the chain's camera position.
fn camera_in_root(
    theta: f64,
    delta: f64,
    params: &SegmentParams,
    cam_offset: &Vec3,
) -> Result<(Mat3, Vec3)> {
    let chain = frame_chain(theta, params, cam_offset)?;
    Ok((rot_z(theta - delta), *chain.t_cd.translation()))
}

/// Precomputed first-view rays for repeated evaluation over `θ'`.
///
/// Residuals are evaluated as the triple product `b · (d₂ × d₁)` of the
/// baseline and both ray directions in frame C, which equals the block
/// form of [`residual_of_theta`].
#[derive(Debug, Clone)]
pub struct PairEvaluator<'a> {
    problem: &'a ViewPairProblem,
    center1: Vec3,
    dirs1: Vec<Vec3>,
}

/// Second-view camera expressed in frame C.
#[derive(Debug, Clone, Copy)]
struct SecondView {
    rotation: Mat3,
    center: Vec3,
}

impl<'a> PairEvaluator<'a> {
    pub fn new(problem: &'a ViewPairProblem) -> Result<Self> {
        problem.validate()?;
        let theta = problem.theta_prev;
        let (rot, center1) = camera_in_root(
            theta,
            problem.delta_at(theta),
            &problem.params,
            &problem.cam_offset,
        )?;
        let dirs1 = problem.correspondences.iter().map(|c| rot * c.f).collect();
        Ok(Self {
            problem,
            center1,
            dirs1,
        })
    }

    pub fn len(&self) -> usize {
        self.dirs1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dirs1.is_empty()
    }

    pub(crate) fn theta_max(&self) -> f64 {
        self.problem.params.theta_max
    }

    fn second_view(&self, theta_prime: f64, delta_prime: f64) -> Result<SecondView> {
        let p = self.problem;
        let (rot, center) = camera_in_root(theta_prime, delta_prime, &p.params, &p.cam_offset)?;
        Ok(SecondView {
            rotation: p.root_motion.rotation() * rot,
            center: p.root_motion.transform_point(&center),
        })
    }

    /// Triple-product residuals of all correspondences.
    pub fn raw(&self, theta_prime: f64, delta_prime: f64) -> Result<Vec<f64>> {
        let view = self.second_view(theta_prime, delta_prime)?;
        let baseline = view.center - self.center1;
        Ok(self
            .problem
            .correspondences
            .iter()
            .zip(&self.dirs1)
            .map(|(c, d1)| baseline.dot(&(view.rotation * c.f_prime).cross(d1)))
            .collect())
    }

    fn baseline_direction(&self, theta_prime: f64, delta_prime: f64, view: &SecondView) -> Result<Vec3> {
        let baseline = view.center - self.center1;
        let norm = baseline.norm();
        if norm > 1e-12 * self.problem.params.length {
            return Ok(baseline / norm);
        }
        // Coincident centers: the constraint is scale free in the baseline, so
        // use the direction the center moves in as θ' leaves this point.
        let h = 1e-6;
        let step = if theta_prime + h <= self.problem.params.theta_max { h } else { -h };
        let moved = self.second_view(theta_prime + step, delta_prime)?;
        let b = (moved.center - self.center1) * step.signum();
        Ok(b.try_normalize(0.0).unwrap_or_else(Vec3::zeros))
    }

    /// First-order angular residuals: the triple product divided by its
    /// gradient with respect to both bearings. Independent of baseline length.
    pub fn sampson_into(&self, theta_prime: f64, delta_prime: f64, out: &mut Vec<f64>) -> Result<()> {
        let view = self.second_view(theta_prime, delta_prime)?;
        let b = self.baseline_direction(theta_prime, delta_prime, &view)?;
        out.clear();
        out.extend(
            self.problem
                .correspondences
                .iter()
                .zip(&self.dirs1)
                .map(|(c, d1)| {
                    let d2 = view.rotation * c.f_prime;
                    let r = b.dot(&d2.cross(d1));
                    let g1 = b.cross(&d2);
                    let g2 = d1.cross(&b);
                    let g1 = g1 - d1 * g1.dot(d1);
                    let g2 = g2 - d2 * g2.dot(&d2);
                    r / (g1.norm_squared() + g2.norm_squared()).sqrt().max(1e-9)
                }),
        );
        Ok(())
    }

    pub fn sampson(&self, theta_prime: f64, delta_prime: f64) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(self.len());
        self.sampson_into(theta_prime, delta_prime, &mut out)?;
        Ok(out)
    }
}

/// Angular residual of one correspondence at `θ'`, with the second-view
/// correction fixed at `delta_prime`.
pub fn sampson_residual(
    problem: &ViewPairProblem,
    correspondence: &Correspondence,
    theta_prime: f64,
    delta_prime: f64,
) -> Result<f64> {
    let single = ViewPairProblem {
        correspondences: vec![*correspondence],
        ..problem.clone()
    };
    Ok(PairEvaluator::new(&single)?.sampson(theta_prime, delta_prime)?[0])
}
