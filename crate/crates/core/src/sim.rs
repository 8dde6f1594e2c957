//! Synthetic two-view measurements and the Monte Carlo experiments built on
//! them.
//!
//! Every trial owns a ChaCha8 stream selected by `(root mode, trial)`, so a
//! trial sees the same geometry and the same standard-normal draws at every
//! noise level and results do not depend on thread scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::apcc::{linkage_fk, SegmentParams};
use crate::error::{Error, Result};
use crate::estimation::{
    default_cam_offset, estimate_sequence, ransac_estimate, Correspondence, RansacConfig,
    SegmentObservation, ViewPairProblem,
};
use crate::geometry::{back_project, project, PinholeCamera, Pixel, RigidTransform, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RootMode {
    Fixed,
    Moved,
}

impl RootMode {
    pub fn name(self) -> &'static str {
        match self {
            RootMode::Fixed => "fixed",
            RootMode::Moved => "moved",
        }
    }

    pub fn stream_tag(self) -> u64 {
        match self {
            RootMode::Fixed => 0,
            RootMode::Moved => 1,
        }
    }
}

/// Experiment settings. Angles in radians, lengths in meters, noise in pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub params: SegmentParams,
    pub focal: f64,
    pub n_landmarks: usize,
    pub landmark_min: Vec3,
    pub landmark_max: Vec3,
    pub noise_sigmas: Vec<f64>,
    /// First-view deflections are drawn from `[-theta_range, theta_range]`.
    pub theta_range: f64,
    /// Bound on `|θ' - θ|`.
    pub step_bound: f64,
    pub root_modes: Vec<RootMode>,
    pub root_rotation_range: f64,
    pub root_translation_bound: f64,
    pub trials: usize,
    pub seed: u64,
    /// Share of correspondences replaced by uniform random pixels.
    pub outlier_fraction: f64,
    /// Landmarks must lie within this angle of the optical axis in both views.
    pub max_view_angle: f64,
    /// Minimum landmark depth along the optical axis.
    pub min_depth: f64,
    /// Passed through to the estimator. The simulated robot always deviates
    /// by `params.delta_max`.
    pub apply_delta: bool,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            params: SegmentParams {
                length: 0.5,
                k: 0.25,
                delta_max: 0.0,
                theta_max: 60f64.to_radians(),
            },
            focal: 500.0,
            n_landmarks: 50,
            landmark_min: Vec3::new(-2.0, 1.0, -1.0),
            landmark_max: Vec3::new(2.0, 4.0, 1.0),
            noise_sigmas: vec![0.0, 0.5, 1.0, 2.0, 5.0],
            theta_range: 50f64.to_radians(),
            step_bound: 5f64.to_radians(),
            root_modes: vec![RootMode::Fixed, RootMode::Moved],
            root_rotation_range: 5f64.to_radians(),
            root_translation_bound: 0.1,
            trials: 5000,
            seed: 0,
            outlier_fraction: 0.0,
            max_view_angle: 60f64.to_radians(),
            min_depth: 0.05,
            apply_delta: true,
        }
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidScenario(m.into()));
        self.params.validate()?;
        if !(self.focal > 0.0) {
            return bad("focal must be positive");
        }
        if self.n_landmarks < 2 {
            return bad("need at least two landmarks");
        }
        if (0..3).any(|i| !(self.landmark_min[i] < self.landmark_max[i])) {
            return bad("landmark box must have positive extent");
        }
        if self.noise_sigmas.iter().any(|s| !(*s >= 0.0) || !s.is_finite()) {
            return bad("noise sigmas must be finite and non-negative");
        }
        if !(self.theta_range > 0.0) || !(self.step_bound > 0.0) {
            return bad("theta_range and step_bound must be positive");
        }
        if self.theta_range + self.step_bound > self.params.theta_max * (1.0 + 1e-12) {
            return bad("theta_range + step_bound exceeds theta_max");
        }
        if !(self.root_rotation_range > 0.0) || !(self.root_translation_bound > 0.0) {
            return bad("root motion bounds must be positive");
        }
        if self.trials == 0 {
            return bad("trials must be at least 1");
        }
        if !(0.0..1.0).contains(&self.outlier_fraction) {
            return bad("outlier_fraction must lie in [0, 1)");
        }
        if !(self.max_view_angle > 0.0 && self.max_view_angle < std::f64::consts::FRAC_PI_2) {
            return bad("max_view_angle must lie in (0, 90°)");
        }
        if !(self.min_depth > 0.0) {
            return bad("min_depth must be positive");
        }
        Ok(())
    }

    fn camera(&self) -> Result<PinholeCamera> {
        PinholeCamera::tip_aligned(self.focal)
    }
}

/// Truth behind a generated problem. Kept apart from the estimator input.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub theta: f64,
    pub theta_prime: f64,
    pub root_motion: RigidTransform,
    /// `false` for correspondences replaced by outliers.
    pub is_inlier: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedProblem {
    pub problem: ViewPairProblem,
    pub truth: GroundTruth,
}

/// Pose of the physical tip camera frame in the segment root frame.
pub fn camera_pose(theta: f64, params: &SegmentParams, cam_offset: &Vec3) -> Result<RigidTransform> {
    let mid = linkage_fk(theta, params)?.mid_pose;
    let center = mid.transform_point(cam_offset);
    let delta = params.delta_max * theta / params.theta_max;
    Ok(RigidTransform::planar(theta - delta, center))
}

/// Per-trial random stream.
pub fn trial_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

const PLACEMENT_RETRIES: usize = 1000;

fn visible(cam: &PinholeCamera, max_angle: f64, min_depth: f64, p: &Vec3) -> Option<Pixel> {
    let depth = p.y;
    if depth < min_depth || p.norm() * max_angle.cos() > depth {
        return None;
    }
    project(cam, p).ok()
}

fn noisy(rng: &mut ChaCha8Rng, px: Pixel, sigma: f64) -> Pixel {
    let zu: f64 = rng.sample(StandardNormal);
    let zv: f64 = rng.sample(StandardNormal);
    Pixel {
        u: px.u + sigma * zu,
        v: px.v + sigma * zv,
    }
}

/// Bearing pairs for landmarks drawn from the box (given in `world`
/// coordinates) as seen by two cameras with the given world poses.
fn synthesize(
    scenario: &Scenario,
    sigma: f64,
    world_from_cam1: &RigidTransform,
    world_from_cam2: &RigidTransform,
    box_shift: &Vec3,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<Correspondence>, Vec<bool>)> {
    let cam = scenario.camera()?;
    let to1 = world_from_cam1.inverse();
    let to2 = world_from_cam2.inverse();
    let (lo, hi) = (scenario.landmark_min + box_shift, scenario.landmark_max + box_shift);
    let mut pixels = Vec::with_capacity(scenario.n_landmarks);
    for _ in 0..scenario.n_landmarks {
        let mut placed = None;
        for _ in 0..PLACEMENT_RETRIES {
            let p = Vec3::new(
                rng.random_range(lo.x..hi.x),
                rng.random_range(lo.y..hi.y),
                rng.random_range(lo.z..hi.z),
            );
            let a = visible(&cam, scenario.max_view_angle, scenario.min_depth, &to1.transform_point(&p));
            let b = visible(&cam, scenario.max_view_angle, scenario.min_depth, &to2.transform_point(&p));
            if let (Some(a), Some(b)) = (a, b) {
                placed = Some((a, b));
                break;
            }
        }
        pixels.push(placed.ok_or(Error::LandmarkPlacement)?);
    }

    let n_out = (scenario.outlier_fraction * scenario.n_landmarks as f64).round() as usize;
    let mut is_inlier = vec![true; scenario.n_landmarks];
    for i in rand::seq::index::sample(rng, scenario.n_landmarks, n_out) {
        is_inlier[i] = false;
    }
    let half = scenario.focal * scenario.max_view_angle.tan();
    let corrs = pixels
        .into_iter()
        .zip(&is_inlier)
        .map(|((a, b), &inlier)| {
            let a = noisy(rng, a, sigma);
            let b = noisy(rng, b, sigma);
            let b = if inlier {
                b
            } else {
                Pixel {
                    u: rng.random_range(-half..half),
                    v: rng.random_range(-half..half),
                }
            };
            Correspondence {
                f: back_project(&cam, &a),
                f_prime: back_project(&cam, &b),
            }
        })
        .collect();
    Ok((corrs, is_inlier))
}

/// Synthesizes the view pair `(θ, θ')` under `root_motion` with pixel noise
/// `sigma`.
pub fn gen_problem(
    theta: f64,
    theta_prime: f64,
    root_motion: &RigidTransform,
    scenario: &Scenario,
    sigma: f64,
    rng: &mut ChaCha8Rng,
) -> Result<GeneratedProblem> {
    let params = &scenario.params;
    params.check_range(theta)?;
    params.check_range(theta_prime)?;
    let offset = default_cam_offset(params);
    let cam1 = camera_pose(theta, params, &offset)?;
    let cam2 = root_motion * &camera_pose(theta_prime, params, &offset)?;
    let (correspondences, is_inlier) = synthesize(scenario, sigma, &cam1, &cam2, &Vec3::zeros(), rng)?;
    let mut problem = ViewPairProblem::new(*params, theta, *root_motion, correspondences);
    problem.apply_delta = scenario.apply_delta;
    Ok(GeneratedProblem {
        problem,
        truth: GroundTruth {
            theta,
            theta_prime,
            root_motion: *root_motion,
            is_inlier,
        },
    })
}

/// Draws `(θ, θ', T_CC')` for one trial.
pub fn draw_configuration(
    scenario: &Scenario,
    mode: RootMode,
    rng: &mut ChaCha8Rng,
) -> (f64, f64, RigidTransform) {
    let theta_max = scenario.params.theta_max;
    let (theta, theta_prime) = loop {
        let t = rng.random_range(-scenario.theta_range..=scenario.theta_range);
        let tp = t + rng.random_range(-scenario.step_bound..scenario.step_bound);
        if tp.abs() <= theta_max {
            break (t, tp);
        }
    };
    let motion = match mode {
        RootMode::Fixed => RigidTransform::identity(),
        RootMode::Moved => {
            let alpha = rng.random_range(-scenario.root_rotation_range..=scenario.root_rotation_range);
            let dir = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
            let mag = rng.random_range(0.0..scenario.root_translation_bound);
            RigidTransform::planar(alpha, Vec3::new(mag * dir.cos(), mag * dir.sin(), 0.0))
        }
    };
    (theta, theta_prime, motion)
}

/// One trial of the noise experiment: configuration, problem and estimate.
pub fn run_trial(
    scenario: &Scenario,
    mode: RootMode,
    trial: usize,
    sigma: f64,
    config: &RansacConfig,
) -> Result<(GeneratedProblem, f64)> {
    let mut rng = trial_rng(scenario.seed, (mode.stream_tag() << 40) | trial as u64);
    let (theta, theta_prime, motion) = draw_configuration(scenario, mode, &mut rng);
    let generated = gen_problem(theta, theta_prime, &motion, scenario, sigma, &mut rng)?;
    let cfg = RansacConfig {
        seed: scenario.seed.wrapping_add(trial as u64),
        ..*config
    };
    let est = ransac_estimate(&generated.problem, &cfg)?;
    Ok((generated, est.theta))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SigmaSummary {
    pub sigma: f64,
    pub root_mode: RootMode,
    /// Mean absolute `θ'` error over successful trials (rad).
    pub mean_abs_err: f64,
    pub std: f64,
    pub failures: usize,
    /// Absolute errors of the successful trials, in trial order.
    pub errors: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub rows: Vec<SigmaSummary>,
}

impl ExperimentResult {
    pub fn row(&self, mode: RootMode, sigma: f64) -> Option<&SigmaSummary> {
        self.rows.iter().find(|r| r.root_mode == mode && r.sigma == sigma)
    }
}

fn summarize(sigma: f64, root_mode: RootMode, outcomes: Vec<Option<f64>>) -> SigmaSummary {
    let failures = outcomes.iter().filter(|o| o.is_none()).count();
    let errors: Vec<f64> = outcomes.into_iter().flatten().collect();
    let n = errors.len() as f64;
    let (mean, std) = if errors.is_empty() {
        (f64::NAN, f64::NAN)
    } else {
        let mean = errors.iter().sum::<f64>() / n;
        let var = errors.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / n;
        (mean, var.sqrt())
    };
    SigmaSummary {
        sigma,
        root_mode,
        mean_abs_err: mean,
        std,
        failures,
        errors,
    }
}

/// Mean absolute `θ'` error for every root mode and noise level.
pub fn noise_resilience_experiment(scenario: &Scenario, config: &RansacConfig) -> Result<ExperimentResult> {
    scenario.validate()?;
    config.validate()?;
    let mut rows = Vec::new();
    for &mode in &scenario.root_modes {
        for &sigma in &scenario.noise_sigmas {
            let outcomes: Vec<Option<f64>> = (0..scenario.trials)
                .into_par_iter()
                .map(|t| {
                    run_trial(scenario, mode, t, sigma, config)
                        .ok()
                        .map(|(g, est)| (est - g.truth.theta_prime).abs())
                })
                .collect();
            rows.push(summarize(sigma, mode, outcomes));
        }
    }
    Ok(ExperimentResult { rows })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SequenceResult {
    /// Ground-truth deflection per frame, frame 0 included.
    pub truth: Vec<f64>,
    /// Chained estimates for frames 1.. (shorter on failure).
    pub estimates: Vec<f64>,
    /// `|estimate - truth|` per estimated frame.
    pub errors: Vec<f64>,
    /// Frame at which the chain stopped, if it did.
    pub failed_frame: Option<usize>,
}

/// Linear sweep `theta_start → theta_end` over `n_frames` with a fixed root.
/// Frame 0 is known; frames 1.. are estimated by chaining. `run` selects the
/// random streams, so distinct runs give independent sequences.
pub fn sequence_experiment(
    scenario: &Scenario,
    sigma: f64,
    n_frames: usize,
    theta_start: f64,
    theta_end: f64,
    run: u64,
    config: &RansacConfig,
) -> Result<SequenceResult> {
    scenario.validate()?;
    if n_frames < 2 {
        return Err(Error::InvalidScenario("a sequence needs at least two frames".into()));
    }
    let truth: Vec<f64> = (0..n_frames)
        .map(|i| theta_start + (theta_end - theta_start) * i as f64 / (n_frames - 1) as f64)
        .collect();
    let identity = RigidTransform::identity();
    let problems = (1..n_frames)
        .map(|i| {
            let mut rng = trial_rng(scenario.seed, (2 << 40) | (run << 16) | i as u64);
            gen_problem(truth[i - 1], truth[i], &identity, scenario, sigma, &mut rng).map(|g| g.problem)
        })
        .collect::<Result<Vec<_>>>()?;
    let cfg = RansacConfig {
        seed: scenario.seed.wrapping_add(run << 16),
        ..*config
    };
    let outcome = estimate_sequence(&problems, &cfg);
    let estimates: Vec<f64> = outcome.estimates.iter().map(|e| e.theta).collect();
    let errors = estimates
        .iter()
        .zip(&truth[1..])
        .map(|(e, t)| (e - t).abs())
        .collect();
    Ok(SequenceResult {
        truth,
        estimates,
        errors,
        failed_frame: outcome.failure.map(|(i, _)| i + 1),
    })
}

/// Robot of several segments, each with a camera at its tip, seen in two
/// views. Landmark boxes are shifted along y by the length of the segments
/// below each camera.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiSegmentProblem {
    pub segments: Vec<SegmentObservation>,
    pub base_motion: RigidTransform,
    pub thetas_prime: Vec<f64>,
}

pub fn gen_multisegment(
    params: &[SegmentParams],
    thetas: &[f64],
    thetas_prime: &[f64],
    base_motion: &RigidTransform,
    scenario: &Scenario,
    sigma: f64,
    rng: &mut ChaCha8Rng,
) -> Result<MultiSegmentProblem> {
    if params.is_empty() || params.len() != thetas.len() || params.len() != thetas_prime.len() {
        return Err(Error::InvalidScenario("one angle pair per segment required".into()));
    }
    let mut root1 = RigidTransform::identity();
    let mut root2 = *base_motion;
    let mut shift = 0.0;
    let mut segments = Vec::with_capacity(params.len());
    for ((p, &t), &tp) in params.iter().zip(thetas).zip(thetas_prime) {
        p.check_range(t)?;
        p.check_range(tp)?;
        let offset = default_cam_offset(p);
        let cam1 = root1 * camera_pose(t, p, &offset)?;
        let cam2 = root2 * camera_pose(tp, p, &offset)?;
        let (correspondences, _) =
            synthesize(scenario, sigma, &cam1, &cam2, &Vec3::new(0.0, shift, 0.0), rng)?;
        segments.push(SegmentObservation {
            params: *p,
            theta_prev: t,
            cam_offset: offset,
            correspondences,
            apply_delta: scenario.apply_delta,
        });
        // the camera sits at the linkage tip, which is the next segment's root
        root1 = cam1;
        root2 = cam2;
        shift += p.length;
    }
    Ok(MultiSegmentProblem {
        segments,
        base_motion: *base_motion,
        thetas_prime: thetas_prime.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimation::residual_of_theta;

    #[test]
    fn noise_free_problem_satisfies_constraint() {
        let sc = Scenario {
            params: SegmentParams::new(0.5, 0.25, 6f64.to_radians(), 60f64.to_radians()).unwrap(),
            ..Scenario::default()
        };
        let mut rng = trial_rng(3, 7);
        let motion = RigidTransform::planar(0.05, Vec3::new(0.04, -0.03, 0.0));
        let g = gen_problem(0.4, 0.45, &motion, &sc, 0.0, &mut rng).unwrap();
        for c in &g.problem.correspondences {
            assert!(residual_of_theta(&g.problem, c, 0.45).unwrap().abs() < 1e-10);
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let sc = Scenario::default();
        let a = gen_problem(0.1, 0.12, &RigidTransform::identity(), &sc, 1.0, &mut trial_rng(1, 2)).unwrap();
        let b = gen_problem(0.1, 0.12, &RigidTransform::identity(), &sc, 1.0, &mut trial_rng(1, 2)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn noise_levels_share_geometry() {
        let sc = Scenario::default();
        let clean = gen_problem(0.1, 0.12, &RigidTransform::identity(), &sc, 0.0, &mut trial_rng(1, 2)).unwrap();
        let noisy = gen_problem(0.1, 0.12, &RigidTransform::identity(), &sc, 1.0, &mut trial_rng(1, 2)).unwrap();
        for (a, b) in clean.problem.correspondences.iter().zip(&noisy.problem.correspondences) {
            assert!(a.f.angle(&b.f) < 0.05);
        }
    }

    #[test]
    fn scenario_validation() {
        assert!(Scenario::default().validate().is_ok());
        let bad = Scenario {
            trials: 0,
            ..Scenario::default()
        };
        assert!(matches!(bad.validate(), Err(Error::InvalidScenario(_))));
    }
}
