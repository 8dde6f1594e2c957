//! File formats. Angles are degrees, lengths meters, focal lengths pixels.

use std::path::Path;

use apcc_core::apcc::SegmentParams;
use apcc_core::calibration::CalibrationSample;
use apcc_core::estimation::{default_cam_offset, Correspondence, ViewPairProblem};
use apcc_core::geometry::{Mat3, RigidTransform, Vec3};
use apcc_core::sim::{RootMode, Scenario};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::{CliError, CliResult, GlobalOpts};

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Input(format!("malformed {}: {e}", path.display())))
}

fn input<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Input(e.to_string())
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsFile {
    #[serde(rename = "L_m")]
    pub length: Option<f64>,
    pub k: Option<f64>,
    pub delta_max_deg: Option<f64>,
    pub theta_max_deg: Option<f64>,
}

impl ParamsFile {
    /// File values, then flag overrides, then the given defaults.
    pub fn resolve(&self, g: &GlobalOpts, defaults: SegmentParams) -> CliResult<SegmentParams> {
        let deg = |v: Option<f64>| v.map(f64::to_radians);
        SegmentParams::new(
            g.length.or(self.length).unwrap_or(defaults.length),
            g.k.or(self.k).unwrap_or(defaults.k),
            deg(g.delta_max_deg.or(self.delta_max_deg)).unwrap_or(defaults.delta_max),
            deg(g.theta_max_deg.or(self.theta_max_deg)).unwrap_or(defaults.theta_max),
        )
        .map_err(input)
    }
}

#[derive(Debug, Deserialize)]
pub struct CalibrationFile {
    #[serde(rename = "L_m")]
    pub length: f64,
    /// Checked against the largest commanded deflection, which is used.
    #[serde(default)]
    pub theta_max_deg: Option<f64>,
    pub samples: Vec<SampleRecord>,
}

#[derive(Debug, Deserialize)]
pub struct SampleRecord {
    pub theta_cmd_deg: f64,
    pub tip_x: f64,
    pub tip_y: f64,
    pub tip_angle_deg: f64,
}

impl SampleRecord {
    pub fn to_sample(&self) -> CalibrationSample {
        CalibrationSample {
            theta_command: self.theta_cmd_deg.to_radians(),
            tip_position: Vec3::new(self.tip_x, self.tip_y, 0.0),
            tip_tangent_angle: self.tip_angle_deg.to_radians(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct CalibrationOutput {
    pub k: f64,
    pub delta_max_deg: f64,
    pub theta_max_deg: f64,
    pub k_spread: f64,
    pub rejected: Vec<usize>,
    pub per_sample: Vec<SampleOutput>,
}

#[derive(Debug, Serialize)]
pub struct SampleOutput {
    pub theta_cmd_deg: f64,
    pub intercept_m: f64,
    pub k: f64,
    pub delta_deg: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MotionRecord {
    /// Row-major rotation.
    #[serde(rename = "R")]
    pub r: [f64; 9],
    pub t: [f64; 3],
}

impl MotionRecord {
    pub fn to_transform(&self) -> CliResult<RigidTransform> {
        RigidTransform::new(Mat3::from_row_slice(&self.r), Vec3::from(self.t)).map_err(input)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrespondenceRecord {
    pub f: [f64; 3],
    pub fp: [f64; 3],
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ViewPairRecord {
    pub theta_prev_deg: f64,
    pub root_motion: MotionRecord,
    #[serde(default)]
    pub cam_offset: Option<[f64; 3]>,
    pub correspondences: Vec<CorrespondenceRecord>,
    #[serde(default)]
    pub theta_gt_deg: Option<f64>,
}

/// A single view pair, or a parameter block with a list of view pairs.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum EstimateFile {
    Sequence {
        #[serde(default)]
        params: ParamsFile,
        views: Vec<ViewPairRecord>,
    },
    Single(ViewPairRecord),
}

impl EstimateFile {
    pub fn into_parts(self) -> (ParamsFile, Vec<ViewPairRecord>) {
        match self {
            EstimateFile::Sequence { params, views } => (params, views),
            EstimateFile::Single(v) => (ParamsFile::default(), vec![v]),
        }
    }
}

impl ViewPairRecord {
    pub fn to_problem(&self, params: SegmentParams, apply_delta: bool) -> CliResult<ViewPairProblem> {
        if self.correspondences.is_empty() {
            return Err(CliError::Input("view pair has no correspondences".into()));
        }
        let correspondences = self
            .correspondences
            .iter()
            .map(|c| Correspondence::new(Vec3::from(c.f), Vec3::from(c.fp)).map_err(input))
            .collect::<CliResult<Vec<_>>>()?;
        let mut problem = ViewPairProblem::new(
            params,
            self.theta_prev_deg.to_radians(),
            self.root_motion.to_transform()?,
            correspondences,
        );
        problem.cam_offset = self.cam_offset.map(Vec3::from).unwrap_or(default_cam_offset(&params));
        problem.apply_delta = apply_delta;
        problem.validate().map_err(input)?;
        Ok(problem)
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceRecord {
    pub n_frames: Option<usize>,
    pub theta_start_deg: Option<f64>,
    pub theta_end_deg: Option<f64>,
    pub sigma_px: Option<f64>,
    pub runs: Option<u64>,
}

/// Scenario file; every field is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(flatten)]
    pub params: ParamsFile,
    pub focal_px: Option<f64>,
    pub n_landmarks: Option<usize>,
    pub landmark_min: Option<[f64; 3]>,
    pub landmark_max: Option<[f64; 3]>,
    pub noise_sigmas_px: Option<Vec<f64>>,
    pub theta_range_deg: Option<f64>,
    pub step_bound_deg: Option<f64>,
    pub root_modes: Option<Vec<RootMode>>,
    pub root_rotation_range_deg: Option<f64>,
    pub root_translation_bound_m: Option<f64>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub outlier_fraction: Option<f64>,
    pub max_view_angle_deg: Option<f64>,
    pub min_depth_m: Option<f64>,
    pub sequence: Option<SequenceRecord>,
}

impl ScenarioFile {
    pub fn to_scenario(&self, g: &GlobalOpts) -> CliResult<Scenario> {
        let d = Scenario::default();
        let rad = |v: Option<f64>, dflt: f64| v.map(f64::to_radians).unwrap_or(dflt);
        let sc = Scenario {
            params: self.params.resolve(g, d.params)?,
            focal: g.focal.or(self.focal_px).unwrap_or(d.focal),
            n_landmarks: self.n_landmarks.unwrap_or(d.n_landmarks),
            landmark_min: self.landmark_min.map(Vec3::from).unwrap_or(d.landmark_min),
            landmark_max: self.landmark_max.map(Vec3::from).unwrap_or(d.landmark_max),
            noise_sigmas: self.noise_sigmas_px.clone().unwrap_or(d.noise_sigmas),
            theta_range: rad(self.theta_range_deg, d.theta_range),
            step_bound: rad(self.step_bound_deg, d.step_bound),
            root_modes: self.root_modes.clone().unwrap_or(d.root_modes),
            root_rotation_range: rad(self.root_rotation_range_deg, d.root_rotation_range),
            root_translation_bound: self.root_translation_bound_m.unwrap_or(d.root_translation_bound),
            trials: self.trials.unwrap_or(d.trials),
            seed: g.seed.or(self.seed).unwrap_or(d.seed),
            outlier_fraction: self.outlier_fraction.unwrap_or(d.outlier_fraction),
            max_view_angle: rad(self.max_view_angle_deg, d.max_view_angle),
            min_depth: self.min_depth_m.unwrap_or(d.min_depth),
            apply_delta: !g.no_delta,
        };
        sc.validate().map_err(input)?;
        Ok(sc)
    }
}
