use thiserror::Error;

/// Errors produced by the kinematic models, calibration and estimators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("not a proper rotation matrix")]
    NotARotation,
    #[error("bearing vector is not unit length (norm {0})")]
    NonUnitBearing(f64),
    #[error("behind camera")]
    BehindCamera,
    #[error("deflection out of range: {0} rad")]
    DeflectionOutOfRange(f64),
    #[error("phi unsolvable for theta {theta} rad, k {k}")]
    PhiUnsolvable { theta: f64, k: f64 },
    #[error("beyond calibrated range: |{theta}| > {theta_max} rad")]
    BeyondCalibratedRange { theta: f64, theta_max: f64 },
    #[error("invalid segment parameters: {0}")]
    InvalidParams(String),
    #[error("inconsistent measurement: measured tip angle {measured} rad vs commanded {commanded} rad")]
    InconsistentMeasurement { measured: f64, commanded: f64 },
    #[error("tip outside ellipse")]
    TipOutsideEllipse,
    #[error("degenerate: no deflection")]
    NoDeflection,
    #[error("no valid calibration samples")]
    NoSamples,
    #[error("empty grid")]
    EmptyGrid,
    #[error("degenerate motion")]
    DegenerateMotion,
    #[error("no consensus")]
    NoConsensus,
    #[error("not enough correspondences: need {required}, got {got}")]
    NotEnoughCorrespondences { required: usize, got: usize },
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("could not place a landmark visible in both views")]
    LandmarkPlacement,
}

pub type Result<T> = std::result::Result<T, Error>;
