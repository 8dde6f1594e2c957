//! Deviation calibration of a single segment from planar tip measurements.
//!
//! Samples are taken in the segment root frame: origin at the segment root,
//! y along the base tangent, bending in the x-y plane. Each sample carries the
//! commanded deflection, the measured tip position and the measured tip
//! tangent angle `θ̂`.
//!
//! - `δ_max = θ_max - θ̂_max` from the sample(s) at the largest deflection.
//! - `k = OP / L`, where `P` is the point on the positive y axis whose
//!   distances to the root and to the tip sum to `L` (an ellipse with foci at
//!   root and tip and major axis `L`).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::Vec3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationSample {
    /// Commanded ideal deflection (rad).
    pub theta_command: f64,
    /// Measured tip position in the root frame, z = 0.
    pub tip_position: Vec3,
    /// Measured tip tangent angle `θ̂` (rad).
    pub tip_tangent_angle: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleCalibration {
    pub theta_command: f64,
    /// Ellipse intercept `OP` (m).
    pub intercept: f64,
    pub k: f64,
    /// `|θ_cmd| - |θ̂|` for this sample (rad).
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationResult {
    pub per_sample: Vec<SampleCalibration>,
    /// Indices of input samples that failed validation.
    pub rejected: Vec<usize>,
    pub k: f64,
    pub delta_max: f64,
    pub theta_max: f64,
    /// `max k - min k` over the accepted samples.
    pub k_spread: f64,
}

/// `δ_max = θ_max - θ̂_max`.
pub fn calibrate_delta_max(theta_max: f64, measured_tip_angle: f64) -> Result<f64> {
    if !(measured_tip_angle > 0.0) || measured_tip_angle > theta_max {
        return Err(Error::InconsistentMeasurement {
            measured: measured_tip_angle,
            commanded: theta_max,
        });
    }
    Ok(theta_max - measured_tip_angle)
}

/// Positive y-axis point `p` with `p + |(0, p, 0) - tip| = L`.
pub fn ellipse_y_intercept(tip: &Vec3, length: f64) -> Result<f64> {
    let r2 = tip.norm_squared();
    if !(r2.sqrt() < length) {
        return Err(Error::TipOutsideEllipse);
    }
    let gap = length - tip.y;
    if gap < 1e-9 * length {
        return Err(Error::NoDeflection);
    }
    Ok((length * length - r2) / (2.0 * gap))
}

pub fn deviation_coefficient(intercept: f64, length: f64) -> f64 {
    intercept / length
}

pub fn calibrate_k(tip: &Vec3, length: f64) -> Result<f64> {
    Ok(deviation_coefficient(ellipse_y_intercept(tip, length)?, length))
}

fn sample_is_valid(s: &CalibrationSample, length: f64) -> bool {
    s.tip_position.y > 0.0
        && s.tip_position.norm() <= length
        && s.theta_command.is_finite()
        && s.tip_tangent_angle.is_finite()
        && s.theta_command != 0.0
}

pub fn calibrate_segment(samples: &[CalibrationSample], length: f64) -> Result<CalibrationResult> {
    let mut per_sample = Vec::new();
    let mut measured = Vec::new();
    let mut rejected = Vec::new();
    for (i, s) in samples.iter().enumerate() {
        let accepted = sample_is_valid(s, length)
            .then(|| ellipse_y_intercept(&s.tip_position, length).ok())
            .flatten();
        match accepted {
            Some(intercept) => {
                per_sample.push(SampleCalibration {
                    theta_command: s.theta_command,
                    intercept,
                    k: deviation_coefficient(intercept, length),
                    delta: s.theta_command.abs() - s.tip_tangent_angle.abs(),
                });
                measured.push(s.tip_tangent_angle.abs());
            }
            None => rejected.push(i),
        }
    }
    if per_sample.is_empty() {
        return Err(Error::NoSamples);
    }

    let theta_max = per_sample
        .iter()
        .map(|s| s.theta_command.abs())
        .fold(0.0, f64::max);
    let mut delta_sum = 0.0;
    let mut n_max = 0usize;
    for (s, &tip_angle) in per_sample.iter().zip(&measured) {
        if (s.theta_command.abs() - theta_max).abs() <= 1e-9 * theta_max {
            delta_sum += calibrate_delta_max(theta_max, tip_angle)?;
            n_max += 1;
        }
    }

    let n = per_sample.len() as f64;
    let k = per_sample.iter().map(|s| s.k).sum::<f64>() / n;
    let (k_min, k_max) = per_sample
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| (lo.min(s.k), hi.max(s.k)));
    Ok(CalibrationResult {
        per_sample,
        rejected,
        k,
        delta_max: delta_sum / n_max as f64,
        theta_max,
        k_spread: k_max - k_min,
    })
}

/// Separate calibrations for positive and negative bending, for robots whose
/// behavior is not mirror-symmetric.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DirectionalCalibration {
    pub positive: Option<CalibrationResult>,
    pub negative: Option<CalibrationResult>,
}

pub fn calibrate_by_direction(
    samples: &[CalibrationSample],
    length: f64,
) -> Result<DirectionalCalibration> {
    let (pos, neg): (Vec<_>, Vec<_>) = samples.iter().partition(|s| s.theta_command > 0.0);
    let run = |group: Vec<CalibrationSample>| {
        if group.is_empty() {
            Ok(None)
        } else {
            calibrate_segment(&group, length).map(Some)
        }
    };
    let out = DirectionalCalibration {
        positive: run(pos)?,
        negative: run(neg)?,
    };
    if out.positive.is_none() && out.negative.is_none() {
        return Err(Error::NoSamples);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pcc::exact_translation;

    fn deg(d: f64) -> f64 {
        d.to_radians()
    }

    /// Bisection on the focal-sum equation.
    fn intercept_by_bisection(tip: &Vec3, length: f64) -> f64 {
        let f = |p: f64| p + (Vec3::new(0.0, p, 0.0) - tip).norm() - length;
        let (mut lo, mut hi) = (0.0, length);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn delta_max_cases() {
        let d = calibrate_delta_max(deg(84.0), deg(76.0)).unwrap();
        assert!((d.to_degrees() - 8.0).abs() < 1e-12);
        let d = calibrate_delta_max(deg(60.0), deg(54.0)).unwrap();
        assert!((d.to_degrees() - 6.0).abs() < 1e-12);
        assert_eq!(calibrate_delta_max(1.0, 1.0).unwrap(), 0.0);
        assert!(matches!(
            calibrate_delta_max(1.0, 1.1),
            Err(Error::InconsistentMeasurement { .. })
        ));
    }

    #[test]
    fn intercept_of_ideal_arcs() {
        let tip60 = exact_translation(1.0, deg(60.0));
        assert!((tip60 - Vec3::new(-0.477464829275686, 0.826993343132688, 0.0)).norm() < 1e-12);
        let p60 = ellipse_y_intercept(&tip60, 1.0).unwrap();
        assert!((p60 - 0.254641494189833).abs() < 1e-12);
        assert!((p60 - intercept_by_bisection(&tip60, 1.0)).abs() < 1e-12);
        let tip84 = exact_translation(1.0, deg(84.0));
        let p84 = ellipse_y_intercept(&tip84, 1.0).unwrap();
        assert!((p84 - 0.259235612322515).abs() < 1e-12);
        assert!((p84 - intercept_by_bisection(&tip84, 1.0)).abs() < 1e-12);
    }

    #[test]
    fn intercept_rejections() {
        assert_eq!(
            ellipse_y_intercept(&Vec3::new(0.0, 1.0 - 1e-13, 0.0), 1.0),
            Err(Error::NoDeflection)
        );
        assert_eq!(
            ellipse_y_intercept(&Vec3::new(0.8, 0.8, 0.0), 1.0),
            Err(Error::TipOutsideEllipse)
        );
    }

    #[test]
    fn k_cases() {
        assert!((deviation_coefficient(11.1, 49.6) - 0.2238).abs() < 5e-5);
        let tip = exact_translation(1.0, deg(60.0));
        assert!((calibrate_k(&tip, 1.0).unwrap() - 0.254641494189833).abs() < 1e-12);
        let mirrored = Vec3::new(-tip.x, tip.y, 0.0);
        assert_eq!(calibrate_k(&tip, 1.0), calibrate_k(&mirrored, 1.0));
    }

    fn ideal_sample(theta: f64) -> CalibrationSample {
        CalibrationSample {
            theta_command: theta,
            tip_position: exact_translation(1.0, theta),
            tip_tangent_angle: theta,
        }
    }

    #[test]
    fn symmetric_ideal_samples() {
        let samples: Vec<_> = [60.0, -60.0, 84.0, -84.0].iter().map(|&d| ideal_sample(deg(d))).collect();
        let res = calibrate_segment(&samples, 1.0).unwrap();
        assert!((res.k - 0.256938553256174).abs() < 1e-12);
        assert!(res.delta_max.abs() < 1e-15);
        assert!((res.theta_max - deg(84.0)).abs() < 1e-15);

        let single = calibrate_segment(&samples[..1], 1.0).unwrap();
        assert_eq!(single.k, single.per_sample[0].k);
        assert_eq!(single.delta_max, single.per_sample[0].delta);
    }

    #[test]
    fn invalid_samples_rejected() {
        let mut bad = ideal_sample(deg(60.0));
        bad.tip_position.y = -0.1;
        assert_eq!(calibrate_segment(&[bad], 1.0), Err(Error::NoSamples));
        let res = calibrate_segment(&[bad, ideal_sample(deg(60.0))], 1.0).unwrap();
        assert_eq!(res.rejected, vec![0]);
        assert_eq!(res.per_sample.len(), 1);
    }

    #[test]
    fn directional_groups() {
        let samples: Vec<_> = [60.0, -60.0, 84.0].iter().map(|&d| ideal_sample(deg(d))).collect();
        let res = calibrate_by_direction(&samples, 1.0).unwrap();
        assert_eq!(res.positive.as_ref().unwrap().per_sample.len(), 2);
        assert_eq!(res.negative.as_ref().unwrap().per_sample.len(), 1);
    }
}
