//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use apcc_core::apcc::{
    delta_correction, linkage_fk, phi_from_theta, trajectory_error_stats, SegmentParams,
};
use apcc_core::calibration::{calibrate_delta_max, calibrate_segment, deviation_coefficient, CalibrationSample};
use apcc_core::estimation::{ransac_estimate, solve_1pt_poly, solve_1pt_scan, RansacConfig};
use apcc_core::pcc::{cc_transform, exact_translation, series_translation, CcSegmentState};
use apcc_core::sim::{
    draw_configuration, gen_problem, noise_resilience_experiment, run_trial, sequence_experiment,
    trial_rng, RootMode, Scenario,
};
use serde_json::json;

type Outcome = (bool, String);
type Criterion = (u8, &'static str, fn() -> Outcome);

fn deg(d: f64) -> f64 {
    d.to_radians()
}

fn grid_deg(from: i32, to: i32) -> impl Iterator<Item = f64> {
    (from..=to).map(|d| deg(d as f64))
}

fn c1_constraint_identities() -> Outcome {
    let start = Instant::now();
    let mut worst = [0.0f64; 3];
    for k in [0.2, 0.224, 0.25, 0.3] {
        let r = k / (1.0 - k);
        for theta in grid_deg(-60, 60) {
            let phi = phi_from_theta(theta, k).unwrap();
            let eq2 = (1.0 - k) * phi.sin() - ((1.0 - k) * phi.cos() + k) * (0.5 * theta).tan();
            let (s1, c1, s2, c2) = (theta.sin(), theta.cos(), phi.sin(), phi.cos());
            let eq13 = ((theta - phi).sin() - (s2 - r * s1))
                .abs()
                .max(((theta - phi).cos() - (c2 - r * c1 + r)).abs());
            let eq16 = s2 * c1 - c2 * s1 + s2 - r * s1;
            worst[0] = worst[0].max(eq2.abs());
            worst[1] = worst[1].max(eq13);
            worst[2] = worst[2].max(eq16.abs());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    (
        worst.iter().all(|w| *w < 1e-10) && secs < 1.0,
        format!("max residuals {:.1e} / {:.1e} / {:.1e}, {secs:.3}s", worst[0], worst[1], worst[2]),
    )
}

fn c2_chord_ray() -> Outcome {
    let mut worst = 0.0f64;
    for k in [0.2, 0.224, 0.25, 0.3] {
        let p = SegmentParams::new(1.0, k, 0.0, deg(60.0)).unwrap();
        for theta in grid_deg(-60, 60) {
            if theta == 0.0 {
                continue;
            }
            let tip = *linkage_fk(theta, &p).unwrap().tip_pose.translation();
            let angle = (-tip.x).atan2(tip.y);
            worst = worst.max((angle - 0.5 * theta).abs());
        }
    }
    (worst < 1e-12, format!("max |angle - θ/2| = {worst:.1e} rad"))
}

fn c3_approximation_quality() -> Outcome {
    let p = SegmentParams::new(1.0, 0.25, 0.0, deg(60.0)).unwrap();
    let mut worst = 0.0f64;
    for theta in grid_deg(-60, 60) {
        let link = *linkage_fk(theta, &p).unwrap().tip_pose.translation();
        let arc = *cc_transform(&CcSegmentState::planar(1.0, theta)).unwrap().translation();
        worst = worst.max((link - arc).norm());
    }
    let tip60 = linkage_fk(deg(60.0), &p).unwrap().tip_pose.translation().norm();
    let chord60 = exact_translation(1.0, deg(60.0)).norm();
    (
        worst <= 0.005 && (tip60 - 0.95603).abs() < 5e-5 && (chord60 - 0.95493).abs() < 5e-5,
        format!("max gap {worst:.4e} L, tip {tip60:.6} L, chord {chord60:.6} L"),
    )
}

fn c4_singularity_continuity() -> Outcome {
    let mut worst = 0.0f64;
    for theta in [1e-4, -1e-4] {
        let d = exact_translation(1.0, theta) - series_translation(1.0, theta);
        worst = worst.max(d.amax());
    }
    (worst < 1e-10, format!("max component gap {worst:.1e}"))
}

fn c5_calibration_arithmetic() -> Outcome {
    let delta_max = calibrate_delta_max(deg(84.0), deg(76.0)).unwrap().to_degrees();
    let k = deviation_coefficient(11.1, 49.6);
    let p = SegmentParams::new(49.6, k, deg(delta_max), deg(84.0)).unwrap();
    let at60 = delta_correction(deg(60.0), &p).unwrap().to_degrees();
    (
        (delta_max - 8.0).abs() < 5e-4 && (k - 0.2238).abs() < 5e-4 && (at60 - 5.714).abs() < 5e-4,
        format!("δ_max {delta_max:.4}°, k {k:.5}, δ(60°) {at60:.4}°"),
    )
}

/// Noise-free measurements of a linkage robot at the given commanded deflections.
fn linkage_samples(truth: &SegmentParams, commands_deg: &[f64]) -> Vec<CalibrationSample> {
    commands_deg
        .iter()
        .map(|&d| {
            let theta = deg(d);
            CalibrationSample {
                theta_command: theta,
                tip_position: *linkage_fk(theta, truth).unwrap().tip_pose.translation(),
                tip_tangent_angle: theta - delta_correction(theta, truth).unwrap(),
            }
        })
        .collect()
}

fn c6_calibration_round_trip() -> Outcome {
    let (mut worst_delta, mut worst_k, mut cases) = (0.0f64, 0.0f64, 0);
    for theta_max in [60.0, 84.0] {
        for ki in 0..=4 {
            for di in 0..=4 {
                let k = 0.2 + 0.025 * ki as f64;
                let truth = SegmentParams::new(0.5, k, deg(2.5 * di as f64), deg(theta_max)).unwrap();
                let commands: Vec<f64> = [1.0, 2.0, 3.0]
                    .iter()
                    .flat_map(|f| [f * theta_max / 3.0, -f * theta_max / 3.0])
                    .collect();
                let res = calibrate_segment(&linkage_samples(&truth, &commands), 0.5).unwrap();
                worst_delta = worst_delta.max((res.delta_max - truth.delta_max).abs());
                worst_k = worst_k.max((res.k - k).abs());
                cases += 1;
            }
        }
    }
    (
        worst_delta < 1e-12 && worst_k <= 0.02,
        format!("{cases} robots: max δ_max error {worst_delta:.1e} rad, max k error {worst_k:.4}"),
    )
}

fn mixed_k_scenario(trial: usize) -> Scenario {
    let k = [0.25, 0.3, 0.2][trial % 3];
    let d = Scenario::default();
    Scenario {
        params: SegmentParams { k, ..d.params },
        ..d
    }
}

fn c7_noise_free_exactness() -> Outcome {
    let start = Instant::now();
    let cfg = RansacConfig::default();
    let (mut worst, mut failures) = (0.0f64, 0);
    for mode in [RootMode::Fixed, RootMode::Moved] {
        for t in 0..500 {
            match run_trial(&mixed_k_scenario(t), mode, t, 0.0, &cfg) {
                Ok((g, est)) => worst = worst.max((est - g.truth.theta_prime).abs()),
                Err(_) => failures += 1,
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    (
        worst < 1e-6 && failures == 0 && secs < 30.0,
        format!("1000 problems: max error {worst:.1e} rad, {failures} failures, {secs:.1}s"),
    )
}

fn c8_oracle_equivalence() -> Outcome {
    let (mut worst, mut mismatched, mut solves, mut k03) = (0.0f64, 0, 0, 0);
    for mode in [RootMode::Fixed, RootMode::Moved] {
        for t in 0..500 {
            let sc = mixed_k_scenario(t);
            let mut rng = trial_rng(sc.seed, (mode.stream_tag() << 40) | t as u64);
            let (th, tp, m) = draw_configuration(&sc, mode, &mut rng);
            let g = gen_problem(th, tp, &m, &sc, 0.0, &mut rng).unwrap();
            for c in g.problem.correspondences.iter().take(2) {
                let poly = solve_1pt_poly(&g.problem, c).unwrap();
                let scan = solve_1pt_scan(&g.problem, c).unwrap();
                solves += 1;
                if sc.params.k == 0.3 {
                    k03 += 1;
                }
                if poly.len() != scan.len() {
                    mismatched += 1;
                    continue;
                }
                for (a, b) in poly.iter().zip(&scan) {
                    worst = worst.max((a - b).abs());
                }
            }
        }
    }
    (
        mismatched == 0 && worst < 1e-8 && k03 > 0,
        format!("{solves} solves ({k03} at k=0.3): {mismatched} size mismatches, max root gap {worst:.1e} rad"),
    )
}

const SIGMA2_BOUND_DEG: f64 = 0.35;

fn c9_noise_trend() -> Outcome {
    let start = Instant::now();
    let sc = Scenario::default();
    let res = noise_resilience_experiment(&sc, &RansacConfig::default()).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let mut ok = secs < 600.0;
    let mut detail = Vec::new();
    for mode in [RootMode::Fixed, RootMode::Moved] {
        let means: Vec<f64> = sc
            .noise_sigmas
            .iter()
            .map(|&s| res.row(mode, s).unwrap().mean_abs_err)
            .collect();
        let failures: usize = sc.noise_sigmas.iter().map(|&s| res.row(mode, s).unwrap().failures).sum();
        let monotone = means.windows(2).all(|w| w[0] <= w[1]);
        let at2 = res.row(mode, 2.0).unwrap().mean_abs_err.to_degrees();
        ok &= monotone && means[0] < 1e-6 && at2 < SIGMA2_BOUND_DEG;
        detail.push(format!(
            "{}: σ0 {:.1e} rad, σ2 {at2:.3}° (bound {SIGMA2_BOUND_DEG}°), monotone {monotone}, {failures} failures",
            mode.name(),
            means[0]
        ));
    }
    (ok, format!("{}; {secs:.1}s", detail.join("; ")))
}

fn c10_chained_sweep() -> Outcome {
    let sc = Scenario::default();
    let cfg = RansacConfig::default();
    let (n, end) = (21, deg(55.0));
    let clean = sequence_experiment(&sc, 0.0, n, 0.0, end, 0, &cfg).unwrap();
    let clean_max = clean.errors.iter().fold(0.0f64, |m, e| m.max(*e));
    let mut ok = clean.failed_frame.is_none() && clean_max < 1e-6;

    let runs = 100;
    let mut mean_err = vec![0.0; n - 1];
    let mut mean_running_max = vec![0.0; n - 1];
    let mut finals = Vec::new();
    for run in 0..runs {
        let res = sequence_experiment(&sc, 1.0, n, 0.0, end, run, &cfg).unwrap();
        ok &= res.failed_frame.is_none();
        let mut m = 0.0f64;
        for (i, e) in res.errors.iter().enumerate() {
            m = m.max(*e);
            mean_err[i] += e / runs as f64;
            mean_running_max[i] += m / runs as f64;
        }
        finals.push(res.errors.last().copied().unwrap_or(f64::INFINITY).to_degrees());
    }
    let final_mean = finals.iter().sum::<f64>() / finals.len() as f64;
    let final_max = finals.iter().fold(0.0f64, |m, e| m.max(*e));
    let accumulates = mean_err[n - 2] > mean_err[0];
    let running_ok = mean_running_max.windows(2).all(|w| w[0] <= w[1]);
    ok &= accumulates && running_ok && final_max < 3.0 && final_mean < 1.0;
    (
        ok,
        format!(
            "noise-free max {clean_max:.1e} rad; σ=1px over {runs} runs: final mean {final_mean:.3}°, max {final_max:.3}°, first/last frame mean {:.3}°/{:.3}°",
            mean_err[0].to_degrees(),
            mean_err[n - 2].to_degrees()
        ),
    )
}

fn c11_trajectory_ratio() -> Outcome {
    let truth = SegmentParams::new(1.0, 0.224, deg(8.0), deg(84.0)).unwrap();
    let samples = linkage_samples(&truth, &[28.0, 56.0, 84.0]);
    let cal = calibrate_segment(&samples, truth.length).unwrap();
    let calibrated = SegmentParams::new(truth.length, cal.k, cal.delta_max, cal.theta_max).unwrap();
    let thetas: Vec<f64> = grid_deg(0, 84).collect();
    let stats = trajectory_error_stats(&truth, &calibrated, &thetas).unwrap();
    let ratio = stats.pcc_error_std / stats.apcc_error_std;
    (
        ratio > 4.0,
        format!(
            "calibrated k {:.4}, δ_max {:.3}°; std PCC {:.3e} L, APCC {:.3e} L, ratio {ratio:.3e}",
            cal.k,
            cal.delta_max.to_degrees(),
            stats.pcc_error_std,
            stats.apcc_error_std
        ),
    )
}

fn c12_outlier_robustness() -> Outcome {
    let sc = Scenario {
        outlier_fraction: 0.3,
        ..Scenario::default()
    };
    let cfg = RansacConfig::default();
    let (mut with_outliers, mut clean) = (Vec::new(), Vec::new());
    let (mut found, mut total, mut failures) = (0usize, 0usize, 0usize);
    for mode in [RootMode::Fixed, RootMode::Moved] {
        for t in 0..250 {
            let mut rng = trial_rng(sc.seed, (mode.stream_tag() << 40) | t as u64);
            let (th, tp, m) = draw_configuration(&sc, mode, &mut rng);
            let g = gen_problem(th, tp, &m, &sc, 1.0, &mut rng).unwrap();
            let mut subset = g.problem.clone();
            subset.correspondences = g
                .problem
                .correspondences
                .iter()
                .zip(&g.truth.is_inlier)
                .filter(|(_, inlier)| **inlier)
                .map(|(c, _)| *c)
                .collect();
            let c = RansacConfig {
                seed: sc.seed + t as u64,
                ..cfg
            };
            let (Ok(est), Ok(base)) = (ransac_estimate(&g.problem, &c), ransac_estimate(&subset, &c)) else {
                failures += 1;
                continue;
            };
            total += g.truth.is_inlier.iter().filter(|b| **b).count();
            found += est.inliers.iter().zip(&g.truth.is_inlier).filter(|(a, b)| **a && **b).count();
            with_outliers.push((est.theta - tp).abs());
            clean.push((base.theta - tp).abs());
        }
    }
    let stats = |mut e: Vec<f64>| {
        e.sort_by(f64::total_cmp);
        let n = e.len();
        (e.iter().sum::<f64>() / n as f64, e[(n as f64 * 0.95) as usize])
    };
    let (mean_o, p95_o) = stats(with_outliers);
    let (mean_c, p95_c) = stats(clean);
    let recall = found as f64 / total as f64;
    (
        failures == 0 && recall >= 0.9 && mean_o <= 1.25 * mean_c && p95_o <= 1.25 * p95_c,
        format!(
            "500 trials: recall {recall:.3}, mean {:.4}° vs clean {:.4}°, p95 {:.4}° vs clean {:.4}°, {failures} failures",
            mean_o.to_degrees(),
            mean_c.to_degrees(),
            p95_o.to_degrees(),
            p95_c.to_degrees()
        ),
    )
}

fn apcc(dir: &Path, threads: &str, tag: &str, args: &[&str]) -> Vec<u8> {
    let out = dir.join(format!("{tag}-{threads}.out"));
    let summary = dir.join(format!("{tag}-{threads}.summary"));
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_apcc"));
    cmd.args(args).args(["--seed", "7", "--threads", threads, "--out"]).arg(&out);
    if tag == "trajectory" {
        cmd.arg("--summary").arg(&summary);
    }
    let status = cmd.output().unwrap().status;
    assert!(status.success(), "{tag} exited with {status}");
    let mut bytes = std::fs::read(&out).unwrap();
    if tag == "trajectory" {
        bytes.extend(std::fs::read(&summary).unwrap());
    }
    bytes
}

fn estimate_file(dir: &Path) -> String {
    let sc = Scenario::default();
    let mut views = Vec::new();
    for t in 0..3u64 {
        let mut rng = trial_rng(11, t);
        let (th, tp, m) = draw_configuration(&sc, RootMode::Moved, &mut rng);
        let g = gen_problem(th, tp, &m, &sc, 1.0, &mut rng).unwrap();
        let r = m.rotation();
        views.push(json!({
            "theta_prev_deg": th.to_degrees(),
            "theta_gt_deg": tp.to_degrees(),
            "root_motion": {
                "R": (0..9).map(|i| r[(i / 3, i % 3)]).collect::<Vec<_>>(),
                "t": m.translation().as_slice(),
            },
            "correspondences": g.problem.correspondences.iter()
                .map(|c| json!({"f": c.f.as_slice(), "fp": c.f_prime.as_slice()}))
                .collect::<Vec<_>>(),
        }));
    }
    let path = dir.join("views.json");
    std::fs::write(&path, json!({"views": views}).to_string()).unwrap();
    path.to_string_lossy().into_owned()
}

fn c13_cli_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let calib = dir.path().join("calib.json");
    std::fs::write(
        &calib,
        json!({"L_m": 49.6, "theta_max_deg": 84.0, "samples": [
            {"theta_cmd_deg": 84.0, "tip_x": -30.1, "tip_y": 35.2, "tip_angle_deg": 76.0},
            {"theta_cmd_deg": 42.0, "tip_x": -17.4, "tip_y": 45.1, "tip_angle_deg": 38.0}
        ]})
        .to_string(),
    )
    .unwrap();
    let calib = calib.to_string_lossy().into_owned();
    let views = estimate_file(dir.path());
    let commands: Vec<(&str, Vec<&str>)> = vec![
        ("fk", vec!["fk"]),
        ("trajectory", vec!["trajectory", "--from-deg", "0", "--to-deg", "84", "--actual-k", "0.224"]),
        ("calibrate", vec!["calibrate", &calib]),
        ("simulate", vec!["simulate", "--trials", "40"]),
        ("sequence", vec!["simulate", "--sequence"]),
        ("estimate", vec!["estimate", &views]),
        ("solve-bench", vec!["solve-bench", "--problems", "10"]),
    ];
    let mut differing = Vec::new();
    for (tag, args) in &commands {
        let serial = apcc(dir.path(), "1", tag, args);
        let auto = apcc(dir.path(), "0", tag, args);
        let again = apcc(dir.path(), "0", tag, args);
        if serial.is_empty() || serial != auto || auto != again {
            differing.push(*tag);
        }
    }
    (
        differing.is_empty(),
        format!("{} commands compared, differing: {differing:?}", commands.len()),
    )
}

fn main() {
    let criteria: [Criterion; 13] = [
        (1, "constraint identities", c1_constraint_identities),
        (2, "chord-ray exactness", c2_chord_ray),
        (3, "k=0.25 approximation quality", c3_approximation_quality),
        (4, "singularity continuity", c4_singularity_continuity),
        (5, "calibration arithmetic", c5_calibration_arithmetic),
        (6, "calibration round trip", c6_calibration_round_trip),
        (7, "noise-free solver exactness", c7_noise_free_exactness),
        (8, "polynomial vs scan oracle", c8_oracle_equivalence),
        (9, "noise trend", c9_noise_trend),
        (10, "chained sweep", c10_chained_sweep),
        (11, "trajectory std ratio", c11_trajectory_ratio),
        (12, "outlier robustness", c12_outlier_robustness),
        (13, "CLI determinism", c13_cli_determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (id, name, check) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| f == &id.to_string()) {
            continue;
        }
        let (ok, detail) = catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|_| (false, "panicked".to_string()));
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {id:>2} {} {name}: {detail}",
            if ok { "PASS" } else { "FAIL" }
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
