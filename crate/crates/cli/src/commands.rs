use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use apcc_core::apcc::{corrected_tip_angle, linkage_fk, trajectory_error_stats, SegmentParams};
use apcc_core::calibration::calibrate_segment;
use apcc_core::estimation::{
    estimate_sequence, ransac_estimate, solve_1pt_poly, solve_1pt_scan, RansacConfig,
};
use apcc_core::pcc::{cc_transform, CcSegmentState};
use apcc_core::sim::{
    draw_configuration, gen_problem, noise_resilience_experiment, sequence_experiment, trial_rng,
    RootMode, Scenario,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::formats::{
    read_json, CalibrationFile, CalibrationOutput, EstimateFile, SampleOutput, ScenarioFile,
    SequenceRecord,
};
use crate::output::{deg, num, sink, write_all};
use crate::{
    BenchOpts, Cli, CliError, CliResult, Command, EstimateOpts, GlobalOpts, GridOpts, SimulateOpts,
    TrajectoryOpts,
};

pub fn run(cli: &Cli) -> CliResult<()> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.global.threads)
        .build_global()
        .map_err(|e| CliError::Input(format!("thread pool: {e}")))?;
    let g = &cli.global;
    match &cli.command {
        Command::Fk(opts) => fk(g, opts),
        Command::Trajectory(opts) => trajectory(g, opts),
        Command::Calibrate { input } => calibrate(g, input),
        Command::Simulate(opts) => simulate(g, opts),
        Command::Estimate(opts) => estimate(g, opts),
        Command::SolveBench(opts) => solve_bench(g, opts),
    }
}

fn input_err<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Input(e.to_string())
}

fn ransac_config(g: &GlobalOpts) -> CliResult<RansacConfig> {
    let cfg = RansacConfig {
        tau: g.tau.unwrap_or(RansacConfig::default().tau),
        seed: g.seed.unwrap_or(0),
        ..RansacConfig::default()
    };
    cfg.validate().map_err(input_err)?;
    Ok(cfg)
}

/// Deflection grid in degrees.
fn grid(opts: &GridOpts) -> CliResult<Vec<f64>> {
    let values = match &opts.grid_file {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(|l| {
                    l.parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| CliError::Input(format!("bad grid value {l:?}")))
                })
                .collect::<CliResult<Vec<_>>>()?
        }
        None => {
            if !(opts.step_deg > 0.0) || !opts.from_deg.is_finite() || !opts.to_deg.is_finite() {
                return Err(CliError::Input("grid needs a positive step and finite bounds".into()));
            }
            let n = ((opts.to_deg - opts.from_deg) / opts.step_deg + 1e-9).floor();
            if n < 0.0 {
                Vec::new()
            } else {
                (0..=n as usize)
                    .map(|i| opts.from_deg + i as f64 * opts.step_deg)
                    .collect()
            }
        }
    };
    if values.is_empty() {
        return Err(CliError::Input("empty deflection grid".into()));
    }
    Ok(values)
}

/// Model parameters from flags; theta_max defaults to the grid extent.
fn grid_params(g: &GlobalOpts, grid_deg: &[f64]) -> CliResult<SegmentParams> {
    let extent = grid_deg.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let d = Scenario::default().params;
    let theta_max = g
        .theta_max_deg
        .unwrap_or(if extent > 0.0 { extent } else { d.theta_max.to_degrees() });
    SegmentParams::new(
        g.length.unwrap_or(d.length),
        g.k.unwrap_or(d.k),
        g.delta_max_deg.unwrap_or(0.0).to_radians(),
        theta_max.to_radians(),
    )
    .map_err(input_err)
}

fn fk(g: &GlobalOpts, opts: &GridOpts) -> CliResult<()> {
    let grid_deg = grid(opts)?;
    let params = grid_params(g, &grid_deg)?;
    let mut csv = String::from("theta_deg,pcc_x,pcc_y,apcc_x,apcc_y,tip_angle_deg\n");
    for &d in &grid_deg {
        let theta = d.to_radians();
        let arc = cc_transform(&CcSegmentState::planar(params.length, theta)).map_err(input_err)?;
        let link = linkage_fk(theta, &params).map_err(input_err)?;
        let (p, a) = (arc.translation(), link.tip_pose.translation());
        let angle = corrected_tip_angle(theta, &params).map_err(input_err)?;
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            num(d),
            num(p.x),
            num(p.y),
            num(a.x),
            num(a.y),
            deg(angle)
        );
    }
    write_all(&mut *sink(g.out.as_deref())?, &csv)
}

#[derive(Serialize)]
struct TrajectorySummary {
    pcc_std: f64,
    apcc_std: f64,
    ratio: f64,
}

fn trajectory(g: &GlobalOpts, opts: &TrajectoryOpts) -> CliResult<()> {
    let grid_deg = grid(&opts.grid)?;
    let calibrated = grid_params(g, &grid_deg)?;
    let actual = SegmentParams::new(
        calibrated.length,
        opts.actual_k.unwrap_or(calibrated.k),
        opts.actual_delta_max_deg
            .map(f64::to_radians)
            .unwrap_or(calibrated.delta_max),
        calibrated.theta_max,
    )
    .map_err(input_err)?;
    let thetas: Vec<f64> = grid_deg.iter().map(|d| d.to_radians()).collect();
    let stats = trajectory_error_stats(&actual, &calibrated, &thetas).map_err(input_err)?;
    let mut csv = String::from("theta_deg,pcc_err,apcc_err\n");
    for ((d, p), a) in grid_deg.iter().zip(&stats.pcc_errors).zip(&stats.apcc_errors) {
        let _ = writeln!(csv, "{},{},{}", num(*d), num(*p), num(*a));
    }
    write_all(&mut *sink(g.out.as_deref())?, &csv)?;

    let summary = TrajectorySummary {
        pcc_std: stats.pcc_error_std,
        apcc_std: stats.apcc_error_std,
        ratio: stats.pcc_error_std / stats.apcc_error_std,
    };
    let json = serde_json::to_string_pretty(&summary).map_err(input_err)? + "\n";
    match &opts.summary {
        Some(path) => write_all(&mut *sink(Some(path))?, &json),
        None => {
            eprint!("{json}");
            Ok(())
        }
    }
}

fn calibrate(g: &GlobalOpts, input: &Path) -> CliResult<()> {
    let file: CalibrationFile = read_json(input)?;
    let length = g.length.unwrap_or(file.length);
    let samples: Vec<_> = file.samples.iter().map(|s| s.to_sample()).collect();
    let res = calibrate_segment(&samples, length).map_err(input_err)?;
    if let Some(stated) = file.theta_max_deg {
        if (stated.to_radians() - res.theta_max).abs() > 1e-9 * res.theta_max {
            eprintln!(
                "apcc: theta_max_deg {stated} differs from the largest commanded deflection {}",
                res.theta_max.to_degrees()
            );
        }
    }
    let out = CalibrationOutput {
        k: res.k,
        delta_max_deg: res.delta_max.to_degrees(),
        theta_max_deg: res.theta_max.to_degrees(),
        k_spread: res.k_spread,
        rejected: res.rejected,
        per_sample: res
            .per_sample
            .iter()
            .map(|s| SampleOutput {
                theta_cmd_deg: s.theta_command.to_degrees(),
                intercept_m: s.intercept,
                k: s.k,
                delta_deg: s.delta.to_degrees(),
            })
            .collect(),
    };
    let json = serde_json::to_string_pretty(&out).map_err(input_err)? + "\n";
    write_all(&mut *sink(g.out.as_deref())?, &json)
}

fn simulate(g: &GlobalOpts, opts: &SimulateOpts) -> CliResult<()> {
    let file: ScenarioFile = match &opts.scenario {
        Some(p) => read_json(p)?,
        None => ScenarioFile::default(),
    };
    let mut scenario = file.to_scenario(g)?;
    if let Some(t) = opts.trials {
        scenario.trials = t;
    }
    let config = ransac_config(g)?;
    let csv = if opts.sequence {
        simulate_sequence(&scenario, file.sequence.clone().unwrap_or_default(), &config)?
    } else {
        let res = noise_resilience_experiment(&scenario, &config).map_err(input_err)?;
        let mut csv = String::from("sigma_px,root_mode,mean_abs_err_deg,std_deg,failures\n");
        for r in &res.rows {
            let _ = writeln!(
                csv,
                "{},{},{},{},{}",
                num(r.sigma),
                r.root_mode.name(),
                deg(r.mean_abs_err),
                deg(r.std),
                r.failures
            );
        }
        csv
    };
    write_all(&mut *sink(g.out.as_deref())?, &csv)
}

fn simulate_sequence(scenario: &Scenario, seq: SequenceRecord, config: &RansacConfig) -> CliResult<String> {
    let n_frames = seq.n_frames.unwrap_or(21);
    let start = seq.theta_start_deg.unwrap_or(0.0).to_radians();
    let end = seq.theta_end_deg.unwrap_or(55.0).to_radians();
    let sigma = seq.sigma_px.unwrap_or(1.0);
    let runs = seq.runs.unwrap_or(1);
    let results = (0..runs)
        .into_par_iter()
        .map(|run| sequence_experiment(scenario, sigma, n_frames, start, end, run, config))
        .collect::<Result<Vec<_>, _>>()
        .map_err(input_err)?;
    let mut csv = String::from("run,frame,theta_gt_deg,theta_est_deg,abs_err_deg\n");
    for (run, res) in results.iter().enumerate() {
        for (i, est) in res.estimates.iter().enumerate() {
            let _ = writeln!(
                csv,
                "{run},{},{},{},{}",
                i + 1,
                deg(res.truth[i + 1]),
                deg(*est),
                deg(res.errors[i])
            );
        }
        if let Some(f) = res.failed_frame {
            eprintln!("apcc: run {run} stopped at frame {f}");
        }
    }
    Ok(csv)
}

fn estimate(g: &GlobalOpts, opts: &EstimateOpts) -> CliResult<()> {
    let file: EstimateFile = read_json(&opts.input)?;
    let (params_file, views) = file.into_parts();
    if views.is_empty() {
        return Err(CliError::Input("no view pairs in input".into()));
    }
    let params = params_file.resolve(g, Scenario::default().params)?;
    let problems = views
        .iter()
        .map(|v| v.to_problem(params, !g.no_delta))
        .collect::<CliResult<Vec<_>>>()?;
    let config = ransac_config(g)?;

    let mut csv = String::from("frame,theta_est_deg,theta_gt_deg,n_inliers,msr\n");
    let mut failure = None;
    let row = |csv: &mut String, i: usize, e: &apcc_core::estimation::Estimate| {
        let gt = views[i].theta_gt_deg.map(num).unwrap_or_default();
        let _ = writeln!(csv, "{i},{},{gt},{},{}", deg(e.theta), e.n_inliers, num(e.msr));
    };
    if opts.independent {
        for (i, p) in problems.iter().enumerate() {
            let cfg = RansacConfig {
                seed: config.seed.wrapping_add(i as u64),
                ..config
            };
            match ransac_estimate(p, &cfg) {
                Ok(e) => row(&mut csv, i, &e),
                Err(e) => {
                    failure.get_or_insert((i, e));
                }
            }
        }
    } else {
        let outcome = estimate_sequence(&problems, &config);
        for (i, e) in outcome.estimates.iter().enumerate() {
            row(&mut csv, i, e);
        }
        failure = outcome.failure;
    }
    write_all(&mut *sink(g.out.as_deref())?, &csv)?;
    match failure {
        Some((i, e)) => Err(CliError::Estimation(format!("view pair {i}: {e}"))),
        None => Ok(()),
    }
}

fn solve_bench(g: &GlobalOpts, opts: &BenchOpts) -> CliResult<()> {
    if opts.problems == 0 {
        return Err(CliError::Input("--problems must be positive".into()));
    }
    let base = ScenarioFile::default().to_scenario(g)?;
    let ks: Vec<f64> = match g.k {
        Some(k) => vec![k],
        None => vec![0.2, 0.25, 0.3],
    };
    let mut csv = String::from(
        "k,root_mode,problems,failures,matched,mean_roots_poly,mean_roots_scan,max_root_diff_rad\n",
    );
    for &k in &ks {
        let scenario = Scenario {
            params: SegmentParams { k, ..base.params },
            ..base.clone()
        };
        scenario.validate().map_err(input_err)?;
        for mode in [RootMode::Fixed, RootMode::Moved] {
            let cell = bench_cell(&scenario, mode, opts.problems);
            let _ = writeln!(
                csv,
                "{},{},{},{},{},{},{},{}",
                num(k),
                mode.name(),
                opts.problems,
                cell.failures,
                cell.matched,
                num(cell.roots_poly as f64 / opts.problems as f64),
                num(cell.roots_scan as f64 / opts.problems as f64),
                num(cell.max_diff)
            );
            eprintln!(
                "k={k} {}: poly {:.1} us/solve, scan {:.1} us/solve",
                mode.name(),
                cell.poly_secs * 1e6 / opts.problems as f64,
                cell.scan_secs * 1e6 / opts.problems as f64
            );
        }
    }
    write_all(&mut *sink(g.out.as_deref())?, &csv)
}

#[derive(Default)]
struct BenchCell {
    failures: usize,
    matched: usize,
    roots_poly: usize,
    roots_scan: usize,
    max_diff: f64,
    poly_secs: f64,
    scan_secs: f64,
}

/// Noise-free single-correspondence solves, run serially for stable timing.
fn bench_cell(scenario: &Scenario, mode: RootMode, problems: usize) -> BenchCell {
    let mut cell = BenchCell::default();
    for trial in 0..problems {
        let stream = (3 << 40) | (mode.stream_tag() << 32) | trial as u64;
        let mut rng = trial_rng(scenario.seed, stream);
        let (theta, theta_prime, motion) = draw_configuration(scenario, mode, &mut rng);
        let Ok(generated) = gen_problem(theta, theta_prime, &motion, scenario, 0.0, &mut rng) else {
            cell.failures += 1;
            continue;
        };
        let corr = generated.problem.correspondences[0];
        let t0 = Instant::now();
        let poly = solve_1pt_poly(&generated.problem, &corr);
        let t1 = Instant::now();
        let scan = solve_1pt_scan(&generated.problem, &corr);
        cell.poly_secs += (t1 - t0).as_secs_f64();
        cell.scan_secs += t1.elapsed().as_secs_f64();
        let (Ok(poly), Ok(scan)) = (poly, scan) else {
            cell.failures += 1;
            continue;
        };
        cell.roots_poly += poly.len();
        cell.roots_scan += scan.len();
        if poly.len() == scan.len() {
            let diff = poly
                .iter()
                .zip(&scan)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            cell.max_diff = cell.max_diff.max(diff);
            if diff < 1e-8 {
                cell.matched += 1;
            }
        }
    }
    cell
}
