//! One-point RANSAC over the polynomial minimal solver.
//!
//! Candidates are scored with a first-order angular residual (the triple
//! product divided by its gradient norm), so `tau` is an angle in radians
//! and does not depend on baseline length or scene scale.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::minimize_bounded;

use super::gec::PairEvaluator;
use super::solver::solve_1pt_poly_frozen;
use super::ViewPairProblem;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RansacConfig {
    /// Inlier threshold on the angular residual (rad).
    pub tau: f64,
    /// Target probability of drawing at least one inlier sample.
    pub confidence: f64,
    pub min_iterations: usize,
    pub max_iterations: usize,
    /// Minimum inlier share for a consensus (at least two inliers always).
    pub min_inlier_fraction: f64,
    /// Half-width of the refinement interval around the best candidate (rad).
    pub refine_window: f64,
    pub seed: u64,
}

impl Default for RansacConfig {
    fn default() -> Self {
        Self {
            tau: 1e-2,
            confidence: 0.99,
            min_iterations: 10,
            max_iterations: 100,
            min_inlier_fraction: 0.2,
            refine_window: 2f64.to_radians(),
            seed: 0,
        }
    }
}

impl RansacConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParams(m.into()));
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return bad("tau must be positive");
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return bad("confidence must lie in (0, 1)");
        }
        if self.max_iterations == 0 || self.min_iterations > self.max_iterations {
            return bad("iteration bounds must satisfy 0 < min <= max");
        }
        if !(0.0..=1.0).contains(&self.min_inlier_fraction) {
            return bad("min_inlier_fraction must lie in [0, 1]");
        }
        if !(self.refine_window > 0.0) {
            return bad("refine_window must be positive");
        }
        Ok(())
    }

    fn required_inliers(&self, n: usize) -> usize {
        ((self.min_inlier_fraction * n as f64).ceil() as usize).max(2)
    }

    fn iterations_for(&self, inlier_share: f64) -> usize {
        let needed = if inlier_share >= 1.0 {
            0.0
        } else {
            ((1.0 - self.confidence).ln() / (1.0 - inlier_share).ln()).ceil()
        };
        (needed as usize).clamp(self.min_iterations, self.max_iterations)
    }
}

/// A root of some minimal sample, scored on all correspondences.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Candidate {
    pub theta: f64,
    pub n_inliers: usize,
    /// Truncated quadratic cost `Σ min(s², τ²)`.
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Estimate {
    pub theta: f64,
    pub inliers: Vec<bool>,
    pub n_inliers: usize,
    /// Mean squared angular residual over the inliers (rad²).
    pub msr: f64,
    /// Distinct candidates seen during sampling, ascending in `theta`.
    pub candidates: Vec<Candidate>,
}

const MAX_REFINE_ROUNDS: usize = 10;
const REFINE_STEP_TOL: f64 = 1e-10;

/// Bounded minimization of `loss(residuals(t))` for `t` within the refine
/// window of `theta`. Returns `theta` unless the minimum improves on it.
fn refine_in_window<L: Fn(&[f64]) -> f64>(
    evaluator: &PairEvaluator<'_>,
    theta: f64,
    delta: f64,
    config: &RansacConfig,
    scratch: &mut Vec<f64>,
    loss: L,
) -> f64 {
    let theta_max = evaluator.theta_max();
    let mut cost = |t: f64| match evaluator.sampson_into(t, delta, scratch) {
        Ok(()) => loss(scratch),
        Err(_) => f64::INFINITY,
    };
    let lo = (theta - config.refine_window).max(-theta_max);
    let hi = (theta + config.refine_window).min(theta_max);
    let (t, ft) = minimize_bounded(&mut cost, lo, hi, 1e-13, 200);
    if ft < cost(theta) {
        t
    } else {
        theta
    }
}

fn score(residuals: &[f64], tau: f64) -> (usize, f64) {
    residuals.iter().fold((0, 0.0), |(n, c), s| {
        (n + usize::from(s.abs() <= tau), c + (s * s).min(tau * tau))
    })
}

fn better(a: &Candidate, b: &Candidate, theta_prev: f64) -> bool {
    if a.n_inliers != b.n_inliers {
        return a.n_inliers > b.n_inliers;
    }
    if a.cost != b.cost {
        return a.cost < b.cost;
    }
    (a.theta - theta_prev).abs() < (b.theta - theta_prev).abs()
}

pub fn ransac_estimate(problem: &ViewPairProblem, config: &RansacConfig) -> Result<Estimate> {
    config.validate()?;
    problem.validate()?;
    let n = problem.correspondences.len();
    if n < 2 {
        return Err(Error::NotEnoughCorrespondences { required: 2, got: n });
    }
    let evaluator = PairEvaluator::new(problem)?;
    let delta_frozen = problem.delta_at(problem.theta_prev);
    let required = config.required_inliers(n);

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(config.seed));

    let mut residuals = Vec::with_capacity(n);
    let mut candidates: Vec<Candidate> = Vec::new();
    let mut best: Option<Candidate> = None;
    let mut budget = config.max_iterations;
    let mut degenerate = 0usize;
    let mut drawn = 0usize;
    for &idx in &order {
        if drawn >= budget {
            break;
        }
        drawn += 1;
        let roots = match solve_1pt_poly_frozen(problem, &problem.correspondences[idx], delta_frozen) {
            Ok(sol) => sol.thetas,
            Err(Error::DegenerateMotion) => {
                degenerate += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        for theta in roots {
            if candidates.iter().any(|c| (c.theta - theta).abs() <= 1e-9) {
                continue;
            }
            evaluator.sampson_into(theta, delta_frozen, &mut residuals)?;
            let (n_inliers, cost) = score(&residuals, config.tau);
            let cand = Candidate {
                theta,
                n_inliers,
                cost,
            };
            candidates.push(cand);
            if best.is_none_or(|b| better(&cand, &b, problem.theta_prev)) {
                best = Some(cand);
                budget = config.iterations_for(n_inliers as f64 / n as f64);
            }
        }
    }
    if degenerate == drawn {
        return Err(Error::DegenerateMotion);
    }
    let best = match best {
        Some(b) if b.n_inliers >= required => b,
        _ => return Err(Error::NoConsensus),
    };

    // Refine in two stages, each re-evaluating the correction at the current
    // estimate until the step is negligible: least squares over the current
    // inlier mask, then a Tukey loss with a scale taken from those inliers.
    let use_delta = problem.apply_delta && problem.params.delta_max > 0.0;
    let mut theta = best.theta;
    let mut delta = delta_frozen;
    let mut scratch = Vec::with_capacity(n);
    for _ in 0..MAX_REFINE_ROUNDS {
        evaluator.sampson_into(theta, delta, &mut residuals)?;
        let mask: Vec<bool> = residuals.iter().map(|s| s.abs() <= config.tau).collect();
        let loss = |r: &[f64]| {
            r.iter()
                .zip(&mask)
                .filter(|(_, &m)| m)
                .map(|(s, _)| s * s)
                .sum::<f64>()
        };
        let next = refine_in_window(&evaluator, theta, delta, config, &mut scratch, loss);
        let next_delta = if use_delta { problem.delta_at(next) } else { delta };
        let settled = (next - theta).abs() < REFINE_STEP_TOL && (next_delta - delta).abs() < REFINE_STEP_TOL;
        theta = next;
        delta = next_delta;
        if settled {
            break;
        }
    }

    evaluator.sampson_into(theta, delta, &mut residuals)?;
    let mut abs_in: Vec<f64> = residuals
        .iter()
        .map(|s| s.abs())
        .filter(|s| *s <= config.tau)
        .collect();
    abs_in.sort_by(|a, b| a.total_cmp(b));
    let scale = abs_in.get(abs_in.len() / 2).map_or(0.0, |m| 1.4826 * m);
    let c = 4.685 * scale;
    if abs_in.len() >= 3 && c > 1e-9 {
        let loss = |r: &[f64]| {
            r.iter()
                .map(|s| 1.0 - (1.0 - (s / c).powi(2).min(1.0)).powi(3))
                .sum::<f64>()
        };
        for _ in 0..MAX_REFINE_ROUNDS {
            let next = refine_in_window(&evaluator, theta, delta, config, &mut scratch, loss);
            let next_delta = if use_delta { problem.delta_at(next) } else { delta };
            let settled = (next - theta).abs() < REFINE_STEP_TOL && (next_delta - delta).abs() < REFINE_STEP_TOL;
            theta = next;
            delta = next_delta;
            if settled {
                break;
            }
        }
    }

    evaluator.sampson_into(theta, delta, &mut residuals)?;
    let inliers: Vec<bool> = residuals.iter().map(|s| s.abs() <= config.tau).collect();
    let n_inliers = inliers.iter().filter(|&&b| b).count();
    if n_inliers < required {
        return Err(Error::NoConsensus);
    }
    let msr = residuals
        .iter()
        .zip(&inliers)
        .filter(|(_, &m)| m)
        .map(|(s, _)| s * s)
        .sum::<f64>()
        / n_inliers as f64;
    candidates.sort_by(|a, b| a.theta.total_cmp(&b.theta));
    Ok(Estimate {
        theta,
        inliers,
        n_inliers,
        msr,
        candidates,
    })
}
