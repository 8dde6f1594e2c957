//! Minimal solvers for the second-view deflection from one correspondence.
//!
//! With `w = tan(φ'/2)` the joint constraint gives
//! `tan(θ'/2) = 2w / ((1+r) + (r-1)w²)`, so `sin/cos` of both `θ'` and `φ'`
//! are rational in `w` and the constraint becomes a degree-8 polynomial.

use crate::apcc::phi_from_theta;
use crate::error::{Error, Result};
use crate::geometry::{rot_z, Vec3};
use crate::numeric::{minimize_bounded, refine_bracket};

use super::gec::residual_of_theta;
use super::poly::Poly;
use super::{Correspondence, ViewPairProblem};

/// Grid size of [`solve_1pt_scan`].
pub const SCAN_GRID_POINTS: usize = 2048;

/// Roots of one minimal solve, with the polynomial they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct MinimalSolution {
    /// Admissible deflections, ascending.
    pub thetas: Vec<f64>,
    pub polynomial: Poly,
}

/// Trigonometric auxiliaries as polynomials in `w`, each with the powers of
/// `P = 1 + w²` and `G = (r-1)²w² + (1+r)²` in its denominator.
struct Aux {
    numerator: Poly,
    denom_p: u32,
    denom_g: u32,
}

fn auxiliaries(r: f64) -> [Aux; 5] {
    let n = Poly::from_coeffs(&[0.0, 2.0]);
    let d = Poly::from_coeffs(&[1.0 + r, 0.0, r - 1.0]);
    let nd = &n * &d;
    let dd = &d * &d;
    let nn = &n * &n;
    let aux = |numerator: Poly, denom_p, denom_g| Aux {
        numerator,
        denom_p,
        denom_g,
    };
    [
        aux(Poly::constant(1.0), 0, 0),
        aux(nd.scale(2.0), 1, 1),
        aux(&dd + &nn.scale(-1.0), 1, 1),
        aux(Poly::from_coeffs(&[0.0, 2.0]), 1, 0),
        aux(Poly::from_coeffs(&[1.0, 0.0, -1.0]), 1, 0),
    ]
}

/// Planar decomposition `v = cos·a + sin·b + e` of `rot_z(angle) v`.
fn planar_parts(v: &Vec3) -> (Vec3, Vec3, Vec3) {
    (
        Vec3::new(v.x, v.y, 0.0),
        Vec3::new(-v.y, v.x, 0.0),
        Vec3::new(0.0, 0.0, v.z),
    )
}

/// Constraint polynomial in `w = tan(φ'/2)` with the second-view correction
/// frozen at `delta_prime`.
pub fn residual_polynomial(
    problem: &ViewPairProblem,
    correspondence: &Correspondence,
    delta_prime: f64,
) -> Result<Poly> {
    problem.validate()?;
    let params = &problem.params;
    let chain1 = super::gec::frame_chain(problem.theta_prev, params, &problem.cam_offset)?;
    let center1 = *chain1.t_cd.translation();
    let dir1 = rot_z(problem.theta_prev - problem.delta_at(problem.theta_prev)) * correspondence.f;

    // everything below is in the second-view root frame
    let rot = problem.root_motion.rotation();
    let q = rot.transpose() * (problem.root_motion.translation() - center1);
    let e1 = rot.transpose() * dir1;

    let g = rot_z(-delta_prime) * correspondence.f_prime;
    let (ga, gb, ge) = planar_parts(&g);
    let (ta, tb, te) = planar_parts(&problem.cam_offset);
    let l1 = params.proximal_length();
    let r = params.ratio();

    // p₂ = P₁ + s₁P_s1 + c₁P_c1 + s₂P_s2 + c₂P_c2 (basis order of `auxiliaries`)
    let p_terms = [
        Vec3::new(0.0, l1 * r, 0.0) + te + q,
        Vec3::new(l1 * r, 0.0, 0.0) + tb,
        Vec3::new(0.0, -l1 * r, 0.0) + ta,
        Vec3::new(-l1, 0.0, 0.0),
        Vec3::new(0.0, l1, 0.0),
    ];
    // d₂ × e₁ = X₁ + s₁X_s1 + c₁X_c1
    let x_terms = [
        (0usize, ge.cross(&e1)),
        (1, gb.cross(&e1)),
        (2, ga.cross(&e1)),
    ];

    let aux = auxiliaries(r);
    let p_poly = Poly::from_coeffs(&[1.0, 0.0, 1.0]);
    let g_poly = Poly::from_coeffs(&[(1.0 + r).powi(2), 0.0, (r - 1.0).powi(2)]);
    let mut total = Poly::zero();
    for (j, pj) in p_terms.iter().enumerate() {
        for &(i, ref xi) in &x_terms {
            let c = pj.dot(xi);
            if c == 0.0 {
                continue;
            }
            let (a, b) = (&aux[j], &aux[i]);
            let mult = &p_poly.pow(2 - a.denom_p - b.denom_p) * &g_poly.pow(2 - a.denom_g - b.denom_g);
            let term = &(&a.numerator * &b.numerator) * &mult;
            total = &total + &term.scale(c);
        }
    }
    Ok(total)
}

/// Maps a root `w` back to `θ'`, or `None` if it lies on the other branch of
/// the joint constraint or outside the calibrated range.
fn theta_from_w(w: f64, problem: &ViewPairProblem) -> Option<f64> {
    let r = problem.params.ratio();
    let n = 2.0 * w;
    let d = (1.0 + r) + (r - 1.0) * w * w;
    if !(d > 0.0) {
        return None;
    }
    let theta = 2.0 * n.atan2(d);
    let phi = phi_from_theta(theta, problem.params.k).ok()?;
    let phi_w = 2.0 * w.atan();
    if (phi - phi_w).abs() > 1e-6 {
        return None;
    }
    problem.params.check_range(theta).ok()?;
    Some(theta.clamp(-problem.params.theta_max, problem.params.theta_max))
}

/// Minimal solve with an explicit second-view correction.
pub fn solve_1pt_poly_frozen(
    problem: &ViewPairProblem,
    correspondence: &Correspondence,
    delta_prime: f64,
) -> Result<MinimalSolution> {
    let poly = residual_polynomial(problem, correspondence, delta_prime)?;
    let r = problem.params.ratio();
    if poly.max_abs_coeff() <= 1e-12 * problem.residual_scale() * (1.0 + r).powi(4) {
        return Err(Error::DegenerateMotion);
    }

    // With an unmoved root the two camera centers coincide at θ' = θ, which
    // makes θ an exact root for every correspondence. Split it off so the
    // remaining roots are found accurately.
    let w_prior = (0.5 * phi_from_theta(problem.theta_prev, problem.params.k)?).tan();
    let at_prior = poly.eval(w_prior).abs() <= 1e-10 * poly.eval_abs(w_prior);
    let reduced = if at_prior { poly.deflate(w_prior) } else { poly.clone() };

    let mut thetas: Vec<f64> = reduced
        .real_roots(1e-8)
        .into_iter()
        .map(|w| poly.polish(w, 4))
        .filter_map(|w| theta_from_w(w, problem))
        .collect();
    if at_prior {
        thetas.push(problem.theta_prev);
    }
    thetas.sort_by(|a, b| a.total_cmp(b));
    thetas.dedup_by(|a, b| (*a - *b).abs() <= 1e-12);
    Ok(MinimalSolution {
        thetas,
        polynomial: poly,
    })
}

/// Polynomial minimal solve. The first-view correction is applied as given by
/// the problem; the second-view correction is held at its value at `θ`.
pub fn solve_1pt_poly(problem: &ViewPairProblem, correspondence: &Correspondence) -> Result<Vec<f64>> {
    let delta_prime = problem.delta_at(problem.theta_prev);
    Ok(solve_1pt_poly_frozen(problem, correspondence, delta_prime)?.thetas)
}

/// Grid-bracketing reference solver on the exact residual.
pub fn solve_1pt_scan(problem: &ViewPairProblem, correspondence: &Correspondence) -> Result<Vec<f64>> {
    problem.validate()?;
    let theta_max = problem.params.theta_max;
    let n = SCAN_GRID_POINTS;
    let xs: Vec<f64> = (0..n)
        .map(|i| -theta_max + 2.0 * theta_max * i as f64 / (n - 1) as f64)
        .collect();
    let f = |x: f64| residual_of_theta(problem, correspondence, x).unwrap_or(f64::NAN);
    let ys: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let peak = ys.iter().fold(0.0f64, |m, y| m.max(y.abs()));
    if peak < 1e-14 * problem.residual_scale() {
        return Err(Error::DegenerateMotion);
    }

    let ftol = 1e-15 * peak.max(1.0);
    let mut brackets: Vec<(f64, f64, f64, f64)> = Vec::new();
    let mut roots = Vec::new();
    for i in 0..n - 1 {
        let (y0, y1) = (ys[i], ys[i + 1]);
        if y0 == 0.0 {
            roots.push(xs[i]);
        } else if y0.signum() != y1.signum() && y1 != 0.0 {
            brackets.push((xs[i], xs[i + 1], y0, y1));
        }
    }
    if ys[n - 1] == 0.0 {
        roots.push(xs[n - 1]);
    }
    // A root pair closer than the grid spacing shows up as a dip of |r|
    // without a sign change; look inside each such dip.
    for i in 1..n - 1 {
        let (a, b, c) = (ys[i - 1], ys[i], ys[i + 1]);
        let s = b.signum();
        let same = a.signum() == s && c.signum() == s && b != 0.0;
        if same && b.abs() <= a.abs() && b.abs() <= c.abs() {
            let (xm, fm) = minimize_bounded(|x| s * f(x), xs[i - 1], xs[i + 1], 1e-14, 200);
            if fm < 0.0 {
                brackets.push((xs[i - 1], xm, a, s * fm));
                brackets.push((xm, xs[i + 1], s * fm, c));
            }
        }
    }
    roots.extend(
        brackets
            .into_iter()
            .map(|(a, b, fa, fb)| refine_bracket(f, a, b, fa, fb, ftol)),
    );
    roots.sort_by(|a, b| a.total_cmp(b));
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-9);
    Ok(roots)
}
