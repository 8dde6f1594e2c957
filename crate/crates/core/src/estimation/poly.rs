//! Dense univariate polynomials with real coefficients.

use std::ops::{Add, Mul};

use nalgebra::DMatrix;

/// Coefficients in increasing degree order.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly(pub Vec<f64>);

impl Poly {
    pub fn zero() -> Self {
        Poly(vec![0.0])
    }

    pub fn constant(c: f64) -> Self {
        Poly(vec![c])
    }

    pub fn from_coeffs(c: &[f64]) -> Self {
        Poly(c.to_vec())
    }

    pub fn degree(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.0
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    /// `Σ |c_i| |x|^i`, the natural rounding scale of `eval(x)`.
    pub fn eval_abs(&self, x: f64) -> f64 {
        let ax = x.abs();
        self.0.iter().rev().fold(0.0, |acc, &c| acc * ax + c.abs())
    }

    pub fn derivative(&self) -> Poly {
        if self.0.len() <= 1 {
            return Poly::zero();
        }
        Poly(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, &c)| i as f64 * c)
                .collect(),
        )
    }

    pub fn scale(&self, s: f64) -> Poly {
        Poly(self.0.iter().map(|c| c * s).collect())
    }

    pub fn pow(&self, n: u32) -> Poly {
        (0..n).fold(Poly::constant(1.0), |acc, _| &acc * self)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.0.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Drops leading coefficients below `rel_tol` times the largest one.
    pub fn trimmed(&self, rel_tol: f64) -> Poly {
        let cut = rel_tol * self.max_abs_coeff();
        let mut c = self.0.clone();
        while c.len() > 1 && c.last().is_some_and(|v| v.abs() <= cut) {
            c.pop();
        }
        Poly(c)
    }

    /// Synthetic division by `(x - root)`, discarding the remainder.
    pub fn deflate(&self, root: f64) -> Poly {
        let n = self.degree();
        if n == 0 {
            return Poly::zero();
        }
        let mut q = vec![0.0; n];
        let mut carry = 0.0;
        for i in (0..n).rev() {
            carry = self.0[i + 1] + carry * root;
            q[i] = carry;
        }
        Poly(q)
    }

    /// Newton iterations on `x`, stopping when the step is below rounding.
    pub fn polish(&self, mut x: f64, iters: usize) -> f64 {
        let d = self.derivative();
        for _ in 0..iters {
            let fx = self.eval(x);
            let dx = d.eval(x);
            if fx == 0.0 || dx == 0.0 || !dx.is_finite() {
                break;
            }
            let step = fx / dx;
            if !step.is_finite() {
                break;
            }
            let next = x - step;
            // keep the iterate only if it does not get worse
            if self.eval(next).abs() > fx.abs() {
                break;
            }
            x = next;
            if step.abs() <= 4.0 * f64::EPSILON * (1.0 + x.abs()) {
                break;
            }
        }
        x
    }

    /// Real roots from the eigenvalues of the companion matrix, Newton
    /// polished and sorted. `imag_tol` is relative to `1 + |root|`.
    pub fn real_roots(&self, imag_tol: f64) -> Vec<f64> {
        let p = self.trimmed(1e-14);
        let n = p.degree();
        if n == 0 {
            return Vec::new();
        }
        let lead = p.0[n];
        let mut companion = DMatrix::<f64>::zeros(n, n);
        for i in 1..n {
            companion[(i, i - 1)] = 1.0;
        }
        for i in 0..n {
            companion[(i, n - 1)] = -p.0[i] / lead;
        }
        let mut roots: Vec<f64> = companion
            .complex_eigenvalues()
            .iter()
            .filter(|z| z.re.is_finite() && z.im.abs() <= imag_tol * (1.0 + z.re.abs()))
            .map(|z| p.polish(z.re, 8))
            .collect();
        roots.sort_by(|a, b| a.total_cmp(b));
        roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (1.0 + a.abs()));
        roots
    }
}

impl Add for &Poly {
    type Output = Poly;

    fn add(self, rhs: &Poly) -> Poly {
        let n = self.0.len().max(rhs.0.len());
        Poly(
            (0..n)
                .map(|i| self.0.get(i).copied().unwrap_or(0.0) + rhs.0.get(i).copied().unwrap_or(0.0))
                .collect(),
        )
    }
}

impl Mul for &Poly {
    type Output = Poly;

    fn mul(self, rhs: &Poly) -> Poly {
        let mut out = vec![0.0; self.0.len() + rhs.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in rhs.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic() {
        let a = Poly::from_coeffs(&[1.0, 2.0]);
        let b = Poly::from_coeffs(&[-1.0, 0.0, 3.0]);
        assert_eq!((&a * &b).0, vec![-1.0, -2.0, 3.0, 6.0]);
        assert_eq!((&a + &b).0, vec![0.0, 2.0, 3.0]);
        assert_eq!(a.pow(2).0, vec![1.0, 4.0, 4.0]);
        assert_eq!(b.derivative().0, vec![0.0, 6.0]);
        assert_eq!(b.eval(2.0), 11.0);
    }

    #[test]
    fn roots_of_product() {
        // (x - 0.5)(x + 2)(x - 3)(x^2 + 1)
        let p = [
            Poly::from_coeffs(&[-0.5, 1.0]),
            Poly::from_coeffs(&[2.0, 1.0]),
            Poly::from_coeffs(&[-3.0, 1.0]),
            Poly::from_coeffs(&[1.0, 0.0, 1.0]),
        ]
        .iter()
        .fold(Poly::constant(1.0), |acc, f| &acc * f);
        let roots = p.real_roots(1e-8);
        assert_eq!(roots.len(), 3);
        for (r, e) in roots.iter().zip([-2.0, 0.5, 3.0]) {
            assert!((r - e).abs() < 1e-13);
        }
        let q = p.deflate(3.0);
        assert_eq!(q.degree(), 4);
        assert!(q.eval(0.5).abs() < 1e-12);
    }

    #[test]
    fn trimming() {
        let p = Poly::from_coeffs(&[1.0, -1.0, 1e-20]);
        assert_eq!(p.trimmed(1e-14).degree(), 1);
        assert_eq!(p.real_roots(1e-8), vec![1.0]);
        assert!(Poly::constant(2.0).real_roots(1e-8).is_empty());
    }
}
