//! Symmetric tridiagonal eigensolver: Sturm-sequence bisection for the
//! eigenvalues and inverse iteration for the vectors.

use crate::error::{GapError, Result};

pub const BISECTION_CAP: usize = 200;
pub const VALUE_TOL: f64 = 1e-12;
pub const RESIDUAL_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct SymTridiag {
    pub diag: Vec<f64>,
    /// `off[i]` couples rows `i` and `i + 1`.
    pub off: Vec<f64>,
}

impl SymTridiag {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Self {
        assert_eq!(off.len() + 1, diag.len(), "off-diagonal length mismatch");
        Self { diag, off }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn norm_inf(&self) -> f64 {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i].abs();
                if i > 0 {
                    s += self.off[i - 1].abs();
                }
                if i + 1 < n {
                    s += self.off[i].abs();
                }
                s
            })
            .fold(0.0, f64::max)
    }

    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let mut r = 0.0;
            if i > 0 {
                r += self.off[i - 1].abs();
            }
            if i + 1 < n {
                r += self.off[i].abs();
            }
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    /// Number of eigenvalues strictly below `x`.
    pub fn sturm_count(&self, x: f64) -> usize {
        self.sturm_count_with(x, f64::EPSILON * self.norm_inf().max(f64::MIN_POSITIVE))
    }

    fn sturm_count_with(&self, x: f64, tiny: f64) -> usize {
        let mut count = 0;
        let mut q = 1.0;
        for i in 0..self.len() {
            let coupling = if i == 0 { 0.0 } else { self.off[i - 1] * self.off[i - 1] / q };
            q = self.diag[i] - x - coupling;
            if q == 0.0 {
                q = -tiny;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// The `index`-th smallest eigenvalue (zero-based).
    pub fn eigenvalue(&self, index: usize) -> Result<f64> {
        if index >= self.len() {
            return Err(GapError::Domain(format!(
                "eigenvalue index {index} out of range for size {}",
                self.len()
            )));
        }
        let (mut lo, mut hi) = self.gershgorin();
        let norm = self.norm_inf();
        let tiny = f64::EPSILON * norm.max(f64::MIN_POSITIVE);
        let pad = f64::EPSILON * norm + f64::MIN_POSITIVE;
        lo -= pad;
        hi += pad;
        for _ in 0..BISECTION_CAP {
            let mid = 0.5 * (lo + hi);
            if hi - lo <= VALUE_TOL * lo.abs().max(hi.abs()) || mid <= lo || mid >= hi {
                return Ok(mid);
            }
            if self.sturm_count_with(mid, tiny) > index {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Err(GapError::Convergence(format!(
            "bisection for eigenvalue {index} exceeded {BISECTION_CAP} iterations"
        )))
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * x[i];
                if i > 0 {
                    s += self.off[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    s += self.off[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    /// Eigenvector for a converged eigenvalue, normalised to unit 2-norm.
    pub fn eigenvector(&self, lambda: f64) -> Result<Vec<f64>> {
        let n = self.len();
        let norm = self.norm_inf();
        let lu = ShiftedLu::factor(self, lambda);
        // Deterministic start with no special symmetry.
        let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.5 * ((i as f64) * 0.618_033_988_75).sin()).collect();
        let mut residual = f64::INFINITY;
        // At least two sweeps so components along nearby eigenvectors are
        // suppressed, not merely small enough to pass the residual test.
        for sweep in 0..8 {
            lu.solve(&mut x);
            let scale = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !scale.is_finite() || scale == 0.0 {
                break;
            }
            x.iter_mut().for_each(|v| *v /= scale);
            let ax = self.matvec(&x);
            let amax = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            residual = ax
                .iter()
                .zip(&x)
                .map(|(a, v)| (a - lambda * v).abs())
                .fold(0.0, f64::max)
                / amax;
            if sweep >= 1 && residual <= RESIDUAL_TOL * norm {
                return Ok(x);
            }
        }
        Err(GapError::Convergence(format!(
            "inverse iteration residual {residual:e} above {:e}",
            RESIDUAL_TOL * norm
        )))
    }

    /// The `count` smallest eigenpairs in ascending order.
    pub fn lowest(&self, count: usize) -> Result<Vec<(f64, Vec<f64>)>> {
        (0..count)
            .map(|i| {
                let lambda = self.eigenvalue(i)?;
                Ok((lambda, self.eigenvector(lambda)?))
            })
            .collect()
    }
}

/// LU factors of `T - shift I` with partial pivoting (upper factor has two superdiagonals).
struct ShiftedLu {
    u0: Vec<f64>,
    u1: Vec<f64>,
    u2: Vec<f64>,
    mult: Vec<f64>,
    swapped: Vec<bool>,
}

impl ShiftedLu {
    fn factor(t: &SymTridiag, shift: f64) -> Self {
        let n = t.len();
        let tiny = f64::EPSILON * t.norm_inf().max(f64::MIN_POSITIVE);
        let mut u0 = vec![0.0; n];
        let mut u1 = vec![0.0; n];
        let mut u2 = vec![0.0; n];
        let mut mult = vec![0.0; n];
        let mut swapped = vec![false; n];
        // Current row being eliminated: (a, b, c) at columns (i, i+1, i+2).
        let mut a = t.diag[0] - shift;
        let mut b = if n > 1 { t.off[0] } else { 0.0 };
        let mut c = 0.0;
        for i in 0..n {
            if i + 1 == n {
                u0[i] = if a == 0.0 { tiny } else { a };
                break;
            }
            let sub = t.off[i];
            let nd = t.diag[i + 1] - shift;
            let nb = if i + 2 < n { t.off[i + 1] } else { 0.0 };
            if sub.abs() > a.abs() {
                swapped[i] = true;
                u0[i] = sub;
                u1[i] = nd;
                u2[i] = nb;
                let m = a / sub;
                mult[i] = m;
                a = b - m * nd;
                b = c - m * nb;
            } else {
                let piv = if a == 0.0 { tiny } else { a };
                u0[i] = piv;
                u1[i] = b;
                u2[i] = c;
                let m = sub / piv;
                mult[i] = m;
                a = nd - m * b;
                b = nb - m * c;
            }
            c = 0.0;
        }
        Self {
            u0,
            u1,
            u2,
            mult,
            swapped,
        }
    }

    fn solve(&self, x: &mut [f64]) {
        let n = x.len();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                x.swap(i, i + 1);
            }
            x[i + 1] -= self.mult[i] * x[i];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            if i + 1 < n {
                s -= self.u1[i] * x[i + 1];
            }
            if i + 2 < n {
                s -= self.u2[i] * x[i + 2];
            }
            x[i] = s / self.u0[i];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn laplacian(n: usize) -> SymTridiag {
        SymTridiag::new(vec![2.0; n], vec![-1.0; n - 1])
    }

    #[test]
    fn discrete_laplacian_spectrum() {
        let n = 50;
        let t = laplacian(n);
        for j in 0..5 {
            let exact = 2.0 - 2.0 * (PI * (j + 1) as f64 / (n + 1) as f64).cos();
            let got = t.eigenvalue(j).unwrap();
            assert!((got - exact).abs() < 1e-12, "{j}: {got} vs {exact}");
        }
        let pairs = t.lowest(2).unwrap();
        for (lambda, v) in &pairs {
            let r = t.matvec(v);
            for (a, b) in r.iter().zip(v) {
                assert!((a - lambda * b).abs() < 1e-10);
            }
        }
        let dot: f64 = pairs[0].1.iter().zip(&pairs[1].1).map(|(a, b)| a * b).sum();
        assert!(dot.abs() < 1e-10);
    }

    #[test]
    fn sturm_count_brackets() {
        let t = SymTridiag::new(vec![1.0, 5.0, 3.0], vec![0.0, 0.0]);
        assert_eq!(t.sturm_count(0.0), 0);
        assert_eq!(t.sturm_count(2.0), 1);
        assert_eq!(t.sturm_count(4.0), 2);
        assert_eq!(t.sturm_count(9.0), 3);
        assert!((t.eigenvalue(1).unwrap() - 3.0).abs() < 1e-11);
    }

    #[test]
    fn pivoting_handles_zero_diagonal() {
        let t = SymTridiag::new(vec![0.0, 0.0, 0.0, 0.0], vec![1.0, 1.0, 1.0]);
        for j in 0..4 {
            let lambda = t.eigenvalue(j).unwrap();
            let v = t.eigenvector(lambda).unwrap();
            let r = t.matvec(&v);
            for (a, b) in r.iter().zip(&v) {
                assert!((a - lambda * b).abs() < 1e-10);
            }
        }
    }
}
