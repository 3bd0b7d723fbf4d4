//! The one-dimensional comparison model
//! `-u'' + (n-1) tn_k(s) u' + Vt(s) u` on `[-D/2, D/2]` with Dirichlet ends.
//!
//! The operator is discretised in self-adjoint form
//! `-w^{-1}(w u')' + Vt u`, `w = cs_k^{n-1}`, on a uniform vertex grid and
//! symmetrised by `W^{1/2}`, so the two lowest eigenpairs come from the
//! tridiagonal solver.

use std::f64::consts::PI;

use crate::error::{GapError, Result};
use crate::geom::{cs, tn};
use crate::interp::CubicSpline;
use crate::potential::Potential;
use crate::tridiag::SymTridiag;

pub const DEFAULT_GRID: usize = 4097;
pub const MIN_GRID: usize = 64;
/// Fraction of the interval (centred) over which ODE residuals are measured.
pub const INNER_FRACTION: f64 = 0.9;

#[derive(Clone, Debug, PartialEq)]
pub struct Model1D {
    pub n: usize,
    pub k: f64,
    pub d: f64,
    pub vtilde: Potential,
}

impl Model1D {
    pub fn new(n: usize, k: f64, d: f64, vtilde: Potential) -> Result<Self> {
        if n < 2 {
            return Err(GapError::Domain(format!("dimension n = {n} must be at least 2")));
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(GapError::Domain(format!("diameter D = {d} must be positive")));
        }
        if k > 0.0 && d >= PI / k.sqrt() - 1e-9 {
            return Err(GapError::Domain(format!(
                "diameter D = {d} must stay below pi/sqrt(k) = {}",
                PI / k.sqrt()
            )));
        }
        if !vtilde.is_even() {
            return Err(GapError::Domain("model potential must be even".into()));
        }
        Ok(Self { n, k, d, vtilde })
    }

    pub fn weight(&self, s: f64) -> f64 {
        cs(self.k, s).powi(self.n as i32 - 1)
    }

    /// `(n-1) tn_k(s)`, the drift coefficient of the operator.
    pub fn drift(&self, s: f64) -> f64 {
        (self.n as f64 - 1.0) * tn(self.k, s).expect("|s| < D/2 keeps cs_k positive")
    }
}

/// Discretised operator on the interior vertices.
#[derive(Clone, Debug)]
pub struct Discretization {
    /// All vertices including the two Dirichlet ends.
    pub grid: Vec<f64>,
    pub h: f64,
    /// `w` at every vertex.
    pub weight: Vec<f64>,
    /// `w` at the midpoint between vertex `i` and `i + 1`.
    pub flux_weight: Vec<f64>,
    pub potential: Vec<f64>,
    /// `W^{-1/2} K W^{-1/2}` on the interior vertices.
    pub matrix: SymTridiag,
}

pub fn assemble(model: &Model1D, gridsize: usize) -> Result<Discretization> {
    if gridsize < MIN_GRID {
        return Err(GapError::Domain(format!("grid size {gridsize} below {MIN_GRID}")));
    }
    let half = 0.5 * model.d;
    let h = model.d / (gridsize - 1) as f64;
    let grid: Vec<f64> = (0..gridsize).map(|i| -half + i as f64 * h).collect();
    let weight: Vec<f64> = grid.iter().map(|&s| model.weight(s)).collect();
    let flux_weight: Vec<f64> = (0..gridsize - 1)
        .map(|i| model.weight(-half + (i as f64 + 0.5) * h))
        .collect();
    let potential: Vec<f64> = grid.iter().map(|&s| model.vtilde.eval(s)).collect();

    let m = gridsize - 2;
    let h2 = h * h;
    let diag: Vec<f64> = (1..=m)
        .map(|i| (flux_weight[i - 1] + flux_weight[i]) / (h2 * weight[i]) + potential[i])
        .collect();
    let off: Vec<f64> = (1..m)
        .map(|i| -flux_weight[i] / (h2 * (weight[i] * weight[i + 1]).sqrt()))
        .collect();
    Ok(Discretization {
        grid,
        h,
        weight,
        flux_weight,
        potential,
        matrix: SymTridiag::new(diag, off),
    })
}

impl Discretization {
    /// The unsymmetrised discrete operator `-w^{-1}(w u')' + Vt u` applied at
    /// the interior vertices of a full-grid function `u`.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let n = self.grid.len();
        let h2 = self.h * self.h;
        (1..n - 1)
            .map(|i| {
                let flux = self.flux_weight[i] * (u[i + 1] - u[i])
                    - self.flux_weight[i - 1] * (u[i] - u[i - 1]);
                -flux / (h2 * self.weight[i]) + self.potential[i] * u[i]
            })
            .collect()
    }

    /// The two lowest eigenvalues of the discrete problem.
    pub fn lowest_eigenvalues(&self) -> Result<[f64; 2]> {
        Ok([self.matrix.eigenvalue(0)?, self.matrix.eigenvalue(1)?])
    }
}

/// Two lowest eigenvalues at a single resolution (no extrapolation).
pub fn eigenvalues_on_grid(model: &Model1D, gridsize: usize) -> Result<[f64; 2]> {
    assemble(model, gridsize)?.lowest_eigenvalues()
}

#[derive(Clone, Debug)]
pub struct Spectrum1D {
    pub n: usize,
    pub k: f64,
    pub d: f64,
    /// Extrapolated eigenvalues.
    pub lambda1bar: f64,
    pub lambda2bar: f64,
    /// Raw eigenvalues on the `G` and `2G - 1` grids.
    pub raw: [[f64; 2]; 2],
    pub grid: Vec<f64>,
    pub phi1bar: Vec<f64>,
    pub phi2bar: Vec<f64>,
    /// `(log phi1bar)'`; NaN at the two endpoints.
    pub psi: Vec<f64>,
    /// `phi2bar / phi1bar`, extended to the endpoints by l'Hopital.
    pub phi_ratio: Vec<f64>,
    psi_spline: CubicSpline,
    phi_spline: CubicSpline,
}

/// Solve on grids `G` and `2G - 1`, Richardson-extrapolate the eigenvalues
/// and keep eigenfunctions from the `G` grid.
pub fn solve_spectrum(model: &Model1D, gridsize: usize) -> Result<Spectrum1D> {
    let disc = assemble(model, gridsize)?;
    let coarse = disc.matrix.lowest(2)?;
    let fine = eigenvalues_on_grid(model, 2 * gridsize - 1)?;
    let raw_coarse = [coarse[0].0, coarse[1].0];
    let extrapolate = |c: f64, f: f64| (4.0 * f - c) / 3.0;
    let lambda1bar = extrapolate(raw_coarse[0], fine[0]);
    let lambda2bar = extrapolate(raw_coarse[1], fine[1]);

    let g = disc.grid.len();
    let unsymmetrise = |y: &[f64]| -> Vec<f64> {
        let mut u = vec![0.0; g];
        for i in 1..g - 1 {
            u[i] = y[i - 1] / disc.weight[i].sqrt();
        }
        u
    };
    let mut phi1 = unsymmetrise(&coarse[0].1);
    let mut phi2 = unsymmetrise(&coarse[1].1);

    let peak1 = phi1.iter().copied().fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
    phi1.iter_mut().for_each(|v| *v /= peak1);
    let peak2 = phi2.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let orientation: f64 = phi2.iter().zip(&disc.grid).map(|(v, s)| v * s).sum();
    let scale2 = orientation.signum() / peak2;
    phi2.iter_mut().for_each(|v| *v *= scale2);

    let psi = log_derivative(&phi1, disc.h);
    let phi_ratio = ratio_with_endpoints(&phi1, &phi2, disc.h)?;

    let psi_spline = CubicSpline::new(disc.grid[1..g - 1].to_vec(), psi[1..g - 1].to_vec())?;
    let phi_spline = CubicSpline::new(disc.grid.clone(), phi_ratio.clone())?;
    Ok(Spectrum1D {
        n: model.n,
        k: model.k,
        d: model.d,
        lambda1bar,
        lambda2bar,
        raw: [raw_coarse, fine],
        grid: disc.grid,
        phi1bar: phi1,
        phi2bar: phi2,
        psi,
        phi_ratio,
        psi_spline,
        phi_spline,
    })
}

/// Centred differences of `log u` in the interior, second-order one-sided
/// at the penultimate points, NaN at the endpoints.
fn log_derivative(u: &[f64], h: f64) -> Vec<f64> {
    let g = u.len();
    let l: Vec<f64> = u.iter().map(|v| v.ln()).collect();
    let mut out = vec![f64::NAN; g];
    for i in 2..g - 2 {
        out[i] = (l[i + 1] - l[i - 1]) / (2.0 * h);
    }
    out[1] = (-3.0 * l[1] + 4.0 * l[2] - l[3]) / (2.0 * h);
    out[g - 2] = (3.0 * l[g - 2] - 4.0 * l[g - 3] + l[g - 4]) / (2.0 * h);
    out
}

fn ratio_with_endpoints(phi1: &[f64], phi2: &[f64], h: f64) -> Result<Vec<f64>> {
    let g = phi1.len();
    let forward = |u: &[f64]| (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * h);
    let backward = |u: &[f64]| (3.0 * u[g - 1] - 4.0 * u[g - 2] + u[g - 3]) / (2.0 * h);
    let slope_right = backward(phi1);
    let slope_left = forward(phi1);
    let slope = slope_right.abs().min(slope_left.abs());
    if slope < 1e-10 {
        return Err(GapError::Degenerate { slope });
    }
    let mut out: Vec<f64> = phi1.iter().zip(phi2).map(|(a, b)| b / a).collect();
    out[0] = forward(phi2) / slope_left;
    out[g - 1] = backward(phi2) / slope_right;
    Ok(out)
}

/// Left-hand side of the Riccati-type ODE satisfied by `Psi = (log phi1)'`:
/// `Psi'' + 2 Psi' Psi - tn((n+1) Psi' + 2 l1 + 2 Psi^2 - 2 Vt) - Vt' - (n-1)(k - tn^2) Psi`.
pub fn psi_ode_lhs(model: &Model1D, lambda1: f64, s: f64, psi: f64, dpsi: f64, d2psi: f64) -> f64 {
    let n = model.n as f64;
    let t = tn(model.k, s).expect("interior point");
    let (v, dv) = model.vtilde.eval_with_derivative(s);
    d2psi + 2.0 * dpsi * psi
        - t * ((n + 1.0) * dpsi + 2.0 * lambda1 + 2.0 * psi * psi - 2.0 * v)
        - dv
        - (n - 1.0) * (model.k - t * t) * psi
}

/// `Phi'' - (n-1) tn Phi' + 2 Psi Phi' + (l2 - l1) Phi`.
pub fn phi_ode_lhs(
    model: &Model1D,
    gap: f64,
    s: f64,
    psi: f64,
    phi: f64,
    dphi: f64,
    d2phi: f64,
) -> f64 {
    d2phi - model.drift(s) * dphi + 2.0 * psi * dphi + gap * phi
}

fn centred_derivatives(f: &[f64], h: f64, i: usize) -> (f64, f64) {
    (
        (f[i + 1] - f[i - 1]) / (2.0 * h),
        (f[i + 1] - 2.0 * f[i] + f[i - 1]) / (h * h),
    )
}

impl Spectrum1D {
    pub fn h(&self) -> f64 {
        self.grid[1] - self.grid[0]
    }

    pub fn gap(&self) -> f64 {
        self.lambda2bar - self.lambda1bar
    }

    /// `Psi(s)` by cubic interpolation; `None` outside the range where it is tabulated.
    pub fn psi_at(&self, s: f64) -> Option<f64> {
        let (lo, hi) = self.psi_spline.domain();
        (s >= lo && s <= hi).then(|| self.psi_spline.eval(s))
    }

    /// `Phi(s)` by cubic interpolation, clamped to `[-D/2, D/2]`.
    pub fn phi_ratio_at(&self, s: f64) -> f64 {
        let half = 0.5 * self.d;
        self.phi_spline.eval(s.clamp(-half, half))
    }

    /// Upper end of the range on which `Psi` is tabulated.
    pub fn psi_limit(&self) -> f64 {
        self.psi_spline.domain().1
    }

    /// Residual of the `Psi` ODE at each vertex (NaN where the stencil is incomplete).
    pub fn residual_psi_ode(&self, model: &Model1D) -> Vec<f64> {
        let g = self.grid.len();
        let h = self.h();
        let mut out = vec![f64::NAN; g];
        for i in 2..g - 2 {
            let (d1, d2) = centred_derivatives(&self.psi, h, i);
            out[i] = psi_ode_lhs(model, self.lambda1bar, self.grid[i], self.psi[i], d1, d2);
        }
        out
    }

    pub fn residual_phi_ode(&self, model: &Model1D) -> Vec<f64> {
        let g = self.grid.len();
        let h = self.h();
        let mut out = vec![f64::NAN; g];
        for i in 2..g - 2 {
            let (d1, d2) = centred_derivatives(&self.phi_ratio, h, i);
            out[i] = phi_ode_lhs(model, self.gap(), self.grid[i], self.psi[i], self.phi_ratio[i], d1, d2);
        }
        out
    }

    /// Max-norm of a grid function over the centred inner part of the interval.
    pub fn inner_max(&self, f: &[f64]) -> f64 {
        let cut = 0.5 * INNER_FRACTION * self.d;
        self.grid
            .iter()
            .zip(f)
            .filter(|(s, v)| s.abs() <= cut && v.is_finite())
            .fold(0.0, |m, (_, v)| m.max(v.abs()))
    }

    /// `<phi1, phi2>` in the `cs_k^{n-1}` weighted inner product, normalised by both norms.
    pub fn weighted_overlap(&self) -> f64 {
        let w = |s: f64| cs(self.k, s).powi(self.n as i32 - 1);
        let (mut ab, mut aa, mut bb) = (0.0, 0.0, 0.0);
        for ((s, a), b) in self.grid.iter().zip(&self.phi1bar).zip(&self.phi2bar) {
            let ws = w(*s);
            ab += ws * a * b;
            aa += ws * a * a;
            bb += ws * b * b;
        }
        ab / (aa * bb).sqrt()
    }

    /// CSV with columns `s, phi1bar, phi2bar, psi, phiRatio` under a comment header.
    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "# n={},k={:.16e},D={:.16e},lambda1bar={:.16e},lambda2bar={:.16e}\ns,phi1bar,phi2bar,psi,phiRatio\n",
            self.n, self.k, self.d, self.lambda1bar, self.lambda2bar
        );
        for i in 0..self.grid.len() {
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                self.grid[i], self.phi1bar[i], self.phi2bar[i], self.psi[i], self.phi_ratio[i]
            ));
        }
        out
    }
}
