//! Dirichlet spectra of `-Δ + V` on geodesic discs of `M^2_k` with radial
//! potential, and the inequality checkers that compare them with the
//! one-dimensional model.
//!
//! Separation of variables in geodesic polar coordinates gives, in the
//! `cos(m θ)` sector, the radial operator
//! `-u'' - (cs/sn) u' + m^2/sn^2 u + V u` on `[0, R]`. It is discretised by
//! finite volumes on a vertex grid (cell masses are exact integrals of the
//! area element `sn_k(r) dr`) and symmetrised by the mass matrix.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

use crate::error::{GapError, Result};
use crate::geom::{cs, sn, tn, ModelSpace, Point, Tangent};
use crate::interp::CubicSpline;
use crate::potential::Potential;
use crate::rng::SplitStream;
use crate::spectral1d::{Model1D, Spectrum1D};
use crate::tridiag::SymTridiag;

pub const DEFAULT_RADIAL_GRID: usize = 4096;
pub const MAX_SECTOR: usize = 3;
/// Boundary standoff as a fraction of the radius.
pub const STANDOFF_FRACTION: f64 = 1e-4;
/// Eigenvalues of the two sectors closer than this count as tied.
pub const TIE_TOL: f64 = 1e-10;
/// Inset of the companion 1-D model diameter from `pi/sqrt(k)` when the disc
/// is a full hemisphere (in units of `1/sqrt(k)`).
pub const HEMISPHERE_INSET: f64 = 0.02;

#[derive(Clone, Debug, PartialEq)]
pub struct BallDomain {
    pub space: ModelSpace,
    pub radius: f64,
    pub potential: Potential,
}

impl BallDomain {
    /// A geodesic disc of radius `R` about the pole of `M^2_k`. For `k > 0`
    /// the diameter may reach, but not exceed, `pi/sqrt(k)` (the hemisphere).
    pub fn new(k: f64, radius: f64, potential: Potential) -> Result<Self> {
        let space = ModelSpace::new(k, 2)?;
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(GapError::Domain(format!("radius R = {radius} must be positive")));
        }
        if k > 0.0 && 2.0 * radius > space.conjugate_radius() * (1.0 + 1e-12) {
            return Err(GapError::Domain(format!(
                "diameter 2R = {} exceeds pi/sqrt(k) = {}",
                2.0 * radius,
                space.conjugate_radius()
            )));
        }
        Ok(Self {
            space,
            radius,
            potential,
        })
    }

    pub fn diameter(&self) -> f64 {
        2.0 * self.radius
    }

    pub fn standoff(&self) -> f64 {
        STANDOFF_FRACTION * self.radius
    }

    pub fn is_hemisphere(&self) -> bool {
        self.space.k > 0.0 && self.diameter() >= self.space.conjugate_radius() - 1e-9
    }

    /// Diameter on which the companion 1-D model is solved: `2R`, or
    /// `(pi - HEMISPHERE_INSET)/sqrt(k)` for the hemisphere, where the model
    /// itself needs `D < pi/sqrt(k)`.
    pub fn model_diameter(&self) -> f64 {
        if self.is_hemisphere() {
            (PI - HEMISPHERE_INSET) / self.space.k.sqrt()
        } else {
            self.diameter()
        }
    }

    pub fn radius_of(&self, p: &Point) -> Result<f64> {
        self.space.distance(&self.space.pole(), p)
    }

    pub fn contains(&self, p: &Point) -> bool {
        matches!(self.radius_of(p), Ok(r) if r < self.radius)
    }

    pub fn potential_at(&self, p: &Point) -> Result<f64> {
        Ok(self.potential.eval(self.radius_of(p)?))
    }

    /// `∇V` for the radial potential.
    pub fn grad_potential(&self, p: &Point) -> Result<Tangent> {
        Ok(match self.space.radial_direction(p)? {
            Some(dir) => dir.scaled(self.potential.derivative(self.radius_of(p)?)),
            None => Tangent::zero(p.clone()),
        })
    }

    pub fn point_at(&self, r: f64, theta: f64) -> Result<Point> {
        self.space.polar_point(r, theta)
    }
}

/// Mass-symmetrised radial operator for one angular sector.
#[derive(Clone, Debug)]
pub struct RadialDiscretization {
    pub m: usize,
    /// Vertices `0, h, .., R`.
    pub r: Vec<f64>,
    pub h: f64,
    /// Index of the first unknown vertex (0 for `m = 0`, 1 otherwise).
    pub first: usize,
    pub mass: Vec<f64>,
    /// Stiffness `K` (unsymmetrised) as diagonal and upper off-diagonal.
    pub stiff_diag: Vec<f64>,
    pub stiff_off: Vec<f64>,
    pub matrix: SymTridiag,
}

/// Integral of `sn_k` over `[a, b]`.
fn area_between(k: f64, a: f64, b: f64) -> f64 {
    if k == 0.0 {
        0.5 * (b * b - a * a)
    } else {
        // cs(a) - cs(b) = 2k sn((a+b)/2) sn((b-a)/2)
        2.0 * sn(k, 0.5 * (a + b)) * sn(k, 0.5 * (b - a))
    }
}

pub fn radial_operator(dom: &BallDomain, m: usize, cells: usize) -> Result<RadialDiscretization> {
    if m > MAX_SECTOR {
        return Err(GapError::Domain(format!("sector m = {m} above the cap {MAX_SECTOR}")));
    }
    if cells < 16 {
        return Err(GapError::Domain(format!("radial grid of {cells} cells is too coarse")));
    }
    let k = dom.space.k;
    let big_r = dom.radius;
    let h = big_r / cells as f64;
    let r: Vec<f64> = (0..=cells).map(|i| i as f64 * h).collect();
    let first = if m == 0 { 0 } else { 1 };
    let unknowns: Vec<usize> = (first..cells).collect();
    let m2 = (m * m) as f64;

    let mut mass = Vec::with_capacity(unknowns.len());
    let mut diag = Vec::with_capacity(unknowns.len());
    let mut off = Vec::with_capacity(unknowns.len().saturating_sub(1));
    for &i in &unknowns {
        let lo = if i == 0 { 0.0 } else { r[i] - 0.5 * h };
        let hi = r[i] + 0.5 * h;
        let mi = area_between(k, lo, hi);
        let flux_in = if i == 0 { 0.0 } else { sn(k, lo) / h };
        let flux_out = sn(k, hi) / h;
        let mut d = flux_in + flux_out + dom.potential.eval(r[i]) * mi;
        if m > 0 {
            d += m2 / sn(k, r[i]).powi(2) * mi;
        }
        mass.push(mi);
        diag.push(d);
        if i + 1 < cells {
            off.push(-flux_out);
        }
    }
    let sym_diag: Vec<f64> = diag.iter().zip(&mass).map(|(d, mi)| d / mi).collect();
    let sym_off: Vec<f64> = off
        .iter()
        .enumerate()
        .map(|(j, o)| o / (mass[j] * mass[j + 1]).sqrt())
        .collect();
    Ok(RadialDiscretization {
        m,
        r,
        h,
        first,
        mass,
        stiff_diag: diag,
        stiff_off: off,
        matrix: SymTridiag::new(sym_diag, sym_off),
    })
}

impl RadialDiscretization {
    /// `M^{-1} K u` at the unknown vertices for a full-grid function `u`
    /// (the Dirichlet value at `R`, and at 0 for `m >= 1`, is ignored).
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let n = self.mass.len();
        (0..n)
            .map(|j| {
                let i = j + self.first;
                let mut s = self.stiff_diag[j] * u[i];
                if j > 0 {
                    s += self.stiff_off[j - 1] * u[i - 1];
                }
                if j + 1 < n {
                    s += self.stiff_off[j] * u[i + 1];
                }
                s / self.mass[j]
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode2 {
    Radial,
    Angular,
}

/// Radial profile `u(r)` of an eigenfunction in one sector, from RK4 at a fixed eigenvalue.
#[derive(Clone, Debug)]
pub struct RadialProfile {
    pub m: usize,
    pub lambda: f64,
    pub r: Vec<f64>,
    pub u: Vec<f64>,
    pub du: Vec<f64>,
}

/// Integrate the sector ODE from the centre. Writing `u = sn^m q` removes the
/// singular terms: `q'' = -(2m+1)(cs/sn) q' + (m(m+1)k + V - lambda) q`, whose
/// value at `r = 0` follows from `q'(0) = 0`.
pub fn radial_profile(dom: &BallDomain, m: usize, lambda: f64, steps: usize) -> RadialProfile {
    let k = dom.space.k;
    let mm = m as f64;
    let shift = mm * (mm + 1.0) * k;
    let coef = 2.0 * mm + 1.0;
    let rhs = |r: f64, q: f64, dq: f64| -> f64 {
        let pot = shift + dom.potential.eval(r) - lambda;
        if r == 0.0 {
            pot * q / (1.0 + coef)
        } else {
            -coef * cs(k, r) / sn(k, r) * dq + pot * q
        }
    };
    let h = dom.radius / steps as f64;
    let mut rs = Vec::with_capacity(steps + 1);
    let mut qs = Vec::with_capacity(steps + 1);
    let mut dqs = Vec::with_capacity(steps + 1);
    let (mut q, mut dq) = (1.0, 0.0);
    for i in 0..=steps {
        let r = i as f64 * h;
        rs.push(r);
        qs.push(q);
        dqs.push(dq);
        if i == steps {
            break;
        }
        let (a1, b1) = (dq, rhs(r, q, dq));
        let (a2, b2) = (dq + 0.5 * h * b1, rhs(r + 0.5 * h, q + 0.5 * h * a1, dq + 0.5 * h * b1));
        let (a3, b3) = (dq + 0.5 * h * b2, rhs(r + 0.5 * h, q + 0.5 * h * a2, dq + 0.5 * h * b2));
        let (a4, b4) = (dq + h * b3, rhs(r + h, q + h * a3, dq + h * b3));
        q += h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
        dq += h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
    }
    let (u, du) = rs
        .iter()
        .zip(qs.iter().zip(&dqs))
        .map(|(&r, (&q, &dq))| {
            if m == 0 {
                (q, dq)
            } else {
                let s = sn(k, r);
                let sm = s.powi(m as i32);
                let dsm = mm * s.powi(m as i32 - 1) * cs(k, r);
                (sm * q, dsm * q + sm * dq)
            }
        })
        .unzip();
    RadialProfile {
        m,
        lambda,
        r: rs,
        u,
        du,
    }
}

impl RadialProfile {
    pub fn eval(&self, r: f64) -> f64 {
        let h = self.r[1];
        let i = ((r / h).floor() as usize).min(self.r.len() - 2);
        // Cubic Hermite on the interval using the stored slopes.
        let t = (r - self.r[i]) / h;
        let (y0, y1) = (self.u[i], self.u[i + 1]);
        let (d0, d1) = (self.du[i] * h, self.du[i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * d0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * d1
    }
}

#[derive(Clone, Debug)]
pub struct BallSpectrum {
    pub lambda1: f64,
    pub lambda2: f64,
    pub mode2: Mode2,
    /// Extrapolated sector eigenvalues: `[m=0 first, m=0 second, m=1 first]`.
    pub sectors: [f64; 3],
    pub cells: usize,
    /// Ground-state profile `u0`, normalised to `u0(0) = 1`.
    pub phi1: RadialProfile,
    /// Profile of the sector attaining `lambda2`.
    pub phi2: RadialProfile,
    /// `(log u0)'` on the profile grid (NaN at `R`).
    pub omega_prime: Vec<f64>,
    radius: f64,
    boundary_slope: f64,
    regularised: CubicSpline,
}

/// Fraction of `R` next to the boundary where `u0'/u0` from the profile is
/// replaced by the spline of the regularised drift.
const PROFILE_CUTOFF: f64 = 1e-3;

pub fn solve_ball(dom: &BallDomain, cells: usize) -> Result<BallSpectrum> {
    let coarse0 = radial_operator(dom, 0, cells)?;
    let fine0 = radial_operator(dom, 0, 2 * cells)?;
    let coarse1 = radial_operator(dom, 1, cells)?;
    let fine1 = radial_operator(dom, 1, 2 * cells)?;
    let extrapolate = |c: f64, f: f64| (4.0 * f - c) / 3.0;
    let l01 = extrapolate(coarse0.matrix.eigenvalue(0)?, fine0.matrix.eigenvalue(0)?);
    let l02 = extrapolate(coarse0.matrix.eigenvalue(1)?, fine0.matrix.eigenvalue(1)?);
    let l11 = extrapolate(coarse1.matrix.eigenvalue(0)?, fine1.matrix.eigenvalue(0)?);
    let (lambda2, mode2) = if l11 <= l02 + TIE_TOL {
        (l11, Mode2::Angular)
    } else {
        (l02, Mode2::Radial)
    };

    let phi1 = radial_profile(dom, 0, l01, cells);
    let phi2 = match mode2 {
        Mode2::Radial => radial_profile(dom, 0, l02, cells),
        Mode2::Angular => radial_profile(dom, 1, l11, cells),
    };

    let k = dom.space.k;
    let big_r = dom.radius;
    let boundary_slope = -0.5 * cs(k, big_r) / sn(k, big_r);
    let omega_prime: Vec<f64> = phi1
        .u
        .iter()
        .zip(&phi1.du)
        .enumerate()
        .map(|(i, (u, du))| if i == cells { f64::NAN } else { du / u })
        .collect();
    let cutoff = big_r * (1.0 - PROFILE_CUTOFF);
    let mut knots = Vec::new();
    let mut values = Vec::new();
    for (i, &r) in phi1.r.iter().enumerate() {
        if r > cutoff {
            break;
        }
        knots.push(r);
        values.push(omega_prime[i] + 1.0 / (big_r - r));
    }
    knots.push(big_r);
    values.push(boundary_slope);
    let regularised = CubicSpline::new(knots, values)?;

    Ok(BallSpectrum {
        lambda1: l01,
        lambda2,
        mode2,
        sectors: [l01, l02, l11],
        cells,
        phi1,
        phi2,
        omega_prime,
        radius: big_r,
        boundary_slope,
        regularised,
    })
}

impl BallSpectrum {
    pub fn gap(&self) -> f64 {
        self.lambda2 - self.lambda1
    }

    /// `ω'(r) = (log u0)'(r)` for `0 <= r < R`.
    pub fn omega_prime_at(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        self.regularised.eval(r) - 1.0 / (self.radius - r)
    }

    /// Near-boundary asymptote `-1/(R - r) + g(R)`.
    pub fn omega_prime_asymptotic(&self, r: f64) -> f64 {
        self.boundary_slope - 1.0 / (self.radius - r)
    }

    /// `∇ log φ1` at `p`, erroring inside the boundary standoff.
    pub fn grad_log_phi1(&self, dom: &BallDomain, p: &Point) -> Result<Tangent> {
        let (r, dir) = outward(dom, p)?;
        if r >= dom.radius - dom.standoff() {
            return Err(GapError::Boundary {
                r,
                radius: dom.radius,
                standoff: dom.standoff(),
            });
        }
        Ok(match dir {
            Some(dir) => dir.scaled(self.omega_prime_at(r)),
            None => Tangent::zero(p.clone()),
        })
    }

    /// `∇ log φ1` with the boundary asymptote inside the standoff. Errors only
    /// for points outside the disc.
    pub fn drift_field(&self, dom: &BallDomain, p: &Point) -> Result<Tangent> {
        let (r, dir) = outward(dom, p)?;
        if r >= dom.radius {
            return Err(GapError::Boundary {
                r,
                radius: dom.radius,
                standoff: dom.standoff(),
            });
        }
        let slope = if r >= dom.radius - dom.standoff() {
            self.omega_prime_asymptotic(r)
        } else {
            self.omega_prime_at(r)
        };
        Ok(match dir {
            Some(dir) => dir.scaled(slope),
            None => Tangent::zero(p.clone()),
        })
    }

    /// `φ2/φ1` at polar coordinates `(r, θ)`, with the angular factor `cos θ`
    /// when the second eigenvalue is angular. `φ1` is normalised to 1 at the centre.
    pub fn ground_state_ratio(&self, r: f64, theta: f64) -> f64 {
        let ratio = self.phi2.eval(r) / self.phi1.eval(r);
        match self.mode2 {
            Mode2::Radial => ratio,
            Mode2::Angular => ratio * theta.cos(),
        }
    }

    /// CSV with columns `r, u0, omegaPrime`.
    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "# lambda1={:.16e},lambda2={:.16e},mode2={}\nr,u0,omegaPrime\n",
            self.lambda1,
            self.lambda2,
            match self.mode2 {
                Mode2::Radial => "radial",
                Mode2::Angular => "angular",
            }
        );
        for i in 0..self.phi1.r.len() {
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e}\n",
                self.phi1.r[i], self.phi1.u[i], self.omega_prime[i]
            ));
        }
        out
    }
}

/// Distance from the centre and the unit radial direction (`None` at the centre).
fn outward(dom: &BallDomain, p: &Point) -> Result<(f64, Option<Tangent>)> {
    let log = dom.space.log_map(p, &dom.space.pole())?;
    let r = dom.space.norm(&log.vec);
    Ok((r, (r > 0.0).then(|| log.scaled(-1.0 / r))))
}

/// A sampled pair in geodesic polar coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairSample {
    pub index: usize,
    pub x: (f64, f64),
    pub y: (f64, f64),
    pub value: f64,
}

/// Radius of a uniformly distributed point of the disc, by rejection on `sn_k(r)`.
fn sample_radius(rng: &mut SplitStream, k: f64, big_r: f64) -> f64 {
    let peak = if k > 0.0 && big_r > 0.5 * PI / k.sqrt() {
        1.0 / k.sqrt()
    } else {
        sn(k, big_r)
    };
    loop {
        let r = big_r * rng.uniform();
        if rng.uniform() * peak < sn(k, r) {
            return r;
        }
    }
}

/// The `index`-th pair of a reproducible uniform sample of `Ω × Ω`.
pub fn sample_pair(dom: &BallDomain, seed: u64, index: usize) -> ((f64, f64), (f64, f64)) {
    let mut rng = SplitStream::new(seed, index as u64);
    let k = dom.space.k;
    let rx = sample_radius(&mut rng, k, dom.radius);
    let tx = TAU * rng.uniform();
    let ry = sample_radius(&mut rng, k, dom.radius);
    let ty = TAU * rng.uniform();
    ((rx, tx), (ry, ty))
}

/// `F = <∇log φ1(y), γ'(y)> - <∇log φ1(x), γ'(x)>` with `γ` the unit-speed
/// geodesic from `x` to `y`. Returns `(F, ρ)`.
pub fn log_gradient_difference(
    dom: &BallDomain,
    ball: &BallSpectrum,
    x: &Point,
    y: &Point,
) -> Result<(f64, f64)> {
    let (ex, ey, rho) = dom.space.geodesic_frame(x, y)?;
    let gx = ball.grad_log_phi1(dom, x)?;
    let gy = ball.grad_log_phi1(dom, y)?;
    let s = &dom.space;
    Ok((s.dot(&gy.vec, &ey.vec) - s.dot(&gx.vec, &ex.vec), rho))
}

/// Deterministic extremum over indexed values (ties go to the lower index).
fn pick(a: Option<PairSample>, b: Option<PairSample>, prefer_low: bool) -> Option<PairSample> {
    match (a, b) {
        (None, x) | (x, None) => x,
        (Some(a), Some(b)) => {
            let better = if prefer_low { b.value < a.value } else { b.value > a.value };
            if better || (b.value == a.value && b.index < a.index) {
                Some(b)
            } else {
                Some(a)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub samples: usize,
    pub min_margin: f64,
    pub worst: Option<PairSample>,
    pub violations: usize,
    pub satisfied: bool,
}

/// Evaluate `tn(ρ/2)[(2λ1 - V(x) - V(y)) - 2(λ̄1 - Ṽ(ρ/2))]` over sampled pairs.
pub fn check_condition(
    dom: &BallDomain,
    ball: &BallSpectrum,
    model: &Model1D,
    spec: &Spectrum1D,
    samples: usize,
    seed: u64,
) -> ConditionReport {
    let k = dom.space.k;
    let evaluate = |i: usize| -> Option<PairSample> {
        let ((rx, tx), (ry, ty)) = sample_pair(dom, seed, i);
        let x = dom.point_at(rx, tx).ok()?;
        let y = dom.point_at(ry, ty).ok()?;
        let rho = dom.space.distance(&x, &y).ok()?;
        let t = tn(k, 0.5 * rho).ok()?;
        let bracket = (2.0 * ball.lambda1 - dom.potential.eval(rx) - dom.potential.eval(ry))
            - 2.0 * (spec.lambda1bar - model.vtilde.eval(0.5 * rho));
        Some(PairSample {
            index: i,
            x: (rx, tx),
            y: (ry, ty),
            value: t * bracket,
        })
    };
    let results: Vec<Option<PairSample>> = (0..samples).into_par_iter().map(evaluate).collect();
    let violations = results.iter().flatten().filter(|p| p.value < 0.0).count();
    let worst = results.into_iter().fold(None, |acc, p| pick(acc, p, true));
    let min_margin = worst.map_or(0.0, |p| p.value);
    ConditionReport {
        samples,
        min_margin,
        worst,
        violations,
        satisfied: violations == 0,
    }
}

pub const MODULUS_TOL: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModulusReport {
    pub samples: usize,
    pub evaluated: usize,
    /// Pairs with `ρ/2` beyond the tabulated range of `Ψ` or a point inside the standoff.
    pub skipped: usize,
    pub max_delta: f64,
    pub worst: Option<PairSample>,
    pub tolerance: f64,
    pub pass: bool,
}

/// `Δ = F(x, y) - 2Ψ(ρ/2)`; `None` where it cannot be evaluated.
pub fn modulus_defect(
    dom: &BallDomain,
    ball: &BallSpectrum,
    spec: &Spectrum1D,
    x: &Point,
    y: &Point,
) -> Option<f64> {
    let (f, rho) = log_gradient_difference(dom, ball, x, y).ok()?;
    Some(f - 2.0 * spec.psi_at(0.5 * rho)?)
}

pub fn check_modulus_concavity(
    dom: &BallDomain,
    ball: &BallSpectrum,
    spec: &Spectrum1D,
    samples: usize,
    seed: u64,
) -> ModulusReport {
    let evaluate = |i: usize| -> Option<PairSample> {
        let ((rx, tx), (ry, ty)) = sample_pair(dom, seed, i);
        let x = dom.point_at(rx, tx).ok()?;
        let y = dom.point_at(ry, ty).ok()?;
        Some(PairSample {
            index: i,
            x: (rx, tx),
            y: (ry, ty),
            value: modulus_defect(dom, ball, spec, &x, &y)?,
        })
    };
    let results: Vec<Option<PairSample>> = (0..samples).into_par_iter().map(evaluate).collect();
    let evaluated = results.iter().flatten().count();
    let worst = results.into_iter().fold(None, |acc, p| pick(acc, p, false));
    let max_delta = worst.map_or(f64::NEG_INFINITY, |p| p.value);
    ModulusReport {
        samples,
        evaluated,
        skipped: samples - evaluated,
        max_delta,
        worst,
        tolerance: MODULUS_TOL,
        pass: evaluated > 0 && max_delta <= MODULUS_TOL,
    }
}

pub const GAP_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub ball_gap: f64,
    pub model_gap: f64,
    pub margin: f64,
    pub tolerance: f64,
    pub pass: bool,
}

pub fn check_gap_comparison(ball: &BallSpectrum, spec: &Spectrum1D) -> GapReport {
    let margin = ball.gap() - spec.gap();
    GapReport {
        ball_gap: ball.gap(),
        model_gap: spec.gap(),
        margin,
        tolerance: GAP_TOL,
        pass: margin >= -GAP_TOL,
    }
}
