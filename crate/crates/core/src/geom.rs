//! Constant-curvature geometry kernel.
//!
//! The model space of curvature `k` and dimension `n` is represented
//! extrinsically in `R^{n+1}` for `k != 0` and intrinsically as `R^n` for
//! `k = 0`:
//!
//! * `k > 0`: the sphere of radius `1/sqrt(k)` with the Euclidean form,
//! * `k < 0`: the upper sheet of the hyperboloid `<p,p> = 1/k` under the
//!   Minkowski form (last coordinate time-like).
//!
//! With `<.,.>_k` denoting the relevant bilinear form every point satisfies
//! `k <p,p>_k = 1`, and the exponential map, logarithm, transport and mirror
//! all share one closed form written in terms of `sn_k` and `cs_k`.

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use std::f64::consts::PI;

use crate::error::{GapError, Result};

/// Ambient coordinate storage (inline up to four coordinates).
pub type Coords = SmallVec<[f64; 4]>;

/// Threshold on `k<p,q>_k + 1` below which two sphere points count as antipodal.
pub const ANTIPODAL_GUARD: f64 = 1e-10;
/// Distance below which the mirror map is undefined.
pub const COINCIDENT_GUARD: f64 = 1e-12;
/// Permitted drift of `sqrt(|k|)|p|` from one before a point is rejected.
pub const MANIFOLD_TOL: f64 = 1e-9;

/// Generalised sine: the solution of `sn'' + k sn = 0`, `sn(0) = 0`, `sn'(0) = 1`.
pub fn sn(k: f64, s: f64) -> f64 {
    if k > 0.0 {
        let r = k.sqrt();
        (r * s).sin() / r
    } else if k < 0.0 {
        let r = (-k).sqrt();
        (r * s).sinh() / r
    } else {
        s
    }
}

/// Generalised cosine, `cs = sn'`.
pub fn cs(k: f64, s: f64) -> f64 {
    if k > 0.0 {
        (k.sqrt() * s).cos()
    } else if k < 0.0 {
        ((-k).sqrt() * s).cosh()
    } else {
        1.0
    }
}

/// `tn_k = k sn_k / cs_k = -cs_k' / cs_k`.
pub fn tn(k: f64, s: f64) -> Result<f64> {
    if k > 0.0 {
        let r = k.sqrt();
        let c = (r * s).cos();
        if c.abs() <= 1e-14 {
            return Err(GapError::Pole { k, s });
        }
        Ok(r * (r * s).sin() / c)
    } else if k < 0.0 {
        let r = (-k).sqrt();
        Ok(-r * (r * s).tanh())
    } else {
        Ok(0.0)
    }
}

/// Inverse of `sn_k` on its principal branch.
pub fn asn(k: f64, x: f64) -> f64 {
    if k > 0.0 {
        let r = k.sqrt();
        (r * x).clamp(-1.0, 1.0).asin() / r
    } else if k < 0.0 {
        let r = (-k).sqrt();
        (r * x).asinh() / r
    } else {
        x
    }
}

#[inline]
fn map_coords(a: &[f64], f: impl Fn(f64) -> f64) -> Coords {
    let mut out = Coords::from_slice(a);
    out.iter_mut().for_each(|v| *v = f(*v));
    out
}

#[inline]
fn zip_coords(a: &[f64], b: &[f64], f: impl Fn(f64, f64) -> f64) -> Coords {
    let mut out = Coords::from_slice(a);
    out.iter_mut().zip(b).for_each(|(u, &v)| *u = f(*u, v));
    out
}

/// A point of the model space in ambient coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub coords: Coords,
}

impl Point {
    pub fn new(coords: impl Into<Coords>) -> Self {
        Self {
            coords: coords.into(),
        }
    }

    pub fn from_slice(coords: &[f64]) -> Self {
        Self {
            coords: Coords::from_slice(coords),
        }
    }
}

/// A tangent vector in ambient coordinates, tagged with its base point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tangent {
    pub base: Point,
    pub vec: Coords,
}

impl Tangent {
    pub fn new(base: Point, vec: impl Into<Coords>) -> Self {
        Self {
            base,
            vec: vec.into(),
        }
    }

    pub fn zero(base: Point) -> Self {
        let vec = Coords::from_elem(0.0, base.coords.len());
        Self { base, vec }
    }

    pub fn scaled(&self, a: f64) -> Tangent {
        Tangent {
            base: self.base.clone(),
            vec: map_coords(&self.vec, |v| a * v),
        }
    }

    /// `self + a * other`; both must share a base point.
    pub fn add_scaled(&self, a: f64, other: &Tangent) -> Tangent {
        debug_assert_eq!(self.vec.len(), other.vec.len());
        Tangent {
            base: self.base.clone(),
            vec: zip_coords(&self.vec, &other.vec, |u, v| u + a * v),
        }
    }
}

/// Which boundary-value Jacobi field coefficient to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum JacobiBoundary {
    /// Boundary values `0` at `-d0/2` and `e_i` at `d0/2`.
    Left,
    /// Boundary values `e_i` at `-d0/2` and `0` at `d0/2`.
    Right,
    /// Boundary values `e_i` at both ends.
    Both,
}

/// The simply connected model space `M^n_k`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpace {
    pub k: f64,
    pub n: usize,
}

impl ModelSpace {
    pub fn new(k: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(GapError::Domain(format!("dimension n = {n} must be at least 2")));
        }
        if !k.is_finite() {
            return Err(GapError::Domain(format!("curvature k = {k} is not finite")));
        }
        Ok(Self { k, n })
    }

    pub fn ambient_dim(&self) -> usize {
        if self.k == 0.0 {
            self.n
        } else {
            self.n + 1
        }
    }

    /// `pi / sqrt(k)` for `k > 0`, infinity otherwise.
    pub fn conjugate_radius(&self) -> f64 {
        if self.k > 0.0 {
            PI / self.k.sqrt()
        } else {
            f64::INFINITY
        }
    }

    fn time_sign(&self) -> f64 {
        if self.k < 0.0 {
            -1.0
        } else {
            1.0
        }
    }

    /// The bilinear form `<a,b>_k` of the embedding.
    #[inline]
    pub fn dot(&self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), b.len());
        let m = a.len();
        let mut acc = 0.0;
        for i in 0..m - 1 {
            acc += a[i] * b[i];
        }
        acc + self.time_sign() * a[m - 1] * b[m - 1]
    }

    #[inline]
    pub fn norm(&self, v: &[f64]) -> f64 {
        self.dot(v, v).max(0.0).sqrt()
    }

    /// Base point of geodesic polar coordinates: the origin for `k = 0`,
    /// the pole `(0, .., 0, 1/sqrt|k|)` otherwise.
    pub fn pole(&self) -> Point {
        let mut c = Coords::from_elem(0.0, self.ambient_dim());
        if self.k != 0.0 {
            let last = c.len() - 1;
            c[last] = 1.0 / self.k.abs().sqrt();
        }
        Point { coords: c }
    }

    /// Validate coordinates and snap them onto the model space.
    pub fn point(&self, coords: &[f64]) -> Result<Point> {
        if coords.len() != self.ambient_dim() {
            return Err(GapError::Domain(format!(
                "expected {} ambient coordinates, got {}",
                self.ambient_dim(),
                coords.len()
            )));
        }
        if self.k != 0.0 {
            let defect = (self.k * self.dot(coords, coords) - 1.0).abs();
            if defect > MANIFOLD_TOL {
                return Err(GapError::Domain(format!(
                    "point is off the model space (|k<p,p> - 1| = {defect:e})"
                )));
            }
            if self.k < 0.0 && coords[coords.len() - 1] <= 0.0 {
                return Err(GapError::Domain("point is on the lower sheet".into()));
            }
        }
        Ok(self.project(Point::from_slice(coords)))
    }

    /// Snap a nearly-valid point back onto the model space.
    pub fn project(&self, mut p: Point) -> Point {
        if self.k > 0.0 {
            let scale = 1.0 / (self.k.sqrt() * self.dot(&p.coords, &p.coords).sqrt());
            p.coords.iter_mut().for_each(|c| *c *= scale);
        } else if self.k < 0.0 {
            let m = p.coords.len() - 1;
            let spatial: f64 = p.coords[..m].iter().map(|c| c * c).sum();
            p.coords[m] = (1.0 / -self.k + spatial).sqrt();
        }
        p
    }

    /// Project an ambient vector onto the tangent space at `base`.
    pub fn project_tangent(&self, base: &Point, mut vec: Coords) -> Tangent {
        if self.k != 0.0 {
            let a = self.k * self.dot(&vec, &base.coords);
            vec.iter_mut()
                .zip(&base.coords)
                .for_each(|(v, p)| *v -= a * p);
        }
        Tangent {
            base: base.clone(),
            vec,
        }
    }

    pub fn exp_map(&self, v: &Tangent) -> Result<Point> {
        let len = self.norm(&v.vec);
        if len == 0.0 {
            return Ok(v.base.clone());
        }
        if self.k > 0.0 && len >= self.conjugate_radius() {
            return Err(GapError::Domain(format!(
                "|v| = {len} reaches the conjugate radius {}",
                self.conjugate_radius()
            )));
        }
        let a = cs(self.k, len);
        let b = sn(self.k, len) / len;
        let coords = zip_coords(&v.base.coords, &v.vec, |p, w| a * p + b * w);
        Ok(self.project(Point { coords }))
    }

    /// Squared chord `<q-p, q-p>_k`.
    fn chord2(&self, p: &Point, q: &Point) -> f64 {
        let d = zip_coords(&q.coords, &p.coords, |a, b| a - b);
        self.dot(&d, &d).max(0.0)
    }

    fn antipodal_guard(&self, p: &Point, q: &Point) -> Result<()> {
        if self.k > 0.0 {
            let gap = self.k * self.dot(&p.coords, &q.coords) + 1.0;
            if gap < ANTIPODAL_GUARD {
                return Err(GapError::Antipodal { gap });
            }
        }
        Ok(())
    }

    /// Geodesic distance, computed through the chord `2 sn(d/2)` for accuracy at short range.
    pub fn distance(&self, p: &Point, q: &Point) -> Result<f64> {
        self.antipodal_guard(p, q)?;
        Ok(2.0 * asn(self.k, 0.5 * self.chord2(p, q).sqrt()))
    }

    pub fn log_map(&self, p: &Point, q: &Point) -> Result<Tangent> {
        let d = self.distance(p, q)?;
        if d == 0.0 {
            return Ok(Tangent::zero(p.clone()));
        }
        // q - cs(d) p, written so that it stays accurate as d -> 0.
        let half_kc2 = 0.5 * self.k * self.chord2(p, q);
        let scale = d / sn(self.k, d);
        let vec = zip_coords(&q.coords, &p.coords, |qc, pc| scale * ((qc - pc) + half_kc2 * pc));
        Ok(self.project_tangent(p, vec))
    }

    /// Unit initial velocity at `p` of the geodesic to `q`, its terminal
    /// velocity at `q`, and the distance.
    pub fn geodesic_frame(&self, p: &Point, q: &Point) -> Result<(Tangent, Tangent, f64)> {
        let log = self.log_map(p, q)?;
        let d = self.norm(&log.vec);
        if d == 0.0 {
            return Err(GapError::Coincident { distance: 0.0 });
        }
        let e = log.scaled(1.0 / d);
        let (a, b) = (-self.k * sn(self.k, d), cs(self.k, d));
        let eq = zip_coords(&p.coords, &e.vec, |pc, ec| a * pc + b * ec);
        let eq = self.project_tangent(q, eq);
        Ok((e, eq, d))
    }

    pub fn parallel_transport(&self, q: &Point, v: &Tangent) -> Result<Tangent> {
        let p = &v.base;
        self.antipodal_guard(p, q)?;
        if self.chord2(p, q) == 0.0 {
            return Ok(Tangent::new(q.clone(), v.vec.clone()));
        }
        let (e, eq, _) = self.geodesic_frame(p, q)?;
        let along = self.dot(&v.vec, &e.vec);
        let vec = v
            .vec
            .iter()
            .zip(e.vec.iter().zip(&eq.vec))
            .map(|(w, (a, b))| w + along * (b - a))
            .collect();
        Ok(self.project_tangent(q, vec))
    }

    /// Mirror map `T_p -> T_q`: parallel transport along the minimising
    /// geodesic, then reflection in the hyperplane orthogonal to it.
    pub fn mirror_map(&self, q: &Point, v: &Tangent) -> Result<Tangent> {
        let p = &v.base;
        self.antipodal_guard(p, q)?;
        let distance = self.distance(p, q)?;
        if distance < COINCIDENT_GUARD {
            return Err(GapError::Coincident { distance });
        }
        let (e, eq, _) = self.geodesic_frame(p, q)?;
        Ok(self.mirror_with_frame(v, q, &e, &eq))
    }

    /// Mirror map given a precomputed geodesic frame `(e, eq)` from [`Self::geodesic_frame`].
    pub fn mirror_with_frame(&self, v: &Tangent, q: &Point, e: &Tangent, eq: &Tangent) -> Tangent {
        let along = self.dot(&v.vec, &e.vec);
        let vec = v
            .vec
            .iter()
            .zip(e.vec.iter().zip(&eq.vec))
            .map(|(w, (a, b))| w - along * (a + b))
            .collect();
        self.project_tangent(q, vec)
    }

    /// `sum_i I(Q_i, Q_i)` over a parallel orthonormal frame transverse to a
    /// geodesic of length `rho`, for the Jacobi fields with boundary values
    /// `e_i` at both ends.
    pub fn index_form_sum(&self, rho: f64) -> Result<f64> {
        if !(rho >= 0.0) {
            return Err(GapError::Domain(format!("rho = {rho} must be nonnegative")));
        }
        if self.k > 0.0 && rho >= self.conjugate_radius() {
            return Err(GapError::Pole { k: self.k, s: 0.5 * rho });
        }
        Ok(-2.0 * (self.n as f64 - 1.0) * tn(self.k, 0.5 * rho)?)
    }

    /// Scalar coefficient of the boundary-value Jacobi field along a geodesic of length `d0`.
    pub fn jacobi_boundary(&self, d0: f64, which: JacobiBoundary, s: f64) -> Result<f64> {
        let k = self.k;
        let (num, den, pole_at) = match which {
            JacobiBoundary::Left => (sn(k, 0.5 * d0 + s), sn(k, d0), d0),
            JacobiBoundary::Right => (sn(k, 0.5 * d0 - s), sn(k, d0), d0),
            JacobiBoundary::Both => (cs(k, s), cs(k, 0.5 * d0), 0.5 * d0),
        };
        if den.abs() < 1e-14 {
            return Err(GapError::Pole { k, s: pole_at });
        }
        Ok(num / den)
    }

    /// An orthonormal tangent frame at `p`. When `lead` is given (unit,
    /// tangent) it becomes the last frame vector. For `n = 2` the frame is
    /// oriented consistently across the manifold so that paired simulations
    /// see the same transverse direction.
    pub fn tangent_frame(&self, p: &Point, lead: Option<&Tangent>) -> Vec<Tangent> {
        let lead = match lead {
            Some(l) => l.clone(),
            None => self.default_direction(p),
        };
        if self.n == 2 {
            let e1 = self.rotate_quarter(p, &lead);
            return vec![e1, lead];
        }
        let m = self.ambient_dim();
        let mut frame: Vec<Tangent> = vec![lead.clone()];
        for axis in 0..m {
            if frame.len() == self.n {
                break;
            }
            let mut raw = Coords::from_elem(0.0, m);
            raw[axis] = 1.0;
            let mut t = self.project_tangent(p, raw);
            for f in &frame {
                let c = self.dot(&t.vec, &f.vec);
                t = t.add_scaled(-c, f);
            }
            let len = self.norm(&t.vec);
            if len > 1e-6 {
                frame.push(t.scaled(1.0 / len));
            }
        }
        frame.rotate_left(1);
        frame
    }

    fn default_direction(&self, p: &Point) -> Tangent {
        let m = self.ambient_dim();
        let mut best = Tangent::zero(p.clone());
        let mut best_len = -1.0;
        for axis in 0..m {
            let mut raw = Coords::from_elem(0.0, m);
            raw[axis] = 1.0;
            let t = self.project_tangent(p, raw);
            let len = self.norm(&t.vec);
            if len > best_len + 1e-12 {
                best_len = len;
                best = t;
            }
        }
        best.scaled(1.0 / best_len)
    }

    /// Quarter turn in the oriented tangent plane of a surface (`n = 2`).
    fn rotate_quarter(&self, p: &Point, v: &Tangent) -> Tangent {
        if self.k == 0.0 {
            return Tangent::new(p.clone(), [v.vec[1], -v.vec[0]].as_slice());
        }
        let s = self.k.abs().sqrt();
        let a = &p.coords;
        let b = &v.vec;
        let mut c: Coords = SmallVec::from_slice(&[
            s * (a[1] * b[2] - a[2] * b[1]),
            s * (a[2] * b[0] - a[0] * b[2]),
            s * (a[0] * b[1] - a[1] * b[0]),
        ]);
        c[2] *= self.time_sign();
        let t = self.project_tangent(p, c);
        let len = self.norm(&t.vec);
        t.scaled(1.0 / len)
    }

    /// Point at geodesic polar coordinates `(r, theta)` about the pole,
    /// with `theta` measured in the plane of the first two coordinates.
    pub fn polar_point(&self, r: f64, theta: f64) -> Result<Point> {
        let pole = self.pole();
        let mut v = Coords::from_elem(0.0, self.ambient_dim());
        v[0] = r * theta.cos();
        v[1] = r * theta.sin();
        self.exp_map(&Tangent::new(pole, v))
    }

    /// Geodesic polar coordinates `(r, theta)` of `p` about the pole.
    pub fn polar_coords(&self, p: &Point) -> Result<(f64, f64)> {
        let r = self.distance(&self.pole(), p)?;
        Ok((r, p.coords[1].atan2(p.coords[0])))
    }

    /// Unit radial vector `d/dr` at `p`, or `None` at the pole.
    pub fn radial_direction(&self, p: &Point) -> Result<Option<Tangent>> {
        let log = self.log_map(p, &self.pole())?;
        let r = self.norm(&log.vec);
        if r == 0.0 {
            return Ok(None);
        }
        Ok(Some(log.scaled(-1.0 / r)))
    }

    /// Geodesic midpoint of `p` and `q`.
    pub fn midpoint(&self, p: &Point, q: &Point) -> Result<Point> {
        let log = self.log_map(p, q)?;
        self.exp_map(&log.scaled(0.5))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn sphere2() -> ModelSpace {
        ModelSpace::new(1.0, 2).unwrap()
    }

    #[test]
    fn special_function_values() {
        assert_eq!(sn(0.0, 0.7), 0.7);
        assert!(close(sn(1.0, FRAC_PI_2), 1.0, 1e-15));
        assert!(close(sn(-1.0, 1.0), 1.1752011936438014, 1e-15));
        assert_eq!(cs(0.0, 5.0), 1.0);
        assert!(close(cs(1.0, PI / 3.0), 0.5, 1e-15));
        assert!(close(cs(-1.0, 1.0), 1.5430806348152437, 1e-15));
        assert_eq!(tn(0.0, 3.2).unwrap(), 0.0);
        assert!(close(tn(1.0, PI / 4.0).unwrap(), 1.0, 1e-15));
        assert!(close(tn(-1.0, 1.0).unwrap(), -0.7615941559557649, 1e-15));
    }

    #[test]
    fn tn_pole_is_an_error() {
        assert!(matches!(tn(1.0, FRAC_PI_2), Err(GapError::Pole { .. })));
        assert!(matches!(tn(4.0, PI / 4.0), Err(GapError::Pole { .. })));
    }

    #[test]
    fn sn_solves_its_ode() {
        let mut rng = crate::rng::SplitStream::new(7, 0);
        let h = 1e-4;
        for _ in 0..200 {
            let k = 4.0 * rng.uniform() - 2.0;
            let s = 2.0 * rng.uniform() - 1.0;
            let second = (sn(k, s + h) - 2.0 * sn(k, s) + sn(k, s - h)) / (h * h);
            let resid = second + k * sn(k, s);
            assert!(resid.abs() <= 1e-6 * (1.0 + sn(k, s).abs()), "k={k} s={s} resid={resid}");
        }
    }

    #[test]
    fn tn_half_angle_identity() {
        let mut rng = crate::rng::SplitStream::new(11, 0);
        for _ in 0..200 {
            let k = 4.0 * rng.uniform() - 2.0;
            let mut xi = 1.4 * rng.uniform() + 0.01;
            if k > 0.0 {
                xi = xi.min(0.45 * PI / k.sqrt());
            }
            let lhs = tn(k, xi).unwrap();
            let rhs = (1.0 - cs(k, 2.0 * xi)) / sn(k, 2.0 * xi);
            assert!(close(lhs, rhs, 1e-10 * (1.0 + lhs.abs())), "k={k} xi={xi}");
        }
    }

    #[test]
    fn flat_exp_log_distance() {
        let e = ModelSpace::new(0.0, 2).unwrap();
        let p = Point::from_slice(&[0.0, 0.0]);
        let q = e.exp_map(&Tangent::new(p.clone(), [3.0, 4.0].as_slice())).unwrap();
        assert_eq!(q.coords.as_slice(), &[3.0, 4.0]);
        assert_eq!(e.distance(&p, &q).unwrap(), 5.0);
        let log = e.log_map(&p, &q).unwrap();
        assert!(close(log.vec[0], 3.0, 1e-15) && close(log.vec[1], 4.0, 1e-15));
        let zero = e.log_map(&q, &q).unwrap();
        assert!(zero.vec.iter().all(|&c| c == 0.0));
    }

    #[test]
    fn quarter_great_circle() {
        let s = sphere2();
        let p = s.pole();
        let q = s
            .exp_map(&Tangent::new(p.clone(), [FRAC_PI_2, 0.0, 0.0].as_slice()))
            .unwrap();
        assert!(close(q.coords[0], 1.0, 1e-15) && close(q.coords[2], 0.0, 1e-15));
        assert!(close(s.distance(&p, &q).unwrap(), FRAC_PI_2, 1e-15));
    }

    #[test]
    fn exp_rejects_conjugate_radius() {
        let s = sphere2();
        let v = Tangent::new(s.pole(), [PI, 0.0, 0.0].as_slice());
        assert!(matches!(s.exp_map(&v), Err(GapError::Domain(_))));
    }

    #[test]
    fn antipodal_is_an_error() {
        let s = sphere2();
        let p = s.pole();
        let q = Point::from_slice(&[0.0, 0.0, -1.0]);
        assert!(matches!(s.distance(&p, &q), Err(GapError::Antipodal { .. })));
        assert!(matches!(s.log_map(&p, &q), Err(GapError::Antipodal { .. })));
    }

    /// RK4 on the embedded geodesic equation `x'' = -k <x',x'> x`.
    fn integrate_geodesic(space: &ModelSpace, v: &Tangent, steps: usize) -> Coords {
        let m = space.ambient_dim();
        let mut x: Vec<f64> = v.base.coords.to_vec();
        let mut u: Vec<f64> = v.vec.to_vec();
        let h = 1.0 / steps as f64;
        let accel = |x: &[f64], u: &[f64]| -> Vec<f64> {
            let s = space.k * space.dot(u, u);
            x.iter().map(|c| -s * c).collect()
        };
        for _ in 0..steps {
            let a1 = accel(&x, &u);
            let x2: Vec<f64> = (0..m).map(|i| x[i] + 0.5 * h * u[i]).collect();
            let u2: Vec<f64> = (0..m).map(|i| u[i] + 0.5 * h * a1[i]).collect();
            let a2 = accel(&x2, &u2);
            let x3: Vec<f64> = (0..m).map(|i| x[i] + 0.5 * h * u2[i]).collect();
            let u3: Vec<f64> = (0..m).map(|i| u[i] + 0.5 * h * a2[i]).collect();
            let a3 = accel(&x3, &u3);
            let x4: Vec<f64> = (0..m).map(|i| x[i] + h * u3[i]).collect();
            let u4: Vec<f64> = (0..m).map(|i| u[i] + h * a3[i]).collect();
            let a4 = accel(&x4, &u4);
            for i in 0..m {
                x[i] += h / 6.0 * (u[i] + 2.0 * u2[i] + 2.0 * u3[i] + u4[i]);
                u[i] += h / 6.0 * (a1[i] + 2.0 * a2[i] + 2.0 * a3[i] + a4[i]);
            }
        }
        Coords::from_vec(x)
    }

    #[test]
    fn exp_matches_geodesic_ode() {
        let mut rng = crate::rng::SplitStream::new(3, 1);
        for k in [1.0, -1.0, 0.5] {
            let space = ModelSpace::new(k, 2).unwrap();
            for _ in 0..20 {
                let p = space
                    .polar_point(0.8 * rng.uniform(), 2.0 * PI * rng.uniform())
                    .unwrap();
                let raw: Coords = (0..3).map(|_| rng.normal()).collect();
                let v = space.project_tangent(&p, raw);
                let v = v.scaled(1.5 * rng.uniform() / space.norm(&v.vec));
                let q = space.exp_map(&v).unwrap();
                let ode = integrate_geodesic(&space, &v, 2000);
                for (a, b) in q.coords.iter().zip(&ode) {
                    assert!(close(*a, *b, 1e-8), "k={k}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn transport_examples() {
        let s = sphere2();
        let p = s.pole();
        let q = Point::from_slice(&[1.0, 0.0, 0.0]);
        let ey = Tangent::new(p.clone(), [0.0, 1.0, 0.0].as_slice());
        let t = s.parallel_transport(&q, &ey).unwrap();
        assert!(close(t.vec[1], 1.0, 1e-15) && close(t.vec[0], 0.0, 1e-15) && close(t.vec[2], 0.0, 1e-15));
        let ex = Tangent::new(p.clone(), [1.0, 0.0, 0.0].as_slice());
        let t = s.parallel_transport(&q, &ex).unwrap();
        assert!(close(t.vec[2], -1.0, 1e-15) && close(t.vec[0], 0.0, 1e-15));

        let e = ModelSpace::new(0.0, 2).unwrap();
        let v = Tangent::new(Point::from_slice(&[0.3, 0.1]), [0.2, -0.7].as_slice());
        let t = e.parallel_transport(&Point::from_slice(&[-1.0, 2.0]), &v).unwrap();
        assert_eq!(t.vec.as_slice(), &[0.2, -0.7]);
    }

    #[test]
    fn flat_mirror_examples() {
        let e = ModelSpace::new(0.0, 2).unwrap();
        let p = Point::from_slice(&[0.0, 0.0]);
        let q = Point::from_slice(&[1.0, 0.0]);
        let m = e.mirror_map(&q, &Tangent::new(p.clone(), [1.0, 0.0].as_slice())).unwrap();
        assert_eq!(m.vec.as_slice(), &[-1.0, 0.0]);
        let m = e.mirror_map(&q, &Tangent::new(p.clone(), [0.0, 1.0].as_slice())).unwrap();
        assert_eq!(m.vec.as_slice(), &[0.0, 1.0]);
        assert!(matches!(
            e.mirror_map(&p, &Tangent::new(p.clone(), [0.0, 1.0].as_slice())),
            Err(GapError::Coincident { .. })
        ));
    }

    #[test]
    fn sphere_mirror_matches_transport_then_householder() {
        let s = ModelSpace::new(1.0, 3).unwrap();
        let mut rng = crate::rng::SplitStream::new(5, 2);
        for _ in 0..50 {
            let p = s.project(Point::new((0..4).map(|_| rng.normal()).collect::<Coords>()));
            let raw: Coords = (0..4).map(|_| rng.normal()).collect();
            let dir = s.project_tangent(&p, raw);
            let dir = dir.scaled(2.5 * rng.uniform() / s.norm(&dir.vec));
            let q = s.exp_map(&dir).unwrap();
            let v = s.project_tangent(&p, (0..4).map(|_| rng.normal()).collect());
            let mirrored = s.mirror_map(&q, &v).unwrap();
            // Oracle: transport, then reflect about the terminal velocity -log_q(p)/d.
            let moved = s.parallel_transport(&q, &v).unwrap();
            let back = s.log_map(&q, &p).unwrap();
            let d = s.norm(&back.vec);
            let u = back.scaled(-1.0 / d);
            let c = s.dot(&moved.vec, &u.vec);
            let oracle = moved.add_scaled(-2.0 * c, &u);
            for (a, b) in mirrored.vec.iter().zip(&oracle.vec) {
                assert!(close(*a, *b, 1e-10));
            }
        }
    }

    #[test]
    fn index_form_values() {
        for n in [2, 3, 5] {
            let e = ModelSpace::new(0.0, n).unwrap();
            assert_eq!(e.index_form_sum(0.9).unwrap(), 0.0);
        }
        assert!(close(sphere2().index_form_sum(FRAC_PI_2).unwrap(), -2.0, 1e-15));
        assert!(matches!(sphere2().index_form_sum(PI), Err(GapError::Pole { .. })));
    }

    /// Composite Simpson quadrature of the transverse index form with the
    /// `e_i <-> e_i` Jacobi fields. The tangential field `Q_n` is linear and
    /// has no normal component, so it adds nothing to the second variation
    /// of length.
    fn index_form_quadrature(space: &ModelSpace, rho: f64) -> f64 {
        let k = space.k;
        let half = 0.5 * rho;
        let c0 = cs(k, half);
        let integrand = |s: f64| {
            let q = cs(k, s) / c0;
            let dq = -k * sn(k, s) / c0;
            dq * dq - k * q * q
        };
        let m = 4000;
        let h = rho / m as f64;
        let mut acc = integrand(-half) + integrand(half);
        for i in 1..m {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * integrand(-half + i as f64 * h);
        }
        (space.n as f64 - 1.0) * acc * h / 3.0
    }

    #[test]
    fn index_form_matches_quadrature() {
        let s3 = ModelSpace::new(1.0, 3).unwrap();
        assert!(close(s3.index_form_sum(1.0).unwrap(), index_form_quadrature(&s3, 1.0), 1e-8));
        let mut rng = crate::rng::SplitStream::new(13, 0);
        for i in 0..50 {
            let k = [0.0, 1.0, -1.0][i % 3];
            let n = 2 + (i / 3) % 3;
            let space = ModelSpace::new(k, n).unwrap();
            let rho = 0.05 + 2.5 * rng.uniform();
            let a = space.index_form_sum(rho).unwrap();
            let b = index_form_quadrature(&space, rho);
            assert!(close(a, b, 1e-7), "k={k} n={n} rho={rho}: {a} vs {b}");
        }
    }

    #[test]
    fn jacobi_boundary_values() {
        let e = ModelSpace::new(0.0, 2).unwrap();
        assert_eq!(e.jacobi_boundary(1.3, JacobiBoundary::Both, 0.0).unwrap(), 1.0);
        let s = sphere2();
        let d0 = 1.2;
        assert!(close(s.jacobi_boundary(d0, JacobiBoundary::Left, 0.5 * d0).unwrap(), 1.0, 1e-15));
        assert!(close(s.jacobi_boundary(d0, JacobiBoundary::Left, -0.5 * d0).unwrap(), 0.0, 1e-15));
        assert!(close(s.jacobi_boundary(d0, JacobiBoundary::Right, -0.5 * d0).unwrap(), 1.0, 1e-15));
        let v = s.jacobi_boundary(1.0, JacobiBoundary::Both, 0.3).unwrap();
        assert!(close(v, 0.3f64.cos() / 0.5f64.cos(), 1e-15));
        assert!(matches!(s.jacobi_boundary(PI, JacobiBoundary::Both, 0.0), Err(GapError::Pole { .. })));
    }

    #[test]
    fn frame_is_orthonormal_and_oriented() {
        for k in [0.0, 1.0, -1.0] {
            let space = ModelSpace::new(k, 2).unwrap();
            let p = space.polar_point(0.4, 1.1).unwrap();
            let frame = space.tangent_frame(&p, None);
            assert_eq!(frame.len(), 2);
            for (i, a) in frame.iter().enumerate() {
                for (j, b) in frame.iter().enumerate() {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!(close(space.dot(&a.vec, &b.vec), want, 1e-12));
                }
                assert!(close(space.k * space.dot(&a.vec, &p.coords), 0.0, 1e-12));
            }
        }
        let s3 = ModelSpace::new(1.0, 3).unwrap();
        let p = s3.polar_point(0.3, 0.2).unwrap();
        let frame = s3.tangent_frame(&p, None);
        assert_eq!(frame.len(), 3);
    }

    fn arb_pair(k: f64) -> impl Strategy<Value = (Point, Point)> {
        let space = ModelSpace::new(k, 2).unwrap();
        (0.0..1.4f64, 0.0..6.3f64, 0.0..1.4f64, 0.0..6.3f64).prop_map(move |(r1, t1, r2, t2)| {
            (
                space.polar_point(r1, t1).unwrap(),
                space.polar_point(r2, t2).unwrap(),
            )
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn exp_log_round_trip((p, q) in arb_pair(1.0)) {
            let s = sphere2();
            let back = s.exp_map(&s.log_map(&p, &q).unwrap()).unwrap();
            prop_assert!(s.distance(&q, &back).unwrap() < 1e-9);
            let d = s.distance(&p, &q).unwrap();
            let cosine = s.dot(&p.coords, &q.coords).clamp(-1.0, 1.0).acos();
            prop_assert!((d - cosine).abs() < 1e-7);
            prop_assert!((s.norm(&s.log_map(&p, &q).unwrap().vec) - d).abs() < 1e-10);
        }

        #[test]
        fn hyperbolic_round_trip((p, q) in arb_pair(-1.0)) {
            let h = ModelSpace::new(-1.0, 2).unwrap();
            let back = h.exp_map(&h.log_map(&p, &q).unwrap()).unwrap();
            prop_assert!(h.distance(&q, &back).unwrap() < 1e-9);
        }

        #[test]
        fn mirror_is_an_involution_up_to_swap((p, q) in arb_pair(1.0), a in -2.0..2.0f64, b in -2.0..2.0f64) {
            let s = sphere2();
            prop_assume!(s.distance(&p, &q).unwrap() > 1e-6);
            let v = s.tangent_frame(&p, None);
            let v = v[0].scaled(a).add_scaled(b, &v[1]);
            let there = s.mirror_map(&q, &v).unwrap();
            prop_assert!((s.norm(&there.vec) - s.norm(&v.vec)).abs() < 1e-10);
            let back = s.mirror_map(&p, &there).unwrap();
            for (x, y) in back.vec.iter().zip(&v.vec) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }
    }
}
