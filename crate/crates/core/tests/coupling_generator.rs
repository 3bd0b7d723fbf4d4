use gaplab_core::coupling::{drift, f_drift, log_gradient_gap, CoupledPair, Landscape, Mode};
use gaplab_core::geom::{ModelSpace, Point, Tangent};
use gaplab_core::Result;

/// Disc with a closed-form ground state: `ω'(r)`, `V(r)`, `V'(r)`, `λ1`.
struct Exact {
    space: ModelSpace,
    radius: f64,
    omega_prime: fn(f64) -> f64,
    v: fn(f64) -> f64,
    dv: fn(f64) -> f64,
    lambda1: f64,
}

impl Exact {
    fn radial(&self, p: &Point, f: fn(f64) -> f64) -> Result<Tangent> {
        let r = self.space.distance(&self.space.pole(), p)?;
        Ok(match self.space.radial_direction(p)? {
            Some(d) => d.scaled(f(r)),
            None => Tangent::zero(p.clone()),
        })
    }
}

impl Landscape for Exact {
    fn space(&self) -> &ModelSpace {
        &self.space
    }
    fn inside(&self, p: &Point) -> bool {
        self.space.distance(&self.space.pole(), p).unwrap() < self.radius
    }
    fn grad_log(&self, p: &Point) -> Result<Tangent> {
        self.radial(p, self.omega_prime)
    }
    fn potential(&self, p: &Point) -> Result<f64> {
        Ok((self.v)(self.space.distance(&self.space.pole(), p)?))
    }
    fn grad_potential(&self, p: &Point) -> Result<Tangent> {
        self.radial(p, self.dv)
    }
    fn lambda1(&self) -> f64 {
        self.lambda1
    }
    fn diameter(&self) -> f64 {
        2.0 * self.radius
    }
}

fn hemisphere() -> Exact {
    Exact {
        space: ModelSpace::new(1.0, 2).unwrap(),
        radius: std::f64::consts::FRAC_PI_2,
        omega_prime: |r| -r.tan(),
        v: |_| 0.0,
        dv: |_| 0.0,
        lambda1: 2.0,
    }
}

/// Unit disc, `V = r^2`: ground state `(1 - r^2) exp(-r^2/2)` with `λ1 = 6`.
fn flat_oscillator() -> Exact {
    Exact {
        space: ModelSpace::new(0.0, 2).unwrap(),
        radius: 1.0,
        omega_prime: |r| -2.0 * r / (1.0 - r * r) - r,
        v: |r| r * r,
        dv: |r| 2.0 * r,
        lambda1: 6.0,
    }
}

/// Generator of the modified pair applied to `F` by finite differences:
/// second derivatives along the coupled noise directions `(e_i, m(e_i))`
/// plus the first derivative along the drift. Central differences with
/// step `eps`, Richardson-combined over `eps` and `2 eps`.
fn fd_generator(land: &Exact, x: &Point, y: &Point) -> f64 {
    let a = fd_generator_with(land, x, y, 1e-4);
    let b = fd_generator_with(land, x, y, 2e-4);
    a + (a - b) / 3.0
}

fn fd_generator_with(land: &Exact, x: &Point, y: &Point, eps: f64) -> f64 {
    let s = &land.space;
    let pair = CoupledPair { x: x.clone(), y: y.clone(), mode: Mode::Modified, coupled: false, t: 0.0 };
    let along = |ux: &Tangent, uy: &Tangent, t: f64| {
        let moved = CoupledPair {
            x: s.exp_map(&ux.scaled(t)).unwrap(),
            y: s.exp_map(&uy.scaled(t)).unwrap(),
            ..pair.clone()
        };
        log_gradient_gap(land, &moved).unwrap().unwrap().0
    };
    let (e, _, _) = s.geodesic_frame(x, y).unwrap();
    let mut total = 0.0;
    for fi in s.tangent_frame(x, Some(&e)) {
        let mi = s.mirror_map(y, &fi).unwrap();
        total += (along(&fi, &mi, eps) - 2.0 * along(&fi, &mi, 0.0) + along(&fi, &mi, -eps)) / (eps * eps);
    }
    let (bx, by) = drift(land, &pair).unwrap();
    total + (along(&bx, &by, eps) - along(&bx, &by, -eps)) / (2.0 * eps)
}

fn check(land: &Exact, pts: &[((f64, f64), (f64, f64))]) {
    for &((rx, tx), (ry, ty)) in pts {
        let x = land.space.polar_point(rx, tx).unwrap();
        let y = land.space.polar_point(ry, ty).unwrap();
        let closed = f_drift(land, &x, &y).unwrap();
        let fd = fd_generator(land, &x, &y);
        assert!(
            (closed.total - fd).abs() < 1e-5 * (1.0 + fd.abs()),
            "x=({rx},{tx}) y=({ry},{ty}): closed {closed:?} vs generator {fd}"
        );
    }
}

const PAIRS: [((f64, f64), (f64, f64)); 5] = [
    ((0.5, std::f64::consts::PI), (0.5, 0.0)),
    ((0.3, 1.0), (0.6, 2.5)),
    ((0.7, -0.4), (0.2, 0.9)),
    ((0.1, 0.0), (0.8, 3.0)),
    ((0.45, 2.0), (0.5, 2.2)),
];

#[test]
fn f_drift_matches_generator_on_the_hemisphere() {
    check(&hemisphere(), &PAIRS);
}

#[test]
fn f_drift_matches_generator_on_the_flat_oscillator() {
    check(&flat_oscillator(), &PAIRS);
}
