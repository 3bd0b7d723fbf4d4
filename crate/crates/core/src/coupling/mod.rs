//! Reflection coupling of two drift-diffusions on a geodesic disc.
//!
//! Both points follow `dX = 2∇log φ1(X) dt + √2 dB`. The noise driving `y`
//! is the mirror image of the noise at `x`. The modified pair adds a
//! curvature drift of `±2 tn_k(ρ/2)` along the connecting geodesic.
//! Integration is Euler-Maruyama in the tangent space, retracted with the
//! exponential map, with halve-and-retry at the boundary.

mod checks;
mod sim;

pub use checks::*;
pub use sim::*;

use serde::{Deserialize, Serialize};

use crate::geom::{tn, Coords, ModelSpace, Point, Tangent};
use crate::spectral2d::{BallDomain, BallSpectrum};
use crate::{GapError, Result};

/// The drift field and the region a diffusion lives in.
pub trait Landscape: Sync {
    fn space(&self) -> &ModelSpace;

    /// Whether `p` lies in the open domain.
    fn inside(&self, p: &Point) -> bool;

    /// `∇ log φ1`, erroring where it is not resolved.
    fn grad_log(&self, p: &Point) -> Result<Tangent>;

    /// Field used by the stepper. Defaults to [`Self::grad_log`].
    fn drift_field(&self, p: &Point) -> Result<Tangent> {
        self.grad_log(p)
    }

    fn potential(&self, _p: &Point) -> Result<f64> {
        Ok(0.0)
    }

    fn grad_potential(&self, p: &Point) -> Result<Tangent> {
        Ok(Tangent::zero(p.clone()))
    }

    fn lambda1(&self) -> f64 {
        0.0
    }

    fn diameter(&self) -> f64 {
        f64::INFINITY
    }

    /// Distance from `p` to the boundary; bounds the drift displacement of a step.
    fn boundary_distance(&self, _p: &Point) -> f64 {
        f64::INFINITY
    }
}

/// The ground-state drift of a solved disc.
#[derive(Clone, Copy, Debug)]
pub struct Ball<'a> {
    pub dom: &'a BallDomain,
    pub spec: &'a BallSpectrum,
}

impl<'a> Ball<'a> {
    pub fn new(dom: &'a BallDomain, spec: &'a BallSpectrum) -> Self {
        Self { dom, spec }
    }
}

impl Landscape for Ball<'_> {
    fn space(&self) -> &ModelSpace {
        &self.dom.space
    }

    fn inside(&self, p: &Point) -> bool {
        self.dom.contains(p)
    }

    fn grad_log(&self, p: &Point) -> Result<Tangent> {
        self.spec.grad_log_phi1(self.dom, p)
    }

    fn drift_field(&self, p: &Point) -> Result<Tangent> {
        self.spec.drift_field(self.dom, p)
    }

    fn potential(&self, p: &Point) -> Result<f64> {
        self.dom.potential_at(p)
    }

    fn grad_potential(&self, p: &Point) -> Result<Tangent> {
        self.dom.grad_potential(p)
    }

    fn lambda1(&self) -> f64 {
        self.spec.lambda1
    }

    fn diameter(&self) -> f64 {
        self.dom.diameter()
    }

    fn boundary_distance(&self, p: &Point) -> f64 {
        self.dom.radius_of(p).map_or(0.0, |r| self.dom.radius - r)
    }
}

/// Zero drift on the whole space: plain Brownian motion (generator `Δ`).
#[derive(Clone, Copy, Debug)]
pub struct FreeSpace {
    pub space: ModelSpace,
}

impl Landscape for FreeSpace {
    fn space(&self) -> &ModelSpace {
        &self.space
    }

    fn inside(&self, _p: &Point) -> bool {
        true
    }

    fn grad_log(&self, p: &Point) -> Result<Tangent> {
        Ok(Tangent::zero(p.clone()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Standard,
    Modified,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoupledPair {
    pub x: Point,
    pub y: Point,
    pub mode: Mode,
    pub coupled: bool,
    pub t: f64,
}

impl CoupledPair {
    /// A pair at time 0. Both points must lie in the domain; a pair closer
    /// than the coincidence guard starts coupled.
    pub fn new<L: Landscape + ?Sized>(land: &L, x: Point, y: Point, mode: Mode) -> Result<Self> {
        for p in [&x, &y] {
            if !land.inside(p) {
                return Err(GapError::Domain(format!("{:?} is not inside the domain", p.coords)));
            }
        }
        let coupled = land.space().distance(&x, &y)? == 0.0;
        Ok(Self {
            x,
            y,
            mode,
            coupled,
            t: 0.0,
        })
    }

    /// A single diffusion, carried as an already-coupled pair.
    pub fn single<L: Landscape + ?Sized>(land: &L, x: Point) -> Result<Self> {
        if !land.inside(&x) {
            return Err(GapError::Domain(format!("{:?} is not inside the domain", x.coords)));
        }
        Ok(Self {
            y: x.clone(),
            x,
            mode: Mode::Standard,
            coupled: true,
            t: 0.0,
        })
    }

    pub fn rho(&self, space: &ModelSpace) -> Result<f64> {
        if self.coupled {
            return Ok(0.0);
        }
        space.distance(&self.x, &self.y)
    }

    /// `ξ = ρ/2`.
    pub fn xi(&self, space: &ModelSpace) -> Result<f64> {
        Ok(0.5 * self.rho(space)?)
    }
}

/// Drift of each point: `2∇log φ1`, plus `+2tn_k(ρ/2)γ'(x)` at `x` and
/// `-2tn_k(ρ/2)γ'(y)` at `y` in modified mode.
pub fn drift<L: Landscape + ?Sized>(land: &L, pair: &CoupledPair) -> Result<(Tangent, Tangent)> {
    let bx = land.drift_field(&pair.x)?.scaled(2.0);
    if pair.coupled {
        return Ok((bx.clone(), Tangent::new(pair.y.clone(), bx.vec)));
    }
    let by = land.drift_field(&pair.y)?.scaled(2.0);
    if pair.mode == Mode::Standard {
        return Ok((bx, by));
    }
    let space = land.space();
    let (e, eq, rho) = space.geodesic_frame(&pair.x, &pair.y)?;
    let c = 2.0 * tn(space.k, 0.5 * rho)?;
    Ok((bx.add_scaled(c, &e), by.add_scaled(-c, &eq)))
}

/// Step-size control shared by every stepping routine.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepPolicy {
    pub eps_couple: f64,
    pub max_halvings: u32,
}

/// Result of one call to [`step`].
#[derive(Clone, Debug, PartialEq)]
pub struct Stepped {
    pub pair: CoupledPair,
    /// Time actually advanced (0 for a rejected step).
    pub dt: f64,
    pub halvings: u32,
    pub rejected: bool,
}

/// Largest fraction of the distance to the boundary a single drift
/// displacement may cover.
pub const DRIFT_REACH: f64 = 0.5;

/// Largest step for which the drift displacement of each point stays within
/// [`DRIFT_REACH`] of its distance to the boundary. Near the boundary the
/// ground-state drift grows like `1/δ`, and an unlimited step would throw the
/// points far across the domain.
pub fn drift_step_cap<L: Landscape + ?Sized>(land: &L, pair: &CoupledPair) -> Result<f64> {
    let (bx, by) = drift(land, pair)?;
    let space = land.space();
    let cap = |b: &Tangent| {
        let speed = space.norm(&b.vec);
        if speed > 0.0 {
            DRIFT_REACH * land.boundary_distance(&b.base) / speed
        } else {
            f64::INFINITY
        }
    };
    Ok(cap(&bx).min(cap(&by)))
}

/// Proposed positions for a step of size `dt` with standard-normal `noise`
/// (one entry per dimension), or `None` if either leaves the domain.
pub fn propose<L: Landscape + ?Sized>(
    land: &L,
    pair: &CoupledPair,
    dt: f64,
    noise: &[f64],
) -> Result<Option<(Point, Point)>> {
    let space = land.space();
    let sigma = (2.0 * dt).sqrt();
    let retract = |v: &Tangent| -> Option<Point> {
        match space.exp_map(v) {
            Ok(p) if land.inside(&p) => Some(p),
            _ => None,
        }
    };
    if pair.coupled {
        let frame = space.tangent_frame(&pair.x, None);
        let b = land.drift_field(&pair.x)?;
        let v = combine(b.scaled(2.0 * dt), sigma, &frame, noise);
        return Ok(retract(&v).map(|p| (p.clone(), p)));
    }
    let (e, eq, rho) = space.geodesic_frame(&pair.x, &pair.y)?;
    let frame = space.tangent_frame(&pair.x, Some(&e));
    let mut bx = land.drift_field(&pair.x)?.scaled(2.0);
    let mut by = land.drift_field(&pair.y)?.scaled(2.0);
    if pair.mode == Mode::Modified {
        let c = 2.0 * tn(space.k, 0.5 * rho)?;
        bx = bx.add_scaled(c, &e);
        by = by.add_scaled(-c, &eq);
    }
    let w = combine(Tangent::zero(pair.x.clone()), 1.0, &frame, noise);
    let mw = space.mirror_with_frame(&w, &pair.y, &e, &eq);
    let vx = bx.scaled(dt).add_scaled(sigma, &w);
    let vy = by.scaled(dt).add_scaled(sigma, &mw);
    Ok(match (retract(&vx), retract(&vy)) {
        (Some(x), Some(y)) => Some((x, y)),
        _ => None,
    })
}

fn combine(mut acc: Tangent, scale: f64, frame: &[Tangent], noise: &[f64]) -> Tangent {
    for (f, z) in frame.iter().zip(noise) {
        acc = acc.add_scaled(scale * z, f);
    }
    acc
}

/// Decide whether a freshly moved pair has met: either `ρ < eps_couple`, or
/// the pair crossed during the step, i.e. the chord `y - x` reversed its
/// direction (the chord is parallel to `γ'(x) + γ'(y)`, so this is the sign
/// of the separation along the pre-step geodesic). A met pair is merged at
/// its geodesic midpoint.
pub fn settle(
    space: &ModelSpace,
    before: &CoupledPair,
    x: Point,
    y: Point,
    eps_couple: f64,
) -> Result<(Point, Point, bool)> {
    if before.coupled {
        return Ok((x, y, true));
    }
    let rho = space.distance(&x, &y)?;
    let met = rho < eps_couple || {
        let chord = |a: &Point, b: &Point| -> Coords { b.coords.iter().zip(&a.coords).map(|(b, a)| b - a).collect() };
        space.dot(&chord(&x, &y), &chord(&before.x, &before.y)) <= 0.0
    };
    if met {
        let m = space.midpoint(&x, &y)?;
        return Ok((m.clone(), m, true));
    }
    Ok((x, y, false))
}

/// One Euler-Maruyama step with halve-and-retry. The step is first shortened
/// to [`drift_step_cap`]. The same `noise` is reused (rescaled through `dt`)
/// on every retry; after `max_halvings` failed halvings the step is rejected
/// and the pair is returned unchanged.
pub fn step<L: Landscape + ?Sized>(
    land: &L,
    pair: &CoupledPair,
    dt: f64,
    noise: &[f64],
    policy: &StepPolicy,
) -> Result<Stepped> {
    let mut h = dt.min(drift_step_cap(land, pair)?);
    for halvings in 0..=policy.max_halvings {
        if let Some((x, y)) = propose(land, pair, h, noise)? {
            let (x, y, coupled) = settle(land.space(), pair, x, y, policy.eps_couple)?;
            return Ok(Stepped {
                pair: CoupledPair {
                    x,
                    y,
                    mode: pair.mode,
                    coupled,
                    t: pair.t + h,
                },
                dt: h,
                halvings,
                rejected: false,
            });
        }
        h *= 0.5;
    }
    Ok(Stepped {
        pair: pair.clone(),
        dt: 0.0,
        halvings: policy.max_halvings,
        rejected: true,
    })
}
