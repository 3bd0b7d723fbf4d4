use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{drive, log_gradient_gap, propose, simulate_many, summarize, CouplingSummary, CoupledPair, Landscape, Mode, SimConfig};
use crate::geom::{sn, tn, Point};
use crate::rng::step_noise;
use crate::spectral1d::Spectrum1D;
use crate::stats::{fit_exponential, Estimate, ExpFit, Moments};
use crate::{GapError, Result};

/// Uncoupled trajectories needed at every observation time of the supermartingale check.
pub const MIN_UNCOUPLED: usize = 100;

/// Tolerance of the pathwise `F - 2Ψ(ξ)` monitor.
pub const MONITOR_TOL: f64 = 5e-3;

const CHUNK: usize = 4096;

/// Parallel sum of per-sample values in fixed chunks, merged in index order.
/// `f` returns `None` to skip a sample.
fn chunked_moments<const K: usize, F>(count: usize, f: F) -> Result<([Moments; K], usize)>
where
    F: Fn(usize) -> Result<Option<[f64; K]>> + Sync,
{
    let chunks = count.div_ceil(CHUNK);
    let parts: Vec<([Moments; K], usize)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut m = [Moments::new(); K];
            let mut skipped = 0;
            for i in c * CHUNK..((c + 1) * CHUNK).min(count) {
                match f(i)? {
                    Some(v) => m.iter_mut().zip(v).for_each(|(m, v)| m.push(v)),
                    None => skipped += 1,
                }
            }
            Ok((m, skipped))
        })
        .collect::<Result<_>>()?;
    let mut total = [Moments::new(); K];
    let mut skipped = 0;
    for (m, s) in &parts {
        total.iter_mut().zip(m).for_each(|(t, m)| t.merge(m));
        skipped += s;
    }
    Ok((total, skipped))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RhoOracleReport {
    pub rho0: f64,
    pub h: f64,
    pub samples: u64,
    pub skipped: usize,
    pub index_form: f64,
    pub f0: f64,
    /// `E[ρ_h - ρ0]/h`.
    pub drift: Estimate,
    /// `Σ I(Q_i, Q_i) + 2 F0`.
    pub drift_expected: f64,
    /// `E[(ρ_h - ρ0)^2]/h`.
    pub quadratic_variation: Estimate,
    pub quadratic_variation_expected: f64,
    pub drift_pass: bool,
    pub quadratic_variation_pass: bool,
}

/// One standard-mode step of size `h` from `pair0` for `samples` independent
/// noise draws; compares the mean increment of `ρ` with its Itô drift and
/// its mean square with the rate 8.
pub fn generator_oracle_rho<L: Landscape + ?Sized>(
    land: &L,
    pair0: &CoupledPair,
    h: f64,
    samples: usize,
    seed: u64,
) -> Result<RhoOracleReport> {
    if pair0.coupled {
        return Err(GapError::Domain("the oracle needs distinct starting points".into()));
    }
    let space = land.space();
    let pair = CoupledPair {
        mode: Mode::Standard,
        ..pair0.clone()
    };
    let (f0, rho0) = log_gradient_gap(land, &pair)?.ok_or_else(|| {
        GapError::Domain("starting points must lie outside the boundary standoff".into())
    })?;
    let n = space.n;
    let ([drift, qv], skipped) = chunked_moments(samples, |i| {
        let mut noise = vec![0.0; n];
        step_noise(seed, i as u64, 0, &mut noise);
        Ok(match propose(land, &pair, h, &noise)? {
            Some((x, y)) => {
                let d = space.distance(&x, &y)? - rho0;
                Some([d / h, d * d / h])
            }
            None => None,
        })
    })?;
    let index_form = space.index_form_sum(rho0)?;
    let drift_expected = index_form + 2.0 * f0;
    let (drift, qv) = (drift.estimate(), qv.estimate());
    Ok(RhoOracleReport {
        rho0,
        h,
        samples: drift.count,
        skipped,
        index_form,
        f0,
        drift,
        drift_expected,
        quadratic_variation: qv,
        quadratic_variation_expected: 8.0,
        drift_pass: drift.agrees_with(drift_expected, 3.0),
        quadratic_variation_pass: qv.agrees_with(8.0, 3.0),
    })
}

/// The drift of `F` for the modified pair, term by term.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FDriftTerms {
    pub xi: f64,
    /// `<∇V(y), e_n> - <∇V(x), e_n>`.
    pub potential_gradient: f64,
    /// `(n-1)(k - tn²(ξ)) (<∇ω(y), e_n> - <∇ω(x), e_n>)`.
    pub curvature: f64,
    /// `2 tn(ξ) [<∇ω(y), e_n>² + <∇ω(x), e_n>² + 2λ1 - V(x) - V(y)]`.
    pub quadratic: f64,
    /// `2/sn(2ξ) Σ_{i<n} (<∇ω(y), e_i> - <∇ω(x), e_i>)²`.
    pub transverse: f64,
    pub total: f64,
}

/// Closed-form drift of `F_t` at `(x, y)`, with `e_n = γ'` and the other
/// frame vectors parallel along `γ`.
pub fn f_drift<L: Landscape + ?Sized>(land: &L, x: &Point, y: &Point) -> Result<FDriftTerms> {
    let space = land.space();
    let k = space.k;
    let (e, eq, rho) = space.geodesic_frame(x, y)?;
    let xi = 0.5 * rho;
    let frame = space.tangent_frame(x, Some(&e));
    let (gx, gy) = (land.grad_log(x)?, land.grad_log(y)?);
    let (vx, vy) = (land.grad_potential(x)?, land.grad_potential(y)?);
    let ax = space.dot(&gx.vec, &e.vec);
    let ay = space.dot(&gy.vec, &eq.vec);
    let potential_gradient = space.dot(&vy.vec, &eq.vec) - space.dot(&vx.vec, &e.vec);
    let t = tn(k, xi)?;
    let curvature = (space.n as f64 - 1.0) * (k - t * t) * (ay - ax);
    let quadratic =
        2.0 * t * (ay * ay + ax * ax + 2.0 * land.lambda1() - land.potential(x)? - land.potential(y)?);
    let mut sum = 0.0;
    for ei in &frame[..frame.len() - 1] {
        let carried = space.parallel_transport(y, ei)?;
        let d = space.dot(&gy.vec, &carried.vec) - space.dot(&gx.vec, &ei.vec);
        sum += d * d;
    }
    let transverse = 2.0 / sn(k, 2.0 * xi) * sum;
    Ok(FDriftTerms {
        xi,
        potential_gradient,
        curvature,
        quadratic,
        transverse,
        total: potential_gradient + curvature + quadratic + transverse,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FOracleReport {
    pub rho0: f64,
    pub h: f64,
    pub samples: u64,
    pub skipped: usize,
    pub f0: f64,
    /// `E[F_h - F0]/h` over modified-pair steps.
    pub drift: Estimate,
    pub expected: FDriftTerms,
    pub pass: bool,
}

/// One modified-mode step of size `h` per noise draw; compares the mean
/// increment of `F` with [`f_drift`].
pub fn generator_oracle_f<L: Landscape + ?Sized>(
    land: &L,
    pair0: &CoupledPair,
    h: f64,
    samples: usize,
    seed: u64,
) -> Result<FOracleReport> {
    if pair0.coupled {
        return Err(GapError::Domain("the oracle needs distinct starting points".into()));
    }
    let pair = CoupledPair {
        mode: Mode::Modified,
        ..pair0.clone()
    };
    let (f0, rho0) = log_gradient_gap(land, &pair)?.ok_or_else(|| {
        GapError::Domain("starting points must lie outside the boundary standoff".into())
    })?;
    let n = land.space().n;
    let ([drift], skipped) = chunked_moments(samples, |i| {
        let mut noise = vec![0.0; n];
        step_noise(seed, i as u64, 0, &mut noise);
        let Some((x, y)) = propose(land, &pair, h, &noise)? else {
            return Ok(None);
        };
        let moved = CoupledPair { x, y, ..pair.clone() };
        Ok(log_gradient_gap(land, &moved)?.map(|(f, _)| [(f - f0) / h]))
    })?;
    let expected = f_drift(land, &pair.x, &pair.y)?;
    let drift = drift.estimate();
    Ok(FOracleReport {
        rho0,
        h,
        samples: drift.count,
        skipped,
        f0,
        drift,
        expected,
        pass: drift.agrees_with(expected.total, 3.0),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupermartingalePoint {
    pub t: f64,
    /// `Ê Φ(ξ_t)`.
    pub estimate: Estimate,
    /// `exp(-(λ̄2 - λ̄1) t) Φ(ξ0)`.
    pub bound: f64,
    pub uncoupled: usize,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupermartingaleReport {
    pub xi0: f64,
    pub phi0: f64,
    pub model_gap: f64,
    pub points: Vec<SupermartingalePoint>,
    pub fit: Option<ExpFit>,
    pub summary: CouplingSummary,
    pub pass: bool,
}

/// Monte-Carlo check of `E Φ(ξ_t) <= exp(-(λ̄2 - λ̄1) t) Φ(ξ0)` at
/// `cfg.observe`. A point passes when `Ê <= bound (1 + 3 SE/Ê)`.
pub fn supermartingale_check<L: Landscape + ?Sized>(
    land: &L,
    pair0: &CoupledPair,
    cfg: &SimConfig,
    model: &Spectrum1D,
) -> Result<SupermartingaleReport> {
    if pair0.mode != Mode::Standard {
        return Err(GapError::Domain("the supermartingale check uses the standard pair".into()));
    }
    let stats = simulate_many(land, pair0, cfg, Some(model))?;
    let xi0 = pair0.xi(land.space())?;
    let phi0 = if pair0.coupled { 0.0 } else { model.phi_ratio_at(xi0) };
    let gap = model.gap();
    let mut points = Vec::with_capacity(cfg.observe.len());
    for (j, &t) in cfg.observe.iter().enumerate() {
        let mut m = Moments::new();
        let mut uncoupled = 0;
        for s in &stats {
            let o = &s.samples[j];
            m.push(o.phi.expect("model given"));
            uncoupled += (o.xi > 0.0) as usize;
        }
        if t > 0.0 && uncoupled < MIN_UNCOUPLED {
            return Err(GapError::InsufficientSamples {
                t,
                remaining: uncoupled,
                required: MIN_UNCOUPLED,
            });
        }
        let estimate = m.estimate();
        let bound = (-gap * t).exp() * phi0;
        let slack = if estimate.mean > 0.0 && estimate.stderr > 0.0 {
            3.0 * estimate.stderr / estimate.mean
        } else {
            0.0
        };
        points.push(SupermartingalePoint {
            t,
            estimate,
            bound,
            uncoupled,
            pass: estimate.mean <= bound * (1.0 + slack) * (1.0 + 1e-12),
        });
    }
    let fitted: Vec<&SupermartingalePoint> = points.iter().filter(|p| p.t > 0.0).collect();
    let fit = fit_exponential(
        &fitted.iter().map(|p| p.t).collect::<Vec<_>>(),
        &fitted.iter().map(|p| p.estimate.mean).collect::<Vec<_>>(),
        &fitted.iter().map(|p| p.estimate.stderr).collect::<Vec<_>>(),
    );
    Ok(SupermartingaleReport {
        xi0,
        phi0,
        model_gap: gap,
        pass: points.iter().all(|p| p.pass),
        points,
        fit,
        summary: summarize(&stats, cfg.horizon),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeynmanKacPoint {
    pub t: f64,
    /// `Ê v0(X_t)`.
    pub estimate: Estimate,
    /// `exp(-rate t) v0(x0)`.
    pub expected: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeynmanKacReport {
    pub v0: f64,
    pub rate: f64,
    pub points: Vec<FeynmanKacPoint>,
    pub boundary_halvings: u64,
    pub rejected_steps: u64,
    pub pass: bool,
}

/// Single diffusion from `x0`; compares `Ê v0(X_t)` with `exp(-rate t) v0(x0)`
/// at `cfg.observe` within three standard errors.
pub fn feynman_kac_check<L, V>(land: &L, x0: &Point, cfg: &SimConfig, v0: V, rate: f64) -> Result<FeynmanKacReport>
where
    L: Landscape + ?Sized,
    V: Fn(&Point) -> Result<f64> + Sync,
{
    let start = CoupledPair::single(land, x0.clone())?;
    let runs: Vec<(Vec<f64>, u64, u64)> = (0..cfg.trajectories)
        .into_par_iter()
        .map(|i| {
            let mut values = Vec::with_capacity(cfg.observe.len());
            let (_, counts) = drive(land, &start, cfg, i as u64, false, |_| Ok(()), |_, p| {
                values.push(v0(&p.x)?);
                Ok(())
            })?;
            Ok((values, counts.boundary_halvings, counts.rejected_steps))
        })
        .collect::<Result<_>>()?;
    let value0 = v0(x0)?;
    let points: Vec<FeynmanKacPoint> = cfg
        .observe
        .iter()
        .enumerate()
        .map(|(j, &t)| {
            let estimate = runs.iter().map(|r| r.0[j]).collect::<Moments>().estimate();
            let expected = (-rate * t).exp() * value0;
            let pass = if estimate.stderr > 0.0 {
                estimate.agrees_with(expected, 3.0)
            } else {
                (estimate.mean - expected).abs() <= 1e-12 * expected.abs().max(1.0)
            };
            FeynmanKacPoint {
                t,
                estimate,
                expected,
                pass,
            }
        })
        .collect();
    Ok(FeynmanKacReport {
        v0: value0,
        rate,
        pass: points.iter().all(|p| p.pass),
        points,
        boundary_halvings: runs.iter().map(|r| r.1).sum(),
        rejected_steps: runs.iter().map(|r| r.2).sum(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonitorReport {
    pub paths: usize,
    pub records: u64,
    /// Largest `G = F - 2Ψ(ξ)` over all paths and steps.
    pub max_g: f64,
    /// `(t, ξ, F)` where `max_g` was attained.
    pub worst: Option<(f64, f64, f64)>,
    /// `G` extrapolated to the coupling radius: `eps_couple · max |G|/ρ` over
    /// records with `ρ < 10 eps_couple`. Both terms of `G` vanish linearly as
    /// the pair meets.
    pub near_coupling: f64,
    pub coupled: usize,
    pub tol: f64,
    pub pass: bool,
}

/// Track `G_t = F_t - 2Ψ(ξ_t)` along modified-pair paths from each start
/// pair (`cfg.trajectories` paths per start). `G` is evaluated wherever `F`
/// and `Ψ` are both resolved.
pub fn modulus_preservation_monitor<L: Landscape + ?Sized>(
    land: &L,
    starts: &[CoupledPair],
    cfg: &SimConfig,
    model: &Spectrum1D,
) -> Result<MonitorReport> {
    let per = cfg.trajectories;
    let eps = cfg.eps_couple;
    let runs: Vec<(u64, f64, Option<(f64, f64, f64)>, f64, bool)> = (0..starts.len() * per)
        .into_par_iter()
        .map(|idx| {
            let pair0 = CoupledPair {
                mode: Mode::Modified,
                ..starts[idx / per].clone()
            };
            let mut records = 0u64;
            let mut max_g = f64::NEG_INFINITY;
            let mut worst = None;
            let mut near = 0.0f64;
            let mut track = |p: &CoupledPair| -> Result<()> {
                if p.coupled {
                    return Ok(());
                }
                let Some((f, rho)) = log_gradient_gap(land, p)? else {
                    return Ok(());
                };
                if !(rho > eps && rho < land.diameter() - eps) {
                    return Ok(());
                }
                let Some(psi) = model.psi_at(0.5 * rho) else {
                    return Ok(());
                };
                let g = f - 2.0 * psi;
                records += 1;
                if g > max_g {
                    max_g = g;
                    worst = Some((p.t, 0.5 * rho, f));
                }
                if rho < 10.0 * eps {
                    near = near.max(eps * g.abs() / rho);
                }
                Ok(())
            };
            track(&pair0)?;
            let (end, _) = drive(land, &pair0, cfg, idx as u64, true, &mut track, |_, _| Ok(()))?;
            Ok((records, max_g, worst, near, end.coupled))
        })
        .collect::<Result<_>>()?;
    let mut rep = MonitorReport {
        paths: runs.len(),
        records: 0,
        max_g: f64::NEG_INFINITY,
        worst: None,
        near_coupling: 0.0,
        coupled: 0,
        tol: MONITOR_TOL,
        pass: false,
    };
    for (records, max_g, worst, near, coupled) in runs {
        rep.records += records;
        if max_g > rep.max_g {
            rep.max_g = max_g;
            rep.worst = worst;
        }
        rep.near_coupling = rep.near_coupling.max(near);
        rep.coupled += coupled as usize;
    }
    rep.pass = rep.max_g <= rep.tol && rep.near_coupling <= rep.tol;
    Ok(rep)
}
