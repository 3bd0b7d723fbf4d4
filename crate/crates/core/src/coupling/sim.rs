use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{drift_step_cap, propose, settle, step, CoupledPair, Landscape, StepPolicy};
use crate::rng::step_noise;
use crate::spectral1d::Spectrum1D;
use crate::stats::{Estimate, Moments};
use crate::{GapError, Result};

/// Largest dimension the per-step noise buffer supports.
const MAX_DIM: usize = 16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub dt: f64,
    /// Horizon `T`.
    pub horizon: f64,
    pub eps_couple: f64,
    pub trajectories: usize,
    pub seed: u64,
    pub max_halvings: u32,
    /// Observation times in `[0, T]`, increasing.
    pub observe: Vec<f64>,
}

impl SimConfig {
    pub fn new(dt: f64, horizon: f64, eps_couple: f64, trajectories: usize, seed: u64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(GapError::Domain(format!("dt = {dt} must be positive")));
        }
        if !(horizon >= 0.0) || !horizon.is_finite() {
            return Err(GapError::Domain(format!("T = {horizon} must be nonnegative")));
        }
        if !(eps_couple > 0.0) {
            return Err(GapError::Domain(format!("eps_couple = {eps_couple} must be positive")));
        }
        if trajectories == 0 {
            return Err(GapError::Domain("trajectories must be at least 1".into()));
        }
        Ok(Self {
            dt,
            horizon,
            eps_couple,
            trajectories,
            seed,
            max_halvings: 20,
            observe: Vec::new(),
        })
    }

    pub fn with_observations(mut self, times: &[f64]) -> Result<Self> {
        if times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(GapError::Domain("observation times must increase".into()));
        }
        if times.iter().any(|&t| !(t >= 0.0) || t > self.horizon) {
            return Err(GapError::Domain(format!(
                "observation times must lie in [0, T = {}]",
                self.horizon
            )));
        }
        self.observe = times.to_vec();
        Ok(self)
    }

    pub fn with_max_halvings(mut self, max_halvings: u32) -> Self {
        self.max_halvings = max_halvings;
        self
    }

    pub fn policy(&self) -> StepPolicy {
        StepPolicy {
            eps_couple: self.eps_couple,
            max_halvings: self.max_halvings,
        }
    }

    fn tiny(&self) -> f64 {
        1e-9 * self.dt
    }
}

/// Step bookkeeping for one trajectory.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StepCounts {
    pub steps: u64,
    pub boundary_halvings: u64,
    pub rejected_steps: u64,
}

impl StepCounts {
    pub fn merge(&mut self, other: &StepCounts) {
        self.steps += other.steps;
        self.boundary_halvings += other.boundary_halvings;
        self.rejected_steps += other.rejected_steps;
    }
}

/// Drive `pair0` until the horizon (or until it couples, when `stop_at_coupling`).
/// `on_step` sees the pair after every accepted step; `on_obs` sees it at each
/// observation time (with `t` set to that time, also after the run ends).
pub fn drive<L, S, O>(
    land: &L,
    pair0: &CoupledPair,
    cfg: &SimConfig,
    stream: u64,
    stop_at_coupling: bool,
    mut on_step: S,
    mut on_obs: O,
) -> Result<(CoupledPair, StepCounts)>
where
    L: Landscape + ?Sized,
    S: FnMut(&CoupledPair) -> Result<()>,
    O: FnMut(usize, &CoupledPair) -> Result<()>,
{
    let n = land.space().n;
    assert!(n <= MAX_DIM, "dimension {n} exceeds the noise buffer");
    let mut noise = [0.0; MAX_DIM];
    let policy = cfg.policy();
    let tiny = cfg.tiny();
    let stops = &cfg.observe;
    let mut pair = pair0.clone();
    let mut counts = StepCounts::default();
    let mut next_obs = 0;
    let mut consecutive = 0u32;
    let mut step_index = 0u64;
    while next_obs < stops.len() && stops[next_obs] <= pair.t + tiny {
        on_obs(next_obs, &pair)?;
        next_obs += 1;
    }
    while pair.t < cfg.horizon - tiny && !(stop_at_coupling && pair.coupled) {
        let target = stops.get(next_obs).copied().unwrap_or(cfg.horizon).min(cfg.horizon);
        let remaining = target - pair.t;
        let h = if remaining - cfg.dt < tiny { remaining } else { cfg.dt };
        step_noise(cfg.seed, stream, step_index, &mut noise[..n]);
        step_index += 1;
        let s = step(land, &pair, h, &noise[..n], &policy)?;
        counts.steps += 1;
        counts.boundary_halvings += s.halvings as u64;
        if s.rejected {
            counts.rejected_steps += 1;
            consecutive += 1;
            if consecutive >= cfg.max_halvings {
                return Err(GapError::Stuck {
                    rejections: consecutive,
                    t: pair.t,
                });
            }
            continue;
        }
        consecutive = 0;
        pair = s.pair;
        if (pair.t - target).abs() < tiny {
            pair.t = target;
        }
        on_step(&pair)?;
        while next_obs < stops.len() && stops[next_obs] <= pair.t + tiny {
            on_obs(next_obs, &pair)?;
            next_obs += 1;
        }
    }
    while next_obs < stops.len() {
        let mut p = pair.clone();
        p.t = stops[next_obs];
        on_obs(next_obs, &p)?;
        next_obs += 1;
    }
    Ok((pair, counts))
}

/// State of a trajectory at one observation time. `f` and `psi` are present
/// only while `ρ ∈ (eps_couple, D - eps_couple)` and both are resolved.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub t: f64,
    pub xi: f64,
    pub f: Option<f64>,
    pub phi: Option<f64>,
    pub psi: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryStats {
    /// Coupling time, `None` if the pair had not met by the horizon.
    pub tau: Option<f64>,
    pub samples: Vec<Observation>,
    pub counts: StepCounts,
}

/// `F = <∇log φ1(y), γ'(y)> - <∇log φ1(x), γ'(x)>` and `ρ`, or `None`
/// where `∇log φ1` is not resolved.
pub fn log_gradient_gap<L: Landscape + ?Sized>(land: &L, pair: &CoupledPair) -> Result<Option<(f64, f64)>> {
    let space = land.space();
    let (e, eq, rho) = space.geodesic_frame(&pair.x, &pair.y)?;
    let (gx, gy) = match (land.grad_log(&pair.x), land.grad_log(&pair.y)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(GapError::Boundary { .. }), _) | (_, Err(GapError::Boundary { .. })) => return Ok(None),
        (Err(e), _) | (_, Err(e)) => return Err(e),
    };
    Ok(Some((space.dot(&gy.vec, &eq.vec) - space.dot(&gx.vec, &e.vec), rho)))
}

/// Observation of `pair` with `Φ` and `Ψ` taken from `model` when given.
pub fn observe<L: Landscape + ?Sized>(
    land: &L,
    pair: &CoupledPair,
    eps_couple: f64,
    model: Option<&Spectrum1D>,
) -> Result<Observation> {
    let space = land.space();
    let rho = pair.rho(space)?;
    let xi = 0.5 * rho;
    let phi = model.map(|m| if pair.coupled { 0.0 } else { m.phi_ratio_at(xi) });
    let mut obs = Observation {
        t: pair.t,
        xi,
        f: None,
        phi,
        psi: None,
    };
    if !pair.coupled && rho > eps_couple && rho < land.diameter() - eps_couple {
        obs.f = log_gradient_gap(land, pair)?.map(|(f, _)| f);
        obs.psi = model.and_then(|m| m.psi_at(xi));
    }
    Ok(obs)
}

/// One trajectory, stopped at coupling, observed at `cfg.observe`.
pub fn simulate<L: Landscape + ?Sized>(
    land: &L,
    pair0: &CoupledPair,
    cfg: &SimConfig,
    stream: u64,
    model: Option<&Spectrum1D>,
) -> Result<TrajectoryStats> {
    let mut samples = Vec::with_capacity(cfg.observe.len());
    let mut tau = pair0.coupled.then_some(0.0);
    let (_, counts) = drive(
        land,
        pair0,
        cfg,
        stream,
        true,
        |p| {
            if p.coupled && tau.is_none() {
                tau = Some(p.t);
            }
            Ok(())
        },
        |_, p| {
            samples.push(observe(land, p, cfg.eps_couple, model)?);
            Ok(())
        },
    )?;
    Ok(TrajectoryStats { tau, samples, counts })
}

/// `cfg.trajectories` independent copies of [`simulate`] (stream = index), in parallel.
pub fn simulate_many<L: Landscape + ?Sized>(
    land: &L,
    pair0: &CoupledPair,
    cfg: &SimConfig,
    model: Option<&Spectrum1D>,
) -> Result<Vec<TrajectoryStats>> {
    (0..cfg.trajectories)
        .into_par_iter()
        .map(|i| simulate(land, pair0, cfg, i as u64, model))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingSummary {
    pub trajectories: usize,
    pub horizon: f64,
    pub coupled: usize,
    pub coupled_fraction: f64,
    /// Mean coupling time over the coupled trajectories.
    pub mean_tau: Option<Estimate>,
    pub counts: StepCounts,
}

pub fn summarize(stats: &[TrajectoryStats], horizon: f64) -> CouplingSummary {
    let mut counts = StepCounts::default();
    let mut taus = Moments::new();
    for s in stats {
        counts.merge(&s.counts);
        if let Some(t) = s.tau {
            taus.push(t);
        }
    }
    let coupled = taus.count() as usize;
    CouplingSummary {
        trajectories: stats.len(),
        horizon,
        coupled,
        coupled_fraction: coupled as f64 / stats.len().max(1) as f64,
        mean_tau: (coupled > 1).then(|| taus.estimate()),
        counts,
    }
}

/// Per-observation-time ensemble means.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservationRow {
    pub t: f64,
    pub xi: Estimate,
    pub phi: Option<Estimate>,
    pub uncoupled: usize,
}

pub fn observation_table(stats: &[TrajectoryStats], times: &[f64]) -> Vec<ObservationRow> {
    times
        .iter()
        .enumerate()
        .map(|(j, &t)| {
            let mut xi = Moments::new();
            let mut phi = Moments::new();
            let mut uncoupled = 0;
            for s in stats {
                let o = &s.samples[j];
                xi.push(o.xi);
                if let Some(p) = o.phi {
                    phi.push(p);
                }
                if o.xi > 0.0 {
                    uncoupled += 1;
                }
            }
            ObservationRow {
                t,
                xi: xi.estimate(),
                phi: (phi.count() > 0).then(|| phi.estimate()),
                uncoupled,
            }
        })
        .collect()
}

/// CSV with columns `t, xi, xiStderr, phi, phiStderr, uncoupled`.
pub fn observation_csv(rows: &[ObservationRow]) -> String {
    let mut out = String::from("t,xi,xiStderr,phi,phiStderr,uncoupled\n");
    for r in rows {
        let (p, pe) = r.phi.map_or((f64::NAN, f64::NAN), |e| (e.mean, e.stderr));
        out.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}\n",
            r.t, r.xi.mean, r.xi.stderr, p, pe, r.uncoupled
        ));
    }
    out
}

/// Pathwise record of a standard and a modified pair driven by the same noise.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathComparison {
    pub steps: u64,
    /// Extremes of `ρ_std - ρ_mod` over the path.
    pub min_gap: f64,
    pub max_gap: f64,
    /// Steps with `ρ_mod > ρ_std + tol`.
    pub mod_above: u64,
    /// Steps with `ρ_std > ρ_mod + tol`.
    pub std_above: u64,
    pub tau_std: Option<f64>,
    pub tau_mod: Option<f64>,
    pub counts: StepCounts,
}

/// Advance both pairs with the same noise. A halving triggered by either
/// pair applies to both, so they stay on a common time grid. Pairs freeze
/// once coupled.
pub fn compare_path<L: Landscape + ?Sized>(
    land: &L,
    std0: &CoupledPair,
    mod0: &CoupledPair,
    cfg: &SimConfig,
    stream: u64,
    tol: f64,
) -> Result<PathComparison> {
    let space = land.space();
    let n = space.n;
    let mut noise = [0.0; MAX_DIM];
    let mut pairs = [std0.clone(), mod0.clone()];
    let mut taus = [std0.coupled.then_some(0.0), mod0.coupled.then_some(0.0)];
    let gap0 = pairs[0].rho(space)? - pairs[1].rho(space)?;
    let mut rec = PathComparison {
        steps: 0,
        min_gap: gap0,
        max_gap: gap0,
        mod_above: 0,
        std_above: 0,
        tau_std: taus[0],
        tau_mod: taus[1],
        counts: StepCounts::default(),
    };
    let mut t = 0.0;
    let mut consecutive = 0;
    let mut step_index = 0u64;
    let tiny = cfg.tiny();
    while t < cfg.horizon - tiny && !(pairs[0].coupled && pairs[1].coupled) {
        let remaining = cfg.horizon - t;
        let mut h = if remaining - cfg.dt < tiny { remaining } else { cfg.dt };
        for p in &pairs {
            h = h.min(drift_step_cap(land, p)?);
        }
        step_noise(cfg.seed, stream, step_index, &mut noise[..n]);
        step_index += 1;
        rec.counts.steps += 1;
        let mut accepted = None;
        for halvings in 0..=cfg.max_halvings {
            let mut proposals = Vec::with_capacity(2);
            for p in &pairs {
                if p.coupled {
                    proposals.push(Some((p.x.clone(), p.y.clone())));
                } else {
                    proposals.push(propose(land, p, h, &noise[..n])?);
                }
            }
            if proposals.iter().all(Option::is_some) {
                rec.counts.boundary_halvings += halvings as u64;
                accepted = Some(proposals);
                break;
            }
            h *= 0.5;
        }
        let Some(proposals) = accepted else {
            rec.counts.boundary_halvings += cfg.max_halvings as u64;
            rec.counts.rejected_steps += 1;
            consecutive += 1;
            if consecutive >= cfg.max_halvings {
                return Err(GapError::Stuck {
                    rejections: consecutive,
                    t,
                });
            }
            continue;
        };
        consecutive = 0;
        t += h;
        if (t - cfg.horizon).abs() < tiny {
            t = cfg.horizon;
        }
        for (i, prop) in proposals.into_iter().enumerate() {
            let (x, y) = prop.expect("all proposals accepted");
            if pairs[i].coupled {
                continue;
            }
            let (x, y, coupled) = settle(space, &pairs[i], x, y, cfg.eps_couple)?;
            pairs[i] = CoupledPair {
                x,
                y,
                mode: pairs[i].mode,
                coupled,
                t,
            };
            if coupled {
                taus[i] = Some(t);
            }
        }
        let (rs, rm) = (pairs[0].rho(space)?, pairs[1].rho(space)?);
        let gap = rs - rm;
        rec.min_gap = rec.min_gap.min(gap);
        rec.max_gap = rec.max_gap.max(gap);
        if rm > rs + tol {
            rec.mod_above += 1;
        }
        if rs > rm + tol {
            rec.std_above += 1;
        }
    }
    rec.tau_std = taus[0];
    rec.tau_mod = taus[1];
    Ok(rec)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub paths: usize,
    pub tol: f64,
    pub curvature: f64,
    pub min_gap: f64,
    pub max_gap: f64,
    pub mod_above_steps: u64,
    pub std_above_steps: u64,
    /// Paths with `τ' > τ` (an uncoupled pair counts as `τ = ∞`).
    pub tau_mod_later: usize,
    /// Paths with `τ > τ'`.
    pub tau_std_later: usize,
    pub both_coupled: usize,
    pub counts: StepCounts,
    /// For `k >= 0`: no step with `ρ_mod > ρ_std + tol` and `τ' <= τ` on every
    /// path; for `k < 0` the reverse ordering.
    pub pass: bool,
}

/// [`compare_path`] over `cfg.trajectories` streams.
pub fn shared_noise_compare<L: Landscape + ?Sized>(
    land: &L,
    std0: &CoupledPair,
    mod0: &CoupledPair,
    cfg: &SimConfig,
    tol: f64,
) -> Result<ComparisonReport> {
    if std0.x != mod0.x || std0.y != mod0.y {
        return Err(GapError::Domain("compared pairs must start from the same points".into()));
    }
    let paths: Vec<PathComparison> = (0..cfg.trajectories)
        .into_par_iter()
        .map(|i| compare_path(land, std0, mod0, cfg, i as u64, tol))
        .collect::<Result<_>>()?;
    let later = |a: Option<f64>, b: Option<f64>| match (a, b) {
        (None, Some(_)) => true,
        (Some(a), Some(b)) => a > b,
        _ => false,
    };
    let mut counts = StepCounts::default();
    let mut rep = ComparisonReport {
        paths: paths.len(),
        tol,
        curvature: land.space().k,
        min_gap: f64::INFINITY,
        max_gap: f64::NEG_INFINITY,
        mod_above_steps: 0,
        std_above_steps: 0,
        tau_mod_later: 0,
        tau_std_later: 0,
        both_coupled: 0,
        counts,
        pass: false,
    };
    for p in &paths {
        counts.merge(&p.counts);
        rep.min_gap = rep.min_gap.min(p.min_gap);
        rep.max_gap = rep.max_gap.max(p.max_gap);
        rep.mod_above_steps += p.mod_above;
        rep.std_above_steps += p.std_above;
        rep.tau_mod_later += later(p.tau_mod, p.tau_std) as usize;
        rep.tau_std_later += later(p.tau_std, p.tau_mod) as usize;
        rep.both_coupled += (p.tau_std.is_some() && p.tau_mod.is_some()) as usize;
    }
    rep.counts = counts;
    rep.pass = if rep.curvature >= 0.0 {
        rep.mod_above_steps == 0 && rep.tau_mod_later == 0
    } else {
        rep.std_above_steps == 0 && rep.tau_std_later == 0
    };
    Ok(rep)
}
