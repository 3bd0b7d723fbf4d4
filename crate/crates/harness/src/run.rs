//! Experiment dispatch.

use std::f64::consts::PI;
use std::time::Instant;

use gaplab_core::coupling::{
    feynman_kac_check, generator_oracle_f, generator_oracle_rho, modulus_preservation_monitor,
    observation_table, shared_noise_compare, simulate_many, summarize, supermartingale_check, Ball,
    CoupledPair, Mode, SimConfig,
};
use gaplab_core::rng::SplitStream;
use gaplab_core::spectral1d::{solve_spectrum, Model1D, Spectrum1D};
use gaplab_core::spectral2d::{
    check_condition, check_gap_comparison, check_modulus_concavity, solve_ball, BallDomain, BallSpectrum,
    MODULUS_TOL,
};
use gaplab_core::GapError;
use rayon::prelude::*;
use serde_json::json;

use crate::config::{BallCell, CoupleCheck, ExperimentConfig, Kind, PotentialSpec};
use crate::oracle;
use crate::report::{Section, Series, Table, VerificationReport};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Core(#[from] GapError),
    #[error("{0}")]
    Invalid(String),
}

type Result<T> = std::result::Result<T, RunError>;

pub const FLAT_GAP_TOL: f64 = 1e-6;
pub const HEMISPHERE_LAMBDA1_TOL: f64 = 1e-5;
pub const HEMISPHERE_LAMBDA2_TOL: f64 = 1e-4;
pub const BESSEL_TOL: f64 = 1e-5;
pub const ORDER_TOL: f64 = 0.3;
pub const MIN_COUPLED_FRACTION: f64 = 0.99;

/// A 1-D model of a sweep or of a random-model study.
#[derive(Clone, Debug)]
struct ModelCell {
    n: usize,
    k: f64,
    d: f64,
    v: PotentialSpec,
}

/// Run one experiment. Sweep cells run concurrently; the result does not
/// depend on scheduling.
pub fn run(cfg: &ExperimentConfig) -> Result<VerificationReport> {
    let start = Instant::now();
    let timed: Vec<(Section, f64)> = match cfg.kind {
        Kind::Sweep => sweep(cfg)?,
        kind => vec![timed(|| single(cfg, kind, None))?],
    };
    let mut wall_times = std::collections::BTreeMap::new();
    let mut sections = Vec::new();
    for (i, (s, secs)) in timed.into_iter().enumerate() {
        wall_times.insert(format!("{i:03} {}", s.label), secs);
        sections.push(s);
    }
    wall_times.insert("total".into(), start.elapsed().as_secs_f64());
    Ok(VerificationReport {
        kind: cfg.kind.name().into(),
        config: cfg.source.clone(),
        pass: sections.iter().all(Section::pass),
        sections,
        wall_times,
    })
}

fn timed(f: impl FnOnce() -> Result<Section>) -> Result<(Section, f64)> {
    let t = Instant::now();
    let s = f()?;
    Ok((s, t.elapsed().as_secs_f64()))
}

/// A non-sweep experiment, or one sweep cell when `cell` is given.
fn single(cfg: &ExperimentConfig, kind: Kind, cell: Option<&BallCell>) -> Result<Section> {
    let (k, r, v) = match cell {
        Some(c) => (c.k, c.r, c.potential.clone().unwrap_or_else(|| cfg.potential.clone())),
        None => (cfg.k, cfg.r.unwrap_or(f64::NAN), cfg.potential.clone()),
    };
    match kind {
        Kind::Solve1d => {
            let m = ModelCell {
                n: cfg.n,
                k: cfg.k,
                d: cfg.d.ok_or_else(|| RunError::Invalid("solve1d needs D".into()))?,
                v: cfg.potential.clone(),
            };
            solve1d(cfg, &m, cfg.source.contains_key("order_grids"))
        }
        Kind::Solveball => solveball(cfg, k, r, &v),
        Kind::Verify => verify(cfg, k, r, &v),
        Kind::Couple => couple(cfg, k, r, &v),
        Kind::Sweep => Err(RunError::Invalid("nested sweep".into())),
    }
}

fn sweep(cfg: &ExperimentConfig) -> Result<Vec<(Section, f64)>> {
    let s = cfg.sweep.as_ref().ok_or_else(|| RunError::Invalid("missing sweep spec".into()))?;
    match s.target {
        Kind::Solve1d => {
            let cells = if s.random_models > 0 {
                random_models(cfg.seed, s.random_models)
            } else {
                let mut cells = Vec::new();
                for &n in &s.ns {
                    for &k in &s.ks {
                        for &d in &s.ds {
                            for v in cfg.sweep_potentials() {
                                cells.push(ModelCell { n, k, d, v });
                            }
                        }
                    }
                }
                cells
            };
            let orders = s.random_models > 0 || cfg.source.contains_key("order_grids");
            cells.par_iter().map(|m| timed(|| solve1d(cfg, m, orders))).collect()
        }
        target => {
            let mut cells = Vec::new();
            for b in &s.balls {
                match &b.potential {
                    Some(_) => cells.push(b.clone()),
                    None => {
                        for v in cfg.sweep_potentials() {
                            cells.push(BallCell {
                                potential: Some(v),
                                ..b.clone()
                            });
                        }
                    }
                }
            }
            cells.par_iter().map(|c| timed(|| single(cfg, target, Some(c)))).collect()
        }
    }
}

/// Reproducible random 1-D models: `n ∈ {2,3,4}`, `k ∈ {0,1,-1}`,
/// `D ∈ [0.5, 2.5)`, `V = a + b s^2 + c s^4` with `a, b, c ≥ 0`.
fn random_models(seed: u64, count: usize) -> Vec<ModelCell> {
    let mut rng = SplitStream::new(seed, 0);
    (0..count)
        .map(|_| {
            let n = 2 + (rng.uniform() * 3.0) as usize;
            let k = [0.0, 1.0, -1.0][(rng.uniform() * 3.0) as usize];
            let d = 0.5 + 2.0 * rng.uniform();
            let v = PotentialSpec::Poly(vec![rng.uniform(), 0.0, 3.0 * rng.uniform(), 0.0, 2.0 * rng.uniform()]);
            ModelCell { n, k, d, v }
        })
        .collect()
}

fn table_from_csv(name: &str, csv: &str) -> Table {
    let mut lines = csv.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<&str> = lines.next().unwrap_or("").split(',').collect();
    let mut t = Table::new(name, &header);
    t.rows = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    t
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn solve1d(cfg: &ExperimentConfig, m: &ModelCell, orders: bool) -> Result<Section> {
    let mut s = Section::new(format!("n={} k={} D={} V={}", m.n, m.k, m.d, m.v));
    let model = Model1D::new(m.n, m.k, m.d, m.v.potential())?;
    let spec = solve_spectrum(&model, cfg.grid)?;
    s.output(
        "spectrum",
        json!({
            "grid": cfg.grid,
            "fineGrid": 2 * cfg.grid - 1,
            "lambda1bar": spec.lambda1bar,
            "lambda2bar": spec.lambda2bar,
            "gap": spec.gap(),
            "raw": spec.raw,
            "richardsonError": [
                (spec.lambda1bar - spec.raw[1][0]).abs(),
                (spec.lambda2bar - spec.raw[1][1]).abs(),
            ],
        }),
    );
    if m.k == 0.0 && m.v.is_zero() {
        let exact = 3.0 * PI * PI / (m.d * m.d);
        let err = rel(spec.gap(), exact);
        s.check(
            "flat model gap 3pi^2/D^2",
            err <= FLAT_GAP_TOL,
            json!({"gap": spec.gap(), "exact": exact, "relError": err, "tolerance": FLAT_GAP_TOL}),
        );
    }
    if orders {
        residual_orders(cfg, &model, &mut s)?;
    }
    s.tables.push(table_from_csv("spectrum1d", &spec.to_csv()));
    Ok(s)
}

/// Observed order `log2(r_G / r_2G)` of the Psi- and Phi-ODE residual maxima.
fn residual_orders(cfg: &ExperimentConfig, model: &Model1D, s: &mut Section) -> Result<()> {
    let res = cfg
        .order_grids
        .iter()
        .map(|&g| {
            let spec = solve_spectrum(model, g)?;
            Ok([
                spec.inner_max(&spec.residual_psi_ode(model)),
                spec.inner_max(&spec.residual_phi_ode(model)),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    for (j, name) in ["psi ODE residual order", "phi ODE residual order"].into_iter().enumerate() {
        let orders: Vec<f64> = res.windows(2).map(|w| (w[0][j] / w[1][j]).log2()).collect();
        let pass = !orders.is_empty() && orders.iter().all(|o| (o - 2.0).abs() <= ORDER_TOL);
        let residuals: Vec<f64> = res.iter().map(|r| r[j]).collect();
        s.check(
            name,
            pass,
            json!({"grids": cfg.order_grids, "residuals": residuals, "orders": orders, "expected": 2.0, "tolerance": ORDER_TOL}),
        );
    }
    Ok(())
}

fn ball_label(k: f64, r: f64, v: &PotentialSpec) -> String {
    format!("k={k} R={r} V={v}")
}

fn solve_ball_at(cfg: &ExperimentConfig, k: f64, r: f64, v: &PotentialSpec) -> Result<(BallDomain, BallSpectrum)> {
    let dom = BallDomain::new(k, r, v.potential())?;
    let ball = solve_ball(&dom, cfg.radial_cells)?;
    Ok((dom, ball))
}

fn ball_outputs(s: &mut Section, ball: &BallSpectrum) {
    s.output(
        "ball",
        json!({
            "cells": ball.cells,
            "lambda1": ball.lambda1,
            "lambda2": ball.lambda2,
            "gap": ball.gap(),
            "mode2": ball.mode2,
            "sectors": ball.sectors,
        }),
    );
    s.tables.push(table_from_csv("ball", &ball.to_csv()));
}

fn solveball(cfg: &ExperimentConfig, k: f64, r: f64, v: &PotentialSpec) -> Result<Section> {
    let (dom, ball) = solve_ball_at(cfg, k, r, v)?;
    Ok(ball_section(&dom, &ball, v))
}

/// Ball outputs plus the exact references that apply.
fn ball_section(dom: &BallDomain, ball: &BallSpectrum, v: &PotentialSpec) -> Section {
    let (k, r) = (dom.space.k, dom.radius);
    let mut s = Section::new(ball_label(k, r, v));
    ball_outputs(&mut s, ball);
    if v.is_zero() && dom.is_hemisphere() {
        let (l1, l2) = oracle::hemisphere_eigenvalues(k);
        let (e1, e2) = ((ball.lambda1 - l1).abs(), (ball.lambda2 - l2).abs());
        s.check(
            "hemisphere lambda1",
            e1 <= HEMISPHERE_LAMBDA1_TOL * k,
            json!({"lambda1": ball.lambda1, "exact": l1, "absError": e1, "tolerance": HEMISPHERE_LAMBDA1_TOL * k}),
        );
        s.check(
            "hemisphere lambda2",
            e2 <= HEMISPHERE_LAMBDA2_TOL * k,
            json!({"lambda2": ball.lambda2, "exact": l2, "absError": e2, "tolerance": HEMISPHERE_LAMBDA2_TOL * k}),
        );
    }
    if v.is_zero() && k == 0.0 {
        let (l1, l2) = oracle::flat_disc_eigenvalues(r);
        let (e1, e2) = (rel(ball.lambda1, l1), rel(ball.lambda2, l2));
        s.check(
            "flat disc Bessel zeros",
            e1 <= BESSEL_TOL && e2 <= BESSEL_TOL,
            json!({
                "lambda1": ball.lambda1, "lambda1Exact": l1, "lambda1RelError": e1,
                "lambda2": ball.lambda2, "lambda2Exact": l2, "lambda2RelError": e2,
                "tolerance": BESSEL_TOL,
            }),
        );
    }
    s
}

fn companion(cfg: &ExperimentConfig, dom: &BallDomain, grid: usize) -> Result<(Model1D, Spectrum1D)> {
    let model = Model1D::new(2, dom.space.k, dom.model_diameter(), cfg.model_potential.potential())?;
    let spec = solve_spectrum(&model, grid)?;
    Ok((model, spec))
}

/// Gap comparison, the sampled condition and the modulus inequality, the
/// last with a coarse-grid run for the refinement study.
fn verify(cfg: &ExperimentConfig, k: f64, r: f64, v: &PotentialSpec) -> Result<Section> {
    let (dom, ball) = solve_ball_at(cfg, k, r, v)?;
    let mut s = ball_section(&dom, &ball, v);
    let (model, spec) = companion(cfg, &dom, cfg.grid)?;
    s.output(
        "model",
        json!({"n": 2, "k": k, "D": model.d, "Vmodel": cfg.model_potential.to_string(),
               "lambda1bar": spec.lambda1bar, "lambda2bar": spec.lambda2bar, "gap": spec.gap()}),
    );
    let gap = check_gap_comparison(&ball, &spec);
    s.check("gap comparison", gap.pass, &gap);
    let cond = check_condition(&dom, &ball, &model, &spec, cfg.samples, cfg.seed);
    s.output("condition", &cond);
    if !cond.satisfied {
        s.output("modulus", "skipped: the eigenvalue condition fails on sampled pairs");
        return Ok(s);
    }
    let fine = check_modulus_concavity(&dom, &ball, &spec, cfg.samples, cfg.seed);
    let coarse_ball = solve_ball(&dom, cfg.radial_cells / 4)?;
    let (_, coarse_spec) = companion(cfg, &dom, (cfg.grid - 1) / 4 + 1)?;
    let coarse = check_modulus_concavity(&dom, &coarse_ball, &coarse_spec, cfg.samples, cfg.seed);
    let violation = |m: f64| m.max(0.0);
    let decays = violation(fine.max_delta) <= violation(coarse.max_delta);
    s.check(
        "modulus inequality",
        fine.pass && decays,
        json!({
            "fine": fine,
            "coarse": coarse,
            "coarseCells": cfg.radial_cells / 4,
            "coarseGrid": (cfg.grid - 1) / 4 + 1,
            "violationDecays": decays,
            "tolerance": MODULUS_TOL,
        }),
    );
    Ok(s)
}

fn sim_config(cfg: &ExperimentConfig, r: f64) -> Result<SimConfig> {
    let eps = cfg.eps_couple.unwrap_or(1e-3 * r);
    let times = if cfg.observe.is_empty() {
        vec![0.0, cfg.horizon]
    } else {
        cfg.observe.clone()
    };
    Ok(SimConfig::new(cfg.dt, cfg.horizon, eps, cfg.trajectories, cfg.seed)?
        .with_observations(&times)?
        .with_max_halvings(cfg.max_halvings))
}

fn couple(cfg: &ExperimentConfig, k: f64, r: f64, v: &PotentialSpec) -> Result<Section> {
    let check = cfg.check.ok_or_else(|| RunError::Invalid("couple needs check".into()))?;
    let mut s = Section::new(format!("{} {check:?}", ball_label(k, r, v)));
    let (dom, ball) = solve_ball_at(cfg, k, r, v)?;
    let (_, spec) = companion(cfg, &dom, cfg.grid)?;
    let land = Ball::new(&dom, &ball);
    let sim = sim_config(cfg, r)?;
    s.output("sim", &sim);
    s.output("ball", json!({"lambda1": ball.lambda1, "lambda2": ball.lambda2, "gap": ball.gap()}));
    s.output("model", json!({"lambda1bar": spec.lambda1bar, "lambda2bar": spec.lambda2bar, "gap": spec.gap()}));
    let at = |p: Option<(f64, f64)>, name: &str| -> Result<_> {
        let (pr, th) = p.ok_or_else(|| RunError::Invalid(format!("missing {name}")))?;
        Ok(dom.point_at(pr, th)?)
    };
    let x0 = at(cfg.x0, "x0")?;
    let pair = |mode: Mode| -> Result<CoupledPair> { Ok(CoupledPair::new(&land, x0.clone(), at(cfg.y0, "y0")?, mode)?) };
    match check {
        CoupleCheck::Coupling => {
            let stats = simulate_many(&land, &pair(cfg.mode)?, &sim, Some(&spec))?;
            let summary = summarize(&stats, sim.horizon);
            s.check(
                "coupled fraction",
                summary.coupled_fraction >= MIN_COUPLED_FRACTION,
                json!({"summary": summary, "required": MIN_COUPLED_FRACTION}),
            );
            let rows = observation_table(&stats, &sim.observe);
            s.tables.push(table_from_csv("observations", &gaplab_core::coupling::observation_csv(&rows)));
            s.series.push(Series::new("xi", rows.iter().map(|r| [r.t, r.xi.mean, r.xi.stderr])));
            let mut taus: Vec<f64> = stats.iter().filter_map(|t| t.tau).collect();
            taus.sort_by(f64::total_cmp);
            let mut tau = Table::new("coupling_times", &["tau"]);
            for t in taus {
                tau.push(&[t]);
            }
            s.tables.push(tau);
        }
        CoupleCheck::Compare => {
            let rep = shared_noise_compare(&land, &pair(Mode::Standard)?, &pair(Mode::Modified)?, &sim, cfg.compare_tol)?;
            s.check("pathwise comparison", rep.pass, &rep);
        }
        CoupleCheck::Supermartingale => {
            let rep = supermartingale_check(&land, &pair(Mode::Standard)?, &sim, &spec)?;
            s.series.push(Series::new(
                "phi",
                rep.points.iter().map(|p| [p.t, p.estimate.mean, p.estimate.stderr]),
            ));
            s.series.push(Series::new("phi_bound", rep.points.iter().map(|p| [p.t, p.bound, 0.0])));
            s.check("supermartingale bound", rep.pass, &rep);
        }
        CoupleCheck::FeynmanKac => {
            let v0 = |p: &gaplab_core::geom::Point| -> gaplab_core::Result<f64> {
                let (pr, th) = dom.space.polar_coords(p)?;
                Ok(ball.ground_state_ratio(pr, th))
            };
            let rep = feynman_kac_check(&land, &x0, &sim, v0, ball.gap())?;
            s.series.push(Series::new(
                "v",
                rep.points.iter().map(|p| [p.t, p.estimate.mean, p.estimate.stderr]),
            ));
            s.series.push(Series::new("v_expected", rep.points.iter().map(|p| [p.t, p.expected, 0.0])));
            s.check("Feynman-Kac decay", rep.pass, &rep);
        }
        CoupleCheck::Oracles => {
            let samples = cfg.oracle_samples as usize;
            let rho = generator_oracle_rho(&land, &pair(Mode::Standard)?, cfg.oracle_h, samples, cfg.seed)?;
            s.check("rho quadratic variation", rho.quadratic_variation_pass, &rho);
            s.check("rho drift", rho.drift_pass, &rho);
            let f = generator_oracle_f(&land, &pair(Mode::Modified)?, cfg.oracle_h, samples, cfg.seed)?;
            s.check("F drift", f.pass, &f);
        }
        CoupleCheck::Monitor => {
            let rep = modulus_preservation_monitor(&land, &[pair(Mode::Modified)?], &sim, &spec)?;
            s.check("modulus preservation", rep.pass, &rep);
        }
    }
    Ok(s)
}
