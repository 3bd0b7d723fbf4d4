//! Line-oriented `key=value` experiment configuration.
//!
//! Pairs are separated by newlines or whitespace; `#` starts a comment.
//! Numbers may be written with `pi` (`pi/2`, `2*pi/3`). Lists are
//! comma-separated; lists of potentials and ball cells are `;`-separated.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::path::PathBuf;

use gaplab_core::coupling::Mode;
use gaplab_core::potential::Potential;
use gaplab_core::spectral1d::DEFAULT_GRID;
use gaplab_core::spectral2d::DEFAULT_RADIAL_GRID;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Solve1d,
    Solveball,
    Verify,
    Couple,
    Sweep,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Solve1d => "solve1d",
            Kind::Solveball => "solveball",
            Kind::Verify => "verify",
            Kind::Couple => "couple",
            Kind::Sweep => "sweep",
        }
    }

    pub fn parse(s: &str) -> Option<Kind> {
        Some(match s {
            "solve1d" => Kind::Solve1d,
            "solveball" => Kind::Solveball,
            "verify" => Kind::Verify,
            "couple" => Kind::Couple,
            "sweep" => Kind::Sweep,
            _ => return None,
        })
    }
}

/// Monte-Carlo experiment run by `kind=couple`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoupleCheck {
    /// Coupling-time statistics.
    Coupling,
    /// Shared-noise standard vs modified pair.
    Compare,
    Supermartingale,
    FeynmanKac,
    /// Short-time generator oracles for `ρ` and `F`.
    Oracles,
    /// `G = F - 2Ψ` along modified paths.
    Monitor,
}

impl CoupleCheck {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "coupling" => Self::Coupling,
            "compare" => Self::Compare,
            "supermartingale" => Self::Supermartingale,
            "feynman_kac" => Self::FeynmanKac,
            "oracles" => Self::Oracles,
            "monitor" => Self::Monitor,
            _ => return None,
        })
    }
}

/// Polynomial coefficients (in `s` or `r`, lowest order first) or a sampled table.
#[derive(Clone, Debug, PartialEq)]
pub enum PotentialSpec {
    Poly(Vec<f64>),
    Table { path: PathBuf, potential: Potential },
}

impl PotentialSpec {
    pub fn potential(&self) -> Potential {
        match self {
            PotentialSpec::Poly(c) => Potential::polynomial(c.clone()).unwrap_or(Potential::Zero),
            PotentialSpec::Table { potential, .. } => potential.clone(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.potential().is_zero()
    }
}

impl fmt::Display for PotentialSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PotentialSpec::Poly(c) if c.iter().all(|&x| x == 0.0) => write!(f, "0"),
            PotentialSpec::Poly(c) => {
                let parts: Vec<String> = c.iter().map(|x| x.to_string()).collect();
                write!(f, "{}", parts.join(","))
            }
            PotentialSpec::Table { path, .. } => write!(f, "file:{}", path.display()),
        }
    }
}

/// One geodesic ball of a sweep: curvature, radius and optionally its own potential.
#[derive(Clone, Debug, PartialEq)]
pub struct BallCell {
    pub k: f64,
    pub r: f64,
    pub potential: Option<PotentialSpec>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub target: Kind,
    pub ns: Vec<usize>,
    pub ks: Vec<f64>,
    pub ds: Vec<f64>,
    pub balls: Vec<BallCell>,
    pub potentials: Vec<PotentialSpec>,
    /// Replace the `ns × ks × Ds × potentials` grid by this many random 1-D models.
    pub random_models: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub n: usize,
    pub k: f64,
    pub d: Option<f64>,
    pub r: Option<f64>,
    /// `V` of the experiment: the 1-D model potential for `solve1d`, the
    /// ball potential otherwise.
    pub potential: PotentialSpec,
    /// Companion 1-D model potential for ball experiments.
    pub model_potential: PotentialSpec,
    pub grid: usize,
    pub radial_cells: usize,
    pub order_grids: Vec<usize>,
    pub samples: usize,
    pub dt: f64,
    pub horizon: f64,
    /// `None` means `1e-3 R`.
    pub eps_couple: Option<f64>,
    pub trajectories: usize,
    pub max_halvings: u32,
    pub observe: Vec<f64>,
    pub seed: u64,
    pub check: Option<CoupleCheck>,
    pub mode: Mode,
    pub x0: Option<(f64, f64)>,
    pub y0: Option<(f64, f64)>,
    pub compare_tol: f64,
    pub oracle_h: f64,
    pub oracle_samples: u64,
    pub out: Option<PathBuf>,
    pub sweep: Option<SweepSpec>,
    /// Every key as written, for the report echo.
    pub source: BTreeMap<String, String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("malformed configuration:\n{}", join(.0))]
    Parse(Vec<ParseError>),
    #[error("invalid configuration:\n{}", .0.join("\n"))]
    Validation(Vec<String>),
}

fn join(errors: &[ParseError]) -> String {
    errors.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("\n")
}

const KEYS: &[&str] = &[
    "kind",
    "n",
    "k",
    "D",
    "R",
    "V",
    "V_file",
    "Vmodel",
    "Vmodel_file",
    "grid",
    "radial_cells",
    "order_grids",
    "samples",
    "dt",
    "T",
    "eps_couple",
    "trajectories",
    "max_halvings",
    "observe",
    "seed",
    "check",
    "mode",
    "x0",
    "y0",
    "compare_tol",
    "oracle_h",
    "oracle_samples",
    "out",
    "target",
    "ns",
    "ks",
    "Ds",
    "balls",
    "potentials",
    "random_models",
];

/// A number, optionally in units of `pi`: `1.5`, `pi`, `-pi/4`, `2*pi/3`.
pub fn parse_number(s: &str) -> Option<f64> {
    let s = s.trim();
    if let Ok(v) = s.parse::<f64>() {
        return v.is_finite().then_some(v);
    }
    let (num, den) = match s.split_once('/') {
        Some((a, b)) => (a.trim(), b.trim().parse::<f64>().ok()?),
        None => (s, 1.0),
    };
    let prefix = num.strip_suffix("pi")?.trim().trim_end_matches('*').trim();
    let factor = match prefix {
        "" => 1.0,
        "-" => -1.0,
        p => p.parse::<f64>().ok()?,
    };
    let v = factor * PI / den;
    v.is_finite().then_some(v)
}

fn parse_list<T>(s: &str, sep: char, item: impl Fn(&str) -> Option<T>) -> Option<Vec<T>> {
    if s.trim().is_empty() {
        return Some(Vec::new());
    }
    s.split(sep).map(|x| item(x.trim())).collect()
}

fn parse_poly(s: &str) -> Option<PotentialSpec> {
    let c = parse_list(s, ',', parse_number)?;
    (!c.is_empty()).then_some(PotentialSpec::Poly(c))
}

fn parse_pair(s: &str) -> Option<(f64, f64)> {
    match parse_list(s, ',', parse_number)?.as_slice() {
        [a, b] => Some((*a, *b)),
        _ => None,
    }
}

fn load_table(path: &str) -> Result<PotentialSpec, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {path}: {e}"))?;
    let potential = Potential::from_table(&text).map_err(|e| e.to_string())?;
    Ok(PotentialSpec::Table {
        path: PathBuf::from(path),
        potential,
    })
}

/// Ball cells `k:R[:V]`, `;`-separated, where `V` is a coefficient list.
fn parse_balls(s: &str) -> Option<Vec<BallCell>> {
    parse_list(s, ';', |cell| {
        let mut parts = cell.splitn(3, ':');
        let k = parse_number(parts.next()?)?;
        let r = parse_number(parts.next()?)?;
        let potential = match parts.next() {
            Some(v) => Some(parse_poly(v)?),
            None => None,
        };
        Some(BallCell { k, r, potential })
    })
}

/// Split the text into `(line, key, value)` triples.
fn tokens(text: &str) -> (Vec<(usize, String, String)>, Vec<ParseError>) {
    let mut out = Vec::new();
    let mut errors = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("");
        for tok in line.split_whitespace() {
            match tok.split_once('=') {
                Some((k, v)) if !k.is_empty() => out.push((i + 1, k.to_string(), v.to_string())),
                _ => errors.push(ParseError {
                    line: i + 1,
                    message: format!("expected key=value, found {tok:?}"),
                }),
            }
        }
    }
    (out, errors)
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let (toks, mut errors) = tokens(text);
    let mut seen: BTreeMap<String, (usize, String)> = BTreeMap::new();
    for (line, key, value) in toks {
        if !KEYS.contains(&key.as_str()) {
            errors.push(ParseError {
                line,
                message: format!("unknown key {key:?}"),
            });
        } else if let Some((first, _)) = seen.get(&key) {
            errors.push(ParseError {
                line,
                message: format!("duplicate key {key:?} (first set on line {first})"),
            });
        } else {
            seen.insert(key, (line, value));
        }
    }

    let mut fail = |key: &str, what: &str| {
        let line = seen.get(key).map_or(0, |e| e.0);
        errors.push(ParseError {
            line,
            message: format!("{key}: {what}"),
        });
    };
    macro_rules! get {
        ($key:expr, $parse:expr, $default:expr, $what:expr) => {
            match seen.get($key) {
                None => $default,
                Some((_, v)) => match $parse(v.as_str()) {
                    Some(x) => x,
                    None => {
                        fail($key, $what);
                        $default
                    }
                },
            }
        };
    }
    let int = |s: &str| s.parse::<usize>().ok();
    let kind = get!("kind", |s: &str| Kind::parse(s).map(Some), None, "expected solve1d, solveball, verify, couple or sweep");
    let n = get!("n", int, 2, "expected an integer");
    let k = get!("k", parse_number, 0.0, "expected a number");
    let d = get!("D", |s| parse_number(s).map(Some), None, "expected a number");
    let r = get!("R", |s| parse_number(s).map(Some), None, "expected a number");
    let v = get!("V", parse_poly, PotentialSpec::Poly(vec![0.0]), "expected comma-separated coefficients");
    let vmodel = get!("Vmodel", parse_poly, PotentialSpec::Poly(vec![0.0]), "expected comma-separated coefficients");
    let grid = get!("grid", int, DEFAULT_GRID, "expected an integer");
    let radial_cells = get!("radial_cells", int, DEFAULT_RADIAL_GRID, "expected an integer");
    let order_grids = get!("order_grids", |s| parse_list(s, ',', int), vec![513, 1025, 2049], "expected a list of integers");
    let samples = get!("samples", int, 10_000, "expected an integer");
    let dt = get!("dt", parse_number, 1e-3, "expected a number");
    let horizon = get!("T", parse_number, 1.0, "expected a number");
    let eps_couple = get!("eps_couple", |s| parse_number(s).map(Some), None, "expected a number");
    let trajectories = get!("trajectories", int, 1000, "expected an integer");
    let max_halvings = get!("max_halvings", |s: &str| s.parse::<u32>().ok(), 20, "expected an integer");
    let observe = get!("observe", |s| parse_list(s, ',', parse_number), Vec::new(), "expected a list of times");
    let seed = get!("seed", |s: &str| s.parse::<u64>().ok(), 0, "expected an unsigned integer");
    let check = get!("check", |s| CoupleCheck::parse(s).map(Some), None, "expected coupling, compare, supermartingale, feynman_kac, oracles or monitor");
    let mode = get!(
        "mode",
        |s| match s {
            "standard" => Some(Mode::Standard),
            "modified" => Some(Mode::Modified),
            _ => None,
        },
        Mode::Standard,
        "expected standard or modified"
    );
    let x0 = get!("x0", |s| parse_pair(s).map(Some), None, "expected r,theta");
    let y0 = get!("y0", |s| parse_pair(s).map(Some), None, "expected r,theta");
    let compare_tol = get!("compare_tol", parse_number, 1e-8, "expected a number");
    let oracle_h = get!("oracle_h", parse_number, 1e-4, "expected a number");
    let oracle_samples = get!("oracle_samples", |s: &str| s.parse::<u64>().ok(), 1_000_000, "expected an integer");
    let out = seen.get("out").map(|(_, v)| PathBuf::from(v));
    let target = get!("target", |s| Kind::parse(s).map(Some), None, "expected solve1d, solveball, verify or couple");
    let ns = get!("ns", |s| parse_list(s, ',', int), Vec::new(), "expected a list of integers");
    let ks = get!("ks", |s| parse_list(s, ',', parse_number), Vec::new(), "expected a list of numbers");
    let ds = get!("Ds", |s| parse_list(s, ',', parse_number), Vec::new(), "expected a list of numbers");
    let balls = get!("balls", parse_balls, Vec::new(), "expected k:R[:V] cells separated by ';'");
    let potentials = get!("potentials", |s| parse_list(s, ';', parse_poly), Vec::new(), "expected coefficient lists separated by ';'");
    let random_models = get!("random_models", int, 0, "expected an integer");

    let mut table = |key: &str, default: PotentialSpec| -> PotentialSpec {
        match seen.get(key) {
            None => default,
            Some((line, path)) => load_table(path).unwrap_or_else(|message| {
                errors.push(ParseError { line: *line, message });
                default
            }),
        }
    };
    let v = table("V_file", v);
    let vmodel = table("Vmodel_file", vmodel);
    for (a, b) in [("V", "V_file"), ("Vmodel", "Vmodel_file")] {
        if let (Some(_), Some((line, _))) = (seen.get(a), seen.get(b)) {
            errors.push(ParseError {
                line: *line,
                message: format!("{a} and {b} are mutually exclusive"),
            });
        }
    }
    if !errors.is_empty() {
        errors.sort_by_key(|e| e.line);
        return Err(ConfigError::Parse(errors));
    }

    let Some(kind) = kind else {
        return Err(ConfigError::Validation(vec!["kind is required".into()]));
    };
    let sweep = (kind == Kind::Sweep).then(|| SweepSpec {
        target: target.unwrap_or(Kind::Solve1d),
        ns,
        ks,
        ds,
        balls,
        potentials,
        random_models,
    });
    let cfg = ExperimentConfig {
        kind,
        n,
        k,
        d,
        r,
        potential: v,
        model_potential: vmodel,
        grid,
        radial_cells,
        order_grids,
        samples,
        dt,
        horizon,
        eps_couple,
        trajectories,
        max_halvings,
        observe,
        seed,
        check,
        mode,
        x0,
        y0,
        compare_tol,
        oracle_h,
        oracle_samples,
        out,
        sweep,
        source: seen.into_iter().map(|(k, (_, v))| (k, v)).collect(),
    };
    let problems = cfg.validate(target.is_some());
    if problems.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigError::Validation(problems))
    }
}

fn diameter_bound(k: f64, d: f64, what: &str, problems: &mut Vec<String>) {
    if !(d > 0.0) {
        problems.push(format!("{what} = {d} must be positive"));
    } else if k > 0.0 && d >= PI / k.sqrt() - 1e-9 {
        problems.push(format!(
            "{what} = {d} violates the bound D < pi/sqrt(k) = {} for k = {k}",
            PI / k.sqrt()
        ));
    }
}

fn radius_bound(k: f64, r: f64, problems: &mut Vec<String>) {
    if !(r > 0.0) {
        problems.push(format!("R = {r} must be positive"));
    } else if k > 0.0 && 2.0 * r > PI / k.sqrt() * (1.0 + 1e-12) {
        problems.push(format!(
            "R = {r} violates the bound 2R <= pi/sqrt(k) = {} for k = {k}",
            PI / k.sqrt()
        ));
    }
}

fn model_bounds(n: usize, k: f64, d: f64, v: &PotentialSpec, problems: &mut Vec<String>) {
    if n < 2 {
        problems.push(format!("n = {n} must be at least 2"));
    }
    diameter_bound(k, d, "D", problems);
    if !v.potential().is_even() {
        problems.push(format!("1-D model potential {v} is not even"));
    }
}

impl ExperimentConfig {
    fn validate(&self, has_target: bool) -> Vec<String> {
        let mut p = Vec::new();
        if has_target && self.kind != Kind::Sweep {
            p.push("target is only meaningful for kind=sweep".into());
        }
        if self.grid < gaplab_core::spectral1d::MIN_GRID {
            p.push(format!("grid = {} is below {}", self.grid, gaplab_core::spectral1d::MIN_GRID));
        }
        if self.radial_cells < 16 {
            p.push(format!("radial_cells = {} is below 16", self.radial_cells));
        }
        if !(self.dt > 0.0) {
            p.push(format!("dt = {} must be positive", self.dt));
        }
        if !(self.horizon >= 0.0) {
            p.push(format!("T = {} must be nonnegative", self.horizon));
        }
        if self.eps_couple.is_some_and(|e| !(e > 0.0)) {
            p.push("eps_couple must be positive".into());
        }
        if self.trajectories == 0 {
            p.push("trajectories must be at least 1".into());
        }
        if self.observe.iter().any(|&t| !(0.0..=self.horizon).contains(&t)) {
            p.push(format!("observation times must lie in [0, T = {}]", self.horizon));
        }
        match self.kind {
            Kind::Solve1d => match self.d {
                Some(d) => model_bounds(self.n, self.k, d, &self.potential, &mut p),
                None => p.push("solve1d needs D".into()),
            },
            Kind::Solveball | Kind::Verify | Kind::Couple => match self.r {
                Some(r) => {
                    radius_bound(self.k, r, &mut p);
                    if self.n != 2 {
                        p.push(format!("ball experiments are two-dimensional (n = {})", self.n));
                    }
                    if !self.model_potential.potential().is_even() {
                        p.push("Vmodel is not even".into());
                    }
                    if self.kind == Kind::Couple {
                        self.validate_couple(r, &mut p);
                    }
                }
                None => p.push(format!("{} needs R", self.kind.name())),
            },
            Kind::Sweep => self.validate_sweep(&mut p),
        }
        p
    }

    fn validate_couple(&self, r: f64, p: &mut Vec<String>) {
        let Some(check) = self.check else {
            p.push("couple needs check".into());
            return;
        };
        let inside = |name: &str, pos: Option<(f64, f64)>, p: &mut Vec<String>| match pos {
            None => p.push(format!("check {check:?} needs {name}")),
            Some((rr, _)) if !(0.0..r).contains(&rr) => p.push(format!("{name} radius {rr} is outside [0, R = {r})")),
            _ => {}
        };
        inside("x0", self.x0, p);
        if check != CoupleCheck::FeynmanKac {
            inside("y0", self.y0, p);
        }
        if check == CoupleCheck::Supermartingale && self.mode != Mode::Standard {
            p.push("the supermartingale check runs the standard pair".into());
        }
        if matches!(check, CoupleCheck::Oracles) && !(self.oracle_h > 0.0 && self.oracle_samples > 0) {
            p.push("oracle_h and oracle_samples must be positive".into());
        }
    }

    fn validate_sweep(&self, p: &mut Vec<String>) {
        let s = self.sweep.as_ref().expect("sweep spec");
        match s.target {
            Kind::Solve1d => {
                if s.random_models == 0 {
                    for &n in &s.ns {
                        for &k in &s.ks {
                            for &d in &s.ds {
                                for v in self.sweep_potentials() {
                                    model_bounds(n, k, d, &v, p);
                                }
                            }
                        }
                    }
                }
            }
            Kind::Solveball | Kind::Verify | Kind::Couple => {
                for cell in &s.balls {
                    radius_bound(cell.k, cell.r, p);
                }
                if s.target == Kind::Couple {
                    for cell in &s.balls {
                        self.validate_couple(cell.r, p);
                    }
                }
            }
            Kind::Sweep => p.push("a sweep cannot target sweep".into()),
        }
    }

    /// Potentials a sweep iterates over (the single `V` when none are listed).
    pub fn sweep_potentials(&self) -> Vec<PotentialSpec> {
        match &self.sweep {
            Some(s) if !s.potentials.is_empty() => s.potentials.clone(),
            _ => vec![self.potential.clone()],
        }
    }

    /// Canonical `key=value` text of the configuration as written, sorted by key.
    pub fn echo(&self) -> String {
        self.source.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.source.insert("seed".into(), seed.to_string());
        self
    }

    pub fn with_out(mut self, out: PathBuf) -> Self {
        self.source.insert("out".into(), out.display().to_string());
        self.out = Some(out);
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_with_pi() {
        assert_eq!(parse_number("pi/2"), Some(PI / 2.0));
        assert_eq!(parse_number("2*pi/3"), Some(2.0 * PI / 3.0));
        assert_eq!(parse_number("-pi"), Some(-PI));
        assert_eq!(parse_number("1e-3"), Some(1e-3));
        assert_eq!(parse_number("pie"), None);
        assert_eq!(parse_number("inf"), None);
    }

    #[test]
    fn ball_cells() {
        let cells = parse_balls("1:0.4; 0:1:0,0,1").unwrap();
        assert_eq!(cells.len(), 2);
        assert_eq!(cells[1].potential, Some(PotentialSpec::Poly(vec![0.0, 0.0, 1.0])));
        assert!(parse_balls("1").is_none());
    }
}
