//! Scalar potentials: polynomials in one variable or sampled tables.

use serde::{Deserialize, Serialize};

use crate::error::{GapError, Result};
use crate::interp::CubicSpline;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Potential {
    Zero,
    /// `sum_j c[j] x^j`.
    Polynomial(Vec<f64>),
    /// Cubic interpolation of `(x, V)` samples. A table starting at `x >= 0`
    /// is read as a function of `|x|`.
    Samples(CubicSpline),
}

impl Potential {
    pub fn polynomial(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(GapError::Domain("non-finite polynomial coefficient".into()));
        }
        if coeffs.iter().all(|&c| c == 0.0) {
            return Ok(Potential::Zero);
        }
        Ok(Potential::Polynomial(coeffs))
    }

    pub fn samples(x: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        Ok(Potential::Samples(CubicSpline::new(x, v)?))
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Potential::Zero)
    }

    /// Whether the potential is an even function of its argument.
    pub fn is_even(&self) -> bool {
        match self {
            Potential::Zero => true,
            Potential::Polynomial(c) => c.iter().skip(1).step_by(2).all(|&v| v == 0.0),
            Potential::Samples(s) => {
                let (lo, hi) = s.domain();
                if lo >= 0.0 {
                    return true;
                }
                // Tabulated on both sides: compare mirrored knots.
                let knots = s.knots();
                let vals = s.values();
                knots.len() == vals.len()
                    && knots
                        .iter()
                        .zip(knots.iter().rev())
                        .all(|(a, b)| (a + b).abs() < 1e-12 * (1.0 + hi.abs()))
                    && vals
                        .iter()
                        .zip(vals.iter().rev())
                        .all(|(a, b)| (a - b).abs() < 1e-12)
            }
        }
    }

    /// Value and derivative at `x`.
    pub fn eval_with_derivative(&self, x: f64) -> (f64, f64) {
        match self {
            Potential::Zero => (0.0, 0.0),
            Potential::Polynomial(c) => {
                let mut v = 0.0;
                let mut d = 0.0;
                for &cj in c.iter().rev() {
                    d = d * x + v;
                    v = v * x + cj;
                }
                (v, d)
            }
            Potential::Samples(s) => {
                if s.domain().0 >= 0.0 && x < 0.0 {
                    let (v, d) = s.eval_with_derivative(-x);
                    (v, -d)
                } else {
                    s.eval_with_derivative(x)
                }
            }
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.eval_with_derivative(x).0
    }

    pub fn derivative(&self, x: f64) -> f64 {
        self.eval_with_derivative(x).1
    }

    /// Parse a whitespace- or comma-separated two-column table.
    pub fn from_table(text: &str) -> Result<Self> {
        let mut x = Vec::new();
        let mut v = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .collect();
            if cols.len() != 2 {
                return Err(GapError::Domain(format!(
                    "potential table line {}: expected two columns",
                    lineno + 1
                )));
            }
            let parse = |s: &str| {
                s.parse::<f64>().map_err(|e| {
                    GapError::Domain(format!("potential table line {}: {e}", lineno + 1))
                })
            };
            x.push(parse(cols[0])?);
            v.push(parse(cols[1])?);
        }
        Self::samples(x, v)
    }
}
