//! Sample moments and a weighted exponential fit.

use serde::{Deserialize, Serialize};

/// Running mean and variance (Welford). `merge` combines partial results, so
/// chunked parallel reductions give the same answer for a fixed chunking.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Moments {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Moments) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = (self.count + other.count) as f64;
        let delta = other.mean - self.mean;
        self.mean += delta * other.count as f64 / n;
        self.m2 += other.m2 + delta * delta * (self.count as f64) * (other.count as f64) / n;
        self.count += other.count;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            return f64::NAN;
        }
        self.m2 / (self.count - 1) as f64
    }

    pub fn stderr(&self) -> f64 {
        (self.variance() / self.count as f64).sqrt()
    }

    pub fn estimate(&self) -> Estimate {
        Estimate {
            mean: self.mean,
            stderr: self.stderr(),
            count: self.count,
        }
    }
}

impl FromIterator<f64> for Moments {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut m = Moments::new();
        for x in iter {
            m.push(x);
        }
        m
    }
}

/// A Monte-Carlo mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub count: u64,
}

impl Estimate {
    /// `|mean - target| <= z * stderr`.
    pub fn agrees_with(&self, target: f64, z: f64) -> bool {
        (self.mean - target).abs() <= z * self.stderr
    }
}

/// `y ≈ A exp(-rate t)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpFit {
    pub rate: f64,
    pub rate_stderr: f64,
    pub amplitude: f64,
}

/// Weighted least squares of `log y` against `t`, with `se(log y) = se/y`.
/// Points with nonpositive `y` or nonpositive `se` are dropped; needs two points.
pub fn fit_exponential(t: &[f64], y: &[f64], se: &[f64]) -> Option<ExpFit> {
    let (mut sw, mut st, mut sl, mut stt, mut stl) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let mut used = 0;
    for i in 0..t.len() {
        if !(y[i] > 0.0) || !(se[i] > 0.0) {
            continue;
        }
        let w = (y[i] / se[i]).powi(2);
        let l = y[i].ln();
        sw += w;
        st += w * t[i];
        sl += w * l;
        stt += w * t[i] * t[i];
        stl += w * t[i] * l;
        used += 1;
    }
    if used < 2 {
        return None;
    }
    let det = sw * stt - st * st;
    if !(det > 0.0) {
        return None;
    }
    let slope = (sw * stl - st * sl) / det;
    let intercept = (stt * sl - st * stl) / det;
    Some(ExpFit {
        rate: -slope,
        rate_stderr: (sw / det).sqrt(),
        amplitude: intercept.exp(),
    })
}
