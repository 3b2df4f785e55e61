//! The threshold `Λ = lim_{R→∞} λ₁(R)`, estimated from a sweep of ball radii.
//!
//! Every entry of the curve uses the same spacing (`nodes_per_unit` nodes per
//! unit radius), so the discrete curve is comparable across radii. The tail
//! is fitted to `λ₁(R) = Λ + c R^{-β}` through its successive differences,
//! which do not involve `Λ`.

use rayon::prelude::*;
use serde::Serialize;

use crate::eigen::{principal_weighted, EigenOptions};
use crate::error::{Error, Result};
use crate::grid::RadialGrid;
use crate::problem::Potential;

pub const DEFAULT_SCHEDULE: [f64; 7] = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0];
pub const DEFAULT_NODES_PER_UNIT: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurveEntry {
    pub radius: f64,
    pub lambda1: f64,
    pub residual: f64,
    pub nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LambdaCurve {
    pub dim: usize,
    pub nodes_per_unit: usize,
    pub entries: Vec<CurveEntry>,
}

impl LambdaCurve {
    pub fn last(&self) -> Option<&CurveEntry> {
        self.entries.last()
    }

    /// Index of the first entry that increases beyond the solver tolerance.
    fn first_increase(&self, tol: f64) -> Option<usize> {
        self.entries
            .windows(2)
            .position(|w| w[1].lambda1 > w[0].lambda1 + tol * w[0].lambda1)
            .map(|k| k + 1)
    }
}

pub fn lambda_curve(
    dim: usize,
    potential: &Potential,
    schedule: &[f64],
    nodes_per_unit: usize,
    opts: EigenOptions,
) -> Result<LambdaCurve> {
    if schedule.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Precondition(
            "radius schedule must be strictly increasing".into(),
        ));
    }
    if schedule.is_empty() {
        return Err(Error::Precondition("radius schedule is empty".into()));
    }
    let entries = schedule
        .par_iter()
        .map(|&radius| {
            let grid = RadialGrid::with_resolution(dim, radius, nodes_per_unit)?;
            let res = principal_weighted(&grid, potential, opts)?;
            Ok(CurveEntry {
                radius,
                lambda1: res.lambda1,
                residual: res.residual,
                nodes: grid.len(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let curve = LambdaCurve {
        dim,
        nodes_per_unit,
        entries,
    };
    if let Some(k) = curve.first_increase(opts.tol) {
        return Err(Error::ResolutionFailure {
            radius: curve.entries[k].radius,
            previous: curve.entries[k - 1].lambda1,
            current: curve.entries[k].lambda1,
        });
    }
    Ok(curve)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LambdaEstimate {
    pub value: f64,
    pub low: f64,
    pub high: f64,
    pub model: String,
    pub beta: f64,
    pub amplitude: f64,
    pub fit_error: f64,
    /// Change of the estimate when the tail window ends one entry earlier.
    pub drift: Option<f64>,
    pub tail_points: usize,
    /// True when the power-law fit failed and the estimate is the last value.
    pub fallback: bool,
}

impl LambdaEstimate {
    pub fn width(&self) -> f64 {
        self.high - self.low
    }
}

const TAIL: usize = 4;

pub fn estimate_big_lambda(curve: &LambdaCurve) -> Result<LambdaEstimate> {
    let n = curve.entries.len();
    if n < 4 {
        return Err(Error::Precondition(format!(
            "need at least 4 curve entries to extrapolate, got {n}"
        )));
    }
    if let Some(k) = curve.first_increase(0.0) {
        return Err(Error::ResolutionFailure {
            radius: curve.entries[k].radius,
            previous: curve.entries[k - 1].lambda1,
            current: curve.entries[k].lambda1,
        });
    }
    let tail = &curve.entries[n - TAIL..];
    let last = tail[TAIL - 1].lambda1;
    let fallback = LambdaEstimate {
        value: last,
        low: 0.0,
        high: last,
        model: "last value".into(),
        beta: f64::NAN,
        amplitude: f64::NAN,
        fit_error: f64::NAN,
        drift: None,
        tail_points: TAIL,
        fallback: true,
    };

    let Some(fit) = fit_tail(tail) else {
        return Ok(fallback);
    };
    // Moving the tail window one entry outward changes the estimate by about
    // the extrapolation error itself; the fit residual alone is optimistic.
    let drift = (n > TAIL)
        .then(|| fit_tail(&curve.entries[n - TAIL - 1..n - 1]))
        .flatten()
        .map(|prev| (fit.value - prev.value).abs());
    let value = fit.value.clamp(0.0, last);
    let spread = fit.fit_error.max(drift.unwrap_or(0.0));
    Ok(LambdaEstimate {
        value,
        low: (value - spread).max(0.0),
        high: last,
        model: "lambda1(R) = Lambda + c R^-beta".into(),
        beta: fit.beta,
        amplitude: fit.amplitude,
        fit_error: fit.fit_error,
        drift,
        tail_points: TAIL,
        fallback: false,
    })
}

struct TailFit {
    value: f64,
    beta: f64,
    amplitude: f64,
    fit_error: f64,
}

fn fit_tail(tail: &[CurveEntry]) -> Option<TailFit> {
    let radii: Vec<f64> = tail.iter().map(|e| e.radius).collect();
    let diffs: Vec<f64> = tail.windows(2).map(|w| w[0].lambda1 - w[1].lambda1).collect();
    if diffs.iter().any(|&d| !(d > 0.0)) {
        return None;
    }
    let log_d: Vec<f64> = diffs.iter().map(|d| d.ln()).collect();
    // For a given β the best log c is the mean offset; minimize over β.
    let misfit = |beta: f64| -> (f64, f64) {
        let offsets: Vec<f64> = (0..diffs.len())
            .map(|k| log_d[k] - (radii[k].powf(-beta) - radii[k + 1].powf(-beta)).ln())
            .collect();
        let log_c = offsets.iter().sum::<f64>() / offsets.len() as f64;
        let sse = offsets.iter().map(|o| (o - log_c).powi(2)).sum();
        (sse, log_c)
    };
    let (beta_lo, beta_hi) = (1e-3, 8.0);
    let beta = golden_section(|b| misfit(b).0, beta_lo, beta_hi, 1e-10);
    if !beta.is_finite() || beta <= 2.0 * beta_lo || beta >= beta_hi * 0.999 {
        return None;
    }
    let amplitude = misfit(beta).1.exp();
    let limits: Vec<f64> = tail
        .iter()
        .map(|e| e.lambda1 - amplitude * e.radius.powf(-beta))
        .collect();
    let value = limits.iter().sum::<f64>() / limits.len() as f64;
    let fit_error = limits.iter().map(|l| (l - value).abs()).fold(0.0, f64::max);
    value.is_finite().then_some(TailFit {
        value,
        beta,
        amplitude,
        fit_error,
    })
}

fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while b - a > tol * (1.0 + a.abs()) {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        }
    }
    0.5 * (a + b)
}
