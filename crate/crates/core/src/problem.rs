//! Problem data: the sign-changing potential `V` and the absorption term `f`,
//! with sampling-based checks of the standing hypotheses.
//!
//! The hypotheses are analytic statements, so every check here samples on a
//! log-spaced grid and reports what it witnessed. Nothing is proved.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::RadialGrid;

type Scalar = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayBound {
    /// `A` in `V⁺(r) <= A r^{-2-α}`.
    pub amplitude: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum PotentialFamily {
    /// `a (1+r²)^{-p} - b (1+r²)^{-q}`
    RationalDecay {
        a: f64,
        p: f64,
        b: f64,
        q: f64,
    },
    /// `(c - r²) e^{-r²}`
    GaussianBump {
        c: f64,
    },
    Constant {
        value: f64,
    },
    /// Piecewise linear through `(r, V)` pairs, constant beyond the ends.
    Tabulated {
        points: usize,
    },
    Custom {
        name: String,
    },
}

/// A radial potential `V(r)`.
#[derive(Clone)]
pub struct Potential {
    family: PotentialFamily,
    eval: Scalar,
    sup_norm: f64,
    decay_bound: Option<DecayBound>,
}

impl fmt::Debug for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Potential")
            .field("family", &self.family)
            .field("sup_norm", &self.sup_norm)
            .field("decay_bound", &self.decay_bound)
            .finish()
    }
}

impl Potential {
    fn from_parts(family: PotentialFamily, eval: Scalar) -> Self {
        let sup_norm = estimate_sup_norm(eval.as_ref());
        Self {
            family,
            eval,
            sup_norm,
            decay_bound: None,
        }
    }

    pub fn rational_decay(a: f64, p: f64, b: f64, q: f64) -> Self {
        Self::from_parts(
            PotentialFamily::RationalDecay { a, p, b, q },
            Arc::new(move |r| {
                let s = 1.0 + r * r;
                a * s.powf(-p) - b * s.powf(-q)
            }),
        )
    }

    pub fn gaussian_bump(c: f64) -> Self {
        Self::from_parts(
            PotentialFamily::GaussianBump { c },
            Arc::new(move |r| (c - r * r) * (-r * r).exp()),
        )
    }

    pub fn constant(value: f64) -> Self {
        let mut v = Self::from_parts(PotentialFamily::Constant { value }, Arc::new(move |_| value));
        v.sup_norm = value.abs();
        v
    }

    /// Linear interpolation through `(radii[k], values[k])`; radii must be
    /// strictly increasing and nonnegative.
    pub fn tabulated(radii: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if radii.len() != values.len() || radii.len() < 2 {
            return Err(Error::Table(format!(
                "need at least two (r, V) rows of equal length, got {} radii and {} values",
                radii.len(),
                values.len()
            )));
        }
        if radii[0] < 0.0 || radii.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Table("radii must be nonnegative and strictly increasing".into()));
        }
        if values.iter().chain(&radii).any(|v| !v.is_finite()) {
            return Err(Error::Table("table contains non-finite entries".into()));
        }
        let sup = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let n = radii.len();
        let eval: Scalar = Arc::new(move |r| {
            if r <= radii[0] {
                return values[0];
            }
            if r >= radii[n - 1] {
                return values[n - 1];
            }
            let k = radii.partition_point(|&x| x <= r);
            let (r0, r1) = (radii[k - 1], radii[k]);
            let t = (r - r0) / (r1 - r0);
            values[k - 1] * (1.0 - t) + values[k] * t
        });
        Ok(Self {
            family: PotentialFamily::Tabulated { points: n },
            eval,
            sup_norm: sup,
            decay_bound: None,
        })
    }

    pub fn custom(name: impl Into<String>, eval: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::from_parts(PotentialFamily::Custom { name: name.into() }, Arc::new(eval))
    }

    pub fn with_decay_bound(mut self, amplitude: f64, alpha: f64) -> Self {
        self.decay_bound = Some(DecayBound { amplitude, alpha });
        self
    }

    /// Overrides the sampled estimate of `‖V‖_∞`.
    pub fn with_sup_norm(mut self, sup_norm: f64) -> Self {
        self.sup_norm = sup_norm;
        self
    }

    pub fn family(&self) -> &PotentialFamily {
        &self.family
    }

    pub fn decay_bound(&self) -> Option<DecayBound> {
        self.decay_bound
    }

    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    pub fn value(&self, r: f64) -> f64 {
        (self.eval)(r)
    }

    pub fn positive_part(&self, r: f64) -> f64 {
        self.value(r).max(0.0)
    }

    pub fn negative_part(&self, r: f64) -> f64 {
        (-self.value(r)).max(0.0)
    }

    pub fn sample(&self, grid: &RadialGrid) -> Vec<f64> {
        grid.sample(|r| self.value(r))
    }
}

fn estimate_sup_norm(v: &(dyn Fn(f64) -> f64 + Send + Sync)) -> f64 {
    let linear = (0..=20_000).map(|k| k as f64 * 1e-3);
    let logs = CheckGrid::new(1e-4, 1e4, 2001).points();
    linear.chain(logs).map(|r| v(r).abs()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum AbsorptionFamily {
    /// `u^p`
    Power {
        p: f64,
    },
    /// `u / (1+u)`
    Saturating,
    Custom {
        name: String,
    },
}

/// The absorption term `f` together with its derivative.
#[derive(Clone)]
pub struct AbsorptionTerm {
    family: AbsorptionFamily,
    f: Scalar,
    df: Scalar,
}

impl fmt::Debug for AbsorptionTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AbsorptionTerm").field("family", &self.family).finish()
    }
}

impl AbsorptionTerm {
    pub fn power(p: f64) -> Self {
        Self {
            family: AbsorptionFamily::Power { p },
            f: if p == 2.0 {
                Arc::new(|u: f64| u * u)
            } else {
                Arc::new(move |u: f64| u.powf(p))
            },
            df: if p == 2.0 {
                Arc::new(|u: f64| 2.0 * u)
            } else {
                Arc::new(move |u: f64| p * u.powf(p - 1.0))
            },
        }
    }

    pub fn saturating() -> Self {
        Self {
            family: AbsorptionFamily::Saturating,
            f: Arc::new(|u| u / (1.0 + u)),
            df: Arc::new(|u| 1.0 / ((1.0 + u) * (1.0 + u))),
        }
    }

    pub fn custom(
        name: impl Into<String>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        df: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            family: AbsorptionFamily::Custom { name: name.into() },
            f: Arc::new(f),
            df: Arc::new(df),
        }
    }

    pub fn family(&self) -> &AbsorptionFamily {
        &self.family
    }

    pub fn value(&self, u: f64) -> f64 {
        (self.f)(u)
    }

    pub fn derivative(&self, u: f64) -> f64 {
        (self.df)(u)
    }

    /// Sampled `sup_{[0, upper]} f'`.
    pub fn max_derivative(&self, upper: f64) -> f64 {
        (0..=1000)
            .map(|k| self.derivative(upper * k as f64 / 1000.0))
            .filter(|d| d.is_finite())
            .fold(0.0, f64::max)
    }
}

/// Log-spaced sample points on `[r_min, r_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CheckGrid {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl CheckGrid {
    pub fn new(min: f64, max: f64, count: usize) -> Self {
        Self { min, max, count }
    }

    pub fn points(&self) -> impl Iterator<Item = f64> {
        let (lo, hi, n) = (self.min.ln(), self.max.ln(), self.count.max(2));
        (0..n).map(move |k| (lo + (hi - lo) * k as f64 / (n - 1) as f64).exp())
    }
}

impl Default for CheckGrid {
    fn default() -> Self {
        Self::new(1e-3, 1e3, 1201)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    NotCheckable,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisCheck {
    pub name: String,
    pub status: CheckStatus,
    pub detail: String,
    pub witness: Option<f64>,
}

impl HypothesisCheck {
    fn new(name: &str, status: CheckStatus, detail: String, witness: Option<f64>) -> Self {
        Self {
            name: name.to_string(),
            status,
            detail,
            witness,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub subject: String,
    pub check_grid: CheckGrid,
    pub checks: Vec<HypothesisCheck>,
}

impl ValidationReport {
    pub fn all_checkable_pass(&self) -> bool {
        self.checks.iter().all(|c| c.status != CheckStatus::Fail)
    }

    pub fn get(&self, name: &str) -> Option<&HypothesisCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &HypothesisCheck> {
        self.checks.iter().filter(|c| c.status == CheckStatus::Fail)
    }
}

pub const CHECK_BOUNDED: &str = "V bounded";
pub const CHECK_SPLIT: &str = "V = V+ - V-";
pub const CHECK_POSITIVE_PART: &str = "V+ nonzero";
pub const CHECK_DECAY: &str = "V+ <= A r^(-2-alpha)";
pub const CHECK_LN2: &str = "V1 in L^(N/2)";
pub const CHECK_ORIGIN: &str = "|x|^(2(N-1)/N) V2 -> 0 at origin";

pub const CHECK_F_ORIGIN: &str = "f(0) = f'(0) = 0";
pub const CHECK_F_NONNEGATIVE: &str = "f >= 0";
pub const CHECK_F_LIMINF: &str = "liminf f'(u)/u > 0";
pub const CHECK_F_MONOTONE: &str = "f(u)/u increasing";
pub const CHECK_F_GROWTH: &str = "lim f(u)/u > ||V||_inf";

pub fn validate_potential(potential: &Potential, grid: CheckGrid) -> ValidationReport {
    use CheckStatus::*;
    let points: Vec<f64> = grid.points().collect();
    let values: Vec<f64> = points.iter().map(|&r| potential.value(r)).collect();
    let mut checks = Vec::new();

    let finite = values.iter().all(|v| v.is_finite()) && potential.sup_norm().is_finite();
    let sampled_sup = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    checks.push(HypothesisCheck::new(
        CHECK_BOUNDED,
        if finite { Pass } else { Fail },
        format!("sup norm estimate {:.6e}", potential.sup_norm().max(sampled_sup)),
        Some(potential.sup_norm().max(sampled_sup)),
    ));

    let split_ok = points.iter().zip(&values).all(|(&r, &v)| {
        let (p, n) = (potential.positive_part(r), potential.negative_part(r));
        p - n == v && p * n == 0.0
    });
    checks.push(HypothesisCheck::new(
        CHECK_SPLIT,
        if split_ok { Pass } else { Fail },
        "pointwise on the check grid".into(),
        None,
    ));

    let max_pos = values.iter().fold(0.0_f64, |m, &v| m.max(v));
    checks.push(HypothesisCheck::new(
        CHECK_POSITIVE_PART,
        if max_pos > 0.0 { Pass } else { Fail },
        format!("max V+ on check grid {max_pos:.6e}"),
        Some(max_pos),
    ));

    match potential.decay_bound() {
        Some(DecayBound { amplitude, alpha }) => {
            let worst = points
                .iter()
                .zip(&values)
                .map(|(&r, &v)| v.max(0.0) * r.powf(2.0 + alpha))
                .fold(0.0, f64::max);
            let margin = amplitude - worst;
            let ok = amplitude > 0.0 && alpha > 0.0 && margin >= -1e-12 * amplitude;
            checks.push(HypothesisCheck::new(
                CHECK_DECAY,
                if ok { Pass } else { Fail },
                format!("max V+ r^(2+alpha) = {worst:.6e} against A = {amplitude:.6e} (alpha = {alpha})"),
                Some(margin),
            ));
        }
        None => checks.push(HypothesisCheck::new(
            CHECK_DECAY,
            NotCheckable,
            "no decay constants supplied".into(),
            None,
        )),
    }

    checks.push(HypothesisCheck::new(
        CHECK_LN2,
        NotCheckable,
        "the split V+ = V1 + V2 is not materialized; L^(N/2) membership cannot be sampled".into(),
        None,
    ));

    let near_origin: Vec<f64> = CheckGrid::new(1e-8, grid.min.max(1e-6), 50)
        .points()
        .map(|r| potential.value(r))
        .collect();
    let bounded_near_origin = near_origin.iter().all(|v| v.is_finite());
    checks.push(HypothesisCheck::new(
        CHECK_ORIGIN,
        if bounded_near_origin { Pass } else { Fail },
        "V bounded near the origin, so the condition holds with V2 = 0 there".into(),
        near_origin.iter().map(|v| v.abs()).reduce(f64::max),
    ));

    ValidationReport {
        subject: format!("{:?}", potential.family()),
        check_grid: grid,
        checks,
    }
}

pub fn validate_absorption(f: &AbsorptionTerm, sup_norm: f64) -> ValidationReport {
    use CheckStatus::*;
    let grid = CheckGrid::new(1e-6, 1e6, 241);
    let mut checks = Vec::new();

    let (f0, df0) = (f.value(0.0), f.derivative(0.0));
    let origin_ok = f0 == 0.0 && df0 == 0.0;
    checks.push(HypothesisCheck::new(
        CHECK_F_ORIGIN,
        if origin_ok { Pass } else { Fail },
        format!("f(0) = {f0:e}, f'(0) = {df0:e}"),
        None,
    ));

    let nonneg = grid.points().all(|u| f.value(u) >= 0.0);
    checks.push(HypothesisCheck::new(
        CHECK_F_NONNEGATIVE,
        if nonneg { Pass } else { Fail },
        "on the check grid".into(),
        None,
    ));

    // liminf f'(u)/u > 0: bounded below on small u and not trending to zero.
    let small: Vec<(f64, f64)> = CheckGrid::new(1e-8, 1e-2, 61)
        .points()
        .map(|u| (u.ln(), f.derivative(u) / u))
        .collect();
    let a = small.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let liminf_ok = if a.is_finite() && a > 0.0 {
        let logs: Vec<(f64, f64)> = small.iter().map(|&(x, y)| (x, y.ln())).collect();
        least_squares_slope(&logs) <= 0.05
    } else {
        false
    };
    checks.push(HypothesisCheck::new(
        CHECK_F_LIMINF,
        if liminf_ok { Pass } else { Fail },
        format!("min f'(u)/u on [1e-8, 1e-2] is {a:.6e}"),
        Some(a),
    ));

    let ratios: Vec<f64> = grid.points().map(|u| f.value(u) / u).collect();
    let increasing = ratios.windows(2).all(|w| w[1] > w[0]);
    checks.push(HypothesisCheck::new(
        CHECK_F_MONOTONE,
        if increasing { Pass } else { Fail },
        "strict increase on the check grid".into(),
        None,
    ));

    match supersolution_bound(f, sup_norm) {
        Ok(m) => checks.push(HypothesisCheck::new(
            CHECK_F_GROWTH,
            Pass,
            format!("f(M)/M = {:.6e} > {sup_norm:.6e} at M = {m}", f.value(m) / m),
            Some(m),
        )),
        Err(_) => checks.push(HypothesisCheck::new(
            CHECK_F_GROWTH,
            Fail,
            format!("f(M)/M <= {sup_norm:.6e} for every M = 2^k, k <= 64"),
            None,
        )),
    }

    ValidationReport {
        subject: format!("{:?}", f.family()),
        check_grid: grid,
        checks,
    }
}

/// Smallest `M` in `1, 2, 4, ..., 2^64` with `f(M)/M > sup_norm`; the constant
/// `M` is then a supersolution of the ball problem.
pub fn supersolution_bound(f: &AbsorptionTerm, sup_norm: f64) -> Result<f64> {
    (0..=64)
        .map(|k| 2f64.powi(k))
        .find(|&m| f.value(m) / m > sup_norm)
        .ok_or(Error::SupersolutionSearchExhausted { sup_norm })
}

pub(crate) fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}
