//! Principal eigenpairs of the two symmetric pencils on a radial grid:
//!
//! * weighted: `A φ = λ B φ`, `B = diag(w_i V(r_i))` possibly indefinite,
//!   smallest positive `λ` (the Rayleigh minimum of `a(u,u)` over `b(u,u) = 1`);
//! * shifted: `(A - λ B) e = μ W e`, least `μ`.
//!
//! `A` is SPD, so the weighted problem is solved through its banded factor:
//! `λ₁ = 1/μ_max` for `C = L⁻¹ B L⁻ᵀ`, found by power iteration and then
//! polished by inverse iteration at a shift certified to lie below `λ₁`
//! (all pivots of `A - σB` positive ⇔ no positive pencil eigenvalue below σ).

use serde::Serialize;

use crate::banded::{Ldl, SymTridiagonal};
use crate::error::{Error, Result};
use crate::grid::{RadialGrid, StiffnessForm};
use crate::problem::Potential;

pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenOptions {
    pub tol: f64,
    /// Defaults to `50 * M` when `None`.
    pub max_iter: Option<usize>,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_iter: None,
        }
    }
}

impl EigenOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, max_iter: None }
    }

    fn budget(&self, m: usize) -> usize {
        self.max_iter.unwrap_or(50 * m).max(10)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightedEigenResult {
    pub lambda1: f64,
    /// Node values of φ₁, scaled so that `b(φ₁, φ₁) = 1`.
    pub phi1: Vec<f64>,
    pub normalization: f64,
    pub iterations: usize,
    pub residual: f64,
    /// Estimate of `λ₁/λ₂` from the power phase, when it ran long enough to
    /// tell. Values close to 1 flag a (near-)degenerate principal eigenvalue.
    pub gap_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShiftedEigenResult {
    pub lambda: f64,
    pub mu1: f64,
    /// Normalized to `max e₁ = 1`.
    pub e1: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

/// The assembled pencil `(A, B, W)` on one grid.
#[derive(Debug, Clone)]
pub struct Pencil {
    stiffness: SymTridiagonal,
    weight: Vec<f64>,
    mass: Vec<f64>,
}

impl Pencil {
    pub fn new(grid: &RadialGrid, potential: &Potential) -> Self {
        let form = StiffnessForm::new(std::sync::Arc::new(grid.clone()));
        let mass = grid.quad_weights().to_vec();
        let weight = grid
            .nodes()
            .iter()
            .zip(&mass)
            .map(|(&r, &w)| w * potential.value(r))
            .collect();
        Self {
            stiffness: form.matrix(),
            weight,
            mass,
        }
    }

    pub fn stiffness(&self) -> &SymTridiagonal {
        &self.stiffness
    }

    /// Diagonal of `B`.
    pub fn weight(&self) -> &[f64] {
        &self.weight
    }

    /// Diagonal of `W`.
    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    /// `A - λB`.
    pub fn shifted(&self, lambda: f64) -> SymTridiagonal {
        let d: Vec<f64> = self.weight.iter().map(|b| -lambda * b).collect();
        self.stiffness.add_diagonal(&d)
    }

    /// Number of positive pencil eigenvalues strictly below `sigma > 0`.
    pub fn count_below(&self, sigma: f64) -> Result<usize> {
        Ok(self.shifted(sigma).ldl()?.negative_pivots())
    }

    fn rayleigh(&self, x: &[f64]) -> (f64, f64) {
        let ax = self.stiffness.matvec(x);
        let a: f64 = x.iter().zip(&ax).map(|(p, q)| p * q).sum();
        let b: f64 = x.iter().zip(&self.weight).map(|(p, w)| w * p * p).sum();
        (a, b)
    }
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(p, q)| p * q).sum()
}

fn norm_inf(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Scales `x` so its largest-magnitude entry is exactly `+1`.
fn normalize_signed(x: &mut [f64]) {
    let (mut best, mut val) = (0.0, 0.0);
    for &v in x.iter() {
        if v.abs() > best {
            best = v.abs();
            val = v;
        }
    }
    if val != 0.0 {
        x.iter_mut().for_each(|v| *v /= val);
    }
}

struct PowerOutcome {
    mu: f64,
    vector: Vec<f64>,
    iterations: usize,
    converged: bool,
    gap_ratio: Option<f64>,
}

/// Power iteration on `A⁻¹B + shift·I` (self-adjoint in the `A` inner product).
fn power_phase(
    chol: &Ldl,
    stiffness: &SymTridiagonal,
    weight: &[f64],
    shift: f64,
    start: &[f64],
    budget: usize,
) -> PowerOutcome {
    const COARSE: f64 = 1e-9;
    let mut x = start.to_vec();
    normalize_signed(&mut x);
    let mut mu_prev = f64::NAN;
    let mut deltas: Vec<f64> = Vec::new();
    for k in 1..=budget {
        let mut y: Vec<f64> = x.iter().zip(weight).map(|(p, w)| p * w).collect();
        chol.solve_in_place(&mut y);
        y.iter_mut().zip(&x).for_each(|(v, p)| *v += shift * p);
        normalize_signed(&mut y);
        let ay = stiffness.matvec(&y);
        let mu = dot(&y, &y.iter().zip(weight).map(|(p, w)| p * w).collect::<Vec<_>>()) / dot(&y, &ay);
        let change = y.iter().zip(&x).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        x = y;
        if mu_prev.is_finite() {
            deltas.push((mu - mu_prev).abs());
        }
        let rel = (mu - mu_prev).abs() / mu.abs().max(f64::MIN_POSITIVE);
        mu_prev = mu;
        if rel < COARSE && change < 1e-5 {
            let gap_ratio = gap_from_deltas(&deltas);
            return PowerOutcome {
                mu,
                vector: x,
                iterations: k,
                converged: true,
                gap_ratio,
            };
        }
    }
    PowerOutcome {
        mu: mu_prev,
        vector: x,
        iterations: budget,
        converged: false,
        gap_ratio: None,
    }
}

fn gap_from_deltas(deltas: &[f64]) -> Option<f64> {
    // The Rayleigh quotient error shrinks like (μ₂/μ₁)^{2k}.
    let usable: Vec<f64> = deltas.iter().copied().filter(|d| *d > 1e-13).collect();
    if usable.len() < 3 {
        return None;
    }
    let n = usable.len();
    let r = (usable[n - 1] / usable[n - 2]).sqrt();
    (r.is_finite() && r < 1.0).then_some(r)
}

/// Principal eigenpair `(λ₁(R), φ₁)` of `-Δφ = λ V φ` on the grid's ball.
pub fn principal_weighted(grid: &RadialGrid, potential: &Potential, opts: EigenOptions) -> Result<WeightedEigenResult> {
    let pencil = Pencil::new(grid, potential);
    solve_weighted(&pencil, opts)
}

pub fn solve_weighted(pencil: &Pencil, opts: EigenOptions) -> Result<WeightedEigenResult> {
    let m = pencil.mass.len();
    let weight = &pencil.weight;
    if weight.iter().all(|&b| b <= 0.0) {
        return Err(Error::NoPositiveEigenvalue);
    }
    let budget = opts.budget(m);
    let a = &pencil.stiffness;
    let chol = a.cholesky()?;

    // Start from the positive part of the weight plus a smooth positive floor.
    let start: Vec<f64> = weight
        .iter()
        .zip(&pencil.mass)
        .map(|(b, w)| (b / w).max(0.0) + 1e-3)
        .collect();

    let power = power_phase(&chol, a, weight, 0.0, &start, budget / 2);
    let mut used = power.iterations;
    let (sigma, gap_ratio) = if power.converged && power.mu > 0.0 {
        // Certified shift below λ₁.
        let sigma = (1.0 / power.mu) * (1.0 - 1e-6);
        if pencil.count_below(sigma)? > 0 {
            (bisect_below_principal(pencil, sigma, &mut used)?, power.gap_ratio)
        } else {
            (sigma, power.gap_ratio)
        }
    } else {
        // The negative part dominates the spectrum of A⁻¹B and the power
        // phase cannot separate λ₁; bracket it by inertia counts instead.
        let mut hi = 1.0_f64;
        while pencil.count_below(hi)? == 0 {
            hi *= 2.0;
            used += 1;
            if !hi.is_finite() {
                return Err(Error::NoPositiveEigenvalue);
            }
        }
        (bisect_below_principal(pencil, hi, &mut used)?, None)
    };
    let estimate = sigma;
    let factor = pencil.shifted(sigma).cholesky()?;

    let a_norm = a.norm_inf();
    let b_norm = norm_inf(weight);
    let mut x = if gap_ratio.is_some() || power.converged {
        power.vector
    } else {
        start
    };
    let mut lambda_prev = estimate;
    let mut residual = f64::INFINITY;
    let mut lambda = estimate;
    while used < budget {
        used += 1;
        let mut y: Vec<f64> = x.iter().zip(weight).map(|(p, w)| p * w).collect();
        factor.solve_in_place(&mut y);
        normalize_signed(&mut y);
        let (num, den) = pencil.rayleigh(&y);
        lambda = num / den;
        let ay = a.matvec(&y);
        let r = ay
            .iter()
            .zip(weight)
            .zip(&y)
            .map(|((p, w), v)| (p - lambda * w * v).abs())
            .fold(0.0, f64::max);
        residual = r / ((a_norm + lambda.abs() * b_norm) * norm_inf(&y));
        x = y;
        let rel = (lambda - lambda_prev).abs() / lambda.abs();
        lambda_prev = lambda;
        if rel < opts.tol && residual < opts.tol && den > 0.0 {
            let scale = den.sqrt();
            let phi1: Vec<f64> = x.iter().map(|v| v / scale).collect();
            let normalization = pencil.rayleigh(&phi1).1;
            return Ok(WeightedEigenResult {
                lambda1: lambda,
                phi1,
                normalization,
                iterations: used,
                residual,
                gap_ratio,
            });
        }
    }
    Err(Error::NonConverged {
        what: "weighted eigensolver",
        iterations: used,
        estimate: lambda,
        residual,
    })
}

/// Sturm-count bisection for a shift in `(0, λ₁)` close to `λ₁`, starting
/// from some `hi` known to lie above it.
fn bisect_below_principal(pencil: &Pencil, mut hi: f64, steps: &mut usize) -> Result<f64> {
    let mut lo = hi;
    loop {
        *steps += 1;
        lo *= 0.5;
        if lo < f64::MIN_POSITIVE {
            return Err(Error::NoPositiveEigenvalue);
        }
        if pencil.count_below(lo)? == 0 {
            break;
        }
        hi = lo;
    }
    while hi - lo > 1e-7 * hi {
        *steps += 1;
        let mid = 0.5 * (lo + hi);
        if pencil.count_below(mid)? == 0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Least eigenpair `(μ₁, e₁)` of `(A - λB) e = μ W e`.
pub fn principal_shifted(
    grid: &RadialGrid,
    potential: &Potential,
    lambda: f64,
    opts: EigenOptions,
) -> Result<ShiftedEigenResult> {
    let pencil = Pencil::new(grid, potential);
    solve_shifted(&pencil, lambda, opts)
}

pub fn solve_shifted(pencil: &Pencil, lambda: f64, opts: EigenOptions) -> Result<ShiftedEigenResult> {
    if !(lambda > 0.0) {
        return Err(Error::Precondition(format!("lambda must be positive, got {lambda}")));
    }
    let m = pencil.mass.len();
    let w = &pencil.mass;
    let p = pencil.shifted(lambda);
    let budget = opts.budget(m);

    // Gershgorin lower bound for W^{-1/2} P W^{-1/2}.
    let gersh = (0..m)
        .map(|i| {
            let mut g = p.diag()[i] / w[i];
            if i > 0 {
                g -= p.off()[i - 1].abs() / (w[i] * w[i - 1]).sqrt();
            }
            if i + 1 < m {
                g -= p.off()[i].abs() / (w[i] * w[i + 1]).sqrt();
            }
            g
        })
        .fold(f64::INFINITY, f64::min);
    let shift_by = |sigma: f64| p.add_diagonal(&w.iter().map(|x| -sigma * x).collect::<Vec<_>>());
    let count = |sigma: f64| -> Result<usize> { Ok(shift_by(sigma).ldl()?.negative_pivots()) };

    // Lower end: the Gershgorin bound, lowered further if the factorization
    // disagrees.
    let mut lo = gersh - 1e-8 * (gersh.abs() + 1.0);
    let mut lowered = 0;
    while count(lo)? > 0 {
        lo -= lo.abs().max(1.0);
        lowered += 1;
        if lowered > 64 {
            return Err(Error::Factorization("no admissible shift below the spectrum".into()));
        }
    }
    // Upper end: a Rayleigh quotient of a positive vector bounds μ₁ above.
    let ones = vec![1.0; m];
    let rq = dot(&ones, &p.matvec(&ones)) / w.iter().sum::<f64>();
    let mut hi = rq + 1e-12 * (rq.abs() + 1.0);
    while count(hi)? == 0 {
        hi += (hi - lo).max(1.0);
    }
    // Bisect until μ₁ is pinned well inside its gap to μ₂.
    let resolution = 1e-9 * lambda * pencil_weight_scale(pencil).max(f64::MIN_POSITIVE);
    for _ in 0..200 {
        if hi - lo <= resolution.max(1e-7 * lo.abs().min(hi.abs())) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if count(mid)? == 0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let factor = shift_by(lo).cholesky()?;

    let p_norm = p.norm_inf();
    let w_norm = norm_inf(w);
    let mut x = ones;
    let mut mu_prev = f64::NAN;
    let mut mu = f64::NAN;
    let mut residual = f64::INFINITY;
    for it in 1..=budget {
        let mut y: Vec<f64> = x.iter().zip(w).map(|(a, b)| a * b).collect();
        factor.solve_in_place(&mut y);
        normalize_signed(&mut y);
        let py = p.matvec(&y);
        let wy2: f64 = y.iter().zip(w).map(|(v, b)| b * v * v).sum();
        mu = dot(&y, &py) / wy2;
        let r = py
            .iter()
            .zip(w)
            .zip(&y)
            .map(|((a, b), v)| (a - mu * b * v).abs())
            .fold(0.0, f64::max);
        residual = r / ((p_norm + mu.abs() * w_norm) * norm_inf(&y));
        x = y;
        let mu_scale = mu.abs().max(lambda * pencil_weight_scale(pencil)).max(1e-300);
        if (mu - mu_prev).abs() <= opts.tol * mu_scale && residual < opts.tol {
            return Ok(ShiftedEigenResult {
                lambda,
                mu1: mu,
                e1: x,
                iterations: it,
                residual,
            });
        }
        mu_prev = mu;
    }
    Err(Error::NonConverged {
        what: "shifted eigensolver",
        iterations: budget,
        estimate: mu,
        residual,
    })
}

fn pencil_weight_scale(pencil: &Pencil) -> f64 {
    pencil
        .weight
        .iter()
        .zip(&pencil.mass)
        .map(|(b, w)| (b / w).abs())
        .fold(0.0, f64::max)
}

/// Discrete `λ₁` at `M` and at `2M+1` nodes (half the spacing) with the
/// Richardson value; `low`/`high` bracket all three.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RefinementBracket {
    pub coarse: f64,
    pub fine: f64,
    pub extrapolated: f64,
    pub low: f64,
    pub high: f64,
}

pub fn refinement_bracket(grid: &RadialGrid, potential: &Potential, opts: EigenOptions) -> Result<RefinementBracket> {
    let coarse = principal_weighted(grid, potential, opts)?.lambda1;
    let fine_grid = RadialGrid::new(grid.dim(), grid.radius(), 2 * grid.len() + 1)?;
    let fine = principal_weighted(&fine_grid, potential, opts)?.lambda1;
    let extrapolated = fine + (fine - coarse) / 3.0;
    Ok(RefinementBracket {
        coarse,
        fine,
        extrapolated,
        low: coarse.min(fine).min(extrapolated),
        high: coarse.max(fine).max(extrapolated),
    })
}
