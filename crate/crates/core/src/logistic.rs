//! Positive solutions of `-Δu = λ(V u - f(u))` by monotone iteration.
//!
//! On a ball the scheme is
//!
//! ```text
//! (A + λK W) u_{k+1} = λ W (V u_k - f(u_k) + K u_k)
//! ```
//!
//! with `K >= sup_{[0,M]} f' + ‖V‖_∞`, which makes the right-hand side
//! nondecreasing in `u` on `[0, M]`; since `A + λKW` is an M-matrix the
//! update map is order preserving. Started from the subsolution `ε e₁` the
//! iterates increase to the minimal solution, started from the constant
//! supersolution `M` they decrease to the maximal one.
//!
//! The whole-space solution is the monotone limit over expanding balls, each
//! stage warm-started from the zero extension of the previous stage.

use rayon::prelude::*;
use serde::Serialize;

use crate::banded::Ldl;
use crate::diagnostics::{decay_exponent, DecayReport};
use crate::eigen::{solve_shifted, EigenOptions, Pencil};
use crate::error::{Error, Result};
use crate::grid::RadialGrid;
use crate::problem::{supersolution_bound, AbsorptionTerm, Potential};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Start {
    /// Iterate up from `ε e₁` (minimal solution).
    Sub,
    /// Iterate down from the constant `M` (maximal solution).
    Super,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolveOptions {
    /// Stop when `‖u_{k+1} - u_k‖_∞ < tol_fix` (and the residual is small).
    pub tol_fix: f64,
    /// Relative residual accepted for a profile.
    pub tol_res: f64,
    /// Extinction declared once `‖u_k‖_∞ < extinction_tol * M`.
    pub extinction_tol: f64,
    /// Stage-to-stage sup-norm change at which the expanding balls stop.
    pub tol_stage: f64,
    pub max_iter: usize,
    pub nodes_per_unit: usize,
    pub eigen: EigenOptions,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol_fix: 1e-10,
            tol_res: 1e-8,
            extinction_tol: 1e-10,
            tol_stage: 1e-6,
            max_iter: 2_000_000,
            nodes_per_unit: 256,
            eigen: EigenOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolutionProfile {
    #[serde(skip)]
    pub grid: RadialGrid,
    pub radius: f64,
    pub lambda: f64,
    pub values: Vec<f64>,
    pub branch: Start,
    pub iterations: usize,
    pub update_norm: f64,
    pub residual: f64,
    /// The constant supersolution `M`.
    pub upper_bound: f64,
    /// Steps at which some node moved against the expected direction by more
    /// than round-off.
    pub monotonicity_violations: usize,
}

impl SolutionProfile {
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExtinctionReason {
    /// `μ₁ >= 0`: `λ <= λ₁(R)`, no positive subsolution exists on this ball.
    NoSubsolution { mu1: f64 },
    /// Iterates decayed below the extinction threshold.
    Decayed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Extinct {
    pub lambda: f64,
    pub radius: f64,
    pub reason: ExtinctionReason,
    /// `(iteration, ‖u_k‖_∞)` sampled at powers of two and at the end.
    pub sup_norms: Vec<(usize, f64)>,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum BallOutcome {
    Solution(SolutionProfile),
    Extinct(Extinct),
}

impl BallOutcome {
    pub fn solution(&self) -> Option<&SolutionProfile> {
        match self {
            BallOutcome::Solution(p) => Some(p),
            BallOutcome::Extinct(_) => None,
        }
    }

    pub fn is_extinct(&self) -> bool {
        matches!(self, BallOutcome::Extinct(_))
    }
}

/// Everything fixed for one `(grid, V, f, λ)`.
struct BallProblem<'a> {
    grid: &'a RadialGrid,
    pencil: Pencil,
    potential_values: Vec<f64>,
    f: &'a AbsorptionTerm,
    lambda: f64,
    upper: f64,
    k_const: f64,
    system: Ldl,
}

impl<'a> BallProblem<'a> {
    fn new(grid: &'a RadialGrid, potential: &Potential, f: &'a AbsorptionTerm, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::Precondition(format!("lambda must be positive, got {lambda}")));
        }
        let upper = supersolution_bound(f, potential.sup_norm())?;
        let k_const = f.max_derivative(upper) + potential.sup_norm() + 1.0;
        let pencil = Pencil::new(grid, potential);
        let shift: Vec<f64> = pencil.mass().iter().map(|w| lambda * k_const * w).collect();
        let system = pencil.stiffness().add_diagonal(&shift).cholesky()?;
        Ok(Self {
            grid,
            potential_values: potential.sample(grid),
            pencil,
            f,
            lambda,
            upper,
            k_const,
            system,
        })
    }

    fn reaction(&self, u: f64, v: f64) -> f64 {
        v * u - self.f.value(u.max(0.0))
    }

    /// `‖A u - λ W (V u - f(u))‖_∞` relative to the size of its terms.
    fn residual(&self, u: &[f64]) -> f64 {
        let au = self.pencil.stiffness().matvec(u);
        let (mut num, mut scale) = (0.0_f64, 0.0_f64);
        for i in 0..u.len() {
            let w = self.pencil.mass()[i];
            let lin = self.lambda * w * self.potential_values[i] * u[i];
            let abs = self.lambda * w * self.f.value(u[i].max(0.0));
            num = num.max((au[i] - lin + abs).abs());
            scale = scale.max(au[i].abs()).max(lin.abs()).max(abs.abs());
        }
        if scale == 0.0 {
            0.0
        } else {
            num / scale
        }
    }

    fn iterate(&self, initial: Vec<f64>, branch: Start, opts: &SolveOptions) -> Result<BallOutcome> {
        let m = initial.len();
        let slack = 1e-12 * self.upper;
        let extinct_below = opts.extinction_tol * self.upper;
        let mut u = initial;
        let mut next = vec![0.0; m];
        let mut violations = 0;
        let mut trajectory = Vec::new();
        let mut record_at = 1;
        let mut prev_update = f64::INFINITY;
        for k in 1..=opts.max_iter {
            for i in 0..m {
                let w = self.pencil.mass()[i];
                next[i] = self.lambda * w * (self.reaction(u[i], self.potential_values[i]) + self.k_const * u[i]);
            }
            self.system.solve_in_place(&mut next);

            let mut update = 0.0_f64;
            let mut sup = 0.0_f64;
            let mut violated = false;
            for i in 0..m {
                let d = next[i] - u[i];
                violated |= match branch {
                    Start::Sub => d < -slack,
                    Start::Super => d > slack,
                };
                update = update.max(d.abs());
                sup = sup.max(next[i].abs());
                if next[i] < -slack || next[i] > self.upper + slack {
                    return Err(Error::SolverFault(format!(
                        "iterate left [0, M] at node {i}: {} (M = {})",
                        next[i], self.upper
                    )));
                }
            }
            violations += violated as usize;
            std::mem::swap(&mut u, &mut next);

            if k == record_at {
                trajectory.push((k, sup));
                record_at *= 2;
            }
            if sup < extinct_below {
                trajectory.push((k, sup));
                return Ok(BallOutcome::Extinct(Extinct {
                    lambda: self.lambda,
                    radius: self.grid.radius(),
                    reason: ExtinctionReason::Decayed,
                    sup_norms: trajectory,
                    iterations: k,
                }));
            }
            // Distance to the fixed point ≈ update·ρ/(1-ρ) for a contraction
            // with observed rate ρ; near λ₁(R) ρ → 1 and the raw update
            // understates the error. At round-off level no more is possible.
            let rho = update / prev_update;
            prev_update = update;
            let error_estimate = if rho < 1.0 {
                update * rho / (1.0 - rho)
            } else {
                f64::INFINITY
            };
            let at_roundoff = update <= 64.0 * f64::EPSILON * sup;
            if update < opts.tol_fix && (error_estimate < opts.tol_fix || at_roundoff) {
                let residual = self.residual(&u);
                if residual <= opts.tol_res {
                    return Ok(BallOutcome::Solution(SolutionProfile {
                        grid: self.grid.clone(),
                        radius: self.grid.radius(),
                        lambda: self.lambda,
                        values: u,
                        branch,
                        iterations: k,
                        update_norm: update,
                        residual,
                        upper_bound: self.upper,
                        monotonicity_violations: violations,
                    }));
                }
            }
        }
        Err(Error::NonConverged {
            what: "monotone iteration",
            iterations: opts.max_iter,
            estimate: u.iter().fold(0.0, |a, v| a.max(v.abs())),
            residual: self.residual(&u),
        })
    }

    /// `ε e₁` with `ε` halved from 1 until `ε μ₁ e₁ + λ f(ε e₁) <= 0` nodewise,
    /// or the extinction reason when `μ₁ >= 0`.
    fn subsolution(&self, opts: &SolveOptions) -> Result<std::result::Result<Vec<f64>, Extinct>> {
        let shifted = solve_shifted(&self.pencil, self.lambda, opts.eigen)?;
        let mu1 = shifted.mu1;
        if mu1 >= 0.0 {
            return Ok(Err(Extinct {
                lambda: self.lambda,
                radius: self.grid.radius(),
                reason: ExtinctionReason::NoSubsolution { mu1 },
                sup_norms: Vec::new(),
                iterations: 0,
            }));
        }
        let e1: Vec<f64> = shifted.e1.iter().map(|v| v.max(0.0)).collect();
        let mut eps = 1.0_f64.min(self.upper);
        loop {
            let ok = e1
                .iter()
                .all(|&e| eps * mu1 * e + self.lambda * self.f.value(eps * e) <= 0.0);
            if ok {
                return Ok(Ok(e1.iter().map(|e| eps * e).collect()));
            }
            eps *= 0.5;
            if eps < f64::MIN_POSITIVE {
                return Err(Error::EpsilonUnderflow);
            }
        }
    }
}

/// Monotone iteration on the ball of `grid`.
pub fn monotone_solve_ball(
    grid: &RadialGrid,
    potential: &Potential,
    f: &AbsorptionTerm,
    lambda: f64,
    start: Start,
    opts: &SolveOptions,
) -> Result<BallOutcome> {
    let problem = BallProblem::new(grid, potential, f, lambda)?;
    match start {
        Start::Super => problem.iterate(vec![problem.upper; grid.len()], Start::Super, opts),
        Start::Sub => match problem.subsolution(opts)? {
            Ok(sub) => problem.iterate(sub, Start::Sub, opts),
            Err(extinct) => Ok(BallOutcome::Extinct(extinct)),
        },
    }
}

/// Minimal and maximal solutions on one ball; fails unless `λ > λ₁(R)`.
pub fn minimal_maximal_pair(
    grid: &RadialGrid,
    potential: &Potential,
    f: &AbsorptionTerm,
    lambda: f64,
    opts: &SolveOptions,
) -> Result<(SolutionProfile, SolutionProfile)> {
    let pencil = Pencil::new(grid, potential);
    let mu1 = solve_shifted(&pencil, lambda, opts.eigen)?.mu1;
    let scale = lambda * potential.sup_norm();
    if mu1 >= -opts.eigen.tol * scale {
        return Err(Error::Precondition(format!(
            "lambda = {lambda} does not exceed lambda1(R) on this ball (mu1 = {mu1:e})"
        )));
    }
    let minimal = monotone_solve_ball(grid, potential, f, lambda, Start::Sub, opts)?;
    let maximal = monotone_solve_ball(grid, potential, f, lambda, Start::Super, opts)?;
    match (minimal, maximal) {
        (BallOutcome::Solution(lo), BallOutcome::Solution(hi)) => {
            let slack = 1e-12 * hi.upper_bound;
            if lo.values.iter().zip(&hi.values).any(|(a, b)| a > &(b + slack)) {
                return Err(Error::SolverFault("minimal solution exceeds maximal solution".into()));
            }
            Ok((lo, hi))
        }
        _ => Err(Error::SolverFault(format!(
            "extinction above the principal eigenvalue (lambda = {lambda}, mu1 = {mu1:e})"
        ))),
    }
}

/// `‖u_min - u_max‖_∞ / ‖u_max‖_∞`.
pub fn minimal_maximal_gap(
    grid: &RadialGrid,
    potential: &Potential,
    f: &AbsorptionTerm,
    lambda: f64,
    opts: &SolveOptions,
) -> Result<f64> {
    let (lo, hi) = minimal_maximal_pair(grid, potential, f, lambda, opts)?;
    let diff = lo
        .values
        .iter()
        .zip(&hi.values)
        .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
    Ok(diff / hi.sup_norm())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Stage {
    pub radius: f64,
    pub outcome: BallOutcome,
    /// Sup-norm change from the previous active stage on the shared nodes.
    pub delta: Option<f64>,
}

/// Comparison with the explicit supersolution `n/(1+r²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupersolutionCheck {
    /// Smallest `n = 2^k` for which `n/(1+r²)` satisfies the supersolution
    /// inequality on the check points.
    pub n_star: f64,
    /// `max_i u(r_i) (1+r_i²) / n*`; at most 1 when the comparison holds.
    pub max_ratio: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntireSolution {
    pub lambda: f64,
    pub stages: Vec<Stage>,
    pub converged: bool,
    pub final_profile: SolutionProfile,
    pub supersolution: Option<SupersolutionCheck>,
    pub decay: Option<DecayReport>,
}

impl EntireSolution {
    pub fn active_profiles(&self) -> impl Iterator<Item = &SolutionProfile> {
        self.stages.iter().filter_map(|s| s.outcome.solution())
    }

    pub fn deltas(&self) -> Vec<f64> {
        self.stages.iter().filter_map(|s| s.delta).collect()
    }

    pub fn activation_radius(&self) -> Option<f64> {
        self.stages.iter().find(|s| !s.outcome.is_extinct()).map(|s| s.radius)
    }

    pub fn total_iterations(&self) -> usize {
        self.stages
            .iter()
            .map(|s| match &s.outcome {
                BallOutcome::Solution(p) => p.iterations,
                BallOutcome::Extinct(e) => e.iterations,
            })
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum EntireOutcome {
    Solution(Box<EntireSolution>),
    Extinct(Vec<Extinct>),
}

impl EntireOutcome {
    pub fn solution(&self) -> Option<&EntireSolution> {
        match self {
            EntireOutcome::Solution(s) => Some(s),
            EntireOutcome::Extinct(_) => None,
        }
    }
}

/// Expanding-ball construction of a positive solution on `R^N`.
pub fn solve_entire(
    dim: usize,
    potential: &Potential,
    f: &AbsorptionTerm,
    lambda: f64,
    schedule: &[f64],
    opts: &SolveOptions,
) -> Result<EntireOutcome> {
    if !(lambda > 0.0) {
        return Err(Error::Precondition(format!("lambda must be positive, got {lambda}")));
    }
    if schedule.is_empty() || schedule.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Precondition(
            "radius schedule must be nonempty and strictly increasing".into(),
        ));
    }
    let mut stages: Vec<Stage> = Vec::new();
    let mut previous: Option<SolutionProfile> = None;
    let mut converged = false;
    for &radius in schedule {
        let grid = RadialGrid::with_resolution(dim, radius, opts.nodes_per_unit)?;
        let outcome = match &previous {
            None => monotone_solve_ball(&grid, potential, f, lambda, Start::Sub, opts)?,
            Some(prev) => {
                // Zero extension of the previous stage is a subsolution here.
                let problem = BallProblem::new(&grid, potential, f, lambda)?;
                let mut init = prev.values.clone();
                init.resize(grid.len(), 0.0);
                problem.iterate(init, Start::Sub, opts)?
            }
        };
        let delta = match (&outcome, &previous) {
            (BallOutcome::Solution(cur), Some(prev)) => {
                let slack = 1e-12 * cur.upper_bound;
                let mut delta = 0.0_f64;
                for (i, (a, b)) in prev.values.iter().zip(&cur.values).enumerate() {
                    if b < &(a - slack) {
                        return Err(Error::SolverFault(format!(
                            "stage R = {radius} dropped below the previous stage at node {i}"
                        )));
                    }
                    delta = delta.max(b - a);
                }
                Some(delta)
            }
            (BallOutcome::Extinct(_), Some(_)) => {
                return Err(Error::SolverFault(format!(
                    "stage R = {radius} went extinct after an active stage"
                )))
            }
            _ => None,
        };
        if let BallOutcome::Solution(p) = &outcome {
            previous = Some(p.clone());
        }
        stages.push(Stage { radius, outcome, delta });
        if delta.is_some_and(|d| d < opts.tol_stage) {
            converged = true;
            break;
        }
    }
    let Some(final_profile) = previous else {
        let extinct = stages
            .into_iter()
            .filter_map(|s| match s.outcome {
                BallOutcome::Extinct(e) => Some(e),
                BallOutcome::Solution(_) => None,
            })
            .collect();
        return Ok(EntireOutcome::Extinct(extinct));
    };
    let supersolution = supersolution_check(&final_profile, potential, f, lambda);
    let decay = decay_exponent(&final_profile.grid, &final_profile.values).ok();
    Ok(EntireOutcome::Solution(Box::new(EntireSolution {
        lambda,
        stages,
        converged,
        final_profile,
        supersolution,
        decay,
    })))
}

/// `n/(1+r²)` is a supersolution wherever
/// `2(N(1+r²) - 4r²)/(1+r²)² >= λ V(r) - λ f(ū)/ū`.
fn supersolution_check(
    profile: &SolutionProfile,
    potential: &Potential,
    f: &AbsorptionTerm,
    lambda: f64,
) -> Option<SupersolutionCheck> {
    let dim = profile.grid.dim() as f64;
    let points: Vec<f64> = profile
        .grid
        .nodes()
        .iter()
        .copied()
        .chain(crate::problem::CheckGrid::new(1e-3, 1e4, 1001).points())
        .collect();
    let is_super = |n: f64| {
        points.iter().all(|&r| {
            let s = 1.0 + r * r;
            let bar = n / s;
            let lhs = 2.0 * (dim * s - 4.0 * r * r) / (s * s);
            lhs >= lambda * potential.value(r) - lambda * f.value(bar) / bar
        })
    };
    let n_star = (-30..=64).map(|k| 2f64.powi(k)).find(|&n| is_super(n))?;
    let max_ratio = profile
        .grid
        .nodes()
        .iter()
        .zip(&profile.values)
        .map(|(&r, &u)| u * (1.0 + r * r) / n_star)
        .fold(0.0, f64::max);
    Some(SupersolutionCheck {
        n_star,
        max_ratio,
        holds: max_ratio <= 1.0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub exists: bool,
    pub sup_norm: f64,
    pub iterations: usize,
    pub stages: usize,
    pub activation_radius: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    /// Midpoint between the largest extinct and the smallest existent `λ`.
    pub empirical_threshold: Option<f64>,
}

pub fn bifurcation_sweep(
    dim: usize,
    potential: &Potential,
    f: &AbsorptionTerm,
    lambda_grid: &[f64],
    schedule: &[f64],
    opts: &SolveOptions,
) -> Result<SweepTable> {
    if lambda_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Precondition("lambda grid must be strictly increasing".into()));
    }
    let rows = lambda_grid
        .par_iter()
        .map(|&lambda| {
            let row = match solve_entire(dim, potential, f, lambda, schedule, opts)? {
                EntireOutcome::Solution(s) => SweepRow {
                    lambda,
                    exists: true,
                    sup_norm: s.final_profile.sup_norm(),
                    iterations: s.total_iterations(),
                    stages: s.stages.len(),
                    activation_radius: s.activation_radius(),
                },
                EntireOutcome::Extinct(e) => SweepRow {
                    lambda,
                    exists: false,
                    sup_norm: 0.0,
                    iterations: e.iter().map(|x| x.iterations).sum(),
                    stages: e.len(),
                    activation_radius: None,
                },
            };
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    let last_extinct = rows.iter().filter(|r| !r.exists).map(|r| r.lambda).reduce(f64::max);
    let first_alive = rows.iter().filter(|r| r.exists).map(|r| r.lambda).reduce(f64::min);
    let empirical_threshold = match (last_extinct, first_alive) {
        (Some(a), Some(b)) if a < b => Some(0.5 * (a + b)),
        _ => None,
    };
    Ok(SweepTable {
        rows,
        empirical_threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::principal_weighted;

    fn unit_ball() -> RadialGrid {
        RadialGrid::new(3, 1.0, 255).unwrap()
    }

    fn lambda1(grid: &RadialGrid, v: &Potential) -> f64 {
        principal_weighted(grid, v, EigenOptions::default()).unwrap().lambda1
    }

    #[test]
    fn fisher_on_unit_ball_above_threshold() {
        let g = unit_ball();
        let v = Potential::constant(1.0);
        let f = AbsorptionTerm::power(2.0);
        let lam = 2.0 * lambda1(&g, &v);
        let out = monotone_solve_ball(&g, &v, &f, lam, Start::Sub, &SolveOptions::default()).unwrap();
        let p = out.solution().expect("positive solution");
        assert!(p.values.iter().all(|&u| u > 0.0 && u < 1.0));
        assert!(p.residual <= 1e-8);
        assert_eq!(p.monotonicity_violations, 0);
    }

    #[test]
    fn below_threshold_is_extinct_from_both_ends() {
        let g = unit_ball();
        let v = Potential::constant(1.0);
        let f = AbsorptionTerm::power(2.0);
        let lam = 0.5 * lambda1(&g, &v);
        let opts = SolveOptions::default();
        match monotone_solve_ball(&g, &v, &f, lam, Start::Sub, &opts).unwrap() {
            BallOutcome::Extinct(e) => {
                assert!(matches!(e.reason, ExtinctionReason::NoSubsolution { mu1 } if mu1 > 0.0))
            }
            other => panic!("{other:?}"),
        }
        match monotone_solve_ball(&g, &v, &f, lam, Start::Super, &opts).unwrap() {
            BallOutcome::Extinct(e) => {
                assert_eq!(e.reason, ExtinctionReason::Decayed);
                assert!(e.sup_norms.windows(2).all(|w| w[1].1 <= w[0].1));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn slow_absorption_is_rejected() {
        let g = unit_ball();
        let err = monotone_solve_ball(
            &g,
            &Potential::constant(1.0),
            &AbsorptionTerm::saturating(),
            20.0,
            Start::Super,
            &SolveOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::SupersolutionSearchExhausted { .. }));
    }

    #[test]
    fn gap_closes_just_above_threshold() {
        let g = RadialGrid::new(3, 1.0, 127).unwrap();
        let v = Potential::constant(1.0);
        let f = AbsorptionTerm::power(2.0);
        let l1 = lambda1(&g, &v);
        let gap = minimal_maximal_gap(&g, &v, &f, 1.01 * l1, &SolveOptions::default()).unwrap();
        assert!(gap <= 1e-6, "{gap}");
        assert!(matches!(
            minimal_maximal_gap(&g, &v, &f, l1, &SolveOptions::default()),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn sweep_of_empty_grid_is_empty() {
        let t = bifurcation_sweep(
            3,
            &Potential::constant(1.0),
            &AbsorptionTerm::power(2.0),
            &[],
            &[1.0],
            &SolveOptions::default(),
        )
        .unwrap();
        assert!(t.rows.is_empty());
        assert_eq!(t.empirical_threshold, None);
    }

    #[test]
    fn stages_activate_once_lambda1_drops_below_lambda() {
        let v = Potential::rational_decay(1.0, 2.0, 0.0, 1.0);
        let f = AbsorptionTerm::power(2.0);
        let opts = SolveOptions {
            nodes_per_unit: 32,
            ..Default::default()
        };
        // λ₁(2) ≈ 7.05 > 5 > λ₁(4) ≈ 4.61
        let out = solve_entire(3, &v, &f, 5.0, &[1.0, 2.0, 4.0, 8.0], &opts).unwrap();
        let s = out.solution().unwrap();
        assert!(s.stages[0].outcome.is_extinct() && s.stages[1].outcome.is_extinct());
        assert_eq!(s.activation_radius(), Some(4.0));
        let g = RadialGrid::with_resolution(3, 4.0, 32).unwrap();
        assert!(lambda1(&g, &v) < 5.0);
    }
}
