//! Numerical checks on computed profiles: tail decay, integrability,
//! boundary flux, the energy identity and the Newtonian potential of `V⁺u`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{RadialGrid, StiffnessForm};
use crate::problem::{least_squares_slope, AbsorptionTerm, Potential};

/// Fit window as fractions of the radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayWindow {
    pub start: f64,
    pub end: f64,
}

impl Default for DecayWindow {
    /// The outer third, minus the last 5% where the Dirichlet condition bends
    /// the profile down.
    fn default() -> Self {
        Self {
            start: 2.0 / 3.0,
            end: 0.95,
        }
    }
}

impl DecayWindow {
    pub fn shifted(self, factor: f64) -> Self {
        Self {
            start: self.start * factor,
            end: self.end * factor,
        }
    }

    fn node_range(&self, grid: &RadialGrid) -> std::ops::RangeInclusive<usize> {
        let r = grid.radius();
        let lo = grid.nodes().partition_point(|&x| x < self.start * r - 1e-12 * r);
        let hi = grid.last_node_within(self.end * r).unwrap_or(0);
        lo..=hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayReport {
    pub slope: f64,
    pub intercept: f64,
    pub window_start: f64,
    pub window_end: f64,
    pub points: usize,
    /// `2 - N`.
    pub target: f64,
    /// `|slope - target| <= 0.1`.
    pub pass: bool,
}

pub fn decay_exponent(grid: &RadialGrid, values: &[f64]) -> Result<DecayReport> {
    decay_exponent_in(grid, values, DecayWindow::default())
}

/// Least-squares slope of `log u` against `log r` over `window`.
pub fn decay_exponent_in(grid: &RadialGrid, values: &[f64], window: DecayWindow) -> Result<DecayReport> {
    grid.check_len(values)?;
    if !(0.0 < window.start && window.start < window.end && window.end <= 1.0) {
        return Err(Error::Precondition(format!(
            "decay window must satisfy 0 < start < end <= 1, got [{}, {}]",
            window.start, window.end
        )));
    }
    let range = window.node_range(grid);
    let pts: Vec<(f64, f64)> = range.clone().map(|i| (grid.nodes()[i], values[i])).collect();
    if pts.len() < 3 {
        return Err(Error::Precondition(format!(
            "decay window holds {} nodes, need at least 3",
            pts.len()
        )));
    }
    if pts.iter().any(|&(_, u)| !(u > 0.0)) {
        return Err(Error::NonPositiveWindow);
    }
    let logs: Vec<(f64, f64)> = pts.iter().map(|&(r, u)| (r.ln(), u.ln())).collect();
    let slope = least_squares_slope(&logs);
    let n = logs.len() as f64;
    let intercept = (logs.iter().map(|p| p.1).sum::<f64>() - slope * logs.iter().map(|p| p.0).sum::<f64>()) / n;
    let target = 2.0 - grid.dim() as f64;
    Ok(DecayReport {
        slope,
        intercept,
        window_start: pts[0].0,
        window_end: pts[pts.len() - 1].0,
        points: pts.len(),
        target,
        pass: (slope - target).abs() <= 0.1,
    })
}

/// A quantity on `B_R` and on `B_{R/2}` for the same profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Truncated {
    pub value: f64,
    pub half_radius: f64,
    /// `value / half_radius`, with `0/0 = 1`.
    pub ratio: f64,
}

impl Truncated {
    fn new(value: f64, half_radius: f64) -> Self {
        let ratio = if value == 0.0 && half_radius == 0.0 {
            1.0
        } else {
            value / half_radius
        };
        Self {
            value,
            half_radius,
            ratio,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormReport {
    pub l2_norm: Truncated,
    /// `a(u, u)`.
    pub energy: Truncated,
    pub positive_part: Truncated,
    pub negative_part: Truncated,
    pub absorption: Truncated,
}

impl NormReport {
    pub fn entries(&self) -> [(&'static str, Truncated); 5] {
        [
            ("l2_norm", self.l2_norm),
            ("energy", self.energy),
            ("v_plus_u", self.positive_part),
            ("v_minus_u", self.negative_part),
            ("f_u", self.absorption),
        ]
    }

    pub fn all_finite(&self) -> bool {
        self.entries()
            .iter()
            .all(|(_, t)| t.value.is_finite() && t.half_radius.is_finite())
    }

    pub fn max_ratio_deviation(&self) -> f64 {
        self.entries()
            .iter()
            .map(|(_, t)| (t.ratio - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

pub fn norms(grid: &RadialGrid, values: &[f64], potential: &Potential, f: &AbsorptionTerm) -> Result<NormReport> {
    grid.check_len(values)?;
    let form = StiffnessForm::new(std::sync::Arc::new(grid.clone()));
    let half = grid.last_node_within(0.5 * grid.radius()).map_or(0, |k| k + 1);
    let w = grid.quad_weights();
    let r = grid.nodes();
    let sum = |g: &dyn Fn(usize) -> f64, n: usize| (0..n).map(|i| w[i] * g(i)).sum::<f64>();
    let pair = |g: &dyn Fn(usize) -> f64| Truncated::new(sum(g, values.len()), sum(g, half));

    let l2 = pair(&|i| values[i] * values[i]);
    let faces = form.faces();
    let grad = |n: usize| {
        (0..n)
            .map(|i| {
                let d = values.get(i + 1).copied().unwrap_or(0.0) - values[i];
                faces[i] * d * d
            })
            .sum::<f64>()
    };
    // On the half ball only faces between interior nodes count.
    let energy = Truncated::new(grad(values.len()), grad(half.saturating_sub(1)));
    Ok(NormReport {
        l2_norm: Truncated::new(l2.value.sqrt(), l2.half_radius.sqrt()),
        energy,
        positive_part: pair(&|i| potential.positive_part(r[i]) * values[i]),
        negative_part: pair(&|i| potential.negative_part(r[i]) * values[i]),
        absorption: pair(&|i| f.value(values[i].max(0.0))),
    })
}

/// Node used for the outer evaluations: the last node within `0.95 R`.
fn outer_node(grid: &RadialGrid) -> Result<usize> {
    if grid.len() < 3 {
        return Err(Error::Precondition("profile needs at least 3 nodes".into()));
    }
    Ok(grid
        .last_node_within(DecayWindow::default().end * grid.radius())
        .unwrap_or(1)
        .max(1))
}

/// `ω_N r^{N-1} u(r) u'(r)` at the outer fit point, `u'` by a backward
/// difference.
pub fn boundary_flux(grid: &RadialGrid, values: &[f64]) -> Result<f64> {
    grid.check_len(values)?;
    let k = outer_node(grid)?;
    let r = grid.nodes()[k];
    let du = (values[k] - values[k - 1]) / grid.spacing();
    Ok(grid.sphere_area() * r.powi(grid.dim() as i32 - 1) * values[k] * du)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyBalance {
    /// Radius of the last node included.
    pub radius: f64,
    /// `a_k(u, u) - c_k u_k (u_{k+1} - u_k)`.
    pub lhs: f64,
    /// `λ Σ_{i<=k} w_i (V_i u_i² - f(u_i) u_i)`.
    pub rhs: f64,
    pub relative_error: f64,
}

/// Discrete integration by parts of the equation against `u` over the nodes
/// up to the outer fit point.
pub fn energy_balance(
    grid: &RadialGrid,
    values: &[f64],
    potential: &Potential,
    f: &AbsorptionTerm,
    lambda: f64,
) -> Result<EnergyBalance> {
    grid.check_len(values)?;
    let k = outer_node(grid)?;
    let form = StiffnessForm::new(std::sync::Arc::new(grid.clone()));
    let c = form.faces();
    let u = values;
    let interior: f64 = (0..k).map(|j| c[j] * (u[j + 1] - u[j]).powi(2)).sum();
    let next = u.get(k + 1).copied().unwrap_or(0.0);
    let boundary = c[k] * u[k] * (next - u[k]);
    let lhs = interior - boundary;
    let (mut lin, mut abs) = (0.0, 0.0);
    for i in 0..=k {
        let w = grid.quad_weights()[i];
        lin += w * potential.value(grid.nodes()[i]) * u[i] * u[i];
        abs += w * f.value(u[i].max(0.0)) * u[i];
    }
    let rhs = lambda * (lin - abs);
    let scale = interior
        .abs()
        .max(boundary.abs())
        .max(lambda * lin.abs())
        .max(lambda * abs.abs());
    let relative_error = if scale == 0.0 { 0.0 } else { (lhs - rhs).abs() / scale };
    Ok(EnergyBalance {
        radius: grid.nodes()[k],
        lhs,
        rhs,
        relative_error,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NewtonianPotential {
    pub values: Vec<f64>,
    /// `v(R)`, the value carried by the sphere.
    pub boundary_value: f64,
    /// Bound on the contribution of `|x| > R` to `v`, when the potential
    /// carries decay constants.
    pub tail_bound: Option<f64>,
    /// `‖A v - W ρ‖_∞ / ‖W ρ‖_∞` with the stiffness form and `v(R)` on the
    /// sphere: independent check of the quadrature.
    pub residual: f64,
}

/// Newtonian potential of `V⁺u` truncated to `B_R`.
pub fn newtonian_potential(grid: &RadialGrid, values: &[f64], potential: &Potential) -> Result<NewtonianPotential> {
    grid.check_len(values)?;
    let rho: Vec<f64> = grid
        .nodes()
        .iter()
        .zip(values)
        .map(|(&r, &u)| potential.positive_part(r) * u)
        .collect();
    let mut out = newtonian_from_density(grid, &rho)?;
    out.tail_bound = potential.decay_bound().map(|b| {
        let sup = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        b.amplitude * sup * grid.radius().powf(-b.alpha) / (b.alpha * (grid.dim() as f64 - 2.0))
    });
    Ok(out)
}

/// `v(r) = [r^{2-N} ∫_0^r ρ s^{N-1} ds + ∫_r^R ρ s ds] / (N-2)`, by
/// cumulative trapezoid rule on `0, r_1, …, r_M, R`.
pub fn newtonian_from_density(grid: &RadialGrid, rho: &[f64]) -> Result<NewtonianPotential> {
    grid.check_len(rho)?;
    let n = grid.dim() as i32;
    let m = rho.len();
    let h = grid.spacing();
    let rho_at_r = if m >= 2 { 2.0 * rho[m - 1] - rho[m - 2] } else { rho[0] };
    // Extended samples including r = 0 and r = R; both integrands vanish at 0.
    let radii: Vec<f64> = std::iter::once(0.0)
        .chain(grid.nodes().iter().copied())
        .chain(std::iter::once(grid.radius()))
        .collect();
    let dens: Vec<f64> = std::iter::once(0.0)
        .chain(rho.iter().copied())
        .chain(std::iter::once(rho_at_r))
        .collect();
    let inner: Vec<f64> = radii.iter().zip(&dens).map(|(&s, &p)| p * s.powi(n - 1)).collect();
    let outer: Vec<f64> = radii.iter().zip(&dens).map(|(&s, &p)| p * s).collect();
    let cumulative = |g: &[f64]| {
        let mut acc = vec![0.0; g.len()];
        for j in 1..g.len() {
            acc[j] = acc[j - 1] + 0.5 * h * (g[j - 1] + g[j]);
        }
        acc
    };
    let ci = cumulative(&inner);
    let co = cumulative(&outer);
    let total_outer = co[m + 1];
    let scale = 1.0 / (n as f64 - 2.0);
    let v_at = |j: usize| scale * (ci[j] * radii[j].powi(2 - n) + (total_outer - co[j]));
    let values: Vec<f64> = (1..=m).map(v_at).collect();
    let boundary_value = v_at(m + 1);

    let form = StiffnessForm::new(std::sync::Arc::new(grid.clone()));
    let av = form.apply_with_boundary(&values, boundary_value)?;
    let (mut num, mut den) = (0.0_f64, 0.0_f64);
    for i in 0..m {
        let wr = grid.quad_weights()[i] * rho[i];
        num = num.max((av[i] - wr).abs());
        den = den.max(wr.abs());
    }
    let residual = if den == 0.0 { num } else { num / den };
    Ok(NewtonianPotential {
        values,
        boundary_value,
        tail_bound: None,
        residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NewtonianComparison {
    /// `C = 2λ (1 + ‖u‖_∞ / min_window v)`.
    pub constant: f64,
    /// `min_i (C v_i - u_i)`.
    pub min_margin: f64,
    pub holds: bool,
}

/// Checks `C v - u > 0` at every node, `v` the Newtonian potential of `V⁺u`.
pub fn newtonian_comparison(
    grid: &RadialGrid,
    values: &[f64],
    potential: &Potential,
    lambda: f64,
) -> Result<NewtonianComparison> {
    let v = newtonian_potential(grid, values, potential)?;
    let window = DecayWindow::default().node_range(grid);
    let min_v = v.values[window].iter().copied().fold(f64::INFINITY, f64::min);
    if !(min_v > 0.0) {
        return Err(Error::NonPositiveWindow);
    }
    let sup = values.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let constant = 2.0 * lambda * (1.0 + sup / min_v);
    let min_margin = v
        .values
        .iter()
        .zip(values)
        .map(|(a, b)| constant * a - b)
        .fold(f64::INFINITY, f64::min);
    Ok(NewtonianComparison {
        constant,
        min_margin,
        holds: min_margin > 0.0,
    })
}
