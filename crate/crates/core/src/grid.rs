//! Vertex-centred radial grids on the ball `B_R` in `N` dimensions.
//!
//! Nodes sit at `r_i = i*h`, `i = 1..=M`, with `h = R/(M+1)`. The node `M+1`
//! lies on the sphere and carries the Dirichlet value 0; the origin is closed
//! by reflection (`u_0 = u_1`), so no flux leaves through `r = h/2`.
//!
//! The discrete `-Δ` is written in flux (conservative) form, which makes it
//! symmetric in the plain Euclidean inner product once multiplied by the
//! quadrature weights. Everything downstream works with that weighted form:
//! `A u = W (-Δ_h u)`.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::Serialize;

use crate::banded::SymTridiagonal;
use crate::error::{Error, Result};

/// Surface area of the unit sphere in `R^N`, `2 π^{N/2} / Γ(N/2)`.
pub fn sphere_area(dim: usize) -> f64 {
    // Γ(N/2) for integer N via the half-integer recurrence.
    let half_gamma = if dim % 2 == 0 {
        (1..dim / 2).map(|k| k as f64).product::<f64>()
    } else {
        let mut g = PI.sqrt();
        let mut x = 0.5;
        while x < dim as f64 / 2.0 - 0.25 {
            g *= x;
            x += 1.0;
        }
        g
    };
    2.0 * PI.powf(dim as f64 / 2.0) / half_gamma
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialGrid {
    dim: usize,
    radius: f64,
    spacing: f64,
    sphere_area: f64,
    nodes: Vec<f64>,
    quad_weights: Vec<f64>,
}

impl RadialGrid {
    pub fn new(dim: usize, radius: f64, node_count: usize) -> Result<Self> {
        if dim < 3 {
            return Err(Error::InvalidGrid(format!("dimension must be at least 3, got {dim}")));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidGrid(format!("radius must be positive, got {radius}")));
        }
        if node_count < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 nodes, got {node_count}")));
        }
        let spacing = radius / (node_count + 1) as f64;
        let omega = sphere_area(dim);
        let nodes: Vec<f64> = (1..=node_count).map(|i| i as f64 * spacing).collect();
        let quad_weights = nodes
            .iter()
            .map(|&r| omega * r.powi(dim as i32 - 1) * spacing)
            .collect();
        Ok(Self {
            dim,
            radius,
            spacing,
            sphere_area: omega,
            nodes,
            quad_weights,
        })
    }

    /// Grid on `B_R` with a fixed number of nodes per unit radius, so that
    /// `h = 1/nodes_per_unit` exactly and grids of different radii share nodes.
    pub fn with_resolution(dim: usize, radius: f64, nodes_per_unit: usize) -> Result<Self> {
        let cells = (radius * nodes_per_unit as f64).round();
        if cells < 3.0 {
            return Err(Error::InvalidGrid(format!(
                "radius {radius} at {nodes_per_unit} nodes per unit leaves fewer than 2 nodes"
            )));
        }
        Self::new(dim, radius, cells as usize - 1)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn sphere_area(&self) -> f64 {
        self.sphere_area
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn quad_weights(&self) -> &[f64] {
        &self.quad_weights
    }

    /// Exact volume of `B_R`.
    pub fn ball_volume(&self) -> f64 {
        self.sphere_area * self.radius.powi(self.dim as i32) / self.dim as f64
    }

    /// Samples `g` at every node.
    pub fn sample(&self, g: impl Fn(f64) -> f64) -> Vec<f64> {
        self.nodes.iter().map(|&r| g(r)).collect()
    }

    /// Discrete `∫_{B_R} u dx`. This is the trapezoid rule for data vanishing
    /// on the sphere (the Dirichlet case); otherwise the missing endpoint
    /// costs `O(h)`.
    pub fn integrate(&self, values: &[f64]) -> Result<f64> {
        self.check_len(values)?;
        Ok(self.quad_weights.iter().zip(values).map(|(w, v)| w * v).sum())
    }

    /// Index of the last node with `r_i <= r`, if any.
    pub fn last_node_within(&self, r: f64) -> Option<usize> {
        let k = (r / self.spacing + 1e-9).floor() as usize;
        if k == 0 {
            None
        } else {
            Some(k.min(self.len()) - 1)
        }
    }

    pub(crate) fn check_len(&self, values: &[f64]) -> Result<()> {
        if values.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                got: values.len(),
            });
        }
        Ok(())
    }
}

/// The Dirichlet form `a(u, v) = Σ c_i (u_{i+1} - u_i)(v_{i+1} - v_i)` with
/// face coefficients `c_i = ω_N r_{i+1/2}^{N-1} / h`.
#[derive(Debug, Clone)]
pub struct StiffnessForm {
    grid: Arc<RadialGrid>,
    faces: Vec<f64>,
}

impl StiffnessForm {
    pub fn new(grid: Arc<RadialGrid>) -> Self {
        let h = grid.spacing();
        let omega = grid.sphere_area();
        let p = grid.dim() as i32 - 1;
        let faces = (1..=grid.len())
            .map(|i| omega * ((i as f64 + 0.5) * h).powi(p) / h)
            .collect();
        Self { grid, faces }
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn grid_arc(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    /// Face coefficients; entry `i` couples node `i` and `i+1`, the last one
    /// couples node `M` to the boundary.
    pub fn faces(&self) -> &[f64] {
        &self.faces
    }

    /// `a(u, v)` with zero Dirichlet data.
    pub fn bilinear(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        self.grid.check_len(u)?;
        self.grid.check_len(v)?;
        let m = u.len();
        let mut acc = 0.0;
        for i in 0..m {
            let du = u.get(i + 1).copied().unwrap_or(0.0) - u[i];
            let dv = v.get(i + 1).copied().unwrap_or(0.0) - v[i];
            acc += self.faces[i] * du * dv;
        }
        Ok(acc)
    }

    /// `A u`, i.e. `W (-Δ_h u)` with zero Dirichlet data.
    pub fn apply(&self, values: &[f64]) -> Result<Vec<f64>> {
        self.apply_with_boundary(values, 0.0)
    }

    /// `A u` where the ghost node on the sphere carries `boundary` instead of 0.
    pub fn apply_with_boundary(&self, values: &[f64], boundary: f64) -> Result<Vec<f64>> {
        self.grid.check_len(values)?;
        let m = values.len();
        let c = &self.faces;
        let out = (0..m)
            .map(|i| {
                let right = values.get(i + 1).copied().unwrap_or(boundary);
                let mut y = c[i] * (values[i] - right);
                if i > 0 {
                    y += c[i - 1] * (values[i] - values[i - 1]);
                }
                y
            })
            .collect();
        Ok(out)
    }

    /// The matrix of the form as a symmetric tridiagonal.
    pub fn matrix(&self) -> SymTridiagonal {
        let m = self.faces.len();
        let mut diag = self.faces.clone();
        for i in 1..m {
            diag[i] += self.faces[i - 1];
        }
        let off = self.faces[..m - 1].iter().map(|c| -c).collect();
        SymTridiagonal::new(diag, off)
    }
}
