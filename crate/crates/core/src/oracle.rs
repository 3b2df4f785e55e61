//! Dense reference spectra for small grids.
//!
//! Assembles the pencils as full matrices straight from the grid (no shared
//! code with the banded path) and diagonalizes them with a dense symmetric
//! eigensolver. Meant for cross-checking the iterative solvers in tests.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::grid::RadialGrid;
use crate::problem::Potential;

pub const DENSE_LIMIT: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OracleProblem {
    /// `A φ = λ B φ`; reports the positive `λ` ascending.
    Weighted,
    /// `(A - λB) e = μ W e`; reports every `μ` ascending.
    Shifted { lambda: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseSpectrum {
    pub eigenvalues: Vec<f64>,
}

impl DenseSpectrum {
    pub fn principal(&self) -> Option<f64> {
        self.eigenvalues.first().copied()
    }
}

fn dense_stiffness(grid: &RadialGrid) -> DMatrix<f64> {
    let m = grid.len();
    let h = grid.spacing();
    let omega = grid.sphere_area();
    let mut a = DMatrix::zeros(m, m);
    for i in 0..m {
        // face between node i+1 and i+2 (1-based), at r = (i + 1.5) h
        let c = omega * ((i as f64 + 1.5) * h).powi(grid.dim() as i32 - 1) / h;
        a[(i, i)] += c;
        if i + 1 < m {
            a[(i + 1, i + 1)] += c;
            a[(i, i + 1)] -= c;
            a[(i + 1, i)] -= c;
        }
    }
    a
}

pub fn dense_oracle(grid: &RadialGrid, potential: &Potential, problem: OracleProblem) -> Result<DenseSpectrum> {
    let m = grid.len();
    if m > DENSE_LIMIT {
        return Err(Error::SizeGuard {
            nodes: m,
            limit: DENSE_LIMIT,
        });
    }
    let a = dense_stiffness(grid);
    let w = grid.quad_weights();
    let v: Vec<f64> = grid.nodes().iter().map(|&r| potential.value(r)).collect();

    let eigenvalues = match problem {
        OracleProblem::Weighted => {
            let chol = a
                .cholesky()
                .ok_or_else(|| Error::Factorization("dense stiffness not positive definite".into()))?;
            let l_inv = chol
                .l()
                .solve_lower_triangular(&DMatrix::identity(m, m))
                .ok_or_else(|| Error::Factorization("singular Cholesky factor".into()))?;
            let b = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                m,
                w.iter().zip(&v).map(|(wi, vi)| wi * vi),
            ));
            let c = &l_inv * b * l_inv.transpose();
            let c = (&c + c.transpose()) * 0.5;
            let mu = SymmetricEigen::new(c).eigenvalues;
            let top = mu.iter().fold(0.0_f64, |s, x| s.max(x.abs()));
            let mut lambdas: Vec<f64> = mu.iter().filter(|&&x| x > 1e-14 * top).map(|&x| 1.0 / x).collect();
            lambdas.sort_by(f64::total_cmp);
            lambdas
        }
        OracleProblem::Shifted { lambda } => {
            let mut s = a;
            for i in 0..m {
                s[(i, i)] -= lambda * w[i] * v[i];
            }
            for i in 0..m {
                for j in 0..m {
                    s[(i, j)] /= (w[i] * w[j]).sqrt();
                }
            }
            let mut mu: Vec<f64> = SymmetricEigen::new(s).eigenvalues.iter().copied().collect();
            mu.sort_by(f64::total_cmp);
            mu
        }
    };
    Ok(DenseSpectrum { eigenvalues })
}
