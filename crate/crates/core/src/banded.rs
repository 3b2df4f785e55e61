//! Symmetric tridiagonal matrices and their `LDLᵀ` factorization.
//!
//! The factor is the banded Cholesky factor in disguise (`L D^{1/2}`), and
//! the signs of the pivots give the inertia of the matrix (Sylvester), which
//! the eigensolvers use to certify that a shift lies below the spectrum.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiagonal {
    diag: Vec<f64>,
    off: Vec<f64>,
}

impl SymTridiagonal {
    /// `off[i]` is the entry at `(i, i+1)`.
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Self {
        assert_eq!(off.len() + 1, diag.len().max(1), "off-diagonal must be one shorter");
        Self { diag, off }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn off(&self) -> &[f64] {
        &self.off
    }

    /// `self + Σ_i shift_i e_i e_iᵀ`.
    pub fn add_diagonal(&self, shift: &[f64]) -> Self {
        debug_assert_eq!(shift.len(), self.len());
        Self {
            diag: self.diag.iter().zip(shift).map(|(d, s)| d + s).collect(),
            off: self.off.clone(),
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut y = self.diag[i] * x[i];
                if i > 0 {
                    y += self.off[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    y += self.off[i] * x[i + 1];
                }
                y
            })
            .collect()
    }

    /// Infinity norm.
    pub fn norm_inf(&self) -> f64 {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i].abs();
                if i > 0 {
                    s += self.off[i - 1].abs();
                }
                if i + 1 < n {
                    s += self.off[i].abs();
                }
                s
            })
            .fold(0.0, f64::max)
    }

    /// Unpivoted `LDLᵀ`. Fails only on an exactly zero (or non-finite) pivot;
    /// indefinite matrices factor fine and report their inertia.
    pub fn ldl(&self) -> Result<Ldl> {
        let n = self.len();
        let mut d = Vec::with_capacity(n);
        let mut l = Vec::with_capacity(n.saturating_sub(1));
        let mut prev = self.diag[0];
        d.push(prev);
        for i in 1..n {
            if prev == 0.0 || !prev.is_finite() {
                return Err(Error::Factorization(format!("zero pivot at row {}", i - 1)));
            }
            let li = self.off[i - 1] / prev;
            l.push(li);
            prev = self.diag[i] - li * self.off[i - 1];
            d.push(prev);
        }
        if prev == 0.0 || !prev.is_finite() {
            return Err(Error::Factorization(format!("zero pivot at row {}", n - 1)));
        }
        Ok(Ldl { l, d })
    }

    /// Cholesky-style factorization that insists on positive definiteness.
    pub fn cholesky(&self) -> Result<Ldl> {
        let f = self.ldl()?;
        if f.negative_pivots() > 0 {
            return Err(Error::Factorization(format!(
                "matrix is not positive definite ({} negative pivots)",
                f.negative_pivots()
            )));
        }
        Ok(f)
    }
}

/// `A = L D Lᵀ` with unit lower bidiagonal `L`.
#[derive(Debug, Clone)]
pub struct Ldl {
    l: Vec<f64>,
    d: Vec<f64>,
}

impl Ldl {
    /// Number of negative eigenvalues of the factored matrix.
    pub fn negative_pivots(&self) -> usize {
        self.d.iter().filter(|&&p| p < 0.0).count()
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut x = rhs.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.d.len();
        for i in 1..n {
            x[i] -= self.l[i - 1] * x[i - 1];
        }
        for i in 0..n {
            x[i] /= self.d[i];
        }
        for i in (0..n.saturating_sub(1)).rev() {
            x[i] -= self.l[i] * x[i + 1];
        }
    }

    /// `y = L^{-1} x` with the Cholesky scaling, i.e. `(L D^{1/2})^{-1} x`.
    /// Only meaningful for positive definite factors.
    pub fn forward_scaled(&self, x: &mut [f64]) {
        let n = self.d.len();
        for i in 1..n {
            x[i] -= self.l[i - 1] * x[i - 1];
        }
        for i in 0..n {
            x[i] /= self.d[i].sqrt();
        }
    }

    /// `y = (L D^{1/2})^{-T} x`.
    pub fn backward_scaled(&self, x: &mut [f64]) {
        let n = self.d.len();
        for i in 0..n {
            x[i] /= self.d[i].sqrt();
        }
        for i in (0..n.saturating_sub(1)).rev() {
            x[i] -= self.l[i] * x[i + 1];
        }
    }
}
