//! Diagonal embedding operators `A = sum_{j in L} alpha_j |psi_j><psi_j|`
//! and their kernel `K = A* A`.
//!
//! Only `kernel_eval` and `kernel_diag` are exposed; the embedded states
//! `A|s>` themselves are never formed.

use crate::basis::{BasisRow, BasisSpec, Interval};
use crate::error::{Error, Result};
use crate::learn::DensityCurve;
use crate::samples::SampleSet;

/// Traces at or below this value mean the state lies in the kernel of `A`.
pub const TRACE_FLOOR: f64 = 1e-14;

/// Allowed quadrature mass defect of an input density.
pub const MASS_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingOperator {
    basis: BasisSpec,
    active: Vec<i64>,
    weights: Vec<f64>,
    // alpha_k^2 by position in the basis translate range, zero when inactive
    squared: Vec<f64>,
}

impl EmbeddingOperator {
    pub fn new(basis: BasisSpec, active: Vec<i64>, weights: Vec<f64>) -> Result<Self> {
        if active.is_empty() {
            return Err(Error::InvalidArgument("active set is empty".into()));
        }
        if active.len() != weights.len() {
            return Err(Error::DimensionMismatch {
                expected: active.len(),
                found: weights.len(),
            });
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "weight {w} is negative or not finite"
            )));
        }
        if weights.iter().all(|w| *w == 0.0) {
            return Err(Error::InvalidArgument("all weights are zero".into()));
        }
        let mut squared = vec![0.0; basis.len()];
        let mut seen = vec![false; basis.len()];
        for (&k, &alpha) in active.iter().zip(&weights) {
            let p = basis.position(k).ok_or_else(|| {
                let (lo, hi) = basis.translate_range();
                Error::InvalidArgument(format!("translate {k} outside [{lo}, {hi}]"))
            })?;
            if std::mem::replace(&mut seen[p], true) {
                return Err(Error::InvalidArgument(format!(
                    "translate {k} listed twice"
                )));
            }
            squared[p] = alpha * alpha;
        }
        Ok(Self {
            basis,
            active,
            weights,
            squared,
        })
    }

    /// Orthogonal projection onto the span of `active`.
    pub fn projection(basis: BasisSpec, active: Vec<i64>) -> Result<Self> {
        let weights = vec![1.0; active.len()];
        Self::new(basis, active, weights)
    }

    /// Projection onto the fathers whose support lies inside `interval`.
    pub fn interior_projection(basis: BasisSpec, interval: &Interval) -> Result<Self> {
        Self::projection(basis, basis.interior_translates(interval))
    }

    /// Projection onto every translate of the basis.
    pub fn full_projection(basis: BasisSpec) -> Result<Self> {
        Self::projection(basis, basis.translates().collect())
    }

    pub fn basis(&self) -> &BasisSpec {
        &self.basis
    }

    pub fn active_set(&self) -> &[i64] {
        &self.active
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn is_projection(&self) -> bool {
        self.weights.iter().all(|w| *w == 1.0)
    }

    /// `alpha_k^2`, zero for translates outside the active set.
    pub fn eigenvalue(&self, k: i64) -> f64 {
        self.basis.position(k).map_or(0.0, |p| self.squared[p])
    }

    /// `<s|K|t>` from precomputed basis rows.
    pub fn kernel_rows(&self, a: &BasisRow, b: &BasisRow) -> f64 {
        let mut acc = 0.0;
        for (k, va) in a.iter() {
            for (l, vb) in b.iter() {
                if k == l {
                    acc += self.squared[(k - self.basis.translate_range().0) as usize] * va * vb;
                }
            }
        }
        acc
    }

    /// `<s|K|t> = sum_{j in L} alpha_j^2 psi_j(s) psi_j(t)`.
    pub fn kernel_eval(&self, s: f64, t: f64) -> f64 {
        self.kernel_rows(&self.basis.row(s), &self.basis.row(t))
    }

    /// `<s|K|s>`.
    pub fn kernel_diag(&self, s: f64) -> f64 {
        let row = self.basis.row(s);
        self.kernel_rows(&row, &row)
    }

    /// `tr(A rho A*) = integral of zeta(s) <s|K|s> ds` for the ensemble state of `zeta`.
    pub fn trace_k_rho(&self, zeta: &DensityCurve) -> Result<f64> {
        let grid = zeta.grid();
        let mass = zeta.mass();
        if (mass - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidArgument(format!(
                "density integrates to {mass}, expected 1"
            )));
        }
        let diag: Vec<f64> = grid.points().iter().map(|&s| self.kernel_diag(s)).collect();
        let integrand: Vec<f64> = zeta
            .values()
            .iter()
            .zip(&diag)
            .map(|(z, d)| z * d)
            .collect();
        let trace = grid.trapezoid(&integrand);
        if trace <= TRACE_FLOOR {
            return Err(Error::KernelOfOperator(trace));
        }
        Ok(trace)
    }

    /// `(1/N) sum_i <S_i|K|S_i>`, the trace normalizing the MAP state.
    pub fn trace_k_map(&self, samples: &SampleSet) -> Result<f64> {
        if samples.is_empty() {
            return Err(Error::EmptySamples);
        }
        let total: f64 = samples.points().iter().map(|&s| self.kernel_diag(s)).sum();
        Ok(total / samples.len() as f64)
    }
}
