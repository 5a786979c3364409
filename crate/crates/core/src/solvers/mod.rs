//! Penalized least-squares engines: LASSO and SCAD by coordinate descent.
//!
//! All routines expect a standardized design (columns with mean zero and
//! unit second moment) and a centered response; [`Standardized`] produces
//! one and maps coefficients back to the original scale.

mod cd;
mod path;
mod penalty;
mod standardize;

pub use cd::{
    coordinate_descent, kkt_residual, lambda_max, penalized_objective, CdOptions, CdResult,
    CoordinateDescent,
};
pub(crate) use path::{run_path, PathStop};
pub use path::{lambda_grid, lambda_path, PathConfig, PathResult};
pub use penalty::{
    scad_derivative, scad_threshold, scad_value, soft_threshold, PenaltyKind, PenaltySpec,
    DEFAULT_SCAD_A,
};
pub use standardize::Standardized;

use crate::support::SupportSet;

/// Nonzero entries of a coefficient vector of dimension `dim`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseVec {
    pub dim: usize,
    pub entries: Vec<(usize, f64)>,
}

impl SparseVec {
    pub fn from_dense(v: &[f64]) -> Self {
        SparseVec {
            dim: v.len(),
            entries: v
                .iter()
                .enumerate()
                .filter(|(_, &b)| b != 0.0)
                .map(|(j, &b)| (j, b))
                .collect(),
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        for &(j, b) in &self.entries {
            v[j] = b;
        }
        v
    }

    pub fn support(&self) -> SupportSet {
        SupportSet::from_indices(self.entries.iter().map(|&(j, _)| j))
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }
}
