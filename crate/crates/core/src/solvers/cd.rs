//! Cyclic coordinate descent for penalized least squares on a standardized
//! design, minimizing `(2n)⁻¹‖y − Xβ‖² + Σ p_λ(|βⱼ|)`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::penalty::{PenaltyKind, PenaltySpec};
use super::SparseVec;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CdOptions {
    /// Stop when no coefficient moves more than this in a full sweep.
    pub tol: f64,
    /// Cap on the number of sweeps (full or active-set).
    pub max_iter: usize,
    /// A solve only counts as converged once the KKT residual is below this.
    pub kkt_tol: f64,
}

impl Default for CdOptions {
    fn default() -> Self {
        CdOptions {
            tol: 1e-7,
            max_iter: 10_000,
            kkt_tol: 1e-7,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CdResult {
    pub coefficients: SparseVec,
    pub converged: bool,
    pub iterations: usize,
}

/// Tolerance on the standardization check of the design columns.
const STANDARDIZED_TOL: f64 = 1e-6;

fn check_inputs(x: &DMatrix<f64>, y: &DVector<f64>, lambda: f64) -> Result<()> {
    if x.nrows() != y.len() || x.nrows() == 0 {
        return Err(Error::InvalidData(format!(
            "design has {} rows, response has {}",
            x.nrows(),
            y.len()
        )));
    }
    if !x.iter().chain(y.iter()).all(|v| v.is_finite()) {
        return Err(Error::InvalidData("non-finite value in design or response".into()));
    }
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!("lambda = {lambda} must be positive")));
    }
    let n = x.nrows() as f64;
    for (j, col) in x.column_iter().enumerate() {
        let m2 = col.norm_squared() / n;
        if m2 != 0.0 && (m2 - 1.0).abs() > STANDARDIZED_TOL {
            return Err(Error::InvalidData(format!(
                "column {j} has second moment {m2}; standardize the design first"
            )));
        }
    }
    Ok(())
}

/// Mutable solver state: coefficients and the matching residual.
///
/// Exposed so callers can drive individual sweeps; [`coordinate_descent`] and
/// the path routines are built on it.
pub struct CoordinateDescent<'a> {
    x: &'a DMatrix<f64>,
    n: usize,
    penalty: PenaltySpec,
    lambda: f64,
    usable: Vec<bool>,
    beta: Vec<f64>,
    resid: Vec<f64>,
    y: &'a DVector<f64>,
}

impl<'a> CoordinateDescent<'a> {
    pub fn new(
        x: &'a DMatrix<f64>,
        y: &'a DVector<f64>,
        penalty: PenaltySpec,
        lambda: f64,
        warm_start: Option<&[f64]>,
    ) -> Result<Self> {
        penalty.validate()?;
        check_inputs(x, y, lambda)?;
        let (n, p) = x.shape();
        let usable = x.column_iter().map(|c| c.iter().any(|&v| v != 0.0)).collect();
        let mut state = CoordinateDescent {
            x,
            n,
            penalty,
            lambda,
            usable,
            beta: vec![0.0; p],
            resid: y.iter().copied().collect(),
            y,
        };
        if let Some(w) = warm_start {
            if w.len() != p {
                return Err(Error::InvalidArgument(format!(
                    "warm start has length {}, expected {p}",
                    w.len()
                )));
            }
            state.set_beta(w);
        }
        Ok(state)
    }

    fn col(&self, j: usize) -> &[f64] {
        &self.x.as_slice()[j * self.n..(j + 1) * self.n]
    }

    /// Replaces the coefficients and recomputes the residual.
    pub fn set_beta(&mut self, beta: &[f64]) {
        self.resid.copy_from_slice(self.y.as_slice());
        for (j, &b) in beta.iter().enumerate() {
            let b = if self.usable[j] { b } else { 0.0 };
            self.beta[j] = b;
            if b != 0.0 {
                let x = &self.x.as_slice()[j * self.n..(j + 1) * self.n];
                for (r, xi) in self.resid.iter_mut().zip(x) {
                    *r -= b * xi;
                }
            }
        }
    }

    pub fn set_lambda(&mut self, lambda: f64) {
        self.lambda = lambda;
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    /// `xⱼᵀ r / n`, the negative loss gradient for coordinate `j`.
    pub fn gradient(&self, j: usize) -> f64 {
        dot(self.col(j), &self.resid) / self.n as f64
    }

    fn update(&mut self, j: usize) -> f64 {
        if !self.usable[j] {
            return 0.0;
        }
        let old = self.beta[j];
        let z = self.gradient(j) + old;
        let new = self.penalty.threshold(z, self.lambda);
        let delta = new - old;
        if delta != 0.0 {
            let n = self.n;
            let x = &self.x.as_slice()[j * n..(j + 1) * n];
            for (r, xi) in self.resid.iter_mut().zip(x) {
                *r -= delta * xi;
            }
            self.beta[j] = new;
        }
        delta.abs()
    }

    /// One cyclic pass over `coords`; returns the largest coefficient change.
    pub fn sweep(&mut self, coords: &[usize]) -> f64 {
        coords.iter().fold(0.0, |acc, &j| acc.max(self.update(j)))
    }

    pub fn objective(&self) -> f64 {
        let loss = dot(&self.resid, &self.resid) / (2.0 * self.n as f64);
        let pen: f64 = self
            .beta
            .iter()
            .map(|b| self.penalty.value(b.abs(), self.lambda))
            .sum();
        loss + pen
    }

    /// Stationarity violation of coordinate `j` given its gradient `g`.
    fn kkt_violation(&self, j: usize, g: f64) -> f64 {
        kkt_coordinate(self.beta[j], g, &self.penalty, self.lambda)
    }

    /// Solves at the current `λ`, cycling over `candidates` first and adding
    /// any coordinate outside it that violates the optimality conditions.
    /// Returns `(converged, sweeps, gradients)`, where `gradients` are the
    /// final loss gradients for every coordinate.
    pub(crate) fn solve(
        &mut self,
        candidates: &mut Vec<usize>,
        opts: &CdOptions,
    ) -> (bool, usize, Vec<f64>) {
        let p = self.beta.len();
        let mut in_set = vec![false; p];
        for &j in candidates.iter() {
            in_set[j] = true;
        }
        let mut iters = 0usize;
        let mut tol = opts.tol;
        loop {
            // Converge on the candidate set.
            loop {
                let change = self.sweep(candidates);
                iters += 1;
                if change < tol {
                    break;
                }
                let active: Vec<usize> = candidates
                    .iter()
                    .copied()
                    .filter(|&j| self.beta[j] != 0.0)
                    .collect();
                while iters < opts.max_iter {
                    let change = self.sweep(&active);
                    iters += 1;
                    if change < tol {
                        break;
                    }
                }
                if iters >= opts.max_iter {
                    let grads = self.all_gradients();
                    return (false, iters, grads);
                }
            }
            let grads = self.all_gradients();
            let mut added = false;
            let mut worst = 0.0f64;
            for (j, &g) in grads.iter().enumerate() {
                if !self.usable[j] {
                    continue;
                }
                let v = self.kkt_violation(j, g);
                if !in_set[j] && v > 0.0 {
                    in_set[j] = true;
                    candidates.push(j);
                    added = true;
                }
                worst = worst.max(v);
            }
            if added {
                candidates.sort_unstable();
                continue;
            }
            if worst <= opts.kkt_tol {
                return (true, iters, grads);
            }
            if iters >= opts.max_iter || tol < 1e-15 {
                return (false, iters, grads);
            }
            tol /= 10.0;
        }
    }

    fn all_gradients(&self) -> Vec<f64> {
        (0..self.beta.len()).map(|j| self.gradient(j)).collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn kkt_coordinate(beta: f64, g: f64, penalty: &PenaltySpec, lambda: f64) -> f64 {
    if beta == 0.0 {
        (g.abs() - penalty.derivative(0.0, lambda)).max(0.0)
    } else {
        let d = match penalty.kind {
            PenaltyKind::Lasso => lambda,
            PenaltyKind::Scad => penalty.derivative(beta.abs(), lambda),
        };
        (g - d * beta.signum()).abs()
    }
}

/// Largest `λ` with a nonzero solution: `max_j |xⱼᵀ y| / n`.
pub fn lambda_max(x: &DMatrix<f64>, y: &DVector<f64>) -> f64 {
    let n = x.nrows() as f64;
    x.column_iter()
        .map(|c| c.dot(y).abs() / n)
        .fold(0.0, f64::max)
}

/// Penalized least squares at a single `λ` on a standardized design.
pub fn coordinate_descent(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    penalty: PenaltySpec,
    lambda: f64,
    warm_start: Option<&[f64]>,
    opts: &CdOptions,
) -> Result<CdResult> {
    let mut cd = CoordinateDescent::new(x, y, penalty, lambda, warm_start)?;
    let mut candidates: Vec<usize> = (0..x.ncols()).collect();
    let (converged, iterations, _) = cd.solve(&mut candidates, opts);
    Ok(CdResult {
        coefficients: SparseVec::from_dense(cd.beta()),
        converged,
        iterations,
    })
}

/// Largest violation of the first-order optimality conditions.
///
/// For a zero coefficient this is how far `xⱼᵀr/n` lies outside
/// `[−p′_λ(0), p′_λ(0)]`; for a nonzero one it is `|xⱼᵀr/n − p′_λ(|βⱼ|) sign βⱼ|`.
pub fn kkt_residual(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    coefficients: &[f64],
    penalty: &PenaltySpec,
    lambda: f64,
) -> f64 {
    let n = x.nrows() as f64;
    let resid = y - x * DVector::from_column_slice(coefficients);
    x.column_iter()
        .zip(coefficients)
        .filter(|(c, _)| c.iter().any(|&v| v != 0.0))
        .map(|(c, &b)| kkt_coordinate(b, c.dot(&resid) / n, penalty, lambda))
        .fold(0.0, f64::max)
}

/// `(2n)⁻¹‖y − Xβ‖² + Σ p_λ(|βⱼ|)`.
pub fn penalized_objective(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    coefficients: &[f64],
    penalty: &PenaltySpec,
    lambda: f64,
) -> f64 {
    let resid = y - x * DVector::from_column_slice(coefficients);
    resid.norm_squared() / (2.0 * x.nrows() as f64)
        + coefficients
            .iter()
            .map(|b| penalty.value(b.abs(), lambda))
            .sum::<f64>()
}
