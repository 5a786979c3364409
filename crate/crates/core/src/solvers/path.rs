use nalgebra::{DMatrix, DVector};

use super::cd::{lambda_max, CdOptions, CoordinateDescent};
use super::penalty::PenaltySpec;
use super::SparseVec;
use crate::error::{Error, Result};
use crate::support::SupportSet;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathConfig {
    pub num_lambdas: usize,
    /// Smallest grid value as a fraction of `λ_max`.
    pub lambda_min_ratio: f64,
    /// The path stops before the first `λ` whose support exceeds this.
    pub max_support: usize,
    /// Maximum bisection depth between grid points; see [`lambda_path`].
    pub refine_depth: usize,
    /// Cap on the total number of extra solves spent on bisection.
    pub refine_budget: usize,
    pub cd: CdOptions,
}

impl PathConfig {
    /// Defaults for `n` observations: 100 values down to `10⁻³ λ_max`,
    /// supports capped at `⌊n/2⌋`.
    pub fn for_sample_size(n: usize) -> Self {
        PathConfig {
            num_lambdas: 100,
            lambda_min_ratio: 1e-3,
            max_support: n / 2,
            refine_depth: 0,
            refine_budget: 0,
            cd: CdOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_lambdas == 0 {
            return Err(Error::config("num_lambdas", "must be at least 1"));
        }
        if !(self.lambda_min_ratio > 0.0 && self.lambda_min_ratio < 1.0) {
            return Err(Error::config("lambda_min_ratio", "must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// Solutions along a decreasing `λ` grid.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PathResult {
    pub lambdas: Vec<f64>,
    pub supports: Vec<SupportSet>,
    pub coefficients: Vec<SparseVec>,
    pub converged: Vec<bool>,
}

impl PathResult {
    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }
}

/// Log-spaced grid from `lambda_max` down to `lambda_max · ratio`.
pub fn lambda_grid(lambda_max: f64, num: usize, ratio: f64) -> Vec<f64> {
    if num == 1 {
        return vec![lambda_max];
    }
    let step = ratio.ln() / (num - 1) as f64;
    (0..num)
        .map(|k| lambda_max * (step * k as f64).exp())
        .collect()
}

pub(crate) enum PathStop {
    Continue,
    /// Discard this point and stop.
    Before,
    /// Keep this point and stop.
    After,
}

fn support_change(a: &SupportSet, b: &SupportSet) -> usize {
    a.len() + b.len() - 2 * a.intersection_len(b)
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn run_path(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    penalty: PenaltySpec,
    num_lambdas: usize,
    lambda_min_ratio: f64,
    refine: (usize, usize),
    opts: &CdOptions,
    mut stop: impl FnMut(&SupportSet) -> PathStop,
) -> Result<PathResult> {
    let lmax = lambda_max(x, y);
    // With X'y = 0 every positive lambda gives the empty solution.
    let grid = if lmax > 0.0 {
        lambda_grid(lmax, num_lambdas, lambda_min_ratio)
    } else {
        vec![1.0]
    };
    let mut cd = CoordinateDescent::new(x, y, penalty, grid[0], None)?;
    let p = x.ncols();
    let mut grads: Vec<f64> = (0..p).map(|j| cd.gradient(j)).collect();
    let mut prev_lambda = grid[0];
    let mut prev_beta = cd.beta().to_vec();
    let mut prev_support: Option<SupportSet> = None;
    let (refine_depth, mut refine_budget) = refine;
    let mut out = PathResult::default();
    for &target in &grid {
        // Stack of pending values; bisection pushes midpoints on top.
        let mut pending = vec![target];
        while let Some(&lambda) = pending.last() {
            cd.set_lambda(lambda);
            // Sequential strong rule; the KKT pass inside `solve` repairs misses.
            let cutoff = 2.0 * lambda - prev_lambda;
            let mut candidates: Vec<usize> = (0..p)
                .filter(|&j| cd.beta()[j] != 0.0 || grads[j].abs() >= cutoff)
                .collect();
            // At λ_max the solution is zero; solving could let rounding in
            // the residual admit the leading feature.
            let (converged, g) = if lambda >= lmax {
                (true, grads.clone())
            } else {
                let (converged, _, g) = cd.solve(&mut candidates, opts);
                (converged, g)
            };
            let coef = SparseVec::from_dense(cd.beta());
            let support = coef.support();
            if let Some(prev) = &prev_support {
                if refine_budget > 0
                    && pending.len() <= refine_depth
                    && support_change(prev, &support) > 1
                {
                    refine_budget -= 1;
                    cd.set_beta(&prev_beta);
                    pending.push((prev_lambda * lambda).sqrt());
                    continue;
                }
            }
            pending.pop();
            grads = g;
            prev_lambda = lambda;
            prev_beta.copy_from_slice(cd.beta());
            let decision = stop(&support);
            if matches!(decision, PathStop::Before) {
                return Ok(out);
            }
            out.lambdas.push(lambda);
            out.supports.push(support.clone());
            out.coefficients.push(coef);
            out.converged.push(converged);
            prev_support = Some(support);
            if matches!(decision, PathStop::After) {
                return Ok(out);
            }
        }
    }
    Ok(out)
}

/// Warm-started solutions over a log-spaced `λ` grid, truncated before the
/// first support larger than `cfg.max_support`.
///
/// With `cfg.refine_depth > 0`, whenever the support changes by more than
/// one feature between neighbouring points the interval is bisected
/// geometrically, up to that depth and until `cfg.refine_budget` extra
/// solves are spent, so the path passes through the intermediate supports.
/// The budget is consumed from `λ_max` downwards, where supports are small. Inserted values appear in `lambdas` in decreasing
/// order like grid points.
pub fn lambda_path(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    penalty: PenaltySpec,
    cfg: &PathConfig,
) -> Result<PathResult> {
    cfg.validate()?;
    let cap = cfg.max_support;
    run_path(x, y, penalty, cfg.num_lambdas, cfg.lambda_min_ratio, (cfg.refine_depth, cfg.refine_budget), &cfg.cd, |s| {
        if s.len() > cap {
            PathStop::Before
        } else {
            PathStop::Continue
        }
    })
}
