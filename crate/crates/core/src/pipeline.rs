//! Two-stage feature selection: screening (SIS, then LASSO) followed by a
//! SCAD path whose tuning parameter is chosen by EBIC.
//!
//! The SCAD path and the OLS refits do not depend on `γ`, so they are built
//! once as a [`CandidateSet`] and can be scored under several policies.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::ebic::{ebic_score, GammaPolicy};
use crate::error::{Error, Result};
use crate::linmodel::ols_fit;
use crate::simgen::Dataset;
use crate::solvers::{run_path, CdOptions, PathConfig, PathStop, PenaltySpec, Standardized};
use crate::support::SupportSet;

/// Interpolating fits are scored as if `RSS = RSS_FLOOR · ‖y‖²`.
pub const RSS_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// SIS keeps `⌈n^e⌉` features.
    pub sis_budget_exponent: f64,
    /// LASSO screening keeps `⌊f·n⌋` features.
    pub screen_fraction: f64,
    pub gamma_policy: GammaPolicy,
    pub penalty: PenaltySpec,
    pub num_lambdas: usize,
    pub lambda_min_ratio: f64,
    /// Bisection depth of the SCAD path between grid points.
    pub path_refinement: usize,
    /// Total extra SCAD solves allowed for bisection.
    pub refinement_budget: usize,
    pub cd: CdOptions,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            sis_budget_exponent: 1.5,
            screen_fraction: 0.5,
            gamma_policy: GammaPolicy::ScaledConsistent(4.0),
            penalty: PenaltySpec::scad(crate::solvers::DEFAULT_SCAD_A).expect("default a > 2"),
            num_lambdas: 100,
            lambda_min_ratio: 1e-3,
            path_refinement: 6,
            refinement_budget: 200,
            cd: CdOptions::default(),
        }
    }
}

impl PipelineConfig {
    pub fn screen_target(&self, n: usize) -> usize {
        (self.screen_fraction * n as f64).floor() as usize
    }

    pub fn sis_budget(&self, n: usize) -> usize {
        (n as f64).powf(self.sis_budget_exponent).ceil() as usize
    }

    fn path_config(&self, max_support: usize) -> PathConfig {
        PathConfig {
            num_lambdas: self.num_lambdas,
            lambda_min_ratio: self.lambda_min_ratio,
            max_support,
            refine_depth: self.path_refinement,
            refine_budget: self.refinement_budget,
            cd: self.cd,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        self.gamma_policy.validate()?;
        self.penalty
            .validate()
            .map_err(|e| Error::config("scad_a", e.to_string()))?;
        self.path_config(0).validate()?;
        let target = self.screen_target(n);
        if target == 0 || target >= n {
            return Err(Error::config(
                "screen_fraction",
                format!("screening target {target} must lie in [1, n) for n = {n}"),
            ));
        }
        if self.sis_budget(n) < target {
            return Err(Error::config(
                "sis_budget_exponent",
                "SIS budget is smaller than the screening target",
            ));
        }
        Ok(())
    }
}

/// Ranks features by absolute marginal correlation with `y` and keeps the
/// top `budget`. Constant columns rank last. Ties go to the lower index.
pub fn sis_screen(x: &DMatrix<f64>, y: &DVector<f64>, budget: usize) -> Result<SupportSet> {
    if budget == 0 {
        return Err(Error::InvalidArgument("SIS budget must be at least 1".into()));
    }
    let p = x.ncols();
    if budget >= p {
        return Ok(SupportSet::from_indices(0..p));
    }
    let n = x.nrows() as f64;
    let y_mean = y.sum() / n;
    let yc = y.map(|v| v - y_mean);
    let y_norm = yc.norm();
    let mut scored: Vec<(usize, f64)> = x
        .column_iter()
        .enumerate()
        .map(|(j, col)| {
            let mean = col.sum() / n;
            let (mut cross, mut ss) = (0.0, 0.0);
            for (xi, yi) in col.iter().zip(yc.iter()) {
                let d = xi - mean;
                cross += d * yi;
                ss += d * d;
            }
            let denom = ss.sqrt() * y_norm;
            let corr = if denom > 0.0 { (cross / denom).abs() } else { 0.0 };
            (j, if corr.is_finite() { corr } else { 0.0 })
        })
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(scored.into_iter().take(budget).map(|(j, _)| j).collect())
}

/// Runs a descending LASSO path on `x` (all of its columns are candidates)
/// and returns column positions: the support at the first `λ` reaching
/// `target` features, trimmed to the `target` largest coefficients.
pub fn lasso_screen(x: &DMatrix<f64>, y: &DVector<f64>, target: usize, num_lambdas: usize, lambda_min_ratio: f64, cd: &CdOptions) -> Result<SupportSet> {
    let p = x.ncols();
    if target >= p {
        return Ok(SupportSet::from_indices(0..p));
    }
    if target >= x.nrows() {
        return Err(Error::InvalidArgument(format!(
            "LASSO target {target} must be below n = {}",
            x.nrows()
        )));
    }
    let st = Standardized::new(x, y)?;
    let path = run_path(&st.x, &st.y, PenaltySpec::lasso(), num_lambdas, lambda_min_ratio, (0, 0), cd, |s| {
        if s.len() >= target {
            PathStop::After
        } else {
            PathStop::Continue
        }
    })?;
    let Some(last) = path.coefficients.last() else {
        return Ok(SupportSet::empty());
    };
    if last.nnz() >= target {
        let mut entries = last.entries.clone();
        entries.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()).then(a.0.cmp(&b.0)));
        return Ok(entries.into_iter().take(target).map(|(j, _)| j).collect());
    }
    // Saturated below target: keep the largest support seen.
    let largest = path.supports.iter().fold(None::<&SupportSet>, |best, s| match best {
        Some(b) if b.len() >= s.len() => Some(b),
        _ => Some(s),
    });
    Ok(largest.cloned().unwrap_or_default())
}

/// Why a candidate support was not scored.
#[derive(Debug, Clone, PartialEq)]
pub enum SkipReason {
    RankDeficient,
}

/// A distinct support from the SCAD path with its unpenalized refit.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    /// Largest `λ` on the path producing this support.
    pub lambda: f64,
    /// Original column indices.
    pub support: SupportSet,
    /// Refit RSS, floored at `RSS_FLOOR · ‖y‖²`; `None` if skipped.
    pub rss: Option<f64>,
    pub skipped: Option<SkipReason>,
}

/// Everything needed to score the path under any `γ`.
#[derive(Debug, Clone)]
pub struct CandidateSet {
    pub n: usize,
    pub p_original: usize,
    pub screened: SupportSet,
    pub candidates: Vec<Candidate>,
    /// `(λ, index into candidates)` for every point of the path.
    pub path: Vec<(f64, usize)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaScore {
    pub lambda: f64,
    pub support_size: usize,
    /// `None` when the support was skipped.
    pub ebic: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    pub selected: SupportSet,
    pub lambda_star: f64,
    pub ebic_star: f64,
    pub gamma: f64,
    pub screened: SupportSet,
    pub per_lambda_scores: Vec<LambdaScore>,
    pub skipped: usize,
}

/// Runs the SCAD path on the `screened` columns and refits every distinct
/// support by OLS on the original design.
pub fn build_candidates(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    screened: &SupportSet,
    p_original: usize,
    config: &PipelineConfig,
) -> Result<CandidateSet> {
    let n = x.nrows();
    if screened.len() >= n {
        return Err(Error::InvalidArgument(format!(
            "{} screened features is not below n = {n}",
            screened.len()
        )));
    }
    let st = Standardized::from_columns(x, y, screened.indices())?;
    let cap = config.screen_target(n).max(1).min(n - 1);
    let path = crate::solvers::lambda_path(&st.x, &st.y, config.penalty, &config.path_config(cap))?;
    let floor = RSS_FLOOR * y.norm_squared();
    let mut index: HashMap<SupportSet, usize> = HashMap::new();
    let mut candidates = Vec::new();
    let mut points = Vec::with_capacity(path.len());
    for (lambda, local) in path.lambdas.iter().zip(&path.supports) {
        let support = local.lift(screened);
        let k = match index.get(&support) {
            Some(&k) => k,
            None => {
                let (rss, skipped) = match ols_fit(x, y, &support) {
                    Ok(fit) => (Some(fit.rss.max(floor)), None),
                    Err(Error::RankDeficient { .. }) => (None, Some(SkipReason::RankDeficient)),
                    Err(e) => return Err(e),
                };
                candidates.push(Candidate {
                    lambda: *lambda,
                    support: support.clone(),
                    rss,
                    skipped,
                });
                index.insert(support, candidates.len() - 1);
                candidates.len() - 1
            }
        };
        points.push((*lambda, k));
    }
    Ok(CandidateSet {
        n,
        p_original,
        screened: screened.clone(),
        candidates,
        path: points,
    })
}

impl CandidateSet {
    /// Picks the candidate with the smallest EBIC; ties go to the smaller
    /// support.
    pub fn select(&self, gamma: f64) -> Result<SelectionResult> {
        let scores: Vec<Option<f64>> = self
            .candidates
            .iter()
            .map(|c| {
                c.rss
                    .map(|rss| ebic_score(rss, self.n, self.p_original, c.support.len(), gamma))
                    .transpose()
            })
            .collect::<Result<_>>()?;
        let best = scores
            .iter()
            .enumerate()
            .filter_map(|(k, s)| s.map(|v| (k, v)))
            .min_by(|a, b| {
                a.1.total_cmp(&b.1)
                    .then(self.candidates[a.0].support.len().cmp(&self.candidates[b.0].support.len()))
            });
        let skipped = scores.iter().filter(|s| s.is_none()).count();
        let Some((k, ebic_star)) = best else {
            return Err(Error::EmptyPath { skipped });
        };
        let per_lambda_scores = self
            .path
            .iter()
            .map(|&(lambda, c)| LambdaScore {
                lambda,
                support_size: self.candidates[c].support.len(),
                ebic: scores[c],
            })
            .collect();
        Ok(SelectionResult {
            selected: self.candidates[k].support.clone(),
            lambda_star: self.candidates[k].lambda,
            ebic_star,
            gamma,
            screened: self.screened.clone(),
            per_lambda_scores,
            skipped,
        })
    }
}

/// The selection stage: SCAD path on the screened features, `λ` chosen by
/// EBIC with `p_original` in the model-class term.
pub fn select_by_ebic(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    screened: &SupportSet,
    p_original: usize,
    config: &PipelineConfig,
) -> Result<SelectionResult> {
    let gamma = config.gamma_policy.resolve(x.nrows(), p_original);
    build_candidates(x, y, screened, p_original, config)?.select(gamma)
}

/// Both screening steps; returns original column indices.
pub fn screen(x: &DMatrix<f64>, y: &DVector<f64>, config: &PipelineConfig) -> Result<SupportSet> {
    let n = x.nrows();
    config.validate(n)?;
    let target = config.screen_target(n);
    let sis = sis_screen(x, y, config.sis_budget(n))?;
    if sis.len() <= target {
        return Ok(sis);
    }
    let reduced = x.select_columns(sis.indices());
    let local = lasso_screen(&reduced, y, target, config.num_lambdas, config.lambda_min_ratio, &config.cd)?;
    Ok(local.lift(&sis))
}

/// Screening plus candidate construction, ready to be scored under any `γ`.
pub fn prepare(x: &DMatrix<f64>, y: &DVector<f64>, config: &PipelineConfig) -> Result<CandidateSet> {
    let screened = screen(x, y, config)?;
    build_candidates(x, y, &screened, x.ncols(), config)
}

pub fn run_two_stage(dataset: &Dataset, config: &PipelineConfig) -> Result<SelectionResult> {
    let gamma = config.gamma_policy.resolve(dataset.n(), dataset.p());
    prepare(&dataset.x, &dataset.y, config)?.select(gamma)
}

/// Runs the pipeline once and scores the shared path under each policy.
pub fn run_two_stage_multi(
    dataset: &Dataset,
    config: &PipelineConfig,
    policies: &[GammaPolicy],
) -> Result<Vec<Result<SelectionResult>>> {
    let candidates = prepare(&dataset.x, &dataset.y, config)?;
    Ok(policies
        .iter()
        .map(|g| candidates.select(g.resolve(dataset.n(), dataset.p())))
        .collect())
}

/// Positive and false discovery rates. An empty selection has FDR 0.
pub fn pdr_fdr(selected: &SupportSet, truth: &SupportSet) -> Result<(f64, f64)> {
    if truth.is_empty() {
        return Err(Error::InvalidArgument("true support is empty".into()));
    }
    let hits = selected.intersection_len(truth);
    let pdr = hits as f64 / truth.len() as f64;
    let fdr = if selected.is_empty() {
        0.0
    } else {
        (selected.len() - hits) as f64 / selected.len() as f64
    };
    Ok((pdr, fdr))
}
