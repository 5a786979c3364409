//! Monte Carlo study over `(structure, c, n, h)` settings.
//!
//! Every replicate draws from its own stream, derived from the master seed,
//! the setting and the replicate index, so results do not depend on worker
//! count or scheduling. All `γ` policies are scored on the same replicate
//! datasets.

use std::io::{Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ebic::GammaPolicy;
use crate::error::{Error, Result};
use crate::pipeline::{pdr_fdr, run_two_stage_multi, PipelineConfig};
use crate::simgen::{
    calibrate_sigma2, covariance_factor, divergence_schedule, generate_with_beta, place_support,
    sample_beta, BetaSpec, CovarianceKind, CovarianceSpec, FactorHandle, Placement,
};

pub type RandomStream = ChaCha8Rng;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent stream for `(master_seed, setting_id, replicate_index)`.
///
/// The triple is folded through SplitMix64, one word at a time, and the
/// resulting state expanded into a 256-bit ChaCha8 seed. This derivation is
/// part of the reproducibility contract and must not change.
pub fn derive_stream(master_seed: u64, setting_id: u64, replicate_index: u64) -> RandomStream {
    let mut state = master_seed;
    let a = splitmix64(&mut state);
    state = a ^ setting_id;
    let b = splitmix64(&mut state);
    state = b ^ replicate_index;
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}

/// FNV-1a, used to turn setting keys into stream identifiers.
fn fnv1a(text: &str) -> u64 {
    text.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

/// Reserved replicate indices for setting-level draws.
const COVARIANCE_STREAM: u64 = u64::MAX;
const FIXED_BETA_STREAM: u64 = u64::MAX - 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Setting {
    pub structure: CovarianceKind,
    pub c: usize,
    pub n: usize,
    pub h: f64,
}

impl Setting {
    pub fn id(&self) -> u64 {
        fnv1a(&format!("{}|{}|{}|{:.6}", self.structure, self.c, self.n, self.h))
    }

    /// The covariance realization is shared by every setting with the same
    /// structure and sample size.
    fn covariance_id(structure: CovarianceKind, n: usize) -> u64 {
        fnv1a(&format!("covariance|{structure}|{n}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledPolicy {
    pub label: String,
    pub policy: GammaPolicy,
}

impl LabeledPolicy {
    pub fn new(label: &str, policy: GammaPolicy) -> Self {
        LabeledPolicy {
            label: label.to_string(),
            policy,
        }
    }

    /// BIC (`γ = 0`), the scaled-consistent `γ` with divisor 4, and mBIC (`γ = 1`).
    pub fn standard_trio() -> Vec<LabeledPolicy> {
        vec![
            LabeledPolicy::new("BIC", GammaPolicy::bic()),
            LabeledPolicy::new("SC", GammaPolicy::ScaledConsistent(4.0)),
            LabeledPolicy::new("mBIC", GammaPolicy::mbic()),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub structures: Vec<CovarianceKind>,
    pub c_values: Vec<usize>,
    pub n_values: Vec<usize>,
    pub h_values: Vec<f64>,
    pub gamma_policies: Vec<LabeledPolicy>,
    pub replicates: usize,
    pub master_seed: u64,
    pub rho: f64,
    pub block_size: usize,
    pub eig_min: f64,
    pub eig_max: f64,
    /// `n_ref` is replaced by each setting's own `n`.
    pub beta: BetaSpec,
    pub placement: Placement,
    /// Draw one coefficient vector per setting instead of per replicate.
    pub fixed_beta: bool,
    /// Sample size at which the noise variance is calibrated.
    pub reference_n: usize,
    pub pipeline: PipelineConfig,
    /// Worker threads; 0 uses all available cores.
    pub workers: usize,
    /// Force noise variance to this value instead of calibrating from `h`.
    pub sigma2_override: Option<f64>,
}

impl StudyConfig {
    /// Small grid for a laptop: Structure I, `c = 1`, `n ∈ {100, 200}`, 50 replicates.
    pub fn desk() -> Self {
        StudyConfig {
            structures: vec![CovarianceKind::PowerDecay],
            c_values: vec![1],
            n_values: vec![100, 200],
            h_values: vec![0.4, 0.6, 0.8],
            gamma_policies: LabeledPolicy::standard_trio(),
            replicates: 50,
            master_seed: 20_100_915,
            rho: 0.5,
            block_size: 50,
            eig_min: 1.0,
            eig_max: 50.0,
            beta: BetaSpec::for_sample_size(100),
            placement: Placement::First,
            fixed_beta: false,
            reference_n: 100,
            pipeline: PipelineConfig::default(),
            workers: 0,
            sigma2_override: None,
        }
    }

    /// The complete published grid with 200 replicates per setting.
    pub fn full() -> Self {
        StudyConfig {
            structures: CovarianceKind::ALL.to_vec(),
            c_values: vec![1, 2],
            n_values: vec![100, 200, 500, 1000],
            replicates: 200,
            ..Self::desk()
        }
    }

    pub fn settings(&self) -> Vec<Setting> {
        let mut out = Vec::new();
        for &structure in &self.structures {
            for &c in &self.c_values {
                for &n in &self.n_values {
                    for &h in &self.h_values {
                        out.push(Setting { structure, c, n, h });
                    }
                }
            }
        }
        out
    }

    fn covariance_spec(&self, kind: CovarianceKind, p: usize) -> CovarianceSpec {
        CovarianceSpec {
            kind,
            p,
            rho: self.rho,
            block_size: self.block_size,
            eig_min: self.eig_min,
            eig_max: self.eig_max,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::config("replicates", "must be at least 1"));
        }
        for (key, empty) in [
            ("structures", self.structures.is_empty()),
            ("c_values", self.c_values.is_empty()),
            ("n_values", self.n_values.is_empty()),
            ("h_values", self.h_values.is_empty()),
            ("gamma_policies", self.gamma_policies.is_empty()),
        ] {
            if empty {
                return Err(Error::config(key, "must not be empty"));
            }
        }
        for g in &self.gamma_policies {
            g.policy.validate()?;
        }
        for &n in &self.n_values {
            for &c in &self.c_values {
                let entry = divergence_schedule(n, c)?;
                self.pipeline.validate(n)?;
                self.covariance_spec(CovarianceKind::PowerDecay, entry.p).validate()?;
            }
        }
        for &h in &self.h_values {
            if !(h > 0.0 && h < 1.0) && self.sigma2_override.is_none() {
                return Err(Error::config("h_values", format!("heritability {h} not in (0, 1)")));
            }
        }
        if let Some(s) = self.sigma2_override {
            if !(s >= 0.0) {
                return Err(Error::config("sigma2_override", "must be nonnegative"));
            }
        }
        self.beta.validate()?;
        divergence_schedule(self.reference_n, 1)?;
        Ok(())
    }

    fn factor(&self, structure: CovarianceKind, n: usize, p: usize) -> Result<FactorHandle> {
        let mut rng = derive_stream(self.master_seed, Setting::covariance_id(structure, n), COVARIANCE_STREAM);
        covariance_factor(&self.covariance_spec(structure, p), &mut rng)
    }

    /// Noise variance for a setting, calibrated at `reference_n` with the
    /// setting's own `c`.
    pub fn sigma2(&self, setting: &Setting) -> Result<f64> {
        if let Some(s) = self.sigma2_override {
            return Ok(s);
        }
        let reference = divergence_schedule(self.reference_n, setting.c)?;
        let factor = self.factor(setting.structure, reference.n, reference.p)?;
        calibrate_sigma2(setting.h, &factor, &self.beta, &reference, self.placement)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub structure: CovarianceKind,
    pub c: usize,
    pub n: usize,
    pub h: f64,
    pub gamma_label: String,
    pub replicate: usize,
    pub pdr: f64,
    pub fdr: f64,
    pub selected_size: usize,
    pub lambda_star: f64,
    /// `ok`, or `error: <message>`.
    pub status: String,
}

impl ReplicateRecord {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettingSummary {
    pub structure: CovarianceKind,
    pub c: usize,
    pub n: usize,
    pub h: f64,
    pub gamma_label: String,
    pub pdr_mean: f64,
    pub pdr_sd: f64,
    pub fdr_mean: f64,
    pub fdr_sd: f64,
    pub replicates_completed: usize,
    pub failures: usize,
    /// Set when more than 10% of replicates failed or fewer than two completed.
    pub flagged: bool,
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let r = values.len();
    if r == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / r as f64;
    if r == 1 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    (mean, (ss / (r - 1) as f64).sqrt())
}

/// Aggregates records of one setting and policy, in replicate order.
pub fn summarize(records: &[ReplicateRecord]) -> Option<SettingSummary> {
    let first = records.first()?;
    let mut sorted: Vec<&ReplicateRecord> = records.iter().collect();
    sorted.sort_by_key(|r| r.replicate);
    let ok: Vec<&&ReplicateRecord> = sorted.iter().filter(|r| r.is_ok()).collect();
    let pdr: Vec<f64> = ok.iter().map(|r| r.pdr).collect();
    let fdr: Vec<f64> = ok.iter().map(|r| r.fdr).collect();
    let (pdr_mean, pdr_sd) = mean_sd(&pdr);
    let (fdr_mean, fdr_sd) = mean_sd(&fdr);
    let failures = records.len() - ok.len();
    Some(SettingSummary {
        structure: first.structure,
        c: first.c,
        n: first.n,
        h: first.h,
        gamma_label: first.gamma_label.clone(),
        pdr_mean,
        pdr_sd,
        fdr_mean,
        fdr_sd,
        replicates_completed: ok.len(),
        failures,
        flagged: ok.len() < 2 || failures * 10 > records.len(),
    })
}

/// Groups records by setting and policy label (in first-seen order) and
/// summarizes each group.
pub fn summarize_all(records: &[ReplicateRecord]) -> Vec<SettingSummary> {
    let mut groups: Vec<(String, Vec<ReplicateRecord>)> = Vec::new();
    for r in records {
        let key = format!("{}|{}|{}|{}|{}", r.structure, r.c, r.n, r.h, r.gamma_label);
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push(r.clone()),
            None => groups.push((key, vec![r.clone()])),
        }
    }
    groups.iter().filter_map(|(_, v)| summarize(v)).collect()
}

fn error_records(setting: &Setting, config: &StudyConfig, replicate: usize, message: &str) -> Vec<ReplicateRecord> {
    config
        .gamma_policies
        .iter()
        .map(|g| ReplicateRecord {
            structure: setting.structure,
            c: setting.c,
            n: setting.n,
            h: setting.h,
            gamma_label: g.label.clone(),
            replicate,
            pdr: f64::NAN,
            fdr: f64::NAN,
            selected_size: 0,
            lambda_star: f64::NAN,
            status: format!("error: {message}"),
        })
        .collect()
}

/// Runs every replicate of one setting; records come back ordered by
/// replicate, then by policy.
pub fn run_setting(config: &StudyConfig, setting: &Setting) -> Result<Vec<ReplicateRecord>> {
    let schedule = divergence_schedule(setting.n, setting.c)?;
    let factor = config.factor(setting.structure, setting.n, schedule.p)?;
    let sigma2 = config.sigma2(setting)?;
    let beta_spec = config.beta.with_n_ref(setting.n);
    let support = place_support(schedule.p, schedule.p0, config.placement)?;
    let fixed = config.fixed_beta.then(|| {
        let mut rng = derive_stream(config.master_seed, setting.id(), FIXED_BETA_STREAM);
        sample_beta(&beta_spec, schedule.p0, &mut rng)
    });
    let policies: Vec<GammaPolicy> = config.gamma_policies.iter().map(|g| g.policy).collect();
    let setting_id = setting.id();

    let run_one = |r: usize| -> Vec<ReplicateRecord> {
        let mut rng = derive_stream(config.master_seed, setting_id, r as u64);
        let coefficients = match &fixed {
            Some(b) => b.clone(),
            None => sample_beta(&beta_spec, schedule.p0, &mut rng),
        };
        let data = match generate_with_beta(schedule.n, &factor, &support, &coefficients, sigma2, &mut rng) {
            Ok(d) => d,
            Err(e) => return error_records(setting, config, r, &e.to_string()),
        };
        let results = match run_two_stage_multi(&data, &config.pipeline, &policies) {
            Ok(v) => v,
            Err(e) => return error_records(setting, config, r, &e.to_string()),
        };
        results
            .into_iter()
            .zip(&config.gamma_policies)
            .map(|(res, g)| {
                let base = ReplicateRecord {
                    structure: setting.structure,
                    c: setting.c,
                    n: setting.n,
                    h: setting.h,
                    gamma_label: g.label.clone(),
                    replicate: r,
                    pdr: f64::NAN,
                    fdr: f64::NAN,
                    selected_size: 0,
                    lambda_star: f64::NAN,
                    status: "ok".into(),
                };
                match res.and_then(|sel| {
                    let (pdr, fdr) = pdr_fdr(&sel.selected, &data.true_support)?;
                    Ok((sel, pdr, fdr))
                }) {
                    Ok((sel, pdr, fdr)) => ReplicateRecord {
                        pdr,
                        fdr,
                        selected_size: sel.selected.len(),
                        lambda_star: sel.lambda_star,
                        ..base
                    },
                    Err(e) => ReplicateRecord {
                        status: format!("error: {e}"),
                        ..base
                    },
                }
            })
            .collect()
    };

    let per_replicate: Vec<Vec<ReplicateRecord>> = if config.workers == 1 {
        (0..config.replicates).map(run_one).collect()
    } else {
        (0..config.replicates).into_par_iter().map(run_one).collect()
    };
    Ok(per_replicate.into_iter().flatten().collect())
}

#[derive(Debug, Clone, Default)]
pub struct StudyOutput {
    pub records: Vec<ReplicateRecord>,
    pub summaries: Vec<SettingSummary>,
}

/// Runs the whole grid. `progress` is called after each setting finishes.
pub fn run_study_with(
    config: &StudyConfig,
    mut progress: impl FnMut(&Setting, &[SettingSummary]),
) -> Result<StudyOutput> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))?;
    let mut out = StudyOutput::default();
    for setting in config.settings() {
        let records = pool.install(|| run_setting(config, &setting))?;
        let summaries = summarize_all(&records);
        progress(&setting, &summaries);
        out.records.extend(records);
        out.summaries.extend(summaries);
    }
    Ok(out)
}

pub fn run_study(config: &StudyConfig) -> Result<Vec<SettingSummary>> {
    Ok(run_study_with(config, |_, _| {})?.summaries)
}

/// Writes the per-replicate log as CSV.
pub fn write_replicate_log<W: Write>(writer: W, records: &[ReplicateRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in records {
        w.serialize(r).map_err(|e| Error::InvalidData(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::InvalidData(e.to_string()))?;
    Ok(())
}

pub fn read_replicate_log<R: Read>(reader: R) -> Result<Vec<ReplicateRecord>> {
    csv::Reader::from_reader(reader)
        .deserialize()
        .map(|r| r.map_err(|e| Error::InvalidData(e.to_string())))
        .collect()
}
