//! Flat TOML study configuration. Every key is optional and overrides the
//! chosen profile; unknown keys are rejected.

use std::path::Path;

use ebic_core::experiment::LabeledPolicy;
use ebic_core::simgen::{CovarianceKind, Placement};
use ebic_core::solvers::PenaltySpec;
use ebic_core::{GammaPolicy, StudyConfig};
use toml::Value;

use crate::error::{CliError, CliResult};

/// Keys accepted in a config file, with their meaning and default. Shown in
/// `ebic run --help`.
pub const CONFIG_KEYS: &[(&str, &str)] = &[
    ("structures", "covariance structures, e.g. [\"I\", \"II\", \"III\"] (desk: [\"I\"])"),
    ("c_values", "multipliers of the true model size (desk: [1])"),
    ("n_values", "sample sizes (desk: [100, 200])"),
    ("h_values", "heritabilities in (0, 1) (desk: [0.4, 0.6, 0.8])"),
    ("gammas", "gamma policies: bic, mbic, sc, sc:<C>, or a number in [0, 1] (default: [\"bic\", \"sc\", \"mbic\"])"),
    ("replicates", "replicates per setting (desk: 50, full: 200)"),
    ("seed", "master seed (default: 20100915)"),
    ("rho", "correlation parameter of structures I and II (default: 0.5)"),
    ("block_size", "block size of structures II and III (default: 50)"),
    ("eig_min", "smallest eigenvalue of structure III blocks (default: 1)"),
    ("eig_max", "largest eigenvalue of structure III blocks (default: 50)"),
    ("sign_prob", "probability that a coefficient is negative (default: 0.4)"),
    ("floor_exponent", "coefficient floor is n^-e (default: 0.1625)"),
    ("z_tail_point", "t in P(|z| >= t) = q for the coefficient jitter (default: 0.1)"),
    ("z_tail_prob", "q in P(|z| >= t) = q (default: 0.25)"),
    ("placement", "where the true features sit: \"first\" or \"spread\" (default: \"first\")"),
    ("fixed_beta", "draw one coefficient vector per setting (default: false)"),
    ("reference_n", "sample size at which the noise variance is calibrated (default: 100)"),
    ("sigma2", "fixed noise variance, bypassing calibration (default: unset)"),
    ("workers", "worker threads, 0 for all cores (default: 0)"),
    ("sis_exponent", "SIS keeps ceil(n^e) features (default: 1.5)"),
    ("screen_fraction", "LASSO screening keeps floor(f*n) features (default: 0.5)"),
    ("penalty", "selection-stage penalty: \"scad\" or \"lasso\" (default: \"scad\")"),
    ("scad_a", "SCAD concavity parameter, > 2 (default: 3.7)"),
    ("num_lambdas", "grid size of each penalty path (default: 100)"),
    ("lambda_min_ratio", "smallest lambda as a fraction of lambda_max (default: 0.001)"),
    ("path_refinement", "bisection depth between grid points on the SCAD path (default: 6)"),
    ("refinement_budget", "extra SCAD solves allowed for bisection (default: 200)"),
    ("cd_tol", "coordinate-descent coefficient tolerance (default: 1e-7)"),
    ("cd_max_iter", "coordinate-descent sweep cap (default: 10000)"),
    ("kkt_tol", "KKT residual required for convergence (default: 1e-7)"),
];

pub fn config_help() -> String {
    let width = CONFIG_KEYS.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    let mut out = String::from("Config file keys (flat TOML, all optional):\n");
    for (key, doc) in CONFIG_KEYS {
        out.push_str(&format!("  {key:<width$}  {doc}\n"));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Profile {
    Desk,
    Full,
}

impl Profile {
    pub fn base(self) -> StudyConfig {
        match self {
            Profile::Desk => StudyConfig::desk(),
            Profile::Full => StudyConfig::full(),
        }
    }
}

/// Parses a gamma policy token: `bic`, `mbic`, `sc`, `sc:<C>`, or a number.
pub fn parse_gamma(token: &str) -> Result<LabeledPolicy, String> {
    let t = token.trim();
    let lower = t.to_ascii_lowercase();
    let policy = match lower.as_str() {
        "bic" => LabeledPolicy::new("BIC", GammaPolicy::bic()),
        "mbic" => LabeledPolicy::new("mBIC", GammaPolicy::mbic()),
        "sc" => LabeledPolicy::new("SC", GammaPolicy::ScaledConsistent(4.0)),
        _ => {
            if let Some(c) = lower.strip_prefix("sc:") {
                let c: f64 = c.parse().map_err(|_| format!("bad divisor in `{t}`"))?;
                LabeledPolicy::new(&format!("SC{c}"), GammaPolicy::ScaledConsistent(c))
            } else {
                let g: f64 = t.parse().map_err(|_| format!("unknown gamma policy `{t}`"))?;
                LabeledPolicy::new(&format!("g{g}"), GammaPolicy::Fixed(g))
            }
        }
    };
    policy.policy.validate().map_err(|e| e.to_string())?;
    Ok(policy)
}

fn as_f64(key: &str, v: &Value) -> CliResult<f64> {
    match v {
        Value::Float(f) => Ok(*f),
        Value::Integer(i) => Ok(*i as f64),
        other => Err(CliError::config(key, format!("expected a number, found {}", other.type_str()))),
    }
}

fn as_usize(key: &str, v: &Value) -> CliResult<usize> {
    match v {
        Value::Integer(i) if *i >= 0 => Ok(*i as usize),
        other => Err(CliError::config(
            key,
            format!("expected a nonnegative integer, found {other}"),
        )),
    }
}

fn as_u64(key: &str, v: &Value) -> CliResult<u64> {
    as_usize(key, v).map(|u| u as u64)
}

fn as_bool(key: &str, v: &Value) -> CliResult<bool> {
    v.as_bool()
        .ok_or_else(|| CliError::config(key, format!("expected true or false, found {}", v.type_str())))
}

fn as_str<'a>(key: &str, v: &'a Value) -> CliResult<&'a str> {
    v.as_str()
        .ok_or_else(|| CliError::config(key, format!("expected a string, found {}", v.type_str())))
}

fn as_list<T>(key: &str, v: &Value, item: impl Fn(&str, &Value) -> CliResult<T>) -> CliResult<Vec<T>> {
    let arr = v
        .as_array()
        .ok_or_else(|| CliError::config(key, format!("expected an array, found {}", v.type_str())))?;
    arr.iter().map(|x| item(key, x)).collect()
}

fn structure(key: &str, v: &Value) -> CliResult<CovarianceKind> {
    let s = match v {
        Value::Integer(i) => i.to_string(),
        other => as_str(key, other)?.to_string(),
    };
    s.parse().map_err(|_| CliError::config(key, format!("unknown structure `{s}`")))
}

fn gamma(key: &str, v: &Value) -> CliResult<LabeledPolicy> {
    let token = match v {
        Value::String(s) => s.clone(),
        Value::Float(f) => f.to_string(),
        Value::Integer(i) => i.to_string(),
        other => return Err(CliError::config(key, format!("expected a string or number, found {}", other.type_str()))),
    };
    parse_gamma(&token).map_err(|e| CliError::config(key, e))
}

/// Applies the keys of a parsed document on top of `base`.
pub fn apply_document(text: &str, mut cfg: StudyConfig) -> CliResult<StudyConfig> {
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| CliError::config("<document>", e.message().to_string()))?;
    for (key, v) in &table {
        let k = key.as_str();
        match k {
            "structures" => cfg.structures = as_list(k, v, structure)?,
            "c_values" => cfg.c_values = as_list(k, v, as_usize)?,
            "n_values" => cfg.n_values = as_list(k, v, as_usize)?,
            "h_values" => cfg.h_values = as_list(k, v, as_f64)?,
            "gammas" => cfg.gamma_policies = as_list(k, v, gamma)?,
            "replicates" => cfg.replicates = as_usize(k, v)?,
            "seed" => cfg.master_seed = as_u64(k, v)?,
            "rho" => cfg.rho = as_f64(k, v)?,
            "block_size" => cfg.block_size = as_usize(k, v)?,
            "eig_min" => cfg.eig_min = as_f64(k, v)?,
            "eig_max" => cfg.eig_max = as_f64(k, v)?,
            "sign_prob" => cfg.beta.sign_prob = as_f64(k, v)?,
            "floor_exponent" => cfg.beta.floor_exponent = as_f64(k, v)?,
            "z_tail_point" => cfg.beta.z_tail_point = as_f64(k, v)?,
            "z_tail_prob" => cfg.beta.z_tail_prob = as_f64(k, v)?,
            "placement" => {
                cfg.placement = match as_str(k, v)? {
                    "first" => Placement::First,
                    "spread" => Placement::Spread,
                    other => return Err(CliError::config(k, format!("expected \"first\" or \"spread\", found `{other}`"))),
                }
            }
            "fixed_beta" => cfg.fixed_beta = as_bool(k, v)?,
            "reference_n" => cfg.reference_n = as_usize(k, v)?,
            "sigma2" => cfg.sigma2_override = Some(as_f64(k, v)?),
            "workers" => cfg.workers = as_usize(k, v)?,
            "sis_exponent" => cfg.pipeline.sis_budget_exponent = as_f64(k, v)?,
            "screen_fraction" => cfg.pipeline.screen_fraction = as_f64(k, v)?,
            "penalty" => {
                let a = cfg.pipeline.penalty.a;
                cfg.pipeline.penalty = match as_str(k, v)? {
                    "scad" => PenaltySpec::scad(a).map_err(|e| CliError::config("scad_a", e.to_string()))?,
                    "lasso" => PenaltySpec::lasso(),
                    other => return Err(CliError::config(k, format!("expected \"scad\" or \"lasso\", found `{other}`"))),
                }
            }
            "scad_a" => cfg.pipeline.penalty.a = as_f64(k, v)?,
            "num_lambdas" => cfg.pipeline.num_lambdas = as_usize(k, v)?,
            "lambda_min_ratio" => cfg.pipeline.lambda_min_ratio = as_f64(k, v)?,
            "path_refinement" => cfg.pipeline.path_refinement = as_usize(k, v)?,
            "refinement_budget" => cfg.pipeline.refinement_budget = as_usize(k, v)?,
            "cd_tol" => cfg.pipeline.cd.tol = as_f64(k, v)?,
            "cd_max_iter" => cfg.pipeline.cd.max_iter = as_usize(k, v)?,
            "kkt_tol" => cfg.pipeline.cd.kkt_tol = as_f64(k, v)?,
            _ => return Err(CliError::config(k, "unknown key")),
        }
    }
    Ok(cfg)
}

pub fn load(path: &Path, base: StudyConfig) -> CliResult<StudyConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    apply_document(&text, base)
}
