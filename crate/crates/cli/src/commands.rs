use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use clap::{Args, Parser, Subcommand};
use ebic_core::experiment::{run_study_with, write_replicate_log};
use ebic_core::pipeline::{prepare, PipelineConfig};

use crate::config::{self, Profile};
use crate::error::{CliError, CliResult};
use crate::matrix::parse_table;
use crate::table::{emit_table, write_summaries, TableFormat};
use crate::verify::run_checks;

#[derive(Debug, Parser)]
#[command(name = "ebic", version, about = "Feature selection by the extended BIC in high-dimensional linear regression")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the simulation study and write the replicate log, summary and tables.
    #[command(after_long_help = config::config_help())]
    Run(RunArgs),
    /// Select features for one dataset read from a delimited matrix file.
    Score(ScoreArgs),
    /// Check the numerical behaviour behind the criterion's penalty.
    Verify,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Flat TOML file overriding the profile's settings.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, env = "EBIC_OUT_DIR", default_value = "ebic-out")]
    pub out: PathBuf,
    /// Base grid the config file and flags modify.
    #[arg(long, value_enum, default_value = "desk")]
    pub profile: Profile,
    /// Master seed (overrides the config file).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Replicates per setting (overrides the config file).
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Worker threads; 0 uses every core (overrides the config file).
    #[arg(long)]
    pub workers: Option<usize>,
    /// Replace the contents of an existing output directory.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Delimited numeric matrix, optionally with a header line.
    pub matrix: PathBuf,
    /// One-based column holding the response; defaults to the last.
    #[arg(long)]
    pub response_col: Option<usize>,
    /// bic, mbic, sc, sc:<C>, or a number in [0, 1].
    #[arg(long, default_value = "sc")]
    pub gamma: String,
}

pub fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Run(args) => run(&args),
        Command::Score(args) => score(&args),
        Command::Verify => verify(),
    }
}

fn write_file(path: &Path, contents: &[u8]) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn prepare_out_dir(dir: &Path, force: bool) -> CliResult<()> {
    if dir.exists() {
        let occupied = fs::read_dir(dir)
            .map_err(|e| CliError::io(dir, e))?
            .next()
            .is_some();
        if occupied && !force {
            return Err(CliError::Input(format!(
                "output directory {} is not empty; pass --force to overwrite",
                dir.display()
            )));
        }
    }
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub fn run(args: &RunArgs) -> CliResult<()> {
    let mut cfg = args.profile.base();
    if let Some(path) = &args.config {
        cfg = config::load(path, cfg)?;
    }
    if let Some(seed) = args.seed {
        cfg.master_seed = seed;
    }
    if let Some(r) = args.replicates {
        cfg.replicates = r;
    }
    if let Some(w) = args.workers {
        cfg.workers = w;
    }
    cfg.validate()?;
    prepare_out_dir(&args.out, args.force)?;

    let total = cfg.settings().len();
    let done = AtomicUsize::new(0);
    let output = run_study_with(&cfg, |setting, _| {
        let k = done.fetch_add(1, Ordering::Relaxed) + 1;
        eprintln!(
            "[{k}/{total}] structure {} c={} n={} h={}",
            setting.structure, setting.c, setting.n, setting.h
        );
    })?;

    let mut log = Vec::new();
    write_replicate_log(&mut log, &output.records)?;
    write_file(&args.out.join("replicates.csv"), &log)?;
    let mut summary = Vec::new();
    write_summaries(&mut summary, &output.summaries)?;
    write_file(&args.out.join("summary.csv"), &summary)?;
    write_file(&args.out.join("table.csv"), emit_table(&output.summaries, TableFormat::Csv).as_bytes())?;
    let markdown = emit_table(&output.summaries, TableFormat::Markdown);
    write_file(&args.out.join("table.md"), markdown.as_bytes())?;
    print!("{markdown}");
    let failures: usize = output.summaries.iter().map(|s| s.failures).sum();
    if failures > 0 {
        eprintln!("{failures} replicate-policy runs failed; see replicates.csv");
    }
    Ok(())
}

pub fn score(args: &ScoreArgs) -> CliResult<()> {
    let text = fs::read_to_string(&args.matrix).map_err(|e| CliError::io(&args.matrix, e))?;
    let table = parse_table(&text)?;
    let response = match args.response_col {
        Some(0) => return Err(CliError::Input("--response-col is one-based".into())),
        Some(c) => c - 1,
        None => table.ncols() - 1,
    };
    let (x, y) = table.split_response(response)?;
    let policy = config::parse_gamma(&args.gamma).map_err(|e| CliError::config("gamma", e))?;
    let (n, p) = x.shape();
    let gamma = policy.policy.resolve(n, p);
    let candidates = prepare(&x, &y, &PipelineConfig::default())?;
    let result = candidates.select(gamma)?;

    // Report indices in the original file's column numbering.
    let column = |j: usize| if j < response { j + 1 } else { j + 2 };
    let name = |j: usize| match &table.header {
        Some(h) => format!("{}({})", column(j), h[column(j) - 1]),
        None => column(j).to_string(),
    };
    println!("n = {n}, p = {p}, gamma = {gamma:.6} ({})", policy.label);
    println!(
        "screened: {}",
        result.screened.iter().map(column).map(|c| c.to_string()).collect::<Vec<_>>().join(" ")
    );
    println!("selected: {}", result.selected.iter().map(column).map(|c| c.to_string()).collect::<Vec<_>>().join(" "));
    if table.header.is_some() {
        println!("selected names: {}", result.selected.iter().map(name).collect::<Vec<_>>().join(" "));
    }
    println!("ebic: {:.6} at lambda {:.6e}", result.ebic_star, result.lambda_star);
    println!("lambda\tsize\tebic");
    for s in &result.per_lambda_scores {
        let ebic = s.ebic.map_or("skipped".to_string(), |v| format!("{v:.6}"));
        println!("{:.6e}\t{}\t{ebic}", s.lambda, s.support_size);
    }
    Ok(())
}

pub fn verify() -> CliResult<()> {
    let checks = run_checks();
    for c in &checks {
        println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    let failed = checks.iter().filter(|c| !c.pass).count();
    if failed > 0 {
        return Err(CliError::Input(format!("{failed} check(s) failed")));
    }
    Ok(())
}
