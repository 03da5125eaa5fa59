//! `arcadia` — iterative causal DAG discovery over a CSV panel.
//!
//! Exit codes: 0 when a graph was accepted, 2 when the iteration budget (or
//! a proposal script) ran out without acceptance, 1 on any error, including
//! an unrecoverable proposer failure.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, ValueEnum};

use arcadia_core::data::IngestConfig;
use arcadia_core::propose::LlmConfig;
use arcadia_core::run::{run, ProposerKind, RunOutcome, TerminatedBy};
use arcadia_core::{Hyperparameters, RunConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ProposerArg {
    Llm,
    Scripted,
    Heuristic,
}

#[derive(Parser, Debug)]
#[command(
    name = "arcadia",
    about = "Discover and verify a causal DAG for a treatment/outcome pair in panel data",
    version
)]
struct Args {
    /// CSV panel (UTF-8, header row, numeric cells)
    #[arg(long, value_name = "PATH")]
    data: PathBuf,

    /// Treatment column name
    #[arg(long, value_name = "NAME")]
    treatment: String,

    /// Outcome column name
    #[arg(long, value_name = "NAME")]
    outcome: String,

    /// Column budget M; columns are subsampled into temporally balanced
    /// buckets when M is below the dataset's column count [default: all]
    #[arg(long, value_name = "M")]
    budget: Option<usize>,

    /// Maximum proposal/evaluation iterations
    #[arg(long, default_value_t = 10)]
    max_iterations: usize,

    /// Maximum variables added/swapped/removed per refinement
    #[arg(long, default_value_t = 5)]
    k_refine: usize,

    /// Minimum nodes in the initial proposal
    #[arg(long, default_value_t = 2)]
    k_init_min: usize,

    /// Maximum nodes in the initial proposal (clamped to the budget)
    #[arg(long, default_value_t = 15)]
    k_init_max: usize,

    /// Significance level for edge and model tests
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,

    /// Composite validity threshold
    #[arg(long, default_value_t = 0.60)]
    theta_global: f64,

    /// Minimum mean node R-squared
    #[arg(long, default_value_t = 0.05)]
    theta_r2: f64,

    /// Maximum tolerated variance inflation factor
    #[arg(long, default_value_t = 10.0)]
    theta_vif: f64,

    /// Proposal source
    #[arg(long, value_enum, default_value_t = ProposerArg::Heuristic)]
    proposer: ProposerArg,

    /// Proposal script (JSON array) for --proposer scripted
    #[arg(long, value_name = "PATH")]
    script: Option<PathBuf>,

    /// Chat-completion endpoint URL for --proposer llm
    #[arg(long, value_name = "URL")]
    llm_endpoint: Option<String>,

    /// Model name sent to the endpoint
    #[arg(long, value_name = "NAME")]
    llm_model: Option<String>,

    /// Request timeout for the endpoint, in seconds
    #[arg(long, default_value_t = 120)]
    llm_timeout: u64,

    /// Environment variable holding the endpoint credential
    #[arg(long, default_value = "ARCADIA_LLM_API_KEY")]
    llm_key_env: String,

    /// RNG seed (sampling, heuristic proposals)
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Output directory for the transcript and reports
    #[arg(long, value_name = "PATH")]
    out_dir: PathBuf,

    /// Honour a proposal's negligible-effect claim for the edge-significance
    /// criterion
    #[arg(long, default_value_t = false)]
    accept_negligible_effect: bool,

    /// Optional ingest configuration (JSON: tag_overrides, binary_columns,
    /// missing_policy); treatment/outcome from the flags take precedence
    #[arg(long, value_name = "PATH")]
    data_config: Option<PathBuf>,
}

fn build_config(args: &Args) -> Result<RunConfig> {
    let mut ingest = match &args.data_config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading data config `{}`", path.display()))?;
            let mut cfg: IngestConfig = serde_json::from_str(&text)
                .with_context(|| format!("parsing data config `{}`", path.display()))?;
            cfg.treatment = args.treatment.clone();
            cfg.outcome = args.outcome.clone();
            cfg
        }
        None => IngestConfig::new(args.treatment.clone(), args.outcome.clone()),
    };
    ingest.treatment = args.treatment.clone();
    ingest.outcome = args.outcome.clone();

    // Resolve the column budget against the file header so `m` is always the
    // effective column count of the run.
    let header = csv_header_len(&args.data)?;
    let m = match args.budget {
        Some(m) => m,
        None => header,
    };

    let mut hp = Hyperparameters::with_defaults(args.treatment.clone(), args.outcome.clone(), m);
    hp.k_init_min = args.k_init_min;
    hp.k_init_max = args.k_init_max.min(m);
    hp.k_refine = args.k_refine;
    hp.t_max = args.max_iterations;
    hp.alpha = args.alpha;
    hp.theta_global = args.theta_global;
    hp.theta_r2 = args.theta_r2;
    hp.theta_vif = args.theta_vif;
    hp.accept_negligible_effect = args.accept_negligible_effect;

    let proposer = match args.proposer {
        ProposerArg::Llm => ProposerKind::Llm,
        ProposerArg::Scripted => ProposerKind::Scripted,
        ProposerArg::Heuristic => ProposerKind::Heuristic,
    };
    let llm = match args.proposer {
        ProposerArg::Llm => {
            let endpoint = args
                .llm_endpoint
                .clone()
                .context("--proposer llm requires --llm-endpoint")?;
            let model = args
                .llm_model
                .clone()
                .context("--proposer llm requires --llm-model")?;
            let mut cfg = LlmConfig::new(endpoint, model);
            cfg.timeout_secs = args.llm_timeout;
            cfg.api_key_env = args.llm_key_env.clone();
            Some(cfg)
        }
        _ => None,
    };
    if args.proposer == ProposerArg::Scripted && args.script.is_none() {
        bail!("--proposer scripted requires --script");
    }

    Ok(RunConfig {
        hp,
        data_path: args.data.clone(),
        ingest,
        proposer,
        script_path: args.script.clone(),
        llm,
        out_dir: args.out_dir.clone(),
        seed: args.seed,
    })
}

fn csv_header_len(path: &PathBuf) -> Result<usize> {
    let file = std::fs::File::open(path)
        .with_context(|| format!("opening data file `{}`", path.display()))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(file);
    Ok(reader
        .headers()
        .with_context(|| format!("reading header of `{}`", path.display()))?
        .len())
}

fn main() -> ExitCode {
    let args = Args::parse();
    let config = match build_config(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };
    match run(&config) {
        Ok(RunOutcome {
            transcript,
            manifest,
        }) => {
            let last_ok = transcript
                .iterations
                .last()
                .is_some_and(|i| i.diagnostics.ok);
            println!(
                "run {}: {:?} after {} iteration(s); best composite {:.4} at iteration {}",
                transcript.run_id,
                transcript.terminated_by,
                transcript.iterations.len(),
                transcript.best_score.unwrap_or(0.0),
                transcript.best_iteration.unwrap_or(0),
            );
            for entry in &manifest.files {
                println!(
                    "  wrote {} ({})",
                    config.out_dir.join(&entry.path).display(),
                    &entry.sha256[..12]
                );
            }
            match transcript.terminated_by {
                TerminatedBy::Accepted => {
                    debug_assert!(last_ok);
                    ExitCode::from(0)
                }
                TerminatedBy::BudgetExhausted | TerminatedBy::ScriptExhausted => ExitCode::from(2),
                TerminatedBy::ProposerFailed => {
                    eprintln!(
                        "error: proposer failed; best graph so far preserved in the transcript"
                    );
                    ExitCode::from(1)
                }
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
