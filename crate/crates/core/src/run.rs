//! The discovery loop: initialise, propose, evaluate, track the best graph,
//! terminate, and persist all artifacts.
//!
//! Everything in a transcript is reproducible for a fixed seed and scripted
//! or heuristic proposer except `run_id`, the start/finish timestamps, and
//! the per-iteration wall-clock timings.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::data::{load_csv, sample_balanced_subset, IngestConfig, IngestError, PanelDataset};
use crate::eval::{build_failure_memo, evaluate_dag, Diagnostics};
use crate::graph::{dag_from_parts, Dag, StructuralReport};
use crate::propose::{
    heuristic_propose, render_prompt, ConfigError, Hyperparameters, LlmConfig, LlmExchange,
    LlmProposer, Message, PromptKind, Proposal, ProposerError, RefinementContext, ScriptedProposer,
};
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("output directory `{path}` is not writable: {reason}")]
    OutputNotWritable { path: String, reason: String },
    #[error("proposer `{kind}` needs {what}")]
    ProposerConfig {
        kind: &'static str,
        what: &'static str,
    },
    #[error(transparent)]
    Proposer(#[from] ProposerError),
    #[error("cannot write `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProposerKind {
    Llm,
    Scripted,
    Heuristic,
}

impl std::fmt::Display for ProposerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ProposerKind::Llm => write!(f, "llm"),
            ProposerKind::Scripted => write!(f, "scripted"),
            ProposerKind::Heuristic => write!(f, "heuristic"),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig<F> {
    pub hp: Hyperparameters<F>,
    pub data_path: PathBuf,
    pub ingest: IngestConfig,
    pub proposer: ProposerKind,
    pub script_path: Option<PathBuf>,
    pub llm: Option<LlmConfig>,
    pub out_dir: PathBuf,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminatedBy {
    Accepted,
    BudgetExhausted,
    ProposerFailed,
    ScriptExhausted,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterationRecord<F> {
    pub iteration: usize,
    pub prompt_messages: Vec<Message>,
    pub raw_exchanges: Vec<LlmExchange>,
    pub proposal: Proposal,
    pub structural: StructuralReport,
    pub diagnostics: Diagnostics<F>,
    pub failure_memo: String,
    /// Wall-clock seconds for this iteration (non-deterministic).
    pub elapsed_secs: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunTranscript<F> {
    pub run_id: String,
    pub started_at_unix_ms: u128,
    pub finished_at_unix_ms: u128,
    pub seed: u64,
    pub proposer: ProposerKind,
    pub data_path: String,
    pub hyperparameters: Hyperparameters<F>,
    /// Columns the run operated on (after any subsampling).
    pub columns: Vec<String>,
    pub rows: usize,
    pub rows_dropped: usize,
    pub iterations: Vec<IterationRecord<F>>,
    /// 1-based iteration with the highest composite score (earliest on ties).
    pub best_iteration: Option<usize>,
    pub best_score: Option<F>,
    pub terminated_by: TerminatedBy,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub files: Vec<ManifestEntry>,
}

#[derive(Debug)]
pub struct RunOutcome<F> {
    pub transcript: RunTranscript<F>,
    pub manifest: Manifest,
}

enum ProposerImpl {
    Llm(LlmProposer),
    Scripted(ScriptedProposer),
    Heuristic,
}

/// Executes the full discovery loop and persists all artifacts on every exit
/// path. Dataset and configuration problems surface before the first
/// iteration; proposer failures terminate the loop with the best graph so
/// far preserved.
pub fn run<F: Scalar>(config: &RunConfig<F>) -> Result<RunOutcome<F>, RunError> {
    config.hp.validate()?;
    ensure_writable(&config.out_dir)?;

    let proposer = match config.proposer {
        ProposerKind::Llm => {
            let llm_config = config.llm.clone().ok_or(RunError::ProposerConfig {
                kind: "llm",
                what: "an endpoint configuration (--llm-endpoint, --llm-model)",
            })?;
            ProposerImpl::Llm(LlmProposer::new(llm_config))
        }
        ProposerKind::Scripted => {
            let path = config
                .script_path
                .as_ref()
                .ok_or(RunError::ProposerConfig {
                    kind: "scripted",
                    what: "a script file (--script)",
                })?;
            ProposerImpl::Scripted(ScriptedProposer::load(path)?)
        }
        ProposerKind::Heuristic => ProposerImpl::Heuristic,
    };

    // Initialise: load the panel and, when the budget is below the column
    // count, restrict to a temporally balanced subset.
    let full: PanelDataset<F> = load_csv(&config.data_path, &config.ingest)?;
    let ds = if config.hp.m < full.n_cols() {
        let names = sample_balanced_subset(&full, config.hp.m, config.seed)?;
        full.project(&names)
    } else if config.hp.m > full.n_cols() {
        return Err(IngestError::SubsetTooLarge {
            m: config.hp.m,
            available: full.n_cols(),
        }
        .into());
    } else {
        full
    };

    let started_at_unix_ms = unix_ms();
    let mut transcript = RunTranscript {
        run_id: fresh_run_id(config.seed),
        started_at_unix_ms,
        finished_at_unix_ms: started_at_unix_ms,
        seed: config.seed,
        proposer: config.proposer,
        data_path: config.data_path.display().to_string(),
        hyperparameters: config.hp.clone(),
        columns: ds.column_names(),
        rows: ds.n_rows(),
        rows_dropped: ds.rows_dropped,
        iterations: Vec::new(),
        best_iteration: None,
        best_score: None,
        terminated_by: TerminatedBy::BudgetExhausted,
    };

    let known: BTreeSet<String> = ds.column_names().into_iter().collect();
    let known_set: std::collections::HashSet<String> = known.iter().cloned().collect();
    let mut previous: Option<(Proposal, String)> = None; // proposal + failure memo

    for iteration in 1..=config.hp.t_max {
        let clock = Instant::now();
        let (proposal, prompt_messages, raw_exchanges) = match &proposer {
            ProposerImpl::Heuristic => {
                // Per-iteration seed derivation keeps reruns reproducible
                // while letting later iterations explore different sizes.
                let seed = config.seed.wrapping_add(iteration as u64 - 1);
                (
                    heuristic_propose(&ds, &config.hp, seed),
                    Vec::new(),
                    Vec::new(),
                )
            }
            ProposerImpl::Scripted(script) => match script.propose(iteration) {
                Ok(p) => (p, Vec::new(), Vec::new()),
                Err(ProposerError::ScriptExhausted { .. }) => {
                    transcript.terminated_by = TerminatedBy::ScriptExhausted;
                    break;
                }
                Err(e) => return Err(e.into()),
            },
            ProposerImpl::Llm(llm) => {
                let messages = match &previous {
                    None => render_prompt(
                        PromptKind::Bootstrap,
                        &config.hp,
                        &transcript.columns,
                        iteration,
                        None,
                    )?,
                    Some((prev, memo)) => {
                        let ctx = RefinementContext {
                            iteration,
                            previous_edges: &prev.edges,
                            failure_memo: memo,
                        };
                        render_prompt(
                            PromptKind::Refinement,
                            &config.hp,
                            &transcript.columns,
                            iteration,
                            Some(&ctx),
                        )?
                    }
                };
                let budget = previous
                    .as_ref()
                    .map(|(prev, _)| (prev, config.hp.k_refine));
                match llm.propose(
                    messages.clone(),
                    &config.hp.treatment,
                    &config.hp.outcome,
                    &known,
                    budget,
                ) {
                    Ok((proposal, exchanges)) => (proposal, messages, exchanges),
                    Err(e) => {
                        // Unrecoverable proposer failure: preserve best-so-far.
                        transcript.terminated_by = TerminatedBy::ProposerFailed;
                        transcript.iterations.push(IterationRecord {
                            iteration,
                            prompt_messages: messages,
                            raw_exchanges: Vec::new(),
                            proposal: Proposal {
                                reasoning: String::new(),
                                assumptions: String::new(),
                                edges: Vec::new(),
                                negligible_effect_claimed: None,
                            },
                            structural: StructuralReport {
                                temporal_edges_pruned: Vec::new(),
                                cycle_edges_pruned: Vec::new(),
                                disconnected_nodes_pruned: Vec::new(),
                                structurally_valid: false,
                            },
                            diagnostics: Diagnostics::invalid_proposal(e.to_string()),
                            failure_memo: format!("proposer failed: {e}"),
                            elapsed_secs: clock.elapsed().as_secs_f64(),
                        });
                        break;
                    }
                }
            }
        };

        // Evaluate.
        let diagnostics = match Dag::from_edges(&proposal.edges, &known_set) {
            Ok(dag) => evaluate_dag(
                &dag,
                &ds,
                &config.hp,
                proposal.negligible_effect_claimed.unwrap_or(false),
            ),
            Err(e) => Diagnostics::invalid_proposal(e.to_string()),
        };
        let failure_memo = build_failure_memo(&diagnostics, &config.hp);
        let score = diagnostics.composite_score();
        let accepted = diagnostics.ok;

        transcript.iterations.push(IterationRecord {
            iteration,
            prompt_messages,
            raw_exchanges,
            proposal: proposal.clone(),
            structural: diagnostics.structural.clone(),
            diagnostics,
            failure_memo: failure_memo.clone(),
            elapsed_secs: clock.elapsed().as_secs_f64(),
        });

        // Track the best graph by composite score (strict improvement keeps
        // the earliest iteration on ties).
        if transcript.best_score.is_none_or(|best| score > best) {
            transcript.best_score = Some(score);
            transcript.best_iteration = Some(iteration);
        }

        if accepted {
            transcript.terminated_by = TerminatedBy::Accepted;
            break;
        }
        previous = Some((proposal, failure_memo));
    }

    transcript.finished_at_unix_ms = unix_ms();
    let manifest = persist(&transcript, &config.out_dir)?;
    Ok(RunOutcome {
        transcript,
        manifest,
    })
}

fn ensure_writable(dir: &Path) -> Result<(), RunError> {
    let fail = |reason: String| RunError::OutputNotWritable {
        path: dir.display().to_string(),
        reason,
    };
    std::fs::create_dir_all(dir).map_err(|e| fail(e.to_string()))?;
    let probe = dir.join(".write_probe");
    std::fs::write(&probe, b"ok").map_err(|e| fail(e.to_string()))?;
    std::fs::remove_file(&probe).map_err(|e| fail(e.to_string()))?;
    Ok(())
}

fn unix_ms() -> u128 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

fn fresh_run_id(seed: u64) -> String {
    format!(
        "{:x}-{:x}-{:04x}",
        unix_ms(),
        seed,
        std::process::id() as u16
    )
}

/// Writes the transcript, per-iteration diagnostics, the best graph as DOT,
/// and a human-readable summary; returns the manifest of written files with
/// content hashes. `manifest.json` itself is written last and not hashed.
pub fn persist<F: Scalar>(
    transcript: &RunTranscript<F>,
    out_dir: &Path,
) -> Result<Manifest, RunError> {
    std::fs::create_dir_all(out_dir).map_err(|e| RunError::Io {
        path: out_dir.display().to_string(),
        source: e,
    })?;
    let mut files = Vec::new();
    let mut write = |name: String, bytes: &[u8]| -> Result<(), RunError> {
        let path = out_dir.join(&name);
        std::fs::write(&path, bytes).map_err(|e| RunError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        let mut hasher = Sha256::new();
        hasher.update(bytes);
        let digest = hasher.finalize();
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        files.push(ManifestEntry {
            path: name,
            sha256: hex,
        });
        Ok(())
    };

    let transcript_json = serde_json::to_string_pretty(transcript).expect("transcript serializes");
    write("transcript.json".into(), transcript_json.as_bytes())?;

    for record in &transcript.iterations {
        let diag_json =
            serde_json::to_string_pretty(&record.diagnostics).expect("diagnostics serialize");
        write(
            format!("diagnostics_{}.json", record.iteration),
            diag_json.as_bytes(),
        )?;
    }

    if let Some(best) = transcript.best_iteration {
        let record = &transcript.iterations[best - 1];
        let dag = dag_from_parts(
            &record.diagnostics.dag_nodes(),
            &record.diagnostics.dag_edges(),
        )
        .expect("diagnostics graph is consistent");
        let dot = dag.to_dot(
            Some(&transcript.hyperparameters.treatment),
            Some(&transcript.hyperparameters.outcome),
        );
        write("best_dag.dot".into(), dot.as_bytes())?;
    }

    write("summary.md".into(), summary_markdown(transcript).as_bytes())?;

    let manifest = Manifest { files };
    let manifest_json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    let path = out_dir.join("manifest.json");
    std::fs::write(&path, manifest_json).map_err(|e| RunError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    Ok(manifest)
}

fn summary_markdown<F: Scalar>(t: &RunTranscript<F>) -> String {
    let mut out = String::new();
    out.push_str("# Run summary\n\n");
    out.push_str(&format!("- run id: `{}`\n", t.run_id));
    out.push_str(&format!(
        "- data: `{}` ({} rows, {} columns in scope, {} rows dropped)\n",
        t.data_path,
        t.rows,
        t.columns.len(),
        t.rows_dropped
    ));
    out.push_str(&format!("- proposer: {} (seed {})\n", t.proposer, t.seed));
    out.push_str(&format!(
        "- treatment: `{}`, outcome: `{}`\n",
        t.hyperparameters.treatment, t.hyperparameters.outcome
    ));
    out.push_str(&format!(
        "- thresholds: alpha={}, theta_global={}, theta_r2={}, theta_vif={}\n",
        t.hyperparameters.alpha.as_f64(),
        t.hyperparameters.theta_global.as_f64(),
        t.hyperparameters.theta_r2.as_f64(),
        t.hyperparameters.theta_vif.as_f64()
    ));
    let total: f64 = t.iterations.iter().map(|i| i.elapsed_secs).sum();
    out.push_str(&format!(
        "- outcome: **{:?}** after {} iteration(s), {:.3}s total\n\n",
        t.terminated_by,
        t.iterations.len(),
        total
    ));

    out.push_str("## Iterations\n\n");
    out.push_str("| iter | composite | ok | temporal pruned | cycles broken | nodes dropped | elapsed (s) |\n");
    out.push_str("|-----:|----------:|:--:|----------------:|--------------:|--------------:|------------:|\n");
    for rec in &t.iterations {
        out.push_str(&format!(
            "| {} | {:.4} | {} | {} | {} | {} | {:.3} |\n",
            rec.iteration,
            rec.diagnostics.composite_score().as_f64(),
            if rec.diagnostics.ok { "yes" } else { "no" },
            rec.structural.temporal_edges_pruned.len(),
            rec.structural.cycle_edges_pruned.len(),
            rec.structural.disconnected_nodes_pruned.len(),
            rec.elapsed_secs
        ));
    }

    if let Some(best) = t.best_iteration {
        let rec = &t.iterations[best - 1];
        out.push_str(&format!(
            "\n## Best graph (iteration {best}, composite {:.4})\n\n",
            t.best_score.map(|s| s.as_f64()).unwrap_or(0.0)
        ));
        out.push_str("| criterion | passed | observed | threshold |\n");
        out.push_str("|-----------|:------:|---------:|----------:|\n");
        for c in &rec.diagnostics.criteria {
            out.push_str(&format!(
                "| {} | {} | {} | {} |\n",
                c.name,
                if c.passed { "yes" } else { "no" },
                c.observed
                    .map(|v| format!("{:.4}", v.as_f64()))
                    .unwrap_or_else(|| "-".into()),
                c.threshold
                    .map(|v| format!("{:.4}", v.as_f64()))
                    .unwrap_or_else(|| "-".into()),
            ));
        }
        out.push_str("\nEdges of the evaluated graph:\n\n```\n");
        for (p, c) in rec.diagnostics.dag_edges() {
            out.push_str(&format!("{p} -> {c}\n"));
        }
        out.push_str("```\n");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write as _;

    use crate::synth;

    fn write_panel_csv(dir: &Path, name: &str, ds: &PanelDataset<f64>) -> PathBuf {
        let path = dir.join(name);
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(synth::to_csv(ds).as_bytes()).unwrap();
        path
    }

    fn scripted_config(
        dir: &Path,
        ds: &PanelDataset<f64>,
        proposals: &[Proposal],
        t_max: usize,
        seed: u64,
        out_name: &str,
    ) -> RunConfig<f64> {
        let data_path = write_panel_csv(dir, "data.csv", ds);
        let script_path = dir.join("script.json");
        std::fs::write(
            &script_path,
            serde_json::to_string_pretty(proposals).unwrap(),
        )
        .unwrap();
        let mut hp =
            Hyperparameters::with_defaults(ds.treatment.clone(), ds.outcome.clone(), ds.n_cols());
        hp.t_max = t_max;
        RunConfig {
            hp,
            data_path,
            ingest: IngestConfig::new(ds.treatment.clone(), ds.outcome.clone()),
            proposer: ProposerKind::Scripted,
            script_path: Some(script_path),
            llm: None,
            out_dir: dir.join(out_name),
            seed,
        }
    }

    fn true_dag_proposal(ds: &PanelDataset<f64>) -> Proposal {
        Proposal {
            reasoning: "ground truth".into(),
            assumptions: "known generator".into(),
            edges: synth::confounder_true_dag(ds).edges_named(),
            negligible_effect_claimed: None,
        }
    }

    #[test]
    fn accepting_run_stops_after_first_iteration() {
        let dir = tempfile::tempdir().unwrap();
        let ds = synth::confounder_panel(1000, 40, 1.0);
        let config = scripted_config(dir.path(), &ds, &[true_dag_proposal(&ds)], 5, 7, "out");
        let outcome = run(&config).unwrap();
        let t = outcome.transcript;
        assert_eq!(t.terminated_by, TerminatedBy::Accepted);
        assert_eq!(t.iterations.len(), 1);
        assert!(t.iterations[0].diagnostics.ok);
        assert_eq!(t.best_iteration, Some(1));
        // artifact files exist
        for name in [
            "transcript.json",
            "diagnostics_1.json",
            "best_dag.dot",
            "summary.md",
            "manifest.json",
        ] {
            assert!(config.out_dir.join(name).exists(), "{name}");
        }
        assert_eq!(outcome.manifest.files.len(), 4);
    }

    #[test]
    fn failing_script_exhausts_budget_and_tracks_best() {
        let dir = tempfile::tempdir().unwrap();
        let ds = synth::confounder_panel(600, 41, 1.0);
        // Three deliberately poor proposals; the second is least bad.
        let p1 = Proposal {
            reasoning: String::new(),
            assumptions: String::new(),
            edges: vec![("sales2016".into(), "leverage2017".into())], // no T/Y
            negligible_effect_claimed: None,
        };
        let p2 = true_dag_proposal(&ds);
        let p3 = Proposal {
            reasoning: String::new(),
            assumptions: String::new(),
            edges: vec![
                (
                    "delta_ebitda_margin_2015_2016".into(),
                    "distress2018".into(),
                ),
                ("leverage2017".into(), "distress2018".into()),
            ],
            negligible_effect_claimed: None,
        };
        // Make every proposal fail by setting the composite threshold above
        // the attainable maximum of 1.
        let mut config = scripted_config(dir.path(), &ds, &[p1, p2, p3], 3, 9, "out");
        config.hp.theta_global = 1.5;
        let outcome = run(&config).unwrap();
        let t = outcome.transcript;
        assert_eq!(t.terminated_by, TerminatedBy::BudgetExhausted);
        assert_eq!(t.iterations.len(), 3);
        assert!(!t.iterations.iter().any(|i| i.diagnostics.ok));
        // best is the argmax composite; the true graph scores highest
        assert_eq!(t.best_iteration, Some(2));
        let scores: Vec<f64> = t
            .iterations
            .iter()
            .map(|i| i.diagnostics.composite_score())
            .collect();
        assert_eq!(
            t.best_score.unwrap(),
            scores.iter().cloned().fold(f64::MIN, f64::max)
        );
    }

    #[test]
    fn script_exhaustion_terminates_cleanly() {
        let dir = tempfile::tempdir().unwrap();
        let ds = synth::confounder_panel(400, 42, 0.0);
        let mut config = scripted_config(dir.path(), &ds, &[true_dag_proposal(&ds)], 4, 1, "out");
        config.hp.theta_global = 1.5; // force rejection
        let outcome = run(&config).unwrap();
        assert_eq!(
            outcome.transcript.terminated_by,
            TerminatedBy::ScriptExhausted
        );
        assert_eq!(outcome.transcript.iterations.len(), 1);
        assert!(config.out_dir.join("transcript.json").exists());
    }

    #[test]
    fn zero_iterations_rejected_at_validation() {
        let dir = tempfile::tempdir().unwrap();
        let ds = synth::confounder_panel(100, 2, 1.0);
        let mut config = scripted_config(dir.path(), &ds, &[], 1, 0, "out");
        config.hp.t_max = 0;
        assert!(matches!(
            run(&config),
            Err(RunError::Config(ConfigError::ZeroIterations))
        ));
    }

    #[test]
    fn unwritable_out_dir_fails_before_loop() {
        let dir = tempfile::tempdir().unwrap();
        let ds = synth::confounder_panel(100, 3, 1.0);
        let mut config = scripted_config(dir.path(), &ds, &[true_dag_proposal(&ds)], 1, 0, "out");
        // a file where the directory should be
        let blocked = dir.path().join("blocked");
        std::fs::write(&blocked, b"x").unwrap();
        config.out_dir = blocked.join("nested");
        assert!(matches!(
            run(&config),
            Err(RunError::OutputNotWritable { .. })
        ));
    }

    #[test]
    fn every_iteration_has_full_records() {
        let dir = tempfile::tempdir().unwrap();
        let ds = synth::confounder_panel(500, 44, 1.0);
        let bad = Proposal {
            reasoning: String::new(),
            assumptions: String::new(),
            edges: vec![("nonexistent_column".into(), "distress2018".into())],
            negligible_effect_claimed: None,
        };
        let config = scripted_config(dir.path(), &ds, &[bad, true_dag_proposal(&ds)], 2, 5, "out");
        let outcome = run(&config).unwrap();
        let t = outcome.transcript;
        assert_eq!(t.iterations.len(), 2);
        for rec in &t.iterations {
            assert!(!rec.failure_memo.is_empty());
        }
        assert!(t.iterations[0].diagnostics.invalid_reason.is_some());
        assert_eq!(t.terminated_by, TerminatedBy::Accepted);
    }

    #[test]
    fn heuristic_run_works_end_to_end() {
        let dir = tempfile::tempdir().unwrap();
        let ds = synth::bucketed_panel(4, 400, 77);
        let data_path = write_panel_csv(dir.path(), "data.csv", &ds);
        let mut hp: Hyperparameters<f64> =
            Hyperparameters::with_defaults(ds.treatment.clone(), ds.outcome.clone(), ds.n_cols());
        hp.t_max = 2;
        let config = RunConfig {
            hp,
            data_path,
            ingest: IngestConfig::new(ds.treatment.clone(), ds.outcome.clone()),
            proposer: ProposerKind::Heuristic,
            script_path: None,
            llm: None,
            out_dir: dir.path().join("out"),
            seed: 3,
        };
        let outcome = run(&config).unwrap();
        let t = outcome.transcript;
        assert!(!t.iterations.is_empty());
        for rec in &t.iterations {
            assert!(rec.structural.temporal_edges_pruned.is_empty());
            assert!(rec.structural.disconnected_nodes_pruned.is_empty());
        }
    }

    #[test]
    fn subsampling_projects_columns() {
        let dir = tempfile::tempdir().unwrap();
        let ds = synth::bucketed_panel(4, 300, 70);
        let data_path = write_panel_csv(dir.path(), "data.csv", &ds);
        let mut hp: Hyperparameters<f64> =
            Hyperparameters::with_defaults(ds.treatment.clone(), ds.outcome.clone(), 7);
        hp.t_max = 1;
        hp.k_init_max = 7;
        let config = RunConfig {
            hp,
            data_path,
            ingest: IngestConfig::new(ds.treatment.clone(), ds.outcome.clone()),
            proposer: ProposerKind::Heuristic,
            script_path: None,
            llm: None,
            out_dir: dir.path().join("out"),
            seed: 12,
        };
        let outcome = run(&config).unwrap();
        assert_eq!(outcome.transcript.columns.len(), 7);
        assert!(outcome.transcript.columns.contains(&ds.treatment));
    }
}
