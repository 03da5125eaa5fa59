//! Proposers: prompt rendering, the LLM endpoint client, scripted replays,
//! and a deterministic correlation heuristic, plus the refinement budget.

mod heuristic;
mod llm;
mod prompts;
mod scripted;

pub use heuristic::heuristic_propose;
pub use llm::{extract_json_object, parse_proposal, LlmConfig, LlmExchange, LlmProposer};
pub use prompts::{render_prompt, Message, PromptKind, RefinementContext};
pub use scripted::ScriptedProposer;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

/// One proposer emission: free-text rationale plus the machine-checkable
/// edge list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Proposal {
    pub reasoning: String,
    pub assumptions: String,
    /// Ordered `(parent, child)` pairs.
    pub edges: Vec<(String, String)>,
    /// Optional claim that a statistically insignificant treatment effect is
    /// genuinely negligible; only honoured when the run enables it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub negligible_effect_claimed: Option<bool>,
}

impl Proposal {
    /// Distinct variables mentioned by the edge list.
    pub fn node_set(&self) -> BTreeSet<&str> {
        self.edges
            .iter()
            .flat_map(|(p, c)| [p.as_str(), c.as_str()])
            .collect()
    }

    /// Checks the schema-level requirements that do not need the dataset:
    /// a non-empty edge list mentioning both treatment and outcome.
    pub fn validate(&self, treatment: &str, outcome: &str) -> Result<(), ProposalViolation> {
        if self.edges.is_empty() {
            return Err(ProposalViolation::EmptyEdges);
        }
        let nodes = self.node_set();
        for (name, role) in [(treatment, "treatment"), (outcome, "outcome")] {
            if !nodes.contains(name) {
                return Err(ProposalViolation::MissingEndpoint {
                    name: name.to_string(),
                    role,
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ProposalViolation {
    #[error("proposal has an empty edge list")]
    EmptyEdges,
    #[error("proposal does not mention the {role} `{name}`")]
    MissingEndpoint { name: String, role: &'static str },
    #[error("proposal references unknown column `{name}`")]
    UnknownColumn { name: String },
    #[error("refinement changed {changed} variables, above the budget of {budget}")]
    BudgetExceeded { changed: usize, budget: usize },
}

#[derive(Debug, Error)]
pub enum ProposerError {
    #[error("script exhausted at iteration {iteration}")]
    ScriptExhausted { iteration: usize },
    #[error("cannot load script `{path}`: {reason}")]
    ScriptLoad { path: String, reason: String },
    #[error("prompt template error: {0}")]
    Template(String),
    #[error("llm request failed after {attempts} attempt(s): {last_error}")]
    Exhausted { attempts: usize, last_error: String },
    #[error("llm endpoint misconfigured: {0}")]
    Config(String),
}

/// Key hyper-parameters of a discovery run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Hyperparameters<F> {
    /// Node-count bounds for the initial proposal.
    pub k_init_min: usize,
    pub k_init_max: usize,
    /// Maximum variables added/swapped/removed per refinement.
    pub k_refine: usize,
    /// Upper bound on proposal/evaluation iterations.
    pub t_max: usize,
    /// Number of columns sampled for the run.
    pub m: usize,
    /// Significance level for edge and model tests.
    pub alpha: F,
    /// Composite validity threshold.
    pub theta_global: F,
    /// Minimum mean node R².
    pub theta_r2: F,
    /// Maximum tolerated VIF.
    pub theta_vif: F,
    pub treatment: String,
    pub outcome: String,
    /// When true, an explicit negligible-effect claim satisfies the
    /// edge-significance criterion.
    #[serde(default)]
    pub accept_negligible_effect: bool,
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("k_init_min {min} must not exceed k_init_max {max}")]
    InitBoundsInverted { min: usize, max: usize },
    #[error("k_init_max {max} must not exceed the column budget m = {m}")]
    InitAboveBudget { max: usize, m: usize },
    #[error("t_max must be at least 1")]
    ZeroIterations,
    #[error("alpha must lie strictly inside (0, 1), got {alpha}")]
    AlphaOutOfRange { alpha: f64 },
    #[error("{name} must be positive, got {value}")]
    NonPositiveThreshold { name: &'static str, value: f64 },
    #[error("treatment and outcome must be distinct")]
    TreatmentEqualsOutcome,
}

impl<F: Scalar> Hyperparameters<F> {
    /// Defaults: ten iterations, five changes per refinement,
    /// composite threshold 0.60, mean-R² threshold 0.05, VIF limit 10, and
    /// alpha 0.05.
    pub fn with_defaults(
        treatment: impl Into<String>,
        outcome: impl Into<String>,
        m: usize,
    ) -> Self {
        Hyperparameters {
            k_init_min: 2.min(m),
            k_init_max: 15.min(m),
            k_refine: 5,
            t_max: 10,
            m,
            alpha: F::cast(0.05),
            theta_global: F::cast(0.60),
            theta_r2: F::cast(0.05),
            theta_vif: F::cast(10.0),
            treatment: treatment.into(),
            outcome: outcome.into(),
            accept_negligible_effect: false,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.k_init_min > self.k_init_max {
            return Err(ConfigError::InitBoundsInverted {
                min: self.k_init_min,
                max: self.k_init_max,
            });
        }
        if self.k_init_max > self.m {
            return Err(ConfigError::InitAboveBudget {
                max: self.k_init_max,
                m: self.m,
            });
        }
        if self.t_max == 0 {
            return Err(ConfigError::ZeroIterations);
        }
        let alpha = self.alpha.as_f64();
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(ConfigError::AlphaOutOfRange { alpha });
        }
        for (name, value) in [
            ("theta_global", self.theta_global.as_f64()),
            ("theta_r2", self.theta_r2.as_f64()),
            ("theta_vif", self.theta_vif.as_f64()),
        ] {
            if value <= 0.0 {
                return Err(ConfigError::NonPositiveThreshold { name, value });
            }
        }
        if self.treatment == self.outcome {
            return Err(ConfigError::TreatmentEqualsOutcome);
        }
        Ok(())
    }
}

/// Variables changed between two proposals: an add+remove pair counts as one
/// swap, so the count is `max(|added|, |removed|)` over the node sets.
pub fn refinement_change_count(prev: &Proposal, next: &Proposal) -> usize {
    let before = prev.node_set();
    let after = next.node_set();
    let added = after.difference(&before).count();
    let removed = before.difference(&after).count();
    added.max(removed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BudgetDecision {
    Accepted,
    Rejected { change_count: usize },
}

pub fn enforce_refinement_budget(
    prev: &Proposal,
    next: &Proposal,
    k_refine: usize,
) -> BudgetDecision {
    let changed = refinement_change_count(prev, next);
    if changed <= k_refine {
        BudgetDecision::Accepted
    } else {
        BudgetDecision::Rejected {
            change_count: changed,
        }
    }
}

#[cfg(test)]
pub(crate) fn proposal_with_edges(edges: &[(&str, &str)]) -> Proposal {
    Proposal {
        reasoning: String::new(),
        assumptions: String::new(),
        edges: edges
            .iter()
            .map(|(p, c)| (p.to_string(), c.to_string()))
            .collect(),
        negligible_effect_claimed: None,
    }
}
