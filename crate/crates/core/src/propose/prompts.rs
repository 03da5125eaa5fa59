//! Prompt templates and rendering.
//!
//! Rendering is pure string substitution over named placeholders, so the same
//! inputs always produce byte-identical messages. An unresolved placeholder
//! after substitution is a template-integrity error.

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

use super::{Hyperparameters, ProposerError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PromptKind {
    Bootstrap,
    Refinement,
}

/// One chat message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub role: String,
    pub content: String,
}

impl Message {
    pub fn system(content: impl Into<String>) -> Self {
        Message {
            role: "system".into(),
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Message {
            role: "user".into(),
            content: content.into(),
        }
    }
}

/// Prior-round context injected into a refinement prompt.
#[derive(Debug, Clone)]
pub struct RefinementContext<'a> {
    pub iteration: usize,
    pub previous_edges: &'a [(String, String)],
    pub failure_memo: &'a str,
}

const BOOTSTRAP_SYSTEM: &str = r#"You are an autonomous causal-inference researcher.

**Objective** Estimate the causal effect of **{treatment} -> {outcome}** by proposing
an initial Directed Acyclic Graph (DAG).

Remember that {treatment} and {outcome} MUST BE IN THE DAG.

**Task**
Propose a starting DAG with between {initial_min_cols} and {initial_max_cols} nodes that represents
your best hypothesis about the causal relationships between the treatment, outcome,
and potential confounders or mediators. The graph must be acyclic.

---
### Causal-assumption checklist
In **your `assumptions` field** explicitly answer:
1. *Unobserved confounding*: which latent factors remain, and how do your chosen variables proxy for them?
2. *Positivity*: are there sub-groups where treatment is (almost) deterministic?
3. *Consistency / SUTVA*: why is {treatment} well-defined and why don't units interfere?
4. *Temporal ordering*: confirm every parent variable predates its children.
If any assumption looks doubtful, flag it.
"#;

const USER_MESSAGE: &str = r#"Iteration {iteration}: Propose a DAG with the following schema.

Return a JSON object exactly in the following schema.
Available columns: {all_cols_str}

MUST STRICTLY USE THE SAME COLUMN NAMES AS IN THE WORKING DATAFRAME.
YOU ARE ONLY ALLOWED TO ADD/REMOVE/SWAP COLUMNS A MAXIMUM OF {max_refinement_cols} TIMES.

Columns that start with "delta" are year-over-year changes; other columns
carry the year they were measured in their name.

Remember that {treatment} and {outcome} MUST BE IN THE DAG.

{
    "reasoning": "string",
    "assumptions": "string",
    "edges": [["parent", "child"], ["parent", "child"], ...]
}
"#;

const REFINEMENT_SYSTEM: &str = r#"### Your task

Based on the historical feedback, propose a *refined* DAG that addresses the recurring issues.
* You may **add, swap, or remove up to {max_refinement_cols} columns** compared with the
  previous DAG in the past messages.
* Keep the graph acyclic and ensure the total node count stays within the
  allowed range.

Explain your causal reasoning **first**, output a new DAG with
a JSON object that matches the provided schema.

CAUSAL INFERENCE OBJECTIVE: Discover the true causal relationship between {treatment} and {outcome} by testing different DAG structures that reflect theoretical possibilities.

FUNDAMENTAL PRINCIPLE: You are DISCOVERING causal structure, not engineering it. Variable changes should reflect different theories about how the world actually works.

DECISION HIERARCHY:

PRIORITY 1: CAUSAL IDENTIFICATION
- If minimal_adj_set is null -> Test alternative theoretical frameworks:
  a) ADD a major confounder you may have missed (unobserved heterogeneity proxies)
  b) SWAP to variables representing different theoretical mechanisms
  c) If repeatedly null across reasonable theories -> Accept that identification may require external variation
- If minimal_adj_set exists -> These variables are REQUIRED (cannot be removed without theoretical justification)

PRIORITY 2: THEORETICAL VALIDITY
- If orientation is false -> Consider alternative causal theories:
  a) Maybe the true causal direction is reversed
  b) Maybe there's bidirectional causation
  c) Maybe there's an unmeasured common cause
- DAG structure must reflect plausible real-world causal mechanisms

PRIORITY 3: EFFECT DETECTION AND PRECISION
- If treatment -> outcome is insignificant -> Consider:
  a) True effect might be zero (not a problem to fix)
  b) ADD precision variables (reduce outcome noise)
  c) TEST different theoretical pathways (direct vs. mediated effects)
- Focus on identifying the effect that actually exists, not manufacturing significance

PRIORITY 4: MODEL DIAGNOSTICS
- High VIF: Accept if variables are causally necessary; avoid if redundant
- Low R^2: Accept if causal structure is sound; only improve if it aids identification

**Verification criteria** All conditions must hold simultaneously to declare the thesis VERIFIED:

1. *Identifiable* - a minimal adjustment set exists (possibly empty).
2. *Orientation* - treatment -> outcome has DeltaBIC > 0.
3. *Edge significance* - adjusted p-value < {alpha} (or a justified negligible effect).
4. *Global validity* >= {global_validity_threshold} and average R^2 >= {r2_threshold}.
5. *No multicollinearity* - every VIF <= {vif_threshold}.
6. *Positivity* - sufficient propensity-score overlap.

### Causal-assumption checklist
In **your `assumptions` field** explicitly answer:
1. *Unobserved confounding*: which latent factors remain, and how do your chosen variables proxy for them?
2. *Positivity*: are there sub-groups where treatment is (almost) deterministic?
3. *Consistency / SUTVA*: why is {treatment} well-defined and why don't units interfere?
4. *Temporal ordering*: confirm every parent variable predates its children.

If any assumption looks doubtful, flag it.

REMEMBER: Your goal is scientific discovery of causal relationships, not optimization of statistical metrics. A well-identified small effect is more valuable than a poorly-identified large effect.

Reason on previous DAGs. What worked and what didn't? And propose a new DAG.

REMEMBER TO ADD/SWAP/REMOVE A MAXIMUM OF {max_refinement_cols} COLUMNS. You must list your changes as part of the reasoning, including a complete rationale based on domain theory AND statistical metrics.

Return a JSON object exactly in the following schema.

{
    "reasoning": "string",
    "assumptions": "string",
    "edges": [["parent", "child"], ["parent", "child"], ...]
}
"#;

const REFINEMENT_CONTEXT: &str = r#"Iteration {iteration}: the previous DAG did not pass verification.

Previous DAG edges:
{previous_edges}

Diagnostic report:
{failure_memo}

Propose a refined DAG. YOU ARE ONLY ALLOWED TO ADD/REMOVE/SWAP COLUMNS A MAXIMUM OF {max_refinement_cols} TIMES.
Available columns: {all_cols_str}

Remember that {treatment} and {outcome} MUST BE IN THE DAG.
"#;

fn substitute(template: &str, vars: &[(&str, String)]) -> Result<String, ProposerError> {
    let mut out = template.to_string();
    for (key, value) in vars {
        out = out.replace(&format!("{{{key}}}"), value);
    }
    if let Some(name) = find_placeholder(&out) {
        return Err(ProposerError::Template(format!(
            "unresolved placeholder `{{{name}}}`"
        )));
    }
    Ok(out)
}

/// Finds a `{lower_snake_case}` token, ignoring braces that open JSON blocks.
fn find_placeholder(text: &str) -> Option<String> {
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'{' {
            let start = i + 1;
            let mut j = start;
            while j < bytes.len() && (bytes[j].is_ascii_lowercase() || bytes[j] == b'_') {
                j += 1;
            }
            if j > start && j < bytes.len() && bytes[j] == b'}' {
                return Some(text[start..j].to_string());
            }
        }
        i += 1;
    }
    None
}

fn common_vars<F: Scalar>(
    hp: &Hyperparameters<F>,
    columns: &[String],
) -> Vec<(&'static str, String)> {
    vec![
        ("treatment", hp.treatment.clone()),
        ("outcome", hp.outcome.clone()),
        ("initial_min_cols", hp.k_init_min.to_string()),
        ("initial_max_cols", hp.k_init_max.to_string()),
        ("max_refinement_cols", hp.k_refine.to_string()),
        ("alpha", format!("{}", hp.alpha.as_f64())),
        (
            "global_validity_threshold",
            format!("{}", hp.theta_global.as_f64()),
        ),
        ("r2_threshold", format!("{}", hp.theta_r2.as_f64())),
        ("vif_threshold", format!("{}", hp.theta_vif.as_f64())),
        ("all_cols_str", columns.join(", ")),
    ]
}

/// Renders the message sequence for one proposal round. `Bootstrap` is only
/// valid at iteration 1; `Refinement` requires prior diagnostics.
pub fn render_prompt<F: Scalar>(
    kind: PromptKind,
    hp: &Hyperparameters<F>,
    columns: &[String],
    iteration: usize,
    refinement: Option<&RefinementContext<'_>>,
) -> Result<Vec<Message>, ProposerError> {
    match kind {
        PromptKind::Bootstrap => {
            if iteration != 1 {
                return Err(ProposerError::Template(format!(
                    "bootstrap prompt requested at iteration {iteration}"
                )));
            }
            let mut vars = common_vars(hp, columns);
            vars.push(("iteration", iteration.to_string()));
            Ok(vec![
                Message::system(substitute(BOOTSTRAP_SYSTEM, &vars)?),
                Message::user(substitute(USER_MESSAGE, &vars)?),
            ])
        }
        PromptKind::Refinement => {
            let ctx = refinement.ok_or_else(|| {
                ProposerError::Template("refinement prompt needs prior diagnostics".into())
            })?;
            let mut vars = common_vars(hp, columns);
            vars.push(("iteration", ctx.iteration.to_string()));
            let edges_json =
                serde_json::to_string(ctx.previous_edges).expect("edge list serializes");
            vars.push(("previous_edges", edges_json));
            vars.push(("failure_memo", ctx.failure_memo.to_string()));
            Ok(vec![
                Message::system(substitute(REFINEMENT_SYSTEM, &vars)?),
                Message::user(substitute(REFINEMENT_CONTEXT, &vars)?),
            ])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hp() -> Hyperparameters<f64> {
        Hyperparameters::with_defaults("delta_t_2015_2016", "bankruptcy_2018_2019", 20)
    }

    fn cols() -> Vec<String> {
        vec![
            "delta_t_2015_2016".into(),
            "bankruptcy_2018_2019".into(),
            "roe2016".into(),
        ]
    }

    #[test]
    fn bootstrap_contains_names_and_bounds() {
        let msgs = render_prompt(PromptKind::Bootstrap, &hp(), &cols(), 1, None).unwrap();
        assert_eq!(msgs.len(), 2);
        assert_eq!(msgs[0].role, "system");
        assert!(msgs[0].content.contains("delta_t_2015_2016"));
        assert!(msgs[0].content.contains("between 2 and 15 nodes"));
        assert!(msgs[1].content.contains("roe2016"));
        assert!(!msgs[1].content.contains("{iteration}"));
    }

    #[test]
    fn bootstrap_rejected_after_iteration_one() {
        assert!(render_prompt(PromptKind::Bootstrap, &hp(), &cols(), 2, None).is_err());
    }

    #[test]
    fn refinement_embeds_memo_verbatim() {
        let memo = "criterion max_vif: FAILED (observed=14.2000, threshold=10.0000)";
        let prev = vec![("roe2016".to_string(), "bankruptcy_2018_2019".to_string())];
        let ctx = RefinementContext {
            iteration: 3,
            previous_edges: &prev,
            failure_memo: memo,
        };
        let msgs = render_prompt(PromptKind::Refinement, &hp(), &cols(), 3, Some(&ctx)).unwrap();
        assert!(msgs[1].content.contains(memo));
        assert!(msgs[1]
            .content
            .contains(r#"[["roe2016","bankruptcy_2018_2019"]]"#));
        assert!(msgs[0].content.contains("up to 5 columns"));
    }

    #[test]
    fn refinement_without_context_errors() {
        assert!(render_prompt(PromptKind::Refinement, &hp(), &cols(), 2, None).is_err());
    }

    #[test]
    fn unresolved_placeholder_is_caught() {
        let err = substitute("hello {nope}", &[("other", "x".into())]).unwrap_err();
        match err {
            ProposerError::Template(msg) => assert!(msg.contains("{nope}")),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn json_schema_braces_are_not_placeholders() {
        assert_eq!(find_placeholder("{\n  \"reasoning\": \"string\"\n}"), None);
        assert_eq!(find_placeholder("x {abc} y"), Some("abc".into()));
    }

    #[test]
    fn rendering_is_pure() {
        let a = render_prompt(PromptKind::Bootstrap, &hp(), &cols(), 1, None).unwrap();
        let b = render_prompt(PromptKind::Bootstrap, &hp(), &cols(), 1, None).unwrap();
        assert_eq!(a, b);
    }
}
