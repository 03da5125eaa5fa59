//! Chat-completion endpoint client with schema validation and bounded
//! retries.
//!
//! The request is a plain chat-completion JSON body (`model`, `messages`,
//! `temperature`); the reply text is taken from a configurable path into the
//! response JSON (default `choices.0.message.content`). The first balanced
//! JSON object in the reply is parsed as a proposal; malformed replies and
//! budget violations are answered with a corrective message and retried, all
//! against one shared retry budget. The API credential comes from an
//! environment variable and never appears in logs.

use std::collections::BTreeSet;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{
    enforce_refinement_budget, BudgetDecision, Message, Proposal, ProposalViolation, ProposerError,
};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LlmConfig {
    pub endpoint_url: String,
    pub model: String,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    /// Environment variable holding the bearer token; unset means no auth
    /// header is sent.
    #[serde(default = "default_key_env")]
    pub api_key_env: String,
    /// Dot-separated path to the reply text inside the response JSON.
    #[serde(default = "default_content_path")]
    pub response_content_path: String,
    /// Extra attempts after the first, shared across schema failures,
    /// budget violations, and transport errors.
    #[serde(default = "default_retries")]
    pub max_retries: usize,
    /// Base backoff before retrying a transport error; doubles per attempt.
    #[serde(default = "default_backoff_ms")]
    pub retry_backoff_ms: u64,
}

fn default_temperature() -> f64 {
    0.2
}
fn default_timeout() -> u64 {
    120
}
fn default_key_env() -> String {
    "ARCADIA_LLM_API_KEY".into()
}
fn default_content_path() -> String {
    "choices.0.message.content".into()
}
fn default_retries() -> usize {
    3
}
fn default_backoff_ms() -> u64 {
    250
}

impl LlmConfig {
    pub fn new(endpoint_url: impl Into<String>, model: impl Into<String>) -> Self {
        LlmConfig {
            endpoint_url: endpoint_url.into(),
            model: model.into(),
            temperature: default_temperature(),
            timeout_secs: default_timeout(),
            api_key_env: default_key_env(),
            response_content_path: default_content_path(),
            max_retries: default_retries(),
            retry_backoff_ms: default_backoff_ms(),
        }
    }
}

/// One request/response round, as stored in the transcript. The request body
/// carries no credentials.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LlmExchange {
    pub request: Value,
    pub response: Option<String>,
    pub error: Option<String>,
}

pub struct LlmProposer {
    config: LlmConfig,
    agent: ureq::Agent,
}

impl LlmProposer {
    pub fn new(config: LlmConfig) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
            .build()
            .into();
        LlmProposer { config, agent }
    }

    /// Runs the propose/validate/retry loop and returns the accepted proposal
    /// together with every raw exchange.
    ///
    /// `previous` enables the refinement budget check against the prior
    /// accepted proposal.
    pub fn propose(
        &self,
        mut messages: Vec<Message>,
        treatment: &str,
        outcome: &str,
        known_columns: &BTreeSet<String>,
        previous: Option<(&Proposal, usize)>,
    ) -> Result<(Proposal, Vec<LlmExchange>), ProposerError> {
        let mut exchanges = Vec::new();
        let attempts = self.config.max_retries + 1;
        let mut last_error = String::from("no attempt made");

        for attempt in 0..attempts {
            let request = json!({
                "model": self.config.model,
                "messages": messages,
                "temperature": self.config.temperature,
            });
            let reply = match self.post(&request) {
                Ok(body) => body,
                Err(e) => {
                    last_error = e;
                    exchanges.push(LlmExchange {
                        request,
                        response: None,
                        error: Some(last_error.clone()),
                    });
                    if attempt + 1 < attempts {
                        let backoff = self.config.retry_backoff_ms.saturating_mul(1 << attempt);
                        std::thread::sleep(Duration::from_millis(backoff.min(4_000)));
                    }
                    continue;
                }
            };
            let content = match self.extract_content(&reply) {
                Ok(c) => c,
                Err(e) => {
                    last_error = e;
                    exchanges.push(LlmExchange {
                        request,
                        response: Some(reply.to_string()),
                        error: Some(last_error.clone()),
                    });
                    continue;
                }
            };
            exchanges.push(LlmExchange {
                request,
                response: Some(content.clone()),
                error: None,
            });

            match validate_reply(&content, treatment, outcome, known_columns, previous) {
                Ok(proposal) => return Ok((proposal, exchanges)),
                Err(problem) => {
                    last_error = problem.clone();
                    if let Some(ex) = exchanges.last_mut() {
                        ex.error = Some(problem.clone());
                    }
                    messages.push(Message {
                        role: "assistant".into(),
                        content,
                    });
                    messages.push(Message::user(format!(
                        "Your previous reply was rejected: {problem}\n\
                         Return a corrected JSON object with the required schema \
                         (fields: reasoning, assumptions, edges as [[\"parent\", \"child\"], ...])."
                    )));
                }
            }
        }
        Err(ProposerError::Exhausted {
            attempts,
            last_error,
        })
    }

    fn post(&self, request: &Value) -> Result<Value, String> {
        let key = std::env::var(&self.config.api_key_env).ok();
        let mut builder = self.agent.post(&self.config.endpoint_url);
        if let Some(key) = key {
            builder = builder.header("Authorization", &format!("Bearer {key}"));
        }
        let mut response = builder
            .send_json(request)
            .map_err(|e| format!("transport error: {e}"))?;
        response
            .body_mut()
            .read_json::<Value>()
            .map_err(|e| format!("response is not JSON: {e}"))
    }

    fn extract_content(&self, reply: &Value) -> Result<String, String> {
        let mut cursor = reply;
        for part in self.config.response_content_path.split('.') {
            cursor = match part.parse::<usize>() {
                Ok(idx) => cursor
                    .get(idx)
                    .ok_or_else(|| format!("response path misses index `{part}`"))?,
                Err(_) => cursor
                    .get(part)
                    .ok_or_else(|| format!("response path misses field `{part}`"))?,
            };
        }
        cursor
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| "response content is not a string".into())
    }
}

fn validate_reply(
    content: &str,
    treatment: &str,
    outcome: &str,
    known_columns: &BTreeSet<String>,
    previous: Option<(&Proposal, usize)>,
) -> Result<Proposal, String> {
    let proposal = parse_proposal(content).map_err(|e| e.to_string())?;
    proposal
        .validate(treatment, outcome)
        .map_err(|e| e.to_string())?;
    for name in proposal.node_set() {
        if !known_columns.contains(name) {
            return Err(ProposalViolation::UnknownColumn {
                name: name.to_string(),
            }
            .to_string());
        }
    }
    if let Some((prev, k_refine)) = previous {
        if let BudgetDecision::Rejected { change_count } =
            enforce_refinement_budget(prev, &proposal, k_refine)
        {
            return Err(ProposalViolation::BudgetExceeded {
                changed: change_count,
                budget: k_refine,
            }
            .to_string());
        }
    }
    Ok(proposal)
}

/// Pulls the single top-level JSON object out of an LLM reply, tolerating
/// code fences and surrounding prose. Zero or multiple balanced top-level
/// objects are rejected.
pub fn extract_json_object(text: &str) -> Result<&str, String> {
    let search_space = fenced_block(text).unwrap_or(text);
    let mut found: Option<(usize, usize)> = None;
    let bytes = search_space.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'{' {
            match balanced_end(search_space, i) {
                Some(end) => {
                    if found.is_some() {
                        return Err("reply contains multiple top-level JSON objects".into());
                    }
                    found = Some((i, end));
                    i = end;
                }
                None => break, // unbalanced tail; ignore
            }
        }
        i += 1;
    }
    match found {
        Some((start, end)) => Ok(&search_space[start..end]),
        None => Err("reply contains no JSON object".into()),
    }
}

/// Content of the first code fence, preferring a ```json fence.
fn fenced_block(text: &str) -> Option<&str> {
    for marker in ["```json", "```"] {
        if let Some(start) = text.find(marker) {
            let body_start = start + marker.len();
            let rest = &text[body_start..];
            if let Some(end) = rest.find("```") {
                return Some(&rest[..end]);
            }
        }
    }
    None
}

/// Byte index one past the `}` closing the object opened at `start`, honoring
/// string literals and escapes.
fn balanced_end(text: &str, start: usize) -> Option<usize> {
    let bytes = text.as_bytes();
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (offset, &b) in bytes[start..].iter().enumerate() {
        if in_string {
            if escaped {
                escaped = false;
            } else if b == b'\\' {
                escaped = true;
            } else if b == b'"' {
                in_string = false;
            }
            continue;
        }
        match b {
            b'"' => in_string = true,
            b'{' => depth += 1,
            b'}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(start + offset + 1);
                }
            }
            _ => {}
        }
    }
    None
}

/// Parses a proposal from raw reply text (fence and prose tolerant).
pub fn parse_proposal(content: &str) -> Result<Proposal, String> {
    let object = extract_json_object(content)?;
    serde_json::from_str::<Proposal>(object).map_err(|e| format!("schema violation: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propose::proposal_with_edges;

    #[test]
    fn parses_plain_reply() {
        let content = r#"{"reasoning":"r","assumptions":"a","edges":[["a","b"]]}"#;
        let p = parse_proposal(content).unwrap();
        assert_eq!(p.edges, vec![("a".to_string(), "b".to_string())]);
    }

    #[test]
    fn parses_fenced_reply_with_prose() {
        let content = "Here is my DAG:\n```json\n{\"reasoning\":\"r\",\"assumptions\":\"a\",\"edges\":[[\"a\",\"b\"],[\"b\",\"c\"]]}\n```\nHope this helps!";
        let p = parse_proposal(content).unwrap();
        assert_eq!(p.edges.len(), 2);
    }

    #[test]
    fn arrow_strings_are_schema_violations() {
        let content = r#"{"reasoning":"r","assumptions":"a","edges":["a->b"]}"#;
        let err = parse_proposal(content).unwrap_err();
        assert!(err.contains("schema violation"), "{err}");
    }

    #[test]
    fn multiple_objects_rejected() {
        let content =
            r#"{"reasoning":"r","assumptions":"a","edges":[["a","b"]]} and also {"x": 1}"#;
        assert!(extract_json_object(content).is_err());
    }

    #[test]
    fn no_object_rejected() {
        assert!(extract_json_object("no json here").is_err());
    }

    #[test]
    fn braces_inside_strings_do_not_confuse_the_scanner() {
        let content =
            r#"{"reasoning":"uses { and } freely","assumptions":"a","edges":[["a","b"]]}"#;
        let p = parse_proposal(content).unwrap();
        assert_eq!(p.reasoning, "uses { and } freely");
    }

    #[test]
    fn negligible_flag_round_trips() {
        let content = r#"{"reasoning":"r","assumptions":"a","edges":[["t","y"]],"negligible_effect_claimed":true}"#;
        let p = parse_proposal(content).unwrap();
        assert_eq!(p.negligible_effect_claimed, Some(true));
    }

    #[test]
    fn validate_reply_enforces_budget_and_columns() {
        let known: BTreeSet<String> = ["t", "y", "a", "b", "c"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let prev = proposal_with_edges(&[("t", "y")]);
        let next = r#"{"reasoning":"","assumptions":"","edges":[["t","y"],["a","y"],["b","y"],["c","y"]]}"#;
        let err = validate_reply(next, "t", "y", &known, Some((&prev, 2))).unwrap_err();
        assert!(err.contains("budget"), "{err}");

        let unknown = r#"{"reasoning":"","assumptions":"","edges":[["t","y"],["zz","y"]]}"#;
        let err = validate_reply(unknown, "t", "y", &known, None).unwrap_err();
        assert!(err.contains("zz"), "{err}");
    }
}
