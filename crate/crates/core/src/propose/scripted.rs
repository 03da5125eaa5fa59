//! Deterministic replay proposer: a JSON array of proposals, one per
//! iteration.

use std::path::Path;

use super::{Proposal, ProposerError};

#[derive(Debug, Clone)]
pub struct ScriptedProposer {
    proposals: Vec<Proposal>,
}

impl ScriptedProposer {
    pub fn new(proposals: Vec<Proposal>) -> Self {
        ScriptedProposer { proposals }
    }

    pub fn load(path: &Path) -> Result<Self, ProposerError> {
        let text = std::fs::read_to_string(path).map_err(|e| ProposerError::ScriptLoad {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        let proposals: Vec<Proposal> =
            serde_json::from_str(&text).map_err(|e| ProposerError::ScriptLoad {
                path: path.display().to_string(),
                // serde_json reports line and column in its message
                reason: e.to_string(),
            })?;
        Ok(ScriptedProposer { proposals })
    }

    pub fn len(&self) -> usize {
        self.proposals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.proposals.is_empty()
    }

    /// Returns the entry for a 1-based iteration, or the exhaustion signal
    /// that tells the loop to stop with its best graph so far.
    pub fn propose(&self, iteration: usize) -> Result<Proposal, ProposerError> {
        self.proposals
            .get(iteration.checked_sub(1).unwrap_or(usize::MAX))
            .cloned()
            .ok_or(ProposerError::ScriptExhausted { iteration })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn script_json() -> &'static str {
        r#"[
            {"reasoning": "first", "assumptions": "a", "edges": [["t", "y"]]},
            {"reasoning": "second", "assumptions": "a", "edges": [["c", "t"], ["c", "y"], ["t", "y"]]},
            {"reasoning": "third", "assumptions": "a", "edges": [["t", "y"], ["z", "y"]]}
        ]"#
    }

    #[test]
    fn returns_entry_by_iteration() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(script_json().as_bytes()).unwrap();
        let s = ScriptedProposer::load(f.path()).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.propose(2).unwrap().reasoning, "second");
    }

    #[test]
    fn exhaustion_signals_iteration() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(script_json().as_bytes()).unwrap();
        let s = ScriptedProposer::load(f.path()).unwrap();
        assert!(matches!(
            s.propose(4),
            Err(ProposerError::ScriptExhausted { iteration: 4 })
        ));
    }

    #[test]
    fn malformed_script_reports_location() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(b"[{\"reasoning\": }]").unwrap();
        let err = ScriptedProposer::load(f.path()).unwrap_err();
        match err {
            ProposerError::ScriptLoad { reason, .. } => {
                assert!(reason.contains("line"), "{reason}")
            }
            other => panic!("{other}"),
        }
    }
}
