//! Causal identification: back-door criterion, minimal adjustment set
//! search, and the propensity-overlap (positivity) check.

use serde::{Deserialize, Serialize};

use crate::data::PanelDataset;
use crate::graph::{Dag, DagError};
use crate::scalar::Scalar;
use crate::stats::{fit_logit, RegressionFit};

/// Exhaustive search stops at this candidate-set cardinality; graphs at the
/// scale this tool evaluates are far below it after pruning.
pub const ADJUSTMENT_SET_SIZE_CAP: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentificationResult {
    pub identifiable: bool,
    /// Sorted member names; `None` when no valid set exists within the cap.
    pub minimal_adjustment_set: Option<Vec<String>>,
    pub candidate_count_examined: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PositivityResult<F> {
    /// Fraction of rows with propensity in [0.05, 0.95].
    pub overlap_share: F,
    pub positivity_ok: bool,
    pub propensity_model: Option<RegressionFit<F>>,
    /// True when the adjustment set was empty and the check was skipped.
    pub skipped: bool,
    /// Present when the propensity model could not be used.
    pub failure: Option<String>,
}

/// Propensity scores inside this closed interval count as overlapping.
pub const OVERLAP_BOUNDS: (f64, f64) = (0.05, 0.95);
/// Minimum overlapping share (strict) for positivity to hold.
pub const OVERLAP_SHARE_THRESHOLD: f64 = 0.90;

/// Back-door criterion for `z` relative to `treatment -> outcome`:
/// (a) `z` contains no descendant of the treatment, and (b) `z` d-separates
/// treatment and outcome once edges out of the treatment are removed.
pub fn backdoor_valid(
    dag: &Dag,
    treatment: &str,
    outcome: &str,
    z: &[&str],
) -> Result<bool, DagError> {
    for name in z {
        if *name == treatment || *name == outcome {
            return Err(DagError::InvalidQuery {
                reason: format!("adjustment set contains `{name}`"),
            });
        }
        if !dag.contains(name) {
            return Err(DagError::NodeNotFound {
                name: name.to_string(),
            });
        }
    }
    let descendants = dag.descendants(treatment)?;
    if z.iter().any(|name| descendants.iter().any(|d| d == name)) {
        return Ok(false);
    }
    dag.without_outgoing(treatment)?
        .d_separated(treatment, outcome, z)
}

/// Smallest valid back-door set for `(treatment, outcome)`, searching by
/// increasing cardinality over non-descendant candidates; ties at the minimal
/// size are broken lexicographically on the sorted member names.
pub fn minimal_adjustment_set(
    dag: &Dag,
    treatment: &str,
    outcome: &str,
) -> Result<IdentificationResult, DagError> {
    let descendants = dag.descendants(treatment)?;
    if !dag.contains(outcome) {
        return Err(DagError::NodeNotFound {
            name: outcome.to_string(),
        });
    }
    let mut pool: Vec<&str> = dag
        .nodes()
        .iter()
        .map(|s| s.as_str())
        .filter(|&n| n != treatment && n != outcome && !descendants.iter().any(|d| d == n))
        .collect();
    pool.sort_unstable();

    let mut examined = 0usize;
    for size in 0..=pool.len().min(ADJUSTMENT_SET_SIZE_CAP) {
        // Combinations in lexicographic order: the first hit at a given size
        // is the lexicographically smallest winner.
        let mut found: Option<Vec<String>> = None;
        for combo in Combinations::new(pool.len(), size) {
            examined += 1;
            let z: Vec<&str> = combo.iter().map(|&i| pool[i]).collect();
            if backdoor_valid(dag, treatment, outcome, &z)? {
                found = Some(z.iter().map(|s| s.to_string()).collect());
                break;
            }
        }
        if let Some(set) = found {
            return Ok(IdentificationResult {
                identifiable: true,
                minimal_adjustment_set: Some(set),
                candidate_count_examined: examined,
            });
        }
    }
    Ok(IdentificationResult {
        identifiable: false,
        minimal_adjustment_set: None,
        candidate_count_examined: examined,
    })
}

/// k-subsets of `0..n` in lexicographic order.
struct Combinations {
    n: usize,
    k: usize,
    current: Option<Vec<usize>>,
}

impl Combinations {
    fn new(n: usize, k: usize) -> Self {
        let current = (k <= n).then(|| (0..k).collect());
        Combinations { n, k, current }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let current = self.current.take()?;
        let out = current.clone();
        // advance
        let mut next = current;
        let (n, k) = (self.n, self.k);
        let mut i = k;
        loop {
            if i == 0 {
                self.current = None;
                break;
            }
            i -= 1;
            if next[i] < n - (k - i) {
                next[i] += 1;
                for j in i + 1..k {
                    next[j] = next[j - 1] + 1;
                }
                self.current = Some(next);
                break;
            }
        }
        Some(out)
    }
}

/// Propensity-overlap check of the treatment given adjustment columns `z`.
///
/// A binary treatment is modelled directly; a continuous treatment is
/// dichotomized at its median for this check only. An empty `z` skips the
/// check with `positivity_ok = true`.
pub fn positivity_check<F: Scalar>(
    ds: &PanelDataset<F>,
    treatment: &str,
    z: &[String],
) -> PositivityResult<F> {
    if z.is_empty() {
        return PositivityResult {
            overlap_share: F::one(),
            positivity_ok: true,
            propensity_model: None,
            skipped: true,
            failure: None,
        };
    }
    let failed = |msg: String, model: Option<RegressionFit<F>>| PositivityResult {
        overlap_share: F::zero(),
        positivity_ok: false,
        propensity_model: model,
        skipped: false,
        failure: Some(msg),
    };

    let t_col = match ds.column(treatment) {
        Some(c) => c,
        None => {
            return failed(
                format!("treatment column `{treatment}` not in dataset"),
                None,
            )
        }
    };
    let response: Vec<F> = if ds.is_binary(treatment) {
        t_col.to_vec()
    } else {
        let med = median(t_col);
        t_col
            .iter()
            .map(|&v| if v > med { F::one() } else { F::zero() })
            .collect()
    };

    let mut zcols: Vec<&[F]> = Vec::with_capacity(z.len());
    for name in z {
        match ds.column(name) {
            Some(c) => zcols.push(c),
            None => return failed(format!("adjustment column `{name}` not in dataset"), None),
        }
    }

    let fit = match fit_logit(&response, &zcols) {
        Ok(fit) => fit,
        Err(e) => return failed(format!("propensity model failed: {e}"), None),
    };
    if !fit.converged {
        return failed("propensity model did not converge".into(), Some(fit));
    }

    let (lo, hi) = (F::cast(OVERLAP_BOUNDS.0), F::cast(OVERLAP_BOUNDS.1));
    let mut inside = 0usize;
    for i in 0..ds.n_rows() {
        let mut eta = fit.intercept;
        for (c, col) in fit.coefficients.iter().zip(&zcols) {
            eta = eta + *c * col[i];
        }
        let e = F::one() / (F::one() + (-eta).exp());
        if e >= lo && e <= hi {
            inside += 1;
        }
    }
    let share = F::from_count(inside) / F::from_count(ds.n_rows());
    PositivityResult {
        overlap_share: share,
        positivity_ok: share > F::cast(OVERLAP_SHARE_THRESHOLD),
        propensity_model: Some(fit),
        skipped: false,
        failure: None,
    }
}

fn median<F: Scalar>(xs: &[F]) -> F {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / F::cast(2.0)
    }
}

/// Union of endpoint names, for building test graphs.
#[cfg(test)]
fn edge_names(edges: &[(&str, &str)]) -> std::collections::HashSet<String> {
    edges
        .iter()
        .flat_map(|(p, c)| [p.to_string(), c.to_string()])
        .collect()
}
