//! The evaluation engine: structural preprocessing, node and edge statistics,
//! global scores, identification, positivity, the treatment-effect model, and
//! the final accept/reject decision.
//!
//! Nothing in here surfaces an error: every failure mode is encoded in the
//! returned [`Diagnostics`], which serializes to a stable JSON shape used by
//! run transcripts.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::data::PanelDataset;
use crate::graph::{Dag, StructuralReport};
use crate::ident::{
    minimal_adjustment_set, positivity_check, IdentificationResult, PositivityResult,
};
use crate::propose::Hyperparameters;
use crate::scalar::Scalar;
use crate::stats::{
    delta_bic, fdr_adjust, fit_logit, fit_ols, residual_correlation, vif, RegressionFit,
    ResidualCorrelation, StatError,
};

/// Edges whose directional BIC gap exceeds this count toward direction
/// accuracy.
pub const DIRECTION_BIC_MARGIN: f64 = 2.0;

/// One verification criterion with its observed value and threshold.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CriterionRecord<F> {
    pub name: String,
    pub passed: bool,
    pub observed: Option<F>,
    pub threshold: Option<F>,
}

/// Per-node regression diagnostics. Parentless nodes carry no fit and are
/// excluded from the global ratios.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NodeDiagnostics<F> {
    pub node: String,
    pub parents: Vec<String>,
    pub fit: Option<RegressionFit<F>>,
    pub fit_error: Option<String>,
    pub vifs: BTreeMap<String, F>,
    pub adequate: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdgeStats<F> {
    pub parent: String,
    pub child: String,
    pub residual_corr: F,
    pub residual_corr_defined: bool,
    /// Parent's coefficient inside the child's node model.
    pub coefficient: Option<F>,
    pub p_raw: F,
    pub p_fdr: F,
    pub delta_bic: Option<F>,
    pub mixed_scale: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GlobalDiagnostics<F> {
    pub sig_edge_ratio: F,
    pub sig_model_ratio: F,
    pub direction_accuracy: F,
    pub mean_r2: F,
    pub mean_adj_r2: F,
    pub composite_score: F,
}

/// The treatment-outcome effect model, fitted separately from the edge
/// statistics with the adjustment set as covariates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TreatmentEdge<F> {
    pub parent: String,
    pub child: String,
    pub coefficient: Option<F>,
    pub p_raw: Option<F>,
    /// Present when the treatment edge is part of the FDR family.
    pub p_fdr: Option<F>,
    pub delta_bic: Option<F>,
    pub mixed_scale: bool,
    pub adjusted_for: Vec<String>,
    pub model_converged: bool,
    pub is_dag_edge: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Diagnostics<F> {
    pub structural: StructuralReport,
    /// Nodes of the evaluated (pruned) graph, in graph order.
    pub nodes: Vec<NodeDiagnostics<F>>,
    /// Edges of the evaluated (pruned) graph, in proposal order.
    pub edges: Vec<EdgeStats<F>>,
    pub global: Option<GlobalDiagnostics<F>>,
    pub identification: Option<IdentificationResult>,
    pub positivity: Option<PositivityResult<F>>,
    pub treatment_edge: Option<TreatmentEdge<F>>,
    pub criteria: Vec<CriterionRecord<F>>,
    pub ok: bool,
    /// Set when the proposal could not be evaluated at all.
    pub invalid_reason: Option<String>,
}

impl<F: Scalar> Diagnostics<F> {
    /// Diagnostics for a proposal that could not even be built into a graph.
    pub fn invalid_proposal(reason: impl Into<String>) -> Self {
        let reason = reason.into();
        Diagnostics {
            structural: StructuralReport {
                temporal_edges_pruned: Vec::new(),
                cycle_edges_pruned: Vec::new(),
                disconnected_nodes_pruned: Vec::new(),
                structurally_valid: false,
            },
            nodes: Vec::new(),
            edges: Vec::new(),
            global: None,
            identification: None,
            positivity: None,
            treatment_edge: None,
            criteria: vec![CriterionRecord {
                name: "graph_validity".into(),
                passed: false,
                observed: None,
                threshold: None,
            }],
            ok: false,
            invalid_reason: Some(reason),
        }
    }

    pub fn composite_score(&self) -> F {
        self.global
            .as_ref()
            .map(|g| g.composite_score)
            .unwrap_or_else(F::zero)
    }

    /// Rebuilds the evaluated graph from the per-node records.
    pub fn dag_nodes(&self) -> Vec<String> {
        self.nodes.iter().map(|n| n.node.clone()).collect()
    }

    pub fn dag_edges(&self) -> Vec<(String, String)> {
        self.edges
            .iter()
            .map(|e| (e.parent.clone(), e.child.clone()))
            .collect()
    }
}

/// Runs the full verification pipeline on one candidate graph.
///
/// `negligible_effect_claimed` carries the proposal's optional claim that the
/// treatment effect is genuinely negligible; it only matters when the
/// hyperparameters enable `accept_negligible_effect`.
pub fn evaluate_dag<F: Scalar>(
    dag: &Dag,
    ds: &PanelDataset<F>,
    hp: &Hyperparameters<F>,
    negligible_effect_claimed: bool,
) -> Diagnostics<F> {
    let treatment = hp.treatment.as_str();
    let outcome = hp.outcome.as_str();

    // Structural preprocessing: temporal pruning, then cycle breaking, then
    // connectivity pruning on the final edge set.
    let tags = ds.tags();
    let (after_temporal, temporal_pruned) = match dag.prune_temporal(&tags) {
        Ok(r) => r,
        Err(e) => return Diagnostics::invalid_proposal(e.to_string()),
    };
    let (after_cycles, cycle_pruned) = after_temporal.break_cycles();
    debug_assert!(after_cycles.is_acyclic());
    let (graph, disconnected) = after_cycles.prune_disconnected(treatment, outcome);

    let structurally_valid = graph.contains(treatment) && graph.contains(outcome);
    let structural = StructuralReport {
        temporal_edges_pruned: temporal_pruned,
        cycle_edges_pruned: cycle_pruned,
        disconnected_nodes_pruned: disconnected,
        structurally_valid,
    };

    let mut criteria = vec![CriterionRecord {
        name: "graph_validity".into(),
        passed: structurally_valid,
        observed: None,
        threshold: None,
    }];
    if !structurally_valid {
        return Diagnostics {
            structural,
            nodes: Vec::new(),
            edges: Vec::new(),
            global: None,
            identification: None,
            positivity: None,
            treatment_edge: None,
            criteria,
            ok: false,
            invalid_reason: None,
        };
    }

    // Node models.
    let nodes = fit_node_models(&graph, ds);

    // Raw edge statistics from the node models.
    let mut edges = edge_statistics(&graph, ds, &nodes);

    // Identification on the pruned graph.
    let identification = minimal_adjustment_set(&graph, treatment, outcome)
        .expect("treatment and outcome verified present");
    let adjustment: Vec<String> = identification
        .minimal_adjustment_set
        .clone()
        .unwrap_or_default();

    // Treatment-outcome effect model (treatment plus adjustment covariates).
    let mut treatment_edge = fit_treatment_edge(&graph, ds, treatment, outcome, &adjustment);

    // The treatment edge's separately fitted p-value joins the FDR family
    // when the edge exists in the graph.
    if treatment_edge.is_dag_edge {
        if let Some(edge) = edges
            .iter_mut()
            .find(|e| e.parent == treatment && e.child == outcome)
        {
            edge.p_raw = treatment_edge.p_raw.unwrap_or_else(F::one);
        }
    }

    // One FDR family across all edges of the graph.
    let raw: Vec<F> = edges.iter().map(|e| e.p_raw).collect();
    let adjusted = fdr_adjust(&raw).expect("edge p-values are probabilities");
    for (edge, adj) in edges.iter_mut().zip(&adjusted) {
        edge.p_fdr = *adj;
    }
    if treatment_edge.is_dag_edge {
        treatment_edge.p_fdr = edges
            .iter()
            .find(|e| e.parent == treatment && e.child == outcome)
            .map(|e| e.p_fdr);
    }

    // Global metrics.
    let global = global_metrics(&nodes, &edges, hp.alpha);

    // Positivity on the adjustment set.
    let positivity = positivity_check(ds, treatment, &adjustment);

    // Decision.
    let (ok, decision) = decide(
        hp,
        &identification,
        &treatment_edge,
        &global,
        &nodes,
        &positivity,
        negligible_effect_claimed,
    );
    criteria.extend(decision);

    Diagnostics {
        structural,
        nodes,
        edges,
        global: Some(global),
        identification: Some(identification),
        positivity: Some(positivity),
        treatment_edge: Some(treatment_edge),
        criteria,
        ok,
        invalid_reason: None,
    }
}

fn fit_node_models<F: Scalar>(graph: &Dag, ds: &PanelDataset<F>) -> Vec<NodeDiagnostics<F>> {
    graph
        .nodes()
        .iter()
        .map(|node| {
            let parents = graph.parents_of(node);
            if parents.is_empty() {
                return NodeDiagnostics {
                    node: node.clone(),
                    parents,
                    fit: None,
                    fit_error: None,
                    vifs: BTreeMap::new(),
                    adequate: true,
                };
            }
            let y = ds.column(node).expect("graph nodes are dataset columns");
            let xcols: Vec<&[F]> = parents
                .iter()
                .map(|p| ds.column(p).expect("graph nodes are dataset columns"))
                .collect();
            let fit_result = if ds.is_binary(node) {
                fit_logit(y, &xcols)
            } else {
                fit_ols(y, &xcols)
            };
            let vifs: BTreeMap<String, F> = parents.iter().cloned().zip(vif(&xcols)).collect();
            let (fit, fit_error) = match fit_result {
                Ok(f) => (Some(f), None),
                Err(e) => (None, Some(describe_fit_error(&e, &parents))),
            };
            let adequate =
                fit.as_ref().is_some_and(|f| f.converged) && vifs.values().all(|v| v.is_finite());
            NodeDiagnostics {
                node: node.clone(),
                parents,
                fit,
                fit_error,
                vifs,
                adequate,
            }
        })
        .collect()
}

fn describe_fit_error(e: &StatError, parents: &[String]) -> String {
    match e {
        StatError::RankDeficient { columns } => {
            let names: Vec<&str> = columns
                .iter()
                .map(|&j| {
                    if j == 0 {
                        "intercept"
                    } else {
                        parents.get(j - 1).map(String::as_str).unwrap_or("?")
                    }
                })
                .collect();
            format!(
                "rank-deficient design; dependent columns: {}",
                names.join(", ")
            )
        }
        other => other.to_string(),
    }
}

fn edge_statistics<F: Scalar>(
    graph: &Dag,
    ds: &PanelDataset<F>,
    nodes: &[NodeDiagnostics<F>],
) -> Vec<EdgeStats<F>> {
    graph
        .edges_named()
        .into_iter()
        .map(|(parent, child)| {
            let node_diag = nodes
                .iter()
                .find(|n| n.node == child)
                .expect("every edge child has a node record");
            let position = node_diag.parents.iter().position(|p| *p == parent);
            let (coefficient, p_raw) = match (&node_diag.fit, position) {
                (Some(fit), Some(j)) if fit.converged => {
                    (Some(fit.coefficients[j]), fit.per_coef_p[j])
                }
                // Unusable node model: the edge gets no statistical support.
                _ => (None, F::one()),
            };
            let parent_col = ds.column(&parent).expect("columns exist");
            let child_col = ds.column(&child).expect("columns exist");
            let others: Vec<&[F]> = node_diag
                .parents
                .iter()
                .filter(|p| **p != parent)
                .map(|p| ds.column(p).expect("columns exist"))
                .collect();
            let ResidualCorrelation { rho, defined } =
                residual_correlation(child_col, parent_col, &others);
            let gap = delta_bic(
                parent_col,
                ds.is_binary(&parent),
                child_col,
                ds.is_binary(&child),
            );
            EdgeStats {
                parent,
                child,
                residual_corr: rho,
                residual_corr_defined: defined,
                coefficient,
                p_raw,
                p_fdr: F::one(),
                delta_bic: gap.value,
                mixed_scale: gap.mixed,
            }
        })
        .collect()
}

fn fit_treatment_edge<F: Scalar>(
    graph: &Dag,
    ds: &PanelDataset<F>,
    treatment: &str,
    outcome: &str,
    adjustment: &[String],
) -> TreatmentEdge<F> {
    let y = ds.column(outcome).expect("outcome column exists");
    let t_col = ds.column(treatment).expect("treatment column exists");
    let mut xcols: Vec<&[F]> = vec![t_col];
    for name in adjustment {
        xcols.push(ds.column(name).expect("adjustment columns exist"));
    }
    let fit_result = if ds.is_binary(outcome) {
        fit_logit(y, &xcols)
    } else {
        fit_ols(y, &xcols)
    };
    let (coefficient, p_raw, converged) = match fit_result {
        Ok(fit) if fit.converged => (Some(fit.coefficients[0]), Some(fit.per_coef_p[0]), true),
        Ok(_) | Err(_) => (None, None, false),
    };
    let gap = delta_bic(t_col, ds.is_binary(treatment), y, ds.is_binary(outcome));
    TreatmentEdge {
        parent: treatment.to_string(),
        child: outcome.to_string(),
        coefficient,
        p_raw,
        p_fdr: None,
        delta_bic: gap.value,
        mixed_scale: gap.mixed,
        adjusted_for: adjustment.to_vec(),
        model_converged: converged,
        is_dag_edge: graph.has_edge(treatment, outcome),
    }
}

fn global_metrics<F: Scalar>(
    nodes: &[NodeDiagnostics<F>],
    edges: &[EdgeStats<F>],
    alpha: F,
) -> GlobalDiagnostics<F> {
    let ratio = |num: usize, den: usize| {
        if den == 0 {
            F::zero()
        } else {
            F::from_count(num) / F::from_count(den)
        }
    };

    let n_edges = edges.len();
    let sig_edges = edges.iter().filter(|e| e.p_fdr < alpha).count();
    let directed = edges
        .iter()
        .filter(|e| {
            e.delta_bic
                .is_some_and(|d| d > F::cast(DIRECTION_BIC_MARGIN))
        })
        .count();

    let modeled: Vec<&NodeDiagnostics<F>> =
        nodes.iter().filter(|n| !n.parents.is_empty()).collect();
    let sig_models = modeled
        .iter()
        .filter(|n| {
            n.fit
                .as_ref()
                .is_some_and(|f| f.converged && f.joint_p < alpha)
        })
        .count();

    let usable_fits: Vec<&RegressionFit<F>> = modeled
        .iter()
        .filter_map(|n| n.fit.as_ref())
        .filter(|f| f.converged)
        .collect();
    let mean_r2 = if usable_fits.is_empty() {
        F::zero()
    } else {
        usable_fits.iter().map(|f| f.r2).sum::<F>() / F::from_count(usable_fits.len())
    };
    let mean_adj_r2 = if usable_fits.is_empty() {
        F::zero()
    } else {
        usable_fits.iter().map(|f| f.adj_r2).sum::<F>() / F::from_count(usable_fits.len())
    };

    let sig_edge_ratio = ratio(sig_edges, n_edges);
    let sig_model_ratio = ratio(sig_models, modeled.len());
    let direction_accuracy = ratio(directed, n_edges);
    let composite_score = (sig_edge_ratio + sig_model_ratio + direction_accuracy) / F::cast(3.0);

    GlobalDiagnostics {
        sig_edge_ratio,
        sig_model_ratio,
        direction_accuracy,
        mean_r2,
        mean_adj_r2,
        composite_score,
    }
}

fn decide<F: Scalar>(
    hp: &Hyperparameters<F>,
    identification: &IdentificationResult,
    treatment_edge: &TreatmentEdge<F>,
    global: &GlobalDiagnostics<F>,
    nodes: &[NodeDiagnostics<F>],
    positivity: &PositivityResult<F>,
    negligible_effect_claimed: bool,
) -> (bool, Vec<CriterionRecord<F>>) {
    let mut records = Vec::with_capacity(7);

    // (i) a valid (possibly empty) adjustment set exists
    records.push(CriterionRecord {
        name: "identifiability".into(),
        passed: identification.identifiable,
        observed: identification
            .minimal_adjustment_set
            .as_ref()
            .map(|s| F::from_count(s.len())),
        threshold: None,
    });

    // (ii) directional evidence strictly favours treatment -> outcome
    records.push(CriterionRecord {
        name: "orientation".into(),
        passed: treatment_edge.delta_bic.is_some_and(|d| d > F::zero()),
        observed: treatment_edge.delta_bic,
        threshold: Some(F::zero()),
    });

    // (iii) significant treatment effect after multiplicity correction, or an
    // explicitly accepted negligible-effect claim
    let effect_p = if treatment_edge.is_dag_edge {
        treatment_edge.p_fdr
    } else {
        treatment_edge.p_raw
    };
    let significant = effect_p.is_some_and(|p| p < hp.alpha);
    let negligible_escape = hp.accept_negligible_effect && negligible_effect_claimed;
    records.push(CriterionRecord {
        name: "edge_significance".into(),
        passed: significant || negligible_escape,
        observed: effect_p,
        threshold: Some(hp.alpha),
    });

    // (iv) composite validity score
    records.push(CriterionRecord {
        name: "global_validity".into(),
        passed: global.composite_score >= hp.theta_global,
        observed: Some(global.composite_score),
        threshold: Some(hp.theta_global),
    });

    // (v) mean node fit
    records.push(CriterionRecord {
        name: "mean_node_r2".into(),
        passed: global.mean_r2 >= hp.theta_r2,
        observed: Some(global.mean_r2),
        threshold: Some(hp.theta_r2),
    });

    // (vi) no multicollinearity anywhere
    let mut max_vif = F::zero();
    let mut any_infinite = false;
    for node in nodes {
        for v in node.vifs.values() {
            if v.is_finite() {
                max_vif = max_vif.max(*v);
            } else {
                any_infinite = true;
            }
        }
    }
    records.push(CriterionRecord {
        name: "max_vif".into(),
        passed: !any_infinite && max_vif <= hp.theta_vif,
        observed: (!any_infinite).then_some(max_vif),
        threshold: Some(hp.theta_vif),
    });

    // (vii) positivity
    records.push(CriterionRecord {
        name: "positivity".into(),
        passed: positivity.positivity_ok,
        observed: (!positivity.skipped).then_some(positivity.overlap_share),
        threshold: Some(F::cast(crate::ident::OVERLAP_SHARE_THRESHOLD)),
    });

    let ok = records.iter().all(|r| r.passed);
    (ok, records)
}

/// Renders the criteria outcome as a deterministic, machine-stable memo for
/// the next refinement round (and as the per-iteration log line on success).
pub fn build_failure_memo<F: Scalar>(diag: &Diagnostics<F>, hp: &Hyperparameters<F>) -> String {
    let mut out = String::new();
    if diag.ok {
        out.push_str("all criteria satisfied\n");
    } else {
        let failed: Vec<&str> = diag
            .criteria
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.as_str())
            .collect();
        out.push_str(&format!(
            "verification FAILED ({} of {} checks): {}\n",
            failed.len(),
            diag.criteria.len(),
            failed.join(", ")
        ));
    }
    if let Some(reason) = &diag.invalid_reason {
        out.push_str(&format!("proposal invalid: {reason}\n"));
    }

    for c in &diag.criteria {
        let observed = c
            .observed
            .map(|v| format!("{:.4}", v.as_f64()))
            .unwrap_or_else(|| "n/a".into());
        let threshold = c
            .threshold
            .map(|v| format!("{:.4}", v.as_f64()))
            .unwrap_or_else(|| "-".into());
        out.push_str(&format!(
            "criterion {}: {} (observed={observed}, threshold={threshold})\n",
            c.name,
            if c.passed { "passed" } else { "FAILED" },
        ));
    }

    if !diag.structural.structurally_valid {
        out.push_str(&format!(
            "structural failure: treatment `{}` and outcome `{}` must both appear in the DAG\n",
            hp.treatment, hp.outcome
        ));
    }
    let s = &diag.structural;
    if !(s.temporal_edges_pruned.is_empty()
        && s.cycle_edges_pruned.is_empty()
        && s.disconnected_nodes_pruned.is_empty())
    {
        out.push_str(&format!(
            "structural pruning: {} temporal edge(s), {} cycle edge(s), {} disconnected node(s) removed\n",
            s.temporal_edges_pruned.len(),
            s.cycle_edges_pruned.len(),
            s.disconnected_nodes_pruned.len()
        ));
        for (p, c) in &s.temporal_edges_pruned {
            out.push_str(&format!("  temporal violation: {p} -> {c}\n"));
        }
        for (p, c) in &s.cycle_edges_pruned {
            out.push_str(&format!("  cycle edge removed: {p} -> {c}\n"));
        }
        for n in &s.disconnected_nodes_pruned {
            out.push_str(&format!("  disconnected node removed: {n}\n"));
        }
    }

    if let Some(id) = &diag.identification {
        match &id.minimal_adjustment_set {
            Some(set) if set.is_empty() => {
                out.push_str("adjustment set: [] (no back-door paths to block)\n")
            }
            Some(set) => out.push_str(&format!("adjustment set: [{}]\n", set.join(", "))),
            None => out.push_str(&format!(
                "adjustment set: absent — effect not identifiable ({} candidate sets examined)\n",
                id.candidate_count_examined
            )),
        }
    }

    let alpha = hp.alpha.as_f64();
    let offenders: Vec<String> = diag
        .edges
        .iter()
        .filter(|e| e.p_fdr.as_f64() >= alpha)
        .map(|e| {
            format!(
                "{} -> {} (adjusted p={:.4})",
                e.parent,
                e.child,
                e.p_fdr.as_f64()
            )
        })
        .collect();
    if !offenders.is_empty() {
        out.push_str(&format!(
            "edges without support: {}\n",
            offenders.join("; ")
        ));
    }

    for node in &diag.nodes {
        if node.parents.is_empty() {
            continue;
        }
        match (&node.fit, &node.fit_error) {
            (Some(fit), _) if !fit.converged => {
                out.push_str(&format!("node model {}: did not converge\n", node.node))
            }
            (Some(fit), _) if fit.joint_p.as_f64() >= alpha => out.push_str(&format!(
                "node model {}: jointly insignificant (p={:.4})\n",
                node.node,
                fit.joint_p.as_f64()
            )),
            (None, Some(err)) => out.push_str(&format!("node model {}: {err}\n", node.node)),
            _ => {}
        }
        for (parent, v) in &node.vifs {
            let v = v.as_f64();
            if !v.is_finite() {
                out.push_str(&format!(
                    "vif violation: node={} parent={parent} vif=inf (limit {:.1})\n",
                    node.node,
                    hp.theta_vif.as_f64()
                ));
            } else if v > hp.theta_vif.as_f64() {
                out.push_str(&format!(
                    "vif violation: node={} parent={parent} vif={v:.1} (limit {:.1})\n",
                    node.node,
                    hp.theta_vif.as_f64()
                ));
            }
        }
    }

    if let Some(pos) = &diag.positivity {
        if !pos.positivity_ok {
            match &pos.failure {
                Some(f) => out.push_str(&format!("positivity: failed ({f})\n")),
                None => out.push_str(&format!(
                    "positivity: overlap share {:.4} below required 0.90\n",
                    pos.overlap_share.as_f64()
                )),
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;

    fn default_hp(m: usize) -> Hyperparameters<f64> {
        Hyperparameters::with_defaults("delta_ebitda_margin_2015_2016", "distress2018", m)
    }

    #[test]
    fn missing_outcome_short_circuits() {
        let ds = synth::confounder_panel(200, 3, 1.0);
        let hp = default_hp(ds.n_cols());
        let known = ds.column_names().into_iter().collect();
        // DAG mentions treatment and confounder but not the outcome.
        let dag = Dag::from_edges(&[("roe2015", "delta_ebitda_margin_2015_2016")], &known).unwrap();
        let diag = evaluate_dag(&dag, &ds, &hp, false);
        assert!(!diag.ok);
        assert!(!diag.structural.structurally_valid);
        assert_eq!(diag.criteria.len(), 1);
        assert_eq!(diag.criteria[0].name, "graph_validity");
        assert!(!diag.criteria[0].passed);
        assert!(diag.global.is_none(), "no statistics computed");
    }

    #[test]
    fn true_graph_passes_all_criteria() {
        let ds = synth::confounder_panel(1000, 7, 1.0);
        let hp = default_hp(ds.n_cols());
        let dag = synth::confounder_true_dag(&ds);
        let diag = evaluate_dag(&dag, &ds, &hp, false);
        let memo = build_failure_memo(&diag, &hp);
        assert!(diag.ok, "expected acceptance, memo:\n{memo}");
        assert_eq!(
            diag.identification.as_ref().unwrap().minimal_adjustment_set,
            Some(vec!["roe2015".to_string()])
        );
        assert!(diag.treatment_edge.as_ref().unwrap().delta_bic.unwrap() > 0.0);
        assert!(memo.contains("all criteria satisfied"));
        // composite equals the mean of its three parts, recomputed
        let g = diag.global.as_ref().unwrap();
        let recomputed = (g.sig_edge_ratio + g.sig_model_ratio + g.direction_accuracy) / 3.0;
        assert_eq!(g.composite_score, recomputed);
    }

    #[test]
    fn null_effect_fails_edge_significance_mostly() {
        let mut failures = 0;
        for seed in 0..25u64 {
            let ds = synth::confounder_panel(1000, 100 + seed, 0.0);
            let hp = default_hp(ds.n_cols());
            let dag = synth::confounder_true_dag(&ds);
            let diag = evaluate_dag(&dag, &ds, &hp, false);
            let sig = diag
                .criteria
                .iter()
                .find(|c| c.name == "edge_significance")
                .unwrap();
            if !sig.passed {
                failures += 1;
            }
        }
        assert!(
            failures >= 22,
            "edge significance failed in {failures}/25 null runs"
        );
    }

    #[test]
    fn boundary_composite_passes_inclusively() {
        // Exercise decide() directly at exact thresholds.
        let hp = default_hp(5);
        let identification = IdentificationResult {
            identifiable: true,
            minimal_adjustment_set: Some(vec![]),
            candidate_count_examined: 1,
        };
        let te = TreatmentEdge {
            parent: "t".into(),
            child: "y".into(),
            coefficient: Some(1.0),
            p_raw: Some(0.001),
            p_fdr: None,
            delta_bic: Some(0.0),
            mixed_scale: false,
            adjusted_for: vec![],
            model_converged: true,
            is_dag_edge: false,
        };
        let global = GlobalDiagnostics {
            sig_edge_ratio: 0.6,
            sig_model_ratio: 0.6,
            direction_accuracy: 0.6,
            mean_r2: hp.theta_r2,
            mean_adj_r2: 0.0,
            composite_score: hp.theta_global,
        };
        let positivity = PositivityResult {
            overlap_share: 1.0,
            positivity_ok: true,
            propensity_model: None,
            skipped: true,
            failure: None,
        };
        let (ok, records) = decide(&hp, &identification, &te, &global, &[], &positivity, false);
        let by_name = |n: &str| records.iter().find(|r| r.name == n).unwrap().passed;
        assert!(by_name("global_validity"), "composite at threshold passes");
        assert!(by_name("mean_node_r2"), "mean r2 at threshold passes");
        assert!(
            !by_name("orientation"),
            "delta BIC of zero fails the strict test"
        );
        assert!(by_name("identifiability"), "empty set is a valid set");
        assert!(!ok);
    }

    #[test]
    fn negligible_effect_escape_requires_both_flags() {
        let ds = synth::confounder_panel(1000, 11, 0.0);
        let mut hp = default_hp(ds.n_cols());
        let dag = synth::confounder_true_dag(&ds);

        let diag = evaluate_dag(&dag, &ds, &hp, true);
        let sig = |d: &Diagnostics<f64>| {
            d.criteria
                .iter()
                .find(|c| c.name == "edge_significance")
                .unwrap()
                .passed
        };
        assert!(!sig(&diag), "claim alone is not enough");

        hp.accept_negligible_effect = true;
        let diag = evaluate_dag(&dag, &ds, &hp, true);
        assert!(sig(&diag), "config flag plus claim passes");
        let diag = evaluate_dag(&dag, &ds, &hp, false);
        assert!(!sig(&diag), "config flag alone is not enough");
    }

    #[test]
    fn vif_violation_lands_in_memo_with_triple() {
        let ds = synth::collinear_panel(400, 21, 0.9995);
        let hp = Hyperparameters::with_defaults("t2016", "y2017", ds.n_cols());
        let known = ds.column_names().into_iter().collect();
        let dag = Dag::from_edges(
            &[
                ("x1_2015", "y2017"),
                ("x2_2015", "y2017"),
                ("t2016", "y2017"),
            ],
            &known,
        )
        .unwrap();
        let diag = evaluate_dag(&dag, &ds, &hp, false);
        let vif_record = diag.criteria.iter().find(|c| c.name == "max_vif").unwrap();
        assert!(!vif_record.passed);
        let memo = build_failure_memo(&diag, &hp);
        assert!(
            memo.contains("vif violation: node=y2017 parent=x1_2015 vif="),
            "memo:\n{memo}"
        );
        assert!(memo.contains("(limit 10.0)"));
    }

    #[test]
    fn non_identifiable_graph_named_in_memo() {
        // Atemporal columns so the reverse edge y -> t survives temporal
        // pruning; a direct arrow into the treatment from the outcome leaves
        // an unblockable back-door path, so no adjustment set exists.
        use crate::data::{ColumnKind, ColumnMeta, TemporalTag};
        use rand::SeedableRng as _;
        let n = 300;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let cols: Vec<Vec<f64>> = (0..3)
            .map(|_| synth::standard_normals(&mut rng, n))
            .collect();
        let metas: Vec<ColumnMeta> = ["t", "y", "c"]
            .iter()
            .map(|name| ColumnMeta {
                name: name.to_string(),
                kind: ColumnKind::Continuous,
                tag: TemporalTag::Atemporal,
            })
            .collect();
        let mut values = Vec::new();
        for c in &cols {
            values.extend_from_slice(c);
        }
        let ds = crate::data::PanelDataset::from_parts(metas, values, n, "t", "y");
        let hp: Hyperparameters<f64> = Hyperparameters::with_defaults("t", "y", 3);
        let known = ds.column_names().into_iter().collect();
        let dag = Dag::from_edges(&[("y", "t"), ("c", "y")], &known).unwrap();
        let diag = evaluate_dag(&dag, &ds, &hp, false);
        let ident = diag.identification.as_ref().unwrap();
        assert!(!ident.identifiable);
        let memo = build_failure_memo(&diag, &hp);
        assert!(memo.contains("not identifiable"), "memo:\n{memo}");
        assert!(memo.contains("criterion identifiability: FAILED"));
    }

    #[test]
    fn ok_is_monotone_in_thresholds() {
        // Loosening any threshold must never turn acceptance into rejection.
        let ds = synth::confounder_panel(1000, 55, 0.35);
        let dag = synth::confounder_true_dag(&ds);
        let base = default_hp(ds.n_cols());
        let mut grid = Vec::new();
        for alpha in [0.01, 0.05, 0.2] {
            for theta_global in [0.9, 0.6, 0.3] {
                for theta_r2 in [0.3, 0.05, 0.01] {
                    for theta_vif in [1.05, 10.0, 100.0] {
                        let mut hp = base.clone();
                        hp.alpha = alpha;
                        hp.theta_global = theta_global;
                        hp.theta_r2 = theta_r2;
                        hp.theta_vif = theta_vif;
                        let ok = evaluate_dag(&dag, &ds, &hp, false).ok;
                        grid.push((alpha, theta_global, theta_r2, theta_vif, ok));
                    }
                }
            }
        }
        for &(a1, g1, r1, v1, ok1) in &grid {
            for &(a2, g2, r2, v2, ok2) in &grid {
                let looser = a2 >= a1 && g2 <= g1 && r2 <= r1 && v2 >= v1;
                if looser && ok1 {
                    assert!(
                        ok2,
                        "loosening ({a1},{g1},{r1},{v1}) -> ({a2},{g2},{r2},{v2}) flipped ok"
                    );
                }
            }
        }
    }

    #[test]
    fn binary_outcome_uses_logit_models_and_flags_mixed_scales() {
        let ds = synth::binary_outcome_panel(1500, 33, 1.0);
        let hp: Hyperparameters<f64> =
            Hyperparameters::with_defaults(ds.treatment.clone(), ds.outcome.clone(), ds.n_cols());
        let known = ds.column_names().into_iter().collect();
        let dag = Dag::from_edges(
            &[
                ("roe2015", "delta_ebitda_margin_2015_2016"),
                ("roe2015", "bankruptcy_2018_2019"),
                ("delta_ebitda_margin_2015_2016", "bankruptcy_2018_2019"),
            ],
            &known,
        )
        .unwrap();
        let diag = evaluate_dag(&dag, &ds, &hp, false);

        let outcome_node = diag
            .nodes
            .iter()
            .find(|n| n.node == "bankruptcy_2018_2019")
            .unwrap();
        assert!(matches!(
            outcome_node.fit.as_ref().unwrap().model_kind,
            crate::stats::ModelKind::Logit
        ));
        let te = diag.treatment_edge.as_ref().unwrap();
        assert!(te.mixed_scale, "continuous treatment vs binary outcome");
        let sig = diag
            .criteria
            .iter()
            .find(|c| c.name == "edge_significance")
            .unwrap();
        assert!(
            sig.passed,
            "strong effect is detected by the logit effect model"
        );
        assert_eq!(
            diag.identification.as_ref().unwrap().minimal_adjustment_set,
            Some(vec!["roe2015".to_string()])
        );
    }

    #[test]
    fn diagnostics_json_shape_is_stable() {
        let ds = synth::confounder_panel(500, 3, 1.0);
        let hp = default_hp(ds.n_cols());
        let dag = synth::confounder_true_dag(&ds);
        let diag = evaluate_dag(&dag, &ds, &hp, false);
        let v: serde_json::Value = serde_json::to_value(&diag).unwrap();
        assert!(v["structural"]["temporal_edges_pruned"].is_array());
        assert!(v["structural"]["structurally_valid"].is_boolean());
        assert!(v["nodes"][0]["node"].is_string());
        assert!(v["nodes"][0]["vifs"].is_object());
        assert!(v["edges"][0]["p_fdr"].is_number());
        assert!(v["edges"][0]["residual_corr"].is_number());
        assert!(v["global"]["composite_score"].is_number());
        assert!(v["identification"]["minimal_adjustment_set"].is_array());
        assert!(v["positivity"]["overlap_share"].is_number());
        assert!(v["treatment_edge"]["delta_bic"].is_number());
        for c in v["criteria"].as_array().unwrap() {
            assert!(c["name"].is_string());
            assert!(c["passed"].is_boolean());
            assert!(c.get("observed").is_some());
            assert!(c.get("threshold").is_some());
        }
        assert!(v["ok"].is_boolean());
    }

    #[test]
    fn repeated_evaluation_is_bit_identical() {
        let ds = synth::confounder_panel(500, 13, 1.0);
        let hp = default_hp(ds.n_cols());
        let dag = synth::confounder_true_dag(&ds);
        let a = evaluate_dag(&dag, &ds, &hp, false);
        let b = evaluate_dag(&dag, &ds, &hp, false);
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn ratios_are_integer_counts_over_denominators() {
        let ds = synth::confounder_panel(800, 17, 1.0);
        let hp = default_hp(ds.n_cols());
        let dag = synth::confounder_true_dag(&ds);
        let diag = evaluate_dag(&dag, &ds, &hp, false);
        let g = diag.global.as_ref().unwrap();
        let n_edges = diag.edges.len() as f64;
        let modeled = diag.nodes.iter().filter(|n| !n.parents.is_empty()).count() as f64;
        for (ratio, den) in [
            (g.sig_edge_ratio, n_edges),
            (g.direction_accuracy, n_edges),
            (g.sig_model_ratio, modeled),
        ] {
            let count = ratio * den;
            assert!((count - count.round()).abs() < 1e-9, "{ratio} * {den}");
        }
    }
}
