//! Synthetic panel generators.
//!
//! Stand-ins for proprietary panel data: linear-Gaussian structural models
//! with panel-style column names, used by the test suites, the demo data
//! example, and anyone who wants a reproducible end-to-end run.

use std::collections::HashSet;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::data::{ColumnKind, ColumnMeta, PanelDataset, TemporalTag};
use crate::graph::Dag;

pub fn standard_normals(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

/// Confounded treatment-outcome panel:
///
/// ```text
/// C = roe2015                      ~ N(0, 1)
/// T = delta_ebitda_margin_2015_2016 = 0.5 C + e_T
/// Y = distress2018                  = 1.0 C + t_effect * T + e_Y
/// ```
///
/// plus two noise columns so the graph search has something to ignore.
/// `t_effect = 0` gives the null-effect control.
pub fn confounder_panel(n: usize, seed: u64, t_effect: f64) -> PanelDataset<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = standard_normals(&mut rng, n);
    let e_t = standard_normals(&mut rng, n);
    let e_y = standard_normals(&mut rng, n);
    let t: Vec<f64> = c.iter().zip(&e_t).map(|(ci, ei)| 0.5 * ci + ei).collect();
    let y: Vec<f64> = c
        .iter()
        .zip(&t)
        .zip(&e_y)
        .map(|((ci, ti), ei)| 1.0 * ci + t_effect * ti + ei)
        .collect();
    let noise1 = standard_normals(&mut rng, n);
    let noise2 = standard_normals(&mut rng, n);

    let columns = vec![
        meta("roe2015", TemporalTag::Static { year: 2015 }),
        meta(
            "delta_ebitda_margin_2015_2016",
            TemporalTag::Delta {
                from_year: 2015,
                to_year: 2016,
            },
        ),
        meta("distress2018", TemporalTag::Static { year: 2018 }),
        meta("sales2016", TemporalTag::Static { year: 2016 }),
        meta("leverage2017", TemporalTag::Static { year: 2017 }),
    ];
    let mut values = Vec::with_capacity(n * columns.len());
    for col in [&c, &t, &y, &noise1, &noise2] {
        values.extend_from_slice(col);
    }
    PanelDataset::from_parts(
        columns,
        values,
        n,
        "delta_ebitda_margin_2015_2016",
        "distress2018",
    )
}

/// The data-generating graph of [`confounder_panel`].
pub fn confounder_true_dag(ds: &PanelDataset<f64>) -> Dag {
    let known: HashSet<String> = ds.column_names().into_iter().collect();
    Dag::from_edges(
        &[
            ("roe2015", "delta_ebitda_margin_2015_2016"),
            ("roe2015", "distress2018"),
            ("delta_ebitda_margin_2015_2016", "distress2018"),
        ],
        &known,
    )
    .expect("static edge list is valid")
}

/// Confounded panel with a *binary* outcome drawn from a logistic model:
/// `P(Y = 1) = sigmoid(1.2 C + t_effect * T)`, with `C` and `T` as in
/// [`confounder_panel`].
pub fn binary_outcome_panel(n: usize, seed: u64, t_effect: f64) -> PanelDataset<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = standard_normals(&mut rng, n);
    let e_t = standard_normals(&mut rng, n);
    let t: Vec<f64> = c.iter().zip(&e_t).map(|(ci, ei)| 0.5 * ci + ei).collect();
    let y: Vec<f64> = c
        .iter()
        .zip(&t)
        .map(|(ci, ti)| {
            let p = 1.0 / (1.0 + (-(1.2 * ci + t_effect * ti)).exp());
            if rng.random::<f64>() < p {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    let columns = vec![
        meta("roe2015", TemporalTag::Static { year: 2015 }),
        meta(
            "delta_ebitda_margin_2015_2016",
            TemporalTag::Delta {
                from_year: 2015,
                to_year: 2016,
            },
        ),
        ColumnMeta {
            name: "bankruptcy_2018_2019".into(),
            kind: ColumnKind::Binary,
            tag: TemporalTag::Static { year: 2018 },
        },
    ];
    let mut values = Vec::with_capacity(n * columns.len());
    for col in [&c, &t, &y] {
        values.extend_from_slice(col);
    }
    PanelDataset::from_parts(
        columns,
        values,
        n,
        "delta_ebitda_margin_2015_2016",
        "bankruptcy_2018_2019",
    )
}

/// Panel with two almost perfectly collinear regressors (`x2 ≈ rho * x1`)
/// for multicollinearity scenarios.
pub fn collinear_panel(n: usize, seed: u64, rho: f64) -> PanelDataset<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x1 = standard_normals(&mut rng, n);
    let jitter = standard_normals(&mut rng, n);
    let x2: Vec<f64> = x1
        .iter()
        .zip(&jitter)
        .map(|(a, j)| rho * a + (1.0 - rho * rho).sqrt() * j)
        .collect();
    let t = standard_normals(&mut rng, n);
    let e = standard_normals(&mut rng, n);
    let y: Vec<f64> = x1
        .iter()
        .zip(&x2)
        .zip(t.iter().zip(&e))
        .map(|((a, b), (ti, ei))| a + b + 0.8 * ti + ei)
        .collect();

    let columns = vec![
        meta("x1_2015", TemporalTag::Static { year: 2015 }),
        meta("x2_2015", TemporalTag::Static { year: 2015 }),
        meta("t2016", TemporalTag::Static { year: 2016 }),
        meta("y2017", TemporalTag::Static { year: 2017 }),
    ];
    let mut values = Vec::with_capacity(n * columns.len());
    for col in [&x1, &x2, &t, &y] {
        values.extend_from_slice(col);
    }
    PanelDataset::from_parts(columns, values, n, "t2016", "y2017")
}

/// Wide panel with `per_bucket` independent noise columns in each of the five
/// sampling buckets, plus treatment and outcome. Column values are iid
/// normals except the outcome, which loads on the treatment.
pub fn bucketed_panel(per_bucket: usize, n: usize, seed: u64) -> PanelDataset<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut columns = Vec::new();
    let mut values: Vec<f64> = Vec::new();

    let t = standard_normals(&mut rng, n);
    columns.push(meta(
        "delta_treat_2015_2016",
        TemporalTag::Delta {
            from_year: 2015,
            to_year: 2016,
        },
    ));
    values.extend_from_slice(&t);

    let e = standard_normals(&mut rng, n);
    let y: Vec<f64> = t.iter().zip(&e).map(|(ti, ei)| 0.8 * ti + ei).collect();
    columns.push(meta("outcome2018", TemporalTag::Static { year: 2018 }));
    values.extend_from_slice(&y);

    // Names follow the loader's tagging convention so a CSV round trip
    // reproduces the same buckets.
    let buckets = [
        (
            "delta_a{}_2015_2016",
            TemporalTag::Delta {
                from_year: 2015,
                to_year: 2016,
            },
        ),
        (
            "delta_b{}_2016_2017",
            TemporalTag::Delta {
                from_year: 2016,
                to_year: 2017,
            },
        ),
        ("f{}_2015", TemporalTag::Static { year: 2015 }),
        ("f{}_2016", TemporalTag::Static { year: 2016 }),
        ("f{}_2017", TemporalTag::Static { year: 2017 }),
    ];
    for (pattern, tag) in buckets {
        for i in 0..per_bucket {
            let name = pattern.replacen("{}", &i.to_string(), 1);
            columns.push(meta(&name, tag));
            let col = standard_normals(&mut rng, n);
            values.extend_from_slice(&col);
        }
    }
    PanelDataset::from_parts(columns, values, n, "delta_treat_2015_2016", "outcome2018")
}

/// A panel of `n_nodes` static-2016 columns wired by a random acyclic chain
/// of linear effects; used for load-style evaluation runs.
pub fn random_sem_panel(
    n_nodes: usize,
    n_edges: usize,
    n: usize,
    seed: u64,
) -> (PanelDataset<f64>, Dag) {
    assert!(n_nodes >= 2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let names: Vec<String> = (0..n_nodes).map(|i| format!("v{i}_2016")).collect();

    // Edges only from lower to higher index: acyclic by construction.
    let mut pairs = Vec::new();
    for i in 0..n_nodes {
        for j in (i + 1)..n_nodes {
            pairs.push((i, j));
        }
    }
    for i in 0..pairs.len() {
        let j = rng.random_range(i..pairs.len());
        pairs.swap(i, j);
    }
    let chosen: Vec<(usize, usize)> = pairs.into_iter().take(n_edges).collect();

    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(n_nodes);
    for i in 0..n_nodes {
        let mut col = standard_normals(&mut rng, n);
        for &(p, c) in &chosen {
            if c == i {
                let weight: f64 = 0.3 + 0.4 * rng.random::<f64>();
                for (v, pv) in col.iter_mut().zip(&cols[p]) {
                    *v += weight * pv;
                }
            }
        }
        cols.push(col);
    }

    let columns: Vec<ColumnMeta> = names
        .iter()
        .map(|n| meta(n, TemporalTag::Static { year: 2016 }))
        .collect();
    let mut values = Vec::with_capacity(n * n_nodes);
    for col in &cols {
        values.extend_from_slice(col);
    }
    let treatment = names[0].clone();
    let outcome = names[n_nodes - 1].clone();
    let ds = PanelDataset::from_parts(columns, values, n, treatment, outcome);

    let known: HashSet<String> = names.iter().cloned().collect();
    let edges: Vec<(String, String)> = chosen
        .iter()
        .map(|&(p, c)| (names[p].clone(), names[c].clone()))
        .collect();
    let dag = Dag::from_edges(
        &edges
            .iter()
            .map(|(p, c)| (p.as_str(), c.as_str()))
            .collect::<Vec<_>>(),
        &known,
    )
    .expect("generated edges are valid");
    (ds, dag)
}

/// Writes a dataset as the CSV contract expected by the loader.
pub fn to_csv(ds: &PanelDataset<f64>) -> String {
    let names = ds.column_names();
    let mut out = names.join(",");
    out.push('\n');
    for row in 0..ds.n_rows() {
        let mut first = true;
        for name in &names {
            if !first {
                out.push(',');
            }
            first = false;
            let v = ds.column(name).unwrap()[row];
            out.push_str(&format!("{v}"));
        }
        out.push('\n');
    }
    out
}

fn meta(name: &str, tag: TemporalTag) -> ColumnMeta {
    ColumnMeta {
        name: name.to_string(),
        kind: ColumnKind::Continuous,
        tag,
    }
}
