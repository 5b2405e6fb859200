//! The penalized KT order estimator and the layer-wise baseline.
//!
//! `k̂ = argmax_k [ln KT_k(A) − pen(k, n, T)]` over `1..=k_max`, ties going to
//! the smallest `k`.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{
    configurations, log_kt_dyn_exact, log_kt_ml_exact, Engine, LogEvidence, DEFAULT_BUDGET,
};
use crate::model::{GraphCollection, LabelAssignment};
use crate::penalty::{pen_dyn, pen_ml, PenaltyConfig};
use crate::rng::derive_seed;
use crate::vbem::{vbem_fit, VbemConfig};

/// Upper end of the default order sweep.
pub const DEFAULT_K_MAX: usize = 15;

pub fn default_k_max(n: usize) -> usize {
    n.min(DEFAULT_K_MAX)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Ml,
    Dyn,
}

/// Evidence engine requested for a sweep; `Auto` enumerates when the
/// budget allows and falls back to the variational bound otherwise.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum EngineChoice {
    Exact,
    Vbem,
    #[default]
    Auto,
}

impl std::str::FromStr for EngineChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Self::Exact),
            "vbem" => Ok(Self::Vbem),
            "auto" => Ok(Self::Auto),
            other => Err(Error::InvalidParameters(format!("unknown engine {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectorConfig {
    pub penalty: PenaltyConfig,
    pub vbem: VbemConfig,
    /// Enumeration budget of the exact engine.
    pub budget: u64,
}

impl Default for SelectorConfig {
    fn default() -> Self {
        Self {
            penalty: PenaltyConfig::default(),
            vbem: VbemConfig::default(),
            budget: DEFAULT_BUDGET,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KScore {
    pub k: usize,
    pub log_evidence: f64,
    pub penalty: f64,
    pub score: f64,
    pub engine: Engine,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub model: ModelKind,
    pub n: usize,
    pub layers: usize,
    pub k_max: usize,
    pub epsilon: f64,
    pub seed: u64,
    pub per_k: Vec<KScore>,
    pub k_hat: usize,
}

impl SelectionReport {
    fn assemble(
        model: ModelKind,
        g: &GraphCollection,
        k_max: usize,
        epsilon: f64,
        seed: u64,
        evidence: Vec<LogEvidence>,
    ) -> Self {
        let (n, layers) = (g.n(), g.num_layers());
        let per_k: Vec<KScore> = evidence
            .into_iter()
            .map(|e| {
                let penalty = match model {
                    ModelKind::Ml => pen_ml(e.k, n, layers, epsilon),
                    ModelKind::Dyn => pen_dyn(e.k, n, layers, epsilon),
                };
                KScore {
                    k: e.k,
                    log_evidence: e.value,
                    penalty,
                    score: e.value - penalty,
                    engine: e.engine,
                }
            })
            .collect();
        let scores: Vec<f64> = per_k.iter().map(|s| s.score).collect();
        let k_hat = smallest_argmax(&scores) + 1;
        Self {
            model,
            n,
            layers,
            k_max,
            epsilon,
            seed,
            per_k,
            k_hat,
        }
    }

    /// One row per candidate order: `k,log_evidence,penalty,score,engine`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["k", "log_evidence", "penalty", "score", "engine"])?;
        for s in &self.per_k {
            out.serialize((s.k, s.log_evidence, s.penalty, s.score, s.engine.to_string()))?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Index of the first maximum; NaN never wins.
pub fn smallest_argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] || xs[best].is_nan() {
            best = i;
        }
    }
    best
}

fn check_k_max(k_max: usize, n: usize) -> Result<()> {
    if k_max == 0 || k_max > n {
        return Err(Error::InvalidParameters(format!(
            "k_max must lie in 1..={n}, got {k_max}"
        )));
    }
    Ok(())
}

/// Evidence for one order of the multi-layer model.
pub fn evidence_ml(
    g: &GraphCollection,
    k: usize,
    cfg: &SelectorConfig,
    engine: EngineChoice,
    seed: u64,
) -> Result<LogEvidence> {
    let exact = match engine {
        EngineChoice::Exact => true,
        EngineChoice::Vbem => false,
        EngineChoice::Auto => configurations(k, g.n()) <= cfg.budget as f64,
    };
    if exact {
        log_kt_ml_exact(g, k, cfg.budget)
    } else {
        Ok(vbem_fit(g, k, &cfg.vbem, seed)?.evidence)
    }
}

/// Penalized-KT order estimate for the multi-layer model.
pub fn select_k_ml(
    g: &GraphCollection,
    k_max: usize,
    cfg: &SelectorConfig,
    engine: EngineChoice,
    seed: u64,
) -> Result<SelectionReport> {
    check_k_max(k_max, g.n())?;
    let evidence = (1..=k_max)
        .into_par_iter()
        .map(|k| {
            evidence_ml(g, k, cfg, engine, derive_seed(seed, &[k as u64])).map_err(|e| {
                Error::Sweep {
                    k,
                    source: Box::new(e),
                }
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SelectionReport::assemble(
        ModelKind::Ml,
        g,
        k_max,
        cfg.penalty.epsilon,
        seed,
        evidence,
    ))
}

/// Penalized-KT order estimate for the dynamic model, conditioning on the
/// first-layer configuration `z1`. Candidates `k` below the number of
/// labels used by `z1` see it coarsened: labels `>= k` merge into class `k`.
pub fn select_k_dyn(
    g: &GraphCollection,
    z1: &LabelAssignment,
    k_max: usize,
    cfg: &SelectorConfig,
    seed: u64,
) -> Result<SelectionReport> {
    check_k_max(k_max, g.n())?;
    let free = g.n() * (g.num_layers() - 1);
    let evidence = (1..=k_max)
        .into_par_iter()
        .map(|k| {
            let zk = z1.coarsened(k);
            log_kt_dyn_exact(g, &zk, k, cfg.budget).map_err(|e| {
                let e = match e {
                    Error::BudgetExceeded { required, budget } => Error::InvalidParameters(format!(
                        "dynamic evidence enumerates {required} continuations of {free} labels, \
                         above the budget {budget}; reduce n or T"
                    )),
                    other => other,
                };
                Error::Sweep {
                    k,
                    source: Box::new(e),
                }
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SelectionReport::assemble(
        ModelKind::Dyn,
        g,
        k_max,
        cfg.penalty.epsilon,
        seed,
        evidence,
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerwiseSelection {
    pub per_layer: Vec<usize>,
    pub k_hat: usize,
}

/// Runs the single-layer estimator on every layer and keeps the largest
/// order.
pub fn layerwise_max_baseline(
    g: &GraphCollection,
    k_max: usize,
    cfg: &SelectorConfig,
    engine: EngineChoice,
    seed: u64,
) -> Result<LayerwiseSelection> {
    let per_layer = (0..g.num_layers())
        .map(|t| {
            select_k_ml(
                &g.single_layer(t),
                k_max,
                cfg,
                engine,
                derive_seed(seed, &[t as u64]),
            )
            .map(|r| r.k_hat)
        })
        .collect::<Result<Vec<_>>>()?;
    let k_hat = per_layer.iter().copied().max().unwrap_or(1);
    Ok(LayerwiseSelection { per_layer, k_hat })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Adjacency;

    fn two_cliques(layers: usize) -> GraphCollection {
        let mut edges = Vec::new();
        for base in [0, 4] {
            for i in base..base + 4 {
                for j in (i + 1)..base + 4 {
                    edges.push((i, j));
                }
            }
        }
        let a = Adjacency::from_edges(8, edges).unwrap();
        GraphCollection::new(vec![a; layers]).unwrap()
    }

    #[test]
    fn argmax_prefers_smallest() {
        assert_eq!(smallest_argmax(&[1.0, 3.0, 3.0, 2.0]), 1);
        assert_eq!(smallest_argmax(&[f64::NAN, 0.0]), 1);
        assert_eq!(smallest_argmax(&[5.0]), 0);
    }

    #[test]
    fn planted_cliques_select_two() {
        let g = two_cliques(2);
        let r = select_k_ml(&g, 4, &SelectorConfig::default(), EngineChoice::Exact, 0).unwrap();
        assert_eq!(r.k_hat, 2);
        assert_eq!(r.per_k.len(), 4);
        assert!(r.per_k.iter().all(|s| s.engine == Engine::Exact));
    }

    #[test]
    fn empty_graph_selects_one() {
        let g = GraphCollection::empty(6, 2).unwrap();
        let r = select_k_ml(&g, 4, &SelectorConfig::default(), EngineChoice::Auto, 0).unwrap();
        assert_eq!(r.k_hat, 1);
        let z1 = LabelAssignment::constant(1, 4);
        let gd = GraphCollection::empty(4, 2).unwrap();
        let rd = select_k_dyn(&gd, &z1, 3, &SelectorConfig::default(), 0).unwrap();
        assert_eq!(rd.k_hat, 1);
    }

    #[test]
    fn k_max_one_and_bounds() {
        let g = two_cliques(1);
        let r = select_k_ml(&g, 1, &SelectorConfig::default(), EngineChoice::Exact, 0).unwrap();
        assert_eq!(r.k_hat, 1);
        assert!(select_k_ml(&g, 0, &SelectorConfig::default(), EngineChoice::Exact, 0).is_err());
        assert!(select_k_ml(&g, 9, &SelectorConfig::default(), EngineChoice::Exact, 0).is_err());
    }

    #[test]
    fn sweep_error_names_k() {
        let g = GraphCollection::empty(12, 1).unwrap();
        let cfg = SelectorConfig {
            budget: 1000,
            ..SelectorConfig::default()
        };
        let err = select_k_ml(&g, 3, &cfg, EngineChoice::Exact, 0).unwrap_err();
        assert!(matches!(err, Error::Sweep { k: 2, .. }), "{err}");
    }

    #[test]
    fn layerwise_single_layer_matches() {
        let g = two_cliques(1);
        let cfg = SelectorConfig::default();
        let a = select_k_ml(&g, 3, &cfg, EngineChoice::Exact, 0).unwrap().k_hat;
        let b = layerwise_max_baseline(&g, 3, &cfg, EngineChoice::Exact, 0).unwrap();
        assert_eq!(b.per_layer, vec![a]);
        assert_eq!(b.k_hat, a);
    }

    #[test]
    fn csv_rows() {
        let g = two_cliques(1);
        let r = select_k_ml(&g, 2, &SelectorConfig::default(), EngineChoice::Exact, 0).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("k,log_evidence,penalty,score,engine\n1,"));
        assert_eq!(text.lines().count(), 3);
    }
}
