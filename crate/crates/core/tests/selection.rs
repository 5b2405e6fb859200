mod common;

use blockorder::exact::Engine;
use blockorder::selector::{
    layerwise_max_baseline, select_k_dyn, select_k_ml, EngineChoice, SelectorConfig,
};
use blockorder::{GraphCollection, LabelAssignment};
use common::cliques;

#[test]
fn planted_cliques_exact() {
    let g = cliques(&[4, 4], 2);
    let r = select_k_ml(&g, 4, &SelectorConfig::default(), EngineChoice::Exact, 1).unwrap();
    assert_eq!(r.k_hat, 2);
    // k_hat is the smallest maximizer.
    let best = r.per_k[r.k_hat - 1].score;
    for s in &r.per_k {
        if s.k < r.k_hat {
            assert!(s.score < best);
        } else {
            assert!(s.score <= best);
        }
        assert!((s.score - (s.log_evidence - s.penalty)).abs() < 1e-12);
    }
}

#[test]
fn exact_reports_do_not_depend_on_seed() {
    let g = cliques(&[3, 4], 2);
    let cfg = SelectorConfig::default();
    let a = select_k_ml(&g, 3, &cfg, EngineChoice::Exact, 1).unwrap();
    let b = select_k_ml(&g, 3, &cfg, EngineChoice::Exact, 99).unwrap();
    assert_eq!(a.per_k, b.per_k);
}

#[test]
fn scores_are_node_permutation_invariant() {
    let g = cliques(&[3, 4], 2);
    let perm = [6, 2, 0, 5, 1, 3, 4];
    let cfg = SelectorConfig::default();
    let a = select_k_ml(&g, 3, &cfg, EngineChoice::Exact, 0).unwrap();
    let b = select_k_ml(&g.permuted(&perm), 3, &cfg, EngineChoice::Exact, 0).unwrap();
    for (x, y) in a.per_k.iter().zip(&b.per_k) {
        assert!((x.score - y.score).abs() < 1e-10);
    }
}

#[test]
fn auto_switches_engine_by_budget() {
    let g = cliques(&[5, 5, 5], 1);
    let cfg = SelectorConfig {
        budget: 1 << 15,
        ..SelectorConfig::default()
    };
    let r = select_k_ml(&g, 4, &cfg, EngineChoice::Auto, 0).unwrap();
    assert_eq!(r.per_k[0].engine, Engine::Exact);
    assert_eq!(r.per_k[1].engine, Engine::Exact);
    assert_eq!(r.per_k[2].engine, Engine::Vbem);
    assert_eq!(r.k_hat, 3);
}

#[test]
fn dynamic_planted_chain() {
    let g = cliques(&[2, 2], 2);
    let z1 = LabelAssignment::from_one_based(2, &[1, 1, 2, 2]).unwrap();
    let r = select_k_dyn(&g, &z1, 3, &SelectorConfig::default(), 0).unwrap();
    assert_eq!(r.k_hat, 2);
    // k = 1 sees z1 coarsened into a single class.
    assert_eq!(r.per_k.len(), 3);
}

#[test]
fn dynamic_single_step_matches_static_structure() {
    let g = cliques(&[3, 3], 1);
    let z1 = LabelAssignment::constant(1, 6);
    let d = select_k_dyn(&g, &z1, 1, &SelectorConfig::default(), 0).unwrap();
    let m = select_k_ml(&g, 1, &SelectorConfig::default(), EngineChoice::Exact, 0).unwrap();
    assert_eq!(d.k_hat, m.k_hat);
}

#[test]
fn dynamic_budget_error_suggests_smaller_problem() {
    let g = GraphCollection::empty(8, 4).unwrap();
    let z1 = LabelAssignment::constant(2, 8);
    let err = select_k_dyn(&g, &z1, 2, &SelectorConfig::default(), 0).unwrap_err();
    assert!(err.to_string().contains("reduce n or T"), "{err}");
}

#[test]
fn layerwise_on_planted_layers() {
    let g = cliques(&[4, 4], 3);
    let cfg = SelectorConfig::default();
    let r = layerwise_max_baseline(&g, 4, &cfg, EngineChoice::Exact, 0).unwrap();
    assert_eq!(r.per_layer, vec![2, 2, 2]);
    assert_eq!(r.k_hat, 2);
    let pooled = select_k_ml(&g, 4, &cfg, EngineChoice::Exact, 0).unwrap();
    assert_eq!(pooled.k_hat, r.k_hat);
}

#[test]
fn report_round_trips_through_json() {
    let g = cliques(&[2, 3], 1);
    let r = select_k_ml(&g, 2, &SelectorConfig::default(), EngineChoice::Exact, 3).unwrap();
    let text = serde_json::to_string(&r).unwrap();
    assert!(text.contains("\"model\":\"ml\""));
    let back: blockorder::selector::SelectionReport = serde_json::from_str(&text).unwrap();
    assert_eq!(back, r);
}
