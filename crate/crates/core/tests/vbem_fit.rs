mod common;

use blockorder::exact::{log_complete_kt_ml, log_kt_ml_exact, DEFAULT_BUDGET};
use blockorder::vbem::{elbo, vbem_fit, Init, VbemConfig, VariationalState};
use blockorder::{GraphCollection, LabelAssignment};
use common::cliques;

#[test]
fn separable_cliques_give_crisp_responsibilities() {
    let g = cliques(&[10, 10], 1);
    let fit = vbem_fit(&g, 2, &VbemConfig::default(), 4).unwrap();
    let worst = (0..20)
        .flat_map(|i| fit.state.tau_row(i).to_vec())
        .map(|x| x.min(1.0 - x).abs())
        .fold(0.0, f64::max);
    assert!(worst <= 1e-3, "max distance from a vertex: {worst}");
    let z = fit.state.hard_labels();
    assert!(z.labels()[..10].iter().all(|&l| l == z.labels()[0]));
    assert!(z.labels()[10..].iter().all(|&l| l == z.labels()[10]));
    assert_ne!(z.labels()[0], z.labels()[10]);
}

#[test]
fn single_class_bound_equals_complete_kt() {
    for (sizes, layers) in [(&[3usize, 4][..], 2), (&[5, 1, 2][..], 3)] {
        let g = cliques(sizes, layers);
        let fit = vbem_fit(&g, 1, &VbemConfig::default(), 0).unwrap();
        let exact = log_complete_kt_ml(&LabelAssignment::constant(1, g.n()), &g).unwrap();
        assert!((fit.evidence.value - exact).abs() < 1e-9);
        let uniform = VariationalState::from_tau(&g, 1, vec![1.0; g.n()]).unwrap();
        assert!((elbo(&uniform, &g).unwrap() - exact).abs() < 1e-9);
    }
}

#[test]
fn random_init_also_bounds_exact_evidence() {
    let g = cliques(&[3, 3], 2);
    let cfg = VbemConfig {
        init: Init::Random,
        restarts: 3,
        ..VbemConfig::default()
    };
    let fit = vbem_fit(&g, 2, &cfg, 11).unwrap();
    assert_eq!(fit.restart_elbos.len(), 3);
    assert_eq!(fit.evidence.value, fit.restart_elbos.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    assert!(fit.evidence.value <= log_kt_ml_exact(&g, 2, DEFAULT_BUDGET).unwrap().value + 1e-9);
}

#[test]
fn bound_is_tight_on_separable_instances() {
    // With crisp blocks the posterior over labelings concentrates on the k!
    // relabelings of the truth, so the bound sits about ln 2 below the
    // exact evidence.
    let g = cliques(&[4, 4], 2);
    let fit = vbem_fit(&g, 2, &VbemConfig::default(), 0).unwrap();
    let exact = log_kt_ml_exact(&g, 2, DEFAULT_BUDGET).unwrap().value;
    let gap = exact - fit.evidence.value;
    assert!(gap >= -1e-9 && gap < 2f64.ln() + 0.1, "gap {gap}");
}

#[test]
fn empty_graph_fit_is_finite() {
    let g = GraphCollection::empty(6, 2).unwrap();
    let fit = vbem_fit(&g, 3, &VbemConfig::default(), 2).unwrap();
    assert!(fit.evidence.value.is_finite());
}
