//! Monte-Carlo experiment runner: accuracy of the order estimators across
//! simulation scenarios, written as versioned CSV plus a JSON manifest.
//!
//! Seeds form a tree rooted at `master_seed`:
//! `draw = derive_seed(master, [grid_index, replication])` drives the
//! scenario sampler and `derive_seed(draw, [tag(method)])` drives each
//! method, so adding a method never changes another method's draws.
//! Records are emitted in canonical order (grid point, replication, method,
//! layer) regardless of scheduling.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{block_counts, confusion_matrix, GraphCollection, MlParams};
use crate::penalty::DEFAULT_EPSILON;
use crate::rng::{derive_seed, tag};
use crate::sampler::{
    sample_mlsbm, scenario_fig1, scenario_rate, scenario_sparse, SparsityScaling, FIG1_K,
    FIG1_LAYERS, RATE_K, SPARSE_K, SPARSE_LAYERS, SPARSE_N,
};
use crate::selector::{
    default_k_max, layerwise_max_baseline, select_k_ml, EngineChoice, SelectorConfig,
};
use crate::spectral::bhmc_select;
use crate::vbem::VbemConfig;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Fig1,
    SparseTable1,
    RateStudy,
    Custom,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Kt,
    LayerwiseKt,
    Bhmc,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Kt => "kt",
            Method::LayerwiseKt => "layerwise-kt",
            Method::Bhmc => "bhmc",
        }
    }
}

/// How the per-layer node count shrinks with `T` in the rate study, given
/// the node count `n1` at `T = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RateDesign {
    /// `n T` constant: `n = n1 / T`.
    #[serde(rename = "nT")]
    NT,
    /// `n² T` constant: `n = n1 / √T`.
    #[serde(rename = "n2T")]
    N2T,
}

impl RateDesign {
    pub fn nodes(self, n1: usize, layers: usize) -> usize {
        let v = match self {
            RateDesign::NT => n1 as f64 / layers as f64,
            RateDesign::N2T => n1 as f64 / (layers as f64).sqrt(),
        };
        (v.round() as usize).max(2)
    }
}

fn default_methods() -> Vec<Method> {
    vec![Method::Kt]
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    /// Node counts; for the rate study, the node count at `T = 1`.
    #[serde(default)]
    pub n_grid: Vec<usize>,
    #[serde(rename = "T", default)]
    pub layers: Option<usize>,
    pub replications: usize,
    /// Defaults to `min(n, 15)` per grid point.
    #[serde(default)]
    pub k_max: Option<usize>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default)]
    pub engine: EngineChoice,
    #[serde(default)]
    pub vbem: Option<VbemConfig>,
    pub master_seed: u64,
    #[serde(default)]
    pub rho_grid: Vec<f64>,
    #[serde(default)]
    pub t_grid: Vec<usize>,
    #[serde(default)]
    pub rate_design: Option<RateDesign>,
    /// Draw the 6-block design's `u`'s independently for every layer.
    #[serde(default = "default_true")]
    pub redraw_per_layer: bool,
    #[serde(default)]
    pub custom: Option<MlParams>,
}

impl ExperimentConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Desk-scale configuration for a scenario.
    pub fn desk(scenario: Scenario, master_seed: u64) -> Self {
        let mut cfg = Self {
            scenario,
            n_grid: Vec::new(),
            layers: None,
            replications: 20,
            k_max: None,
            epsilon: DEFAULT_EPSILON,
            methods: default_methods(),
            engine: EngineChoice::Auto,
            vbem: None,
            master_seed,
            rho_grid: Vec::new(),
            t_grid: Vec::new(),
            rate_design: None,
            redraw_per_layer: true,
            custom: None,
        };
        cfg.fill_defaults();
        cfg
    }

    /// Fills empty grids with the scenario's desk-scale defaults.
    pub fn fill_defaults(&mut self) {
        match self.scenario {
            Scenario::Fig1 => {
                if self.n_grid.is_empty() {
                    self.n_grid = vec![50, 100, 200, 300];
                }
            }
            Scenario::SparseTable1 => {
                if self.n_grid.is_empty() {
                    self.n_grid = vec![SPARSE_N];
                }
                if self.rho_grid.is_empty() {
                    self.rho_grid = vec![0.05, 0.15, 0.25, 0.35, 0.45];
                }
            }
            Scenario::RateStudy => {
                if self.n_grid.is_empty() {
                    self.n_grid = vec![64, 128, 256];
                }
                if self.t_grid.is_empty() {
                    self.t_grid = vec![1, 4, 9, 16];
                }
                self.rate_design.get_or_insert(RateDesign::N2T);
            }
            Scenario::Custom => {}
        }
    }

    /// Restores the full published grids and 100 replications.
    pub fn apply_paper_scale(&mut self) {
        self.replications = 100;
        match self.scenario {
            Scenario::Fig1 => {
                self.n_grid = vec![50, 75, 100, 125, 150, 175, 200, 300, 500, 700];
                self.layers = Some(FIG1_LAYERS);
            }
            Scenario::SparseTable1 => {
                self.n_grid = vec![SPARSE_N];
                self.layers = Some(SPARSE_LAYERS);
                self.rho_grid = (1..=9).map(|i| i as f64 * 0.05).collect();
            }
            Scenario::RateStudy => self.t_grid = vec![1, 4, 9, 16],
            Scenario::Custom => {}
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameters(m.into()));
        if self.n_grid.iter().any(|&n| n < 2) {
            return bad("every n in n_grid must be at least 2");
        }
        if self.layers == Some(0) || self.t_grid.contains(&0) {
            return bad("layer counts must be positive");
        }
        if self.k_max == Some(0) {
            return bad("k_max must be positive");
        }
        if !(self.epsilon > 0.0) {
            return bad("epsilon must be positive");
        }
        if self.methods.is_empty() {
            return bad("at least one method is required");
        }
        if self.rho_grid.iter().any(|&r| !(r > 0.0 && r <= 1.0)) {
            return bad("rho values must lie in (0, 1]");
        }
        if self.scenario == Scenario::Custom && self.custom.is_none() {
            return bad("the custom scenario needs a `custom` parameter block");
        }
        Ok(())
    }

    fn selector(&self) -> SelectorConfig {
        SelectorConfig {
            penalty: crate::penalty::PenaltyConfig {
                epsilon: self.epsilon,
            },
            vbem: self.vbem.unwrap_or_default(),
            ..SelectorConfig::default()
        }
    }

    fn scenario_id(&self) -> String {
        match (self.scenario, self.rate_design) {
            (Scenario::Fig1, _) => "fig1".into(),
            (Scenario::SparseTable1, _) => "sparse_table1".into(),
            (Scenario::RateStudy, Some(RateDesign::NT)) => "rate_study_nT".into(),
            (Scenario::RateStudy, _) => "rate_study_n2T".into(),
            (Scenario::Custom, _) => "custom".into(),
        }
    }

    /// Grid points in canonical order.
    pub fn grid(&self) -> Vec<GridPoint> {
        let mut cfg = self.clone();
        cfg.fill_defaults();
        let mut out = Vec::new();
        let mut push = |n: usize, layers: usize, rho: Option<f64>| {
            out.push(GridPoint {
                index: out.len(),
                n,
                layers,
                rho,
            })
        };
        match cfg.scenario {
            Scenario::Fig1 => {
                for &n in &cfg.n_grid {
                    push(n, cfg.layers.unwrap_or(FIG1_LAYERS), None);
                }
            }
            Scenario::SparseTable1 => {
                for &rho in &cfg.rho_grid {
                    for &n in &cfg.n_grid {
                        push(n, cfg.layers.unwrap_or(SPARSE_LAYERS), Some(rho));
                    }
                }
            }
            Scenario::RateStudy => {
                let design = cfg.rate_design.unwrap_or(RateDesign::N2T);
                for &n1 in &cfg.n_grid {
                    for &t in &cfg.t_grid {
                        push(design.nodes(n1, t), t, None);
                    }
                }
            }
            Scenario::Custom => {
                let layers = cfg.custom.as_ref().map_or(1, MlParams::num_layers);
                for &n in &cfg.n_grid {
                    push(n, layers, None);
                }
            }
        }
        out
    }

    fn k_true(&self) -> usize {
        match self.scenario {
            Scenario::Fig1 => FIG1_K,
            Scenario::SparseTable1 => SPARSE_K,
            Scenario::RateStudy => RATE_K,
            Scenario::Custom => self.custom.as_ref().map_or(0, MlParams::k),
        }
    }

    fn sample(&self, p: &GridPoint, seed: u64) -> Result<GraphCollection> {
        Ok(match self.scenario {
            Scenario::Fig1 => scenario_fig1(p.n, p.layers, self.redraw_per_layer, seed)?.graphs,
            Scenario::SparseTable1 => {
                scenario_sparse(p.n, p.layers, p.rho.unwrap_or(1.0), seed)?.graphs
            }
            Scenario::RateStudy => scenario_rate(p.n, p.layers, seed)?.graphs,
            Scenario::Custom => {
                let params = self.custom.as_ref().expect("validated");
                sample_mlsbm(p.n, params, seed)?.1
            }
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GridPoint {
    pub index: usize,
    pub n: usize,
    #[serde(rename = "T")]
    pub layers: usize,
    pub rho: Option<f64>,
}

/// One order estimate. Layer-wise spectral estimates yield one record per
/// layer, so accuracy is averaged over observed graphs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccuracyRecord {
    pub schema_version: u32,
    pub scenario: String,
    pub n: usize,
    #[serde(rename = "T")]
    pub layers: usize,
    pub rho: Option<f64>,
    pub method: String,
    pub replication: usize,
    pub layer: Option<usize>,
    pub k_hat: Option<usize>,
    pub k_true: usize,
    pub correct: u8,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingRecord {
    pub schema_version: u32,
    pub scenario: String,
    pub n: usize,
    #[serde(rename = "T")]
    pub layers: usize,
    pub rho: Option<f64>,
    pub method: String,
    pub replication: usize,
    pub wall_time_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub schema_version: u32,
    pub scenario: String,
    pub n: usize,
    #[serde(rename = "T")]
    pub layers: usize,
    pub rho: Option<f64>,
    pub method: String,
    pub trials: usize,
    pub successes: usize,
    pub accuracy: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
    pub failures: usize,
    pub complete: bool,
}

#[derive(Clone, Debug, Default)]
pub struct ExperimentResult {
    pub records: Vec<AccuracyRecord>,
    pub timings: Vec<TimingRecord>,
    pub summary: Vec<SummaryRow>,
    pub seeds: Vec<SeedEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedEntry {
    pub grid_index: usize,
    pub replication: usize,
    pub seed: u64,
}

/// 95% Wilson score interval for `successes` out of `trials`.
pub fn wilson_interval(successes: usize, trials: usize) -> (f64, f64) {
    wilson_interval_z(successes, trials, 1.959_963_984_540_054)
}

pub fn wilson_interval_z(successes: usize, trials: usize, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

struct Task {
    point: GridPoint,
    replication: usize,
    seed: u64,
}

fn run_task(cfg: &ExperimentConfig, task: &Task) -> (Vec<AccuracyRecord>, Vec<TimingRecord>) {
    let scenario = cfg.scenario_id();
    let k_true = cfg.k_true();
    let p = task.point;
    let record = |method: Method, layer, k_hat: Option<usize>, error: Option<String>| {
        AccuracyRecord {
            schema_version: SCHEMA_VERSION,
            scenario: scenario.clone(),
            n: p.n,
            layers: p.layers,
            rho: p.rho,
            method: method.name().into(),
            replication: task.replication,
            layer,
            k_hat,
            k_true,
            correct: u8::from(k_hat == Some(k_true)),
            error,
        }
    };
    let mut records = Vec::new();
    let mut timings = Vec::new();
    let graphs = match cfg.sample(&p, task.seed) {
        Ok(g) => g,
        Err(e) => {
            for &m in &cfg.methods {
                records.push(record(m, None, None, Some(format!("sampling: {e}"))));
            }
            return (records, timings);
        }
    };
    let sel = cfg.selector();
    let k_max = cfg.k_max.unwrap_or_else(|| default_k_max(p.n)).min(p.n);
    for &m in &cfg.methods {
        let seed = derive_seed(task.seed, &[tag(m.name())]);
        let start = Instant::now();
        match m {
            Method::Kt => match select_k_ml(&graphs, k_max, &sel, cfg.engine, seed) {
                Ok(r) => records.push(record(m, None, Some(r.k_hat), None)),
                Err(e) => records.push(record(m, None, None, Some(e.to_string()))),
            },
            Method::LayerwiseKt => {
                match layerwise_max_baseline(&graphs, k_max, &sel, cfg.engine, seed) {
                    Ok(r) => records.push(record(m, None, Some(r.k_hat), None)),
                    Err(e) => records.push(record(m, None, None, Some(e.to_string()))),
                }
            }
            Method::Bhmc => {
                for (t, layer) in graphs.layers().iter().enumerate() {
                    match bhmc_select(layer, k_max) {
                        Ok(s) => {
                            let warn = s.empty_graph.then(|| "empty graph".to_string());
                            records.push(record(m, Some(t), Some(s.k), warn));
                        }
                        Err(e) => records.push(record(m, Some(t), None, Some(e.to_string()))),
                    }
                }
            }
        }
        timings.push(TimingRecord {
            schema_version: SCHEMA_VERSION,
            scenario: scenario.clone(),
            n: p.n,
            layers: p.layers,
            rho: p.rho,
            method: m.name().into(),
            replication: task.replication,
            wall_time_s: start.elapsed().as_secs_f64(),
        });
    }
    (records, timings)
}

fn summarize(cfg: &ExperimentConfig, grid: &[GridPoint], records: &[AccuracyRecord]) -> Vec<SummaryRow> {
    if cfg.replications == 0 {
        return Vec::new();
    }
    let scenario = cfg.scenario_id();
    let mut rows = Vec::new();
    for p in grid {
        for &m in &cfg.methods {
            let cell: Vec<&AccuracyRecord> = records
                .iter()
                .filter(|r| {
                    r.n == p.n && r.layers == p.layers && r.rho == p.rho && r.method == m.name()
                })
                .collect();
            // Warnings (e.g. an empty layer) still carry an estimate.
            let failures = cell.iter().filter(|r| r.k_hat.is_none()).count();
            let trials = cell.len();
            let successes = cell.iter().map(|r| r.correct as usize).sum();
            let (lo, hi) = wilson_interval(successes, trials);
            rows.push(SummaryRow {
                schema_version: SCHEMA_VERSION,
                scenario: scenario.clone(),
                n: p.n,
                layers: p.layers,
                rho: p.rho,
                method: m.name().into(),
                trials,
                successes,
                accuracy: if trials > 0 {
                    successes as f64 / trials as f64
                } else {
                    0.0
                },
                wilson_low: lo,
                wilson_high: hi,
                failures,
                complete: failures == 0,
            });
        }
    }
    rows
}

/// Samples and estimates every (grid point, replication) cell.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let grid = cfg.grid();
    let tasks: Vec<Task> = grid
        .iter()
        .flat_map(|p| {
            (0..cfg.replications).map(move |r| Task {
                point: *p,
                replication: r,
                seed: derive_seed(cfg.master_seed, &[p.index as u64, r as u64]),
            })
        })
        .collect();
    let outputs: Vec<_> = tasks.par_iter().map(|t| run_task(cfg, t)).collect();
    let mut result = ExperimentResult::default();
    for (task, (records, timings)) in tasks.iter().zip(outputs) {
        result.records.extend(records);
        result.timings.extend(timings);
        result.seeds.push(SeedEntry {
            grid_index: task.point.index,
            replication: task.replication,
            seed: task.seed,
        });
    }
    result.summary = summarize(cfg, &grid, &result.records);
    Ok(result)
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T], header: &[&str]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

const RECORD_HEADER: &[&str] = &[
    "schema_version", "scenario", "n", "T", "rho", "method", "replication", "layer", "k_hat",
    "k_true", "correct", "error",
];
const TIMING_HEADER: &[&str] = &[
    "schema_version", "scenario", "n", "T", "rho", "method", "replication", "wall_time_s",
];
const SUMMARY_HEADER: &[&str] = &[
    "schema_version", "scenario", "n", "T", "rho", "method", "trials", "successes", "accuracy",
    "wilson_low", "wilson_high", "failures", "complete",
];

#[derive(Serialize)]
struct Manifest<'a> {
    schema_version: u32,
    crate_version: &'static str,
    paper_scale: bool,
    config: &'a ExperimentConfig,
    grid: Vec<GridPoint>,
    seeds: &'a [SeedEntry],
    outputs: [&'static str; 4],
}

/// Writes `records.csv`, `summary.csv`, `timings.csv` and `manifest.json`.
/// Everything except `timings.csv` is a deterministic function of the
/// configuration.
pub fn write_outputs(
    dir: &Path,
    cfg: &ExperimentConfig,
    paper_scale: bool,
    result: &ExperimentResult,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let paths: Vec<PathBuf> = ["records.csv", "summary.csv", "timings.csv", "manifest.json"]
        .iter()
        .map(|f| dir.join(f))
        .collect();
    write_csv(&paths[0], &result.records, RECORD_HEADER)?;
    write_csv(&paths[1], &result.summary, SUMMARY_HEADER)?;
    write_csv(&paths[2], &result.timings, TIMING_HEADER)?;
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        crate_version: env!("CARGO_PKG_VERSION"),
        paper_scale,
        config: cfg,
        grid: cfg.grid(),
        seeds: &result.seeds,
        outputs: ["records.csv", "summary.csv", "timings.csv", "manifest.json"],
    };
    fs::write(&paths[3], serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(paths)
}

/// Exceedance rate of one block-count statistic.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationCell {
    pub layer: usize,
    pub a: usize,
    pub b: usize,
    pub exceedance: f64,
}

/// Monte-Carlo estimate of
/// `P(|õ_ab / (ρ n²) − [Q S Qᵀ]_ab| > ξ)` at the true labeling, for every
/// layer and block pair.
pub fn concentration_check(
    pi: &[f64],
    scaling: &SparsityScaling,
    n: usize,
    replications: usize,
    xi: f64,
    seed: u64,
) -> Result<Vec<ConcentrationCell>> {
    let params = MlParams::new(pi.to_vec(), scaling.connectivity())?;
    let k = params.k();
    let layers = params.num_layers();
    let hits: Vec<Vec<bool>> = (0..replications)
        .into_par_iter()
        .map(|r| {
            let (z, g) = sample_mlsbm(n, &params, derive_seed(seed, &[r as u64]))?;
            let counts = block_counts(&z, &g)?;
            let q = confusion_matrix(&z, &z)?;
            let mut out = Vec::with_capacity(layers * k * k);
            for t in 0..layers {
                let target = q.sandwich(&scaling.base[t]);
                let scale = scaling.rho[t] * (n * n) as f64;
                for a in 0..k {
                    for b in 0..k {
                        let stat = counts.edges_tilde(t, a.min(b), a.max(b)) as f64 / scale;
                        out.push((stat - target[a][b]).abs() > xi);
                    }
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut cells = Vec::with_capacity(layers * k * k);
    for t in 0..layers {
        for a in 0..k {
            for b in 0..k {
                let i = (t * k + a) * k + b;
                let count = hits.iter().filter(|h| h[i]).count();
                cells.push(ConcentrationCell {
                    layer: t,
                    a,
                    b,
                    exceedance: if replications == 0 {
                        0.0
                    } else {
                        count as f64 / replications as f64
                    },
                });
            }
        }
    }
    Ok(cells)
}

/// The rate study's `(n, T)` cells for one design, in canonical order.
pub fn rate_study_grid(design: RateDesign, n_grid: &[usize], t_grid: &[usize]) -> Vec<(usize, usize)> {
    n_grid
        .iter()
        .flat_map(|&n1| t_grid.iter().map(move |&t| (design.nodes(n1, t), t)))
        .collect()
}

/// Runs the rate study for one design.
pub fn rate_study(cfg: &ExperimentConfig, design: RateDesign) -> Result<ExperimentResult> {
    let mut cfg = cfg.clone();
    cfg.scenario = Scenario::RateStudy;
    cfg.rate_design = Some(design);
    run_experiment(&cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_reference_values() {
        // 8/10 at z = 1.96: centre 0.7074, half-width 0.2102.
        let (lo, hi) = wilson_interval(8, 10);
        assert!((lo - 0.4902).abs() < 1e-3 && (hi - 0.9433).abs() < 1e-3, "{lo} {hi}");
        let (lo, hi) = wilson_interval(20, 20);
        assert!(hi == 1.0 && lo > 0.83 && lo < 0.84);
        assert_eq!(wilson_interval(0, 0), (0.0, 1.0));
    }

    #[test]
    fn rate_designs() {
        assert_eq!(RateDesign::NT.nodes(160, 16), 10);
        assert_eq!(RateDesign::N2T.nodes(160, 16), 40);
        assert_eq!(RateDesign::N2T.nodes(100, 1), 100);
        let g = rate_study_grid(RateDesign::N2T, &[120], &[1, 4, 9, 16]);
        assert_eq!(g, vec![(120, 1), (60, 4), (40, 9), (30, 16)]);
    }

    #[test]
    fn zero_replications_is_empty() {
        let mut cfg = ExperimentConfig::desk(Scenario::Fig1, 1);
        cfg.replications = 0;
        let r = run_experiment(&cfg).unwrap();
        assert!(r.records.is_empty() && r.summary.is_empty());
    }

    #[test]
    fn config_parses_with_defaults() {
        let cfg = ExperimentConfig::from_json(
            r#"{"scenario": "sparse_table1", "replications": 2, "master_seed": 5}"#,
        )
        .unwrap();
        assert_eq!(cfg.methods, vec![Method::Kt]);
        let grid = cfg.grid();
        assert_eq!(grid.len(), 5);
        assert_eq!(grid[0].layers, 4);
        assert!(ExperimentConfig::from_json(r#"{"scenario": "fig1", "replications": 1, "master_seed": 0, "bogus": 1}"#).is_err());
    }

    #[test]
    fn small_run_is_deterministic_and_ordered() {
        let mut cfg = ExperimentConfig::desk(Scenario::RateStudy, 3);
        cfg.n_grid = vec![24];
        cfg.t_grid = vec![1, 4];
        cfg.replications = 2;
        cfg.k_max = Some(3);
        cfg.methods = vec![Method::Kt, Method::Bhmc];
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a.records, b.records);
        // kt: one record per collection; bhmc: one per layer.
        assert_eq!(a.records.len(), 2 * (1 + 1) + 2 * (1 + 4));
        assert_eq!(a.summary.len(), 4);
        assert_eq!(a.records[0].method, "kt");
    }

    #[test]
    fn adding_a_method_keeps_other_draws() {
        let mut cfg = ExperimentConfig::desk(Scenario::RateStudy, 9);
        cfg.n_grid = vec![20];
        cfg.t_grid = vec![2];
        cfg.replications = 2;
        cfg.k_max = Some(3);
        let only = run_experiment(&cfg).unwrap();
        cfg.methods = vec![Method::Bhmc, Method::Kt];
        let both = run_experiment(&cfg).unwrap();
        let kt: Vec<_> = both.records.iter().filter(|r| r.method == "kt").cloned().collect();
        assert_eq!(kt, only.records);
    }

    #[test]
    fn concentration_huge_xi_never_exceeds() {
        let base = vec![crate::model::SquareMatrix::from_rows(vec![vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap()];
        let s = SparsityScaling::new(vec![0.3], base).unwrap();
        let cells = concentration_check(&[0.5, 0.5], &s, 60, 5, 100.0, 1).unwrap();
        assert!(cells.iter().all(|c| c.exceedance == 0.0));
    }
}
