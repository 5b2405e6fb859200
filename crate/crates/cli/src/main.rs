//! Command-line front end: simulate graphs, evaluate evidence, run the
//! order selectors and baselines, and drive Monte-Carlo experiments.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use blockorder::exact::{configurations, log_kt_dyn_exact, log_kt_ml_exact};
use blockorder::harness::{run_experiment, write_outputs, ExperimentConfig};
use blockorder::model::io::{read_graph, write_graph};
use blockorder::model::LabelFile;
use blockorder::penalty::PenaltyConfig;
use blockorder::sampler::{sample_dynsbm, sample_mlsbm};
use blockorder::selector::{
    default_k_max, layerwise_max_baseline, select_k_dyn, select_k_ml, EngineChoice,
    SelectorConfig,
};
use blockorder::spectral::bhmc_select;
use blockorder::vbem::{vbem_fit, Init, VbemConfig};
use blockorder::{DynParams, GraphCollection, LabelAssignment, MlParams};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "blockorder", version, about = "Penalized KT order estimation for multi-layer and dynamic SBMs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Ml,
    Dyn,
}

#[derive(Clone, Copy, ValueEnum)]
enum EvidenceEngine {
    Exact,
    Vbem,
}

#[derive(Clone, Copy, ValueEnum)]
enum SelectEngine {
    Exact,
    Vbem,
    Auto,
}

impl From<SelectEngine> for EngineChoice {
    fn from(e: SelectEngine) -> Self {
        match e {
            SelectEngine::Exact => EngineChoice::Exact,
            SelectEngine::Vbem => EngineChoice::Vbem,
            SelectEngine::Auto => EngineChoice::Auto,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Baseline {
    Bhmc,
    LayerwiseKt,
}

#[derive(clap::Args, Clone)]
struct VbemArgs {
    #[arg(long, default_value_t = 5)]
    restarts: usize,
    #[arg(long, default_value_t = 1e-7)]
    tol: f64,
    #[arg(long, default_value_t = 500)]
    max_iters: usize,
    /// Initialize every restart randomly instead of the first from spectral clustering.
    #[arg(long)]
    random_init: bool,
}

impl VbemArgs {
    fn config(&self) -> VbemConfig {
        VbemConfig {
            max_iters: self.max_iters,
            tol: self.tol,
            restarts: self.restarts,
            init: if self.random_init { Init::Random } else { Init::Spectral },
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Sample a graph collection; writes the graph and a `.truth.json` sidecar.
    Simulate {
        #[arg(long, value_enum)]
        model: Model,
        /// JSON with `n` and the parameters (`pi`/`trans` and `P`).
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output graph; `.json` selects JSON, anything else the binary form.
        #[arg(long)]
        out: PathBuf,
    },
    /// Log integrated likelihood for one order.
    Evidence {
        #[arg(long, value_enum, default_value = "exact")]
        engine: EvidenceEngine,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        graph: PathBuf,
        /// First-layer labels; switches the exact engine to the dynamic model.
        #[arg(long)]
        z1: Option<PathBuf>,
        #[arg(long, default_value_t = blockorder::exact::DEFAULT_BUDGET)]
        budget: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        vbem: VbemArgs,
    },
    /// Order selection baselines.
    Baseline {
        #[arg(long, value_enum)]
        method: Baseline,
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        kmax: Option<usize>,
        #[arg(long, value_enum, default_value = "auto")]
        engine: SelectEngine,
        #[arg(long, default_value_t = blockorder::penalty::DEFAULT_EPSILON)]
        epsilon: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Penalized KT order estimate.
    Select {
        #[arg(long, value_enum, default_value = "ml")]
        model: Model,
        #[arg(long)]
        graph: PathBuf,
        /// First-layer labels (required for the dynamic model).
        #[arg(long)]
        z1: Option<PathBuf>,
        /// Largest order tried; defaults to min(n, 15).
        #[arg(long)]
        kmax: Option<usize>,
        /// Sweep every order up to n.
        #[arg(long, conflicts_with = "kmax")]
        full_sweep: bool,
        #[arg(long, value_enum, default_value = "auto")]
        engine: SelectEngine,
        #[arg(long, default_value_t = blockorder::penalty::DEFAULT_EPSILON)]
        epsilon: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = blockorder::exact::DEFAULT_BUDGET)]
        budget: u64,
        /// Report path; printed to stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the per-k table as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        vbem: VbemArgs,
    },
    /// Monte-Carlo accuracy experiment.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        /// Restore the full published grids and replication counts.
        #[arg(long)]
        paper_scale: bool,
        #[arg(long, default_value = "results")]
        out_dir: PathBuf,
    },
}

fn read_json(path: &Path) -> Result<Value> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn load_graph(path: &Path) -> Result<GraphCollection> {
    read_graph(path).with_context(|| format!("loading graph {}", path.display()))
}

/// Accepts a plain label file or a simulation sidecar carrying a `z1` entry.
fn load_z1(path: &Path) -> Result<LabelAssignment> {
    let mut v = read_json(path)?;
    if let Some(inner) = v.get_mut("z1") {
        v = inner.take();
    }
    let file: LabelFile = serde_json::from_value(v)
        .with_context(|| format!("{} is not a label file", path.display()))?;
    Ok(LabelAssignment::try_from(file)?)
}

fn sidecar_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}.truth.json"))
}

fn emit(value: &Value, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn simulate(model: Model, config: &Path, seed: u64, out: &Path) -> Result<()> {
    let mut cfg = read_json(config)?;
    let n = cfg
        .as_object_mut()
        .and_then(|o| o.remove("n"))
        .and_then(|v| v.as_u64())
        .context("simulation config needs a positive integer `n`")? as usize;
    let sidecar = match model {
        Model::Ml => {
            let params: MlParams = serde_json::from_value(cfg).context("invalid MLSBM parameters")?;
            let (z, g) = sample_mlsbm(n, &params, seed)?;
            write_graph(out, &g)?;
            json!({
                "model": "ml", "seed": seed, "n": n, "T": g.num_layers(), "k": params.k(),
                "labels": z.to_one_based(), "params": params,
            })
        }
        Model::Dyn => {
            let params: DynParams = serde_json::from_value(cfg).context("invalid DynSBM parameters")?;
            let (z, g) = sample_dynsbm(n, &params, seed)?;
            write_graph(out, &g)?;
            json!({
                "model": "dyn", "seed": seed, "n": n, "T": g.num_layers(), "k": params.k(),
                "labels": z.to_one_based(), "z1": LabelFile::from(&z.first()), "params": params,
            })
        }
    };
    let side = sidecar_path(out);
    emit(&sidecar, Some(&side))?;
    eprintln!("wrote {} and {}", out.display(), side.display());
    Ok(())
}

fn run() -> Result<()> {
    match Cli::parse().command {
        Command::Simulate {
            model,
            config,
            seed,
            out,
        } => simulate(model, &config, seed, &out),

        Command::Evidence {
            engine,
            k,
            graph,
            z1,
            budget,
            seed,
            vbem,
        } => {
            let g = load_graph(&graph)?;
            let value = match (engine, z1) {
                (EvidenceEngine::Exact, None) => {
                    let e = log_kt_ml_exact(&g, k, budget)?;
                    json!({"k": k, "log_evidence": e.value, "engine": e.engine,
                           "configs_enumerated": configurations(k, g.n())})
                }
                (EvidenceEngine::Exact, Some(path)) => {
                    let z1 = load_z1(&path)?;
                    let e = log_kt_dyn_exact(&g, &z1, k, budget)?;
                    json!({"k": k, "log_evidence": e.value, "engine": e.engine,
                           "configs_enumerated": configurations(k, g.n() * (g.num_layers() - 1))})
                }
                (EvidenceEngine::Vbem, Some(_)) => {
                    bail!("the variational engine covers the multi-layer model only; drop --z1 or use --engine exact")
                }
                (EvidenceEngine::Vbem, None) => {
                    let fit = vbem_fit(&g, k, &vbem.config(), seed)?;
                    json!({"k": k, "log_evidence": fit.evidence.value, "engine": fit.evidence.engine,
                           "iters": fit.iterations, "restarts_used": fit.restarts_used,
                           "converged": fit.converged})
                }
            };
            emit(&value, None)
        }

        Command::Baseline {
            method,
            graph,
            kmax,
            engine,
            epsilon,
            seed,
        } => {
            let g = load_graph(&graph)?;
            let k_max = kmax.unwrap_or_else(|| default_k_max(g.n()));
            let value = match method {
                Baseline::Bhmc => {
                    let per_layer = g
                        .layers()
                        .iter()
                        .map(|l| bhmc_select(l, k_max))
                        .collect::<blockorder::Result<Vec<_>>>()?;
                    for (t, s) in per_layer.iter().enumerate() {
                        if s.empty_graph {
                            eprintln!("warning: layer {} has no edges; estimate set to 0", t + 1);
                        }
                    }
                    json!({"method": "bhmc", "k_max": k_max,
                           "per_layer": per_layer,
                           "k_hat": per_layer.iter().map(|s| s.k).max()})
                }
                Baseline::LayerwiseKt => {
                    let cfg = SelectorConfig {
                        penalty: PenaltyConfig { epsilon },
                        ..SelectorConfig::default()
                    };
                    let r = layerwise_max_baseline(&g, k_max, &cfg, engine.into(), seed)?;
                    json!({"method": "layerwise-kt", "k_max": k_max,
                           "per_layer": r.per_layer, "k_hat": r.k_hat})
                }
            };
            emit(&value, None)
        }

        Command::Select {
            model,
            graph,
            z1,
            kmax,
            full_sweep,
            engine,
            epsilon,
            seed,
            budget,
            out,
            csv,
            vbem,
        } => {
            let g = load_graph(&graph)?;
            let k_max = if full_sweep {
                g.n()
            } else {
                kmax.unwrap_or_else(|| default_k_max(g.n()))
            };
            let cfg = SelectorConfig {
                penalty: PenaltyConfig { epsilon },
                vbem: vbem.config(),
                budget,
            };
            let report = match model {
                Model::Ml => select_k_ml(&g, k_max, &cfg, engine.into(), seed)?,
                Model::Dyn => {
                    let path = z1.context("the dynamic model needs --z1")?;
                    select_k_dyn(&g, &load_z1(&path)?, k_max, &cfg, seed)?
                }
            };
            if let Some(path) = csv {
                let f = fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
                report.write_csv(f)?;
            }
            emit(&serde_json::to_value(&report)?, out.as_deref())
        }

        Command::Experiment {
            config,
            paper_scale,
            out_dir,
        } => {
            let text = fs::read_to_string(&config)
                .with_context(|| format!("reading {}", config.display()))?;
            let mut cfg = ExperimentConfig::from_json(&text)?;
            if paper_scale {
                cfg.apply_paper_scale();
            }
            cfg.fill_defaults();
            let result = run_experiment(&cfg)?;
            let paths = write_outputs(&out_dir, &cfg, paper_scale, &result)?;
            for row in &result.summary {
                eprintln!(
                    "{} n={} T={} rho={} {}: {:.3} [{:.3}, {:.3}] ({} trials{})",
                    row.scenario,
                    row.n,
                    row.layers,
                    row.rho.map_or("-".into(), |r| r.to_string()),
                    row.method,
                    row.accuracy,
                    row.wilson_low,
                    row.wilson_high,
                    row.trials,
                    if row.complete { "" } else { ", incomplete" },
                );
            }
            for p in paths {
                eprintln!("wrote {}", p.display());
            }
            Ok(())
        }
    }
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
