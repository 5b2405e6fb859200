//! Mean-field variational Bayes for the multi-layer SBM.
//!
//! `q(z, π, P) = Π_i Cat(τ_i) · Dir(π; γ) · Π_{t, a≤b} Beta(P^t_ab; η, ζ)`
//! under Dirichlet(1/2) / Beta(1/2, 1/2) priors. The evidence lower bound
//! stands in for `ln KT_k(A)` when enumeration is out of reach.
//!
//! One iteration updates `γ, η, ζ` in closed form from the current `τ`, then
//! sweeps the nodes in order, replacing each `τ_i` by its exact coordinate
//! maximizer. Both steps are coordinate ascent on the same bound, so the
//! trace is nondecreasing up to rounding.

use rayon::prelude::*;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{Engine, LogEvidence};
use crate::model::{GraphCollection, LabelAssignment};
use crate::rng::{derive_seed, stream, STREAM_FIT};
use crate::special::{digamma, ln_beta, ln_gamma, xlogx, LN_BETA_HALF_HALF, LN_GAMMA_HALF};
use crate::spectral::{spectral_cluster, SpectralConfig};

/// Responsibilities are floored here before renormalizing.
pub const TAU_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Init {
    Spectral,
    Random,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VbemConfig {
    pub max_iters: usize,
    /// Stop once `|ΔELBO| <= tol · |ELBO|`.
    pub tol: f64,
    pub restarts: usize,
    pub init: Init,
}

impl Default for VbemConfig {
    fn default() -> Self {
        Self {
            max_iters: 500,
            tol: 1e-7,
            restarts: 5,
            init: Init::Spectral,
        }
    }
}

impl VbemConfig {
    fn validate(&self) -> Result<()> {
        if self.max_iters == 0 || self.restarts == 0 || !(self.tol > 0.0) {
            return Err(Error::InvalidParameters(
                "max_iters, restarts and tol must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Variational parameters. `eta` and `zeta` are stored as full symmetric
/// `k × k` blocks per layer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariationalState {
    pub n: usize,
    pub k: usize,
    pub layers: usize,
    pub tau: Vec<f64>,
    pub gamma: Vec<f64>,
    pub eta: Vec<f64>,
    pub zeta: Vec<f64>,
    pub elbo: f64,
}

impl VariationalState {
    /// State with the given responsibilities and globals at their optimum.
    pub fn from_tau(g: &GraphCollection, k: usize, tau: Vec<f64>) -> Result<Self> {
        let n = g.n();
        if tau.len() != n * k {
            return Err(Error::DimensionMismatch {
                what: "responsibility matrix size",
                expected: n * k,
                found: tau.len(),
            });
        }
        let layers = g.num_layers();
        let mut state = Self {
            n,
            k,
            layers,
            tau,
            gamma: vec![0.5; k],
            eta: vec![0.5; layers * k * k],
            zeta: vec![0.5; layers * k * k],
            elbo: f64::NAN,
        };
        let lists = layer_lists(g);
        let ex = Expected::new(&state.tau, n, k, &lists);
        state.update_globals(&ex);
        state.elbo = state.bound(&ex);
        Ok(state)
    }

    pub fn tau_row(&self, i: usize) -> &[f64] {
        &self.tau[i * self.k..(i + 1) * self.k]
    }

    /// Most probable class of each node.
    pub fn hard_labels(&self) -> LabelAssignment {
        let labels = (0..self.n)
            .map(|i| {
                let row = self.tau_row(i);
                (0..self.k).fold(0, |b, a| if row[a] > row[b] { a } else { b })
            })
            .collect();
        LabelAssignment::new(self.k, labels).expect("argmax is in range")
    }

    /// Relabels clusters: old class `a` becomes `perm[a]`.
    pub fn permute_clusters(&self, perm: &[usize]) -> Self {
        let k = self.k;
        let mut out = self.clone();
        for i in 0..self.n {
            for a in 0..k {
                out.tau[i * k + perm[a]] = self.tau[i * k + a];
            }
        }
        for a in 0..k {
            out.gamma[perm[a]] = self.gamma[a];
        }
        for t in 0..self.layers {
            for a in 0..k {
                for b in 0..k {
                    let (src, dst) = (idx(k, t, a, b), idx(k, t, perm[a], perm[b]));
                    out.eta[dst] = self.eta[src];
                    out.zeta[dst] = self.zeta[src];
                }
            }
        }
        out
    }

    fn update_globals(&mut self, ex: &Expected) {
        let k = self.k;
        for a in 0..k {
            self.gamma[a] = 0.5 + ex.size[a];
        }
        for t in 0..self.layers {
            for a in 0..k {
                for b in 0..k {
                    let i = idx(k, t, a, b);
                    let o = ex.edges[i];
                    self.eta[i] = 0.5 + o;
                    self.zeta[i] = 0.5 + (ex.pairs[a * k + b] - o).max(0.0);
                }
            }
        }
    }

    /// General mean-field bound for arbitrary globals.
    fn bound(&self, ex: &Expected) -> f64 {
        let k = self.k;
        let entropy: f64 = -self.tau.iter().map(|&x| xlogx(x)).sum::<f64>();

        let gsum: f64 = self.gamma.iter().sum();
        let psi_sum = digamma(gsum);
        let mut pi_part = ln_gamma(k as f64 / 2.0) - k as f64 * LN_GAMMA_HALF - ln_gamma(gsum);
        for a in 0..k {
            let g = self.gamma[a];
            pi_part += ln_gamma(g) + (0.5 + ex.size[a] - g) * (digamma(g) - psi_sum);
        }

        let mut p_part = 0.0;
        for t in 0..self.layers {
            for a in 0..k {
                for b in a..k {
                    let i = idx(k, t, a, b);
                    let (e, z) = (self.eta[i], self.zeta[i]);
                    let psi_ez = digamma(e + z);
                    let (l1, l0) = (digamma(e) - psi_ez, digamma(z) - psi_ez);
                    let o = ex.edges[i];
                    let m = ex.pairs[a * k + b];
                    p_part += ln_beta(e, z) - LN_BETA_HALF_HALF
                        + (0.5 + o - e) * l1
                        + (0.5 + m - o - z) * l0;
                }
            }
        }
        entropy + pi_part + p_part
    }
}

#[inline]
fn idx(k: usize, t: usize, a: usize, b: usize) -> usize {
    (t * k + a) * k + b
}

fn layer_lists(g: &GraphCollection) -> Vec<Vec<Vec<u32>>> {
    g.layers().iter().map(|l| l.adjacency_lists()).collect()
}

/// Expected sufficient statistics under `τ`: class sizes, edges per block
/// pair and layer, and node pairs per block pair.
struct Expected {
    size: Vec<f64>,
    edges: Vec<f64>,
    pairs: Vec<f64>,
}

impl Expected {
    fn new(tau: &[f64], n: usize, k: usize, lists: &[Vec<Vec<u32>>]) -> Self {
        let mut size = vec![0.0; k];
        let mut sq = vec![0.0; k * k];
        for i in 0..n {
            let row = &tau[i * k..(i + 1) * k];
            for a in 0..k {
                size[a] += row[a];
                for b in 0..k {
                    sq[a * k + b] += row[a] * row[b];
                }
            }
        }
        let mut pairs = vec![0.0; k * k];
        for a in 0..k {
            for b in 0..k {
                let v = size[a] * size[b] - sq[a * k + b];
                pairs[a * k + b] = if a == b { v / 2.0 } else { v };
            }
        }
        let mut edges = vec![0.0; lists.len() * k * k];
        let mut s = vec![0.0; k];
        for (t, adj) in lists.iter().enumerate() {
            let m = &mut edges[t * k * k..(t + 1) * k * k];
            for i in 0..n {
                neighbour_sum(tau, k, &adj[i], &mut s);
                let row = &tau[i * k..(i + 1) * k];
                for a in 0..k {
                    for b in 0..k {
                        m[a * k + b] += row[a] * s[b];
                    }
                }
            }
            for a in 0..k {
                m[a * k + a] /= 2.0;
            }
        }
        Self { size, edges, pairs }
    }
}

#[inline]
fn neighbour_sum(tau: &[f64], k: usize, nbrs: &[u32], out: &mut [f64]) {
    out.fill(0.0);
    for &j in nbrs {
        let row = &tau[j as usize * k..(j as usize + 1) * k];
        for (o, &x) in out.iter_mut().zip(row) {
            *o += x;
        }
    }
}

/// One sequential pass over the nodes with the globals held fixed.
fn sweep(state: &mut VariationalState, lists: &[Vec<Vec<u32>>]) {
    let (n, k, layers) = (state.n, state.k, state.layers);
    let gsum: f64 = state.gamma.iter().sum();
    let psi_sum = digamma(gsum);
    let log_pi: Vec<f64> = state.gamma.iter().map(|&g| digamma(g) - psi_sum).collect();

    // L0 summed over layers, and L1 − L0 per layer.
    let mut l0_sum = vec![0.0; k * k];
    let mut diff = vec![0.0; layers * k * k];
    for t in 0..layers {
        for a in 0..k {
            for b in 0..k {
                let i = idx(k, t, a, b);
                let (e, z) = (state.eta[i], state.zeta[i]);
                let psi_ez = digamma(e + z);
                let l0 = digamma(z) - psi_ez;
                l0_sum[a * k + b] += l0;
                diff[i] = digamma(e) - psi_ez - l0;
            }
        }
    }

    let mut size = vec![0.0; k];
    for i in 0..n {
        for a in 0..k {
            size[a] += state.tau[i * k + a];
        }
    }

    let mut s = vec![0.0; k];
    let mut others = vec![0.0; k];
    let mut score = vec![0.0; k];
    for i in 0..n {
        for b in 0..k {
            others[b] = size[b] - state.tau[i * k + b];
        }
        score.copy_from_slice(&log_pi);
        for a in 0..k {
            score[a] += (0..k).map(|b| others[b] * l0_sum[a * k + b]).sum::<f64>();
        }
        for (t, adj) in lists.iter().enumerate() {
            if adj[i].is_empty() {
                continue;
            }
            neighbour_sum(&state.tau, k, &adj[i], &mut s);
            let d = &diff[t * k * k..(t + 1) * k * k];
            for a in 0..k {
                score[a] += (0..k).map(|b| s[b] * d[a * k + b]).sum::<f64>();
            }
        }
        let max = score.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for x in score.iter_mut() {
            *x = ((*x - max).exp()).max(TAU_FLOOR);
            total += *x;
        }
        for a in 0..k {
            let new = score[a] / total;
            size[a] += new - state.tau[i * k + a];
            state.tau[i * k + a] = new;
        }
    }
}

/// Result of a single coordinate-ascent run.
#[derive(Clone, Debug)]
pub struct FitRun {
    pub state: VariationalState,
    pub iterations: usize,
    pub converged: bool,
    /// Bound after initialization and after every iteration.
    pub trace: Vec<f64>,
}

/// Coordinate ascent from the given responsibilities.
pub fn fit_from_tau(
    g: &GraphCollection,
    k: usize,
    tau: Vec<f64>,
    cfg: &VbemConfig,
) -> Result<FitRun> {
    let lists = layer_lists(g);
    let mut state = VariationalState::from_tau(g, k, tau)?;
    if !state.elbo.is_finite() {
        return Err(Error::NanElbo { iteration: 0, k });
    }
    let mut trace = vec![state.elbo];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iters {
        iterations += 1;
        sweep(&mut state, &lists);
        let ex = Expected::new(&state.tau, state.n, k, &lists);
        state.update_globals(&ex);
        let new = state.bound(&ex);
        if !new.is_finite() {
            return Err(Error::NanElbo { iteration: iterations, k });
        }
        let old = state.elbo;
        state.elbo = new;
        trace.push(new);
        if (new - old).abs() <= cfg.tol * old.abs().max(1.0) {
            converged = true;
            break;
        }
    }
    Ok(FitRun {
        state,
        iterations,
        converged,
        trace,
    })
}

/// The mean-field bound of `state` on `g`, for any (not necessarily
/// optimal) globals.
pub fn elbo(state: &VariationalState, g: &GraphCollection) -> Result<f64> {
    if g.n() != state.n || g.num_layers() != state.layers {
        return Err(Error::DimensionMismatch {
            what: "state vs graph (nodes x layers)",
            expected: g.n() * g.num_layers(),
            found: state.n * state.layers,
        });
    }
    let ex = Expected::new(&state.tau, state.n, state.k, &layer_lists(g));
    Ok(state.bound(&ex))
}

#[derive(Clone, Debug)]
pub struct VbemFit {
    pub state: VariationalState,
    pub evidence: LogEvidence,
    /// Iterations of the winning restart.
    pub iterations: usize,
    pub restarts_used: usize,
    pub converged: bool,
    pub trace: Vec<f64>,
    /// Final bound of every restart, in restart order.
    pub restart_elbos: Vec<f64>,
}

fn random_tau(n: usize, k: usize, seed: u64) -> Vec<f64> {
    let mut rng = stream(seed, STREAM_FIT);
    let mut tau = Vec::with_capacity(n * k);
    for _ in 0..n {
        // Dirichlet(1, ..., 1) via normalized exponentials.
        let row: Vec<f64> = (0..k).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
        let s: f64 = row.iter().sum();
        tau.extend(row.iter().map(|x| (x / s).max(TAU_FLOOR)));
    }
    tau
}

fn spectral_tau(g: &GraphCollection, k: usize, seed: u64) -> Result<Vec<f64>> {
    let z = spectral_cluster(g, k, &SpectralConfig::default(), seed)?;
    let uniform = 0.1 / k as f64;
    let mut tau = vec![uniform; g.n() * k];
    for (i, &l) in z.labels().iter().enumerate() {
        tau[i * k + l] += 0.9;
    }
    Ok(tau)
}

/// Best-of-restarts variational fit; `evidence.value` is the largest final
/// bound, with ties going to the earliest restart.
pub fn vbem_fit(g: &GraphCollection, k: usize, cfg: &VbemConfig, seed: u64) -> Result<VbemFit> {
    cfg.validate()?;
    let n = g.n();
    if k == 0 || k > n {
        return Err(Error::InvalidParameters(format!("need 1 <= k <= n = {n}, got k = {k}")));
    }
    let restarts = if k == 1 { 1 } else { cfg.restarts };
    let runs: Vec<Result<FitRun>> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let s = derive_seed(seed, &[r as u64]);
            let tau = match (cfg.init, r) {
                (_, _) if k == 1 => vec![1.0; n],
                (Init::Spectral, 0) => spectral_tau(g, k, s)?,
                _ => random_tau(n, k, s),
            };
            fit_from_tau(g, k, tau, cfg)
        })
        .collect();
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
    let restart_elbos: Vec<f64> = runs.iter().map(|r| r.state.elbo).collect();
    let best = (0..runs.len())
        .fold(0, |b, r| if runs[r].state.elbo > runs[b].state.elbo { r } else { b });
    let run = runs.into_iter().nth(best).expect("at least one restart");
    Ok(VbemFit {
        evidence: LogEvidence {
            value: run.state.elbo,
            k,
            engine: Engine::Vbem,
        },
        iterations: run.iterations,
        restarts_used: restarts,
        converged: run.converged,
        trace: run.trace,
        state: run.state,
        restart_elbos,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{log_complete_kt_ml, log_kt_ml_exact, DEFAULT_BUDGET};
    use crate::model::Adjacency;

    fn sample_graph() -> GraphCollection {
        GraphCollection::new(vec![
            Adjacency::from_edges(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (2, 3)]).unwrap(),
            Adjacency::from_edges(6, [(0, 1), (3, 5), (1, 4)]).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn single_class_is_exact() {
        let g = sample_graph();
        let fit = vbem_fit(&g, 1, &VbemConfig::default(), 0).unwrap();
        let exact = log_complete_kt_ml(&LabelAssignment::constant(1, 6), &g).unwrap();
        assert!((fit.evidence.value - exact).abs() < 1e-9);
        assert_eq!(fit.evidence.engine, Engine::Vbem);
    }

    #[test]
    fn bound_is_below_exact_and_monotone() {
        let g = sample_graph();
        for k in 2..=3 {
            let fit = vbem_fit(&g, k, &VbemConfig::default(), 3).unwrap();
            let exact = log_kt_ml_exact(&g, k, DEFAULT_BUDGET).unwrap().value;
            assert!(fit.evidence.value <= exact + 1e-9);
            for w in fit.trace.windows(2) {
                assert!(w[1] >= w[0] - 1e-9, "{w:?}");
            }
            for i in 0..6 {
                let s: f64 = fit.state.tau_row(i).iter().sum();
                assert!((s - 1.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn general_bound_matches_state() {
        let g = sample_graph();
        let fit = vbem_fit(&g, 2, &VbemConfig::default(), 1).unwrap();
        assert!((elbo(&fit.state, &g).unwrap() - fit.state.elbo).abs() < 1e-10);
        let swapped = fit.state.permute_clusters(&[1, 0]);
        assert!((elbo(&swapped, &g).unwrap() - fit.state.elbo).abs() < 1e-10);
    }

    #[test]
    fn suboptimal_globals_lower_the_bound() {
        let g = sample_graph();
        let fit = vbem_fit(&g, 2, &VbemConfig::default(), 1).unwrap();
        let mut off = fit.state.clone();
        off.gamma[0] += 0.7;
        off.eta[1] += 0.3;
        off.eta[2] += 0.3;
        assert!(elbo(&off, &g).unwrap() < fit.state.elbo);
    }

    #[test]
    fn rejects_bad_order() {
        let g = sample_graph();
        assert!(vbem_fit(&g, 7, &VbemConfig::default(), 0).is_err());
        assert!(vbem_fit(&g, 0, &VbemConfig::default(), 0).is_err());
    }

    #[test]
    fn deterministic() {
        let g = sample_graph();
        let a = vbem_fit(&g, 3, &VbemConfig::default(), 9).unwrap();
        let b = vbem_fit(&g, 3, &VbemConfig::default(), 9).unwrap();
        assert_eq!(a.state, b.state);
    }
}
