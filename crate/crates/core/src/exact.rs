//! Exact Krichevsky–Trofimov evidence.
//!
//! For a fixed labeling the integral over parameters is a product of
//! Dirichlet(1/2)–multinomial and Beta(1/2, 1/2)–binomial terms, evaluated
//! here in log space. Summing over labelings is done by brute-force
//! enumeration with a streaming log-sum-exp, which is only feasible for a
//! handful of nodes; it serves as ground truth for the variational engine.
//!
//! Enumeration visits configurations in lexicographic order (node 1 is the
//! most significant digit) in fixed-size chunks, so the result does not
//! depend on how chunks are scheduled.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{pairs_between, GraphCollection, LabelAssignment, LabelPath, Labeling};
use crate::special::{xlog_ratio, HalfLnGamma, LogSumExp};

/// Default cap on the number of enumerated configurations.
pub const DEFAULT_BUDGET: u64 = 10_000_000;

const CHUNK: u64 = 1 << 14;

/// Relative tolerance under which two profile likelihoods count as tied.
const TIE_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Exact,
    Vbem,
}

impl std::fmt::Display for Engine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Engine::Exact => "exact",
            Engine::Vbem => "vbem",
        })
    }
}

/// Natural log of an (approximate) integrated likelihood for order `k`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogEvidence {
    pub value: f64,
    pub k: usize,
    pub engine: Engine,
}

/// Edge endpoints per layer, the only part of the graph enumeration touches.
struct EdgeLists {
    layers: Vec<Vec<(u32, u32)>>,
}

impl EdgeLists {
    fn new(g: &GraphCollection) -> Self {
        Self {
            layers: g
                .layers()
                .iter()
                .map(|l| l.edges().map(|(i, j)| (i as u32, j as u32)).collect())
                .collect(),
        }
    }
}

/// Reusable counters for one configuration. Edge counts are stored at
/// `min(a, b) * k + max(a, b)`.
struct Tally {
    k: usize,
    layers: usize,
    nodes: Vec<u64>,
    edges: Vec<u64>,
    trans: Vec<u64>,
}

impl Tally {
    fn new(k: usize, layers: usize) -> Self {
        Self {
            k,
            layers,
            nodes: vec![0; layers * k],
            edges: vec![0; layers * k * k],
            trans: vec![0; k * k],
        }
    }

    fn fill_layer(&mut self, t: usize, labels: &[usize], edges: &[(u32, u32)]) {
        let k = self.k;
        let nodes = &mut self.nodes[t * k..(t + 1) * k];
        nodes.fill(0);
        for &l in labels {
            nodes[l] += 1;
        }
        let ec = &mut self.edges[t * k * k..(t + 1) * k * k];
        ec.fill(0);
        for &(i, j) in edges {
            let (a, b) = (labels[i as usize], labels[j as usize]);
            ec[a.min(b) * k + a.max(b)] += 1;
        }
    }

    fn fill_ml(&mut self, labels: &[usize], e: &EdgeLists) {
        for t in 0..self.layers {
            self.fill_layer(t, labels, &e.layers[t]);
        }
    }

    fn fill_path(&mut self, rows: &[&[usize]], e: &EdgeLists) {
        for t in 0..self.layers {
            self.fill_layer(t, rows[t], &e.layers[t]);
        }
        let k = self.k;
        self.trans.fill(0);
        for w in rows.windows(2) {
            for (&a, &b) in w[0].iter().zip(w[1]) {
                self.trans[a * k + b] += 1;
            }
        }
    }

    #[inline]
    fn node(&self, t: usize, a: usize) -> u64 {
        self.nodes[t * self.k + a]
    }

    #[inline]
    fn edge(&self, t: usize, a: usize, b: usize) -> u64 {
        self.edges[(t * self.k + a) * self.k + b]
    }

    #[inline]
    fn pairs(&self, t: usize, a: usize, b: usize) -> u64 {
        pairs_between(self.node(t, a), self.node(t, b), a == b)
    }

    /// Complete-data KT mass of a layer-invariant labeling.
    fn kt_ml(&self, lg: &HalfLnGamma) -> f64 {
        let k = self.k;
        let mut v = lg.ln_dirichlet_multinomial((0..k).map(|a| self.node(0, a)), k);
        for t in 0..self.layers {
            for a in 0..k {
                for b in a..k {
                    v += lg.ln_beta_ratio(self.edge(t, a, b), self.pairs(0, a, b));
                }
            }
        }
        v
    }

    /// Conditional complete-data KT mass of a label path given its first row.
    fn kt_dyn(&self, lg: &HalfLnGamma) -> f64 {
        let k = self.k;
        let mut v = 0.0;
        for a in 0..k {
            v += lg.ln_dirichlet_multinomial(self.trans[a * k..(a + 1) * k].iter().copied(), k);
            let (mut o, mut m) = (0, 0);
            for t in 0..self.layers {
                o += self.edge(t, a, a);
                m += self.pairs(t, a, a);
            }
            v += lg.ln_beta_ratio(o, m);
        }
        for t in 0..self.layers {
            for a in 0..k {
                for b in (a + 1)..k {
                    v += lg.ln_beta_ratio(self.edge(t, a, b), self.pairs(t, a, b));
                }
            }
        }
        v
    }

    /// `ln sup P(z, A)` with MLEs `n_a / n` and `o_ab / n_ab`.
    fn sup_ml(&self, n: usize) -> f64 {
        let k = self.k;
        let mut v: f64 = (0..k).map(|a| xlog_ratio(self.node(0, a) as f64, n as f64)).sum();
        for t in 0..self.layers {
            for a in 0..k {
                for b in a..k {
                    v += bernoulli_sup(self.edge(t, a, b), self.pairs(0, a, b));
                }
            }
        }
        v
    }

    /// `ln sup P(z^{2:T}, A | z^1)` with row-normalized transition counts,
    /// pooled diagonal and per-layer off-diagonal connectivity.
    fn sup_dyn(&self) -> f64 {
        let k = self.k;
        let mut v = 0.0;
        for a in 0..k {
            let row = &self.trans[a * k..(a + 1) * k];
            let total: u64 = row.iter().sum();
            v += row.iter().map(|&c| xlog_ratio(c as f64, total as f64)).sum::<f64>();
            let (mut o, mut m) = (0, 0);
            for t in 0..self.layers {
                o += self.edge(t, a, a);
                m += self.pairs(t, a, a);
            }
            v += bernoulli_sup(o, m);
        }
        for t in 0..self.layers {
            for a in 0..k {
                for b in (a + 1)..k {
                    v += bernoulli_sup(self.edge(t, a, b), self.pairs(t, a, b));
                }
            }
        }
        v
    }
}

#[inline]
fn bernoulli_sup(ones: u64, trials: u64) -> f64 {
    let (o, m) = (ones as f64, trials as f64);
    xlog_ratio(o, m) + xlog_ratio(m - o, m)
}

fn check_labels<L: Labeling>(z: &L, g: &GraphCollection) -> Result<()> {
    if z.n() != g.n() {
        return Err(Error::DimensionMismatch {
            what: "labeling length vs node count",
            expected: g.n(),
            found: z.n(),
        });
    }
    if let Some(len) = z.path_len() {
        if len != g.num_layers() {
            return Err(Error::DimensionMismatch {
                what: "label path length vs layer count",
                expected: g.num_layers(),
                found: len,
            });
        }
    }
    Ok(())
}

fn path_rows(z: &LabelPath) -> Vec<&[usize]> {
    (0..z.num_layers()).map(|t| z.layer(t)).collect()
}

/// `ln ∫ P_{π,P}(z, A) ν_k(dπ, dP)` for the labeling's own `k`.
pub fn log_complete_kt_ml(z: &LabelAssignment, g: &GraphCollection) -> Result<f64> {
    check_labels(z, g)?;
    let e = EdgeLists::new(g);
    let lg = HalfLnGamma::for_problem(g.n(), g.num_layers(), z.k());
    let mut tally = Tally::new(z.k(), g.num_layers());
    tally.fill_ml(z.labels(), &e);
    Ok(tally.kt_ml(&lg))
}

/// `ln ∫ P_{Π,P}(z^{2:T}, A | z^1) ν_k(dΠ, dP)`; the first row of `z` is the
/// conditioning configuration.
pub fn log_complete_kt_dyn(z: &LabelPath, g: &GraphCollection) -> Result<f64> {
    check_labels(z, g)?;
    let e = EdgeLists::new(g);
    let lg = HalfLnGamma::for_problem(g.n(), g.num_layers(), z.k());
    let mut tally = Tally::new(z.k(), g.num_layers());
    tally.fill_path(&path_rows(z), &e);
    Ok(tally.kt_dyn(&lg))
}

/// `ln sup_{π,P} P_{π,P}(z, A)`, with `0 ln 0 = 0`.
pub fn log_sup_complete_ml(z: &LabelAssignment, g: &GraphCollection) -> Result<f64> {
    check_labels(z, g)?;
    let e = EdgeLists::new(g);
    let mut tally = Tally::new(z.k(), g.num_layers());
    tally.fill_ml(z.labels(), &e);
    Ok(tally.sup_ml(g.n()))
}

/// `ln sup_{Π,P} P_{Π,P}(z^{2:T}, A | z^1)` over the constrained space.
pub fn log_sup_complete_dyn(z: &LabelPath, g: &GraphCollection) -> Result<f64> {
    check_labels(z, g)?;
    let e = EdgeLists::new(g);
    let mut tally = Tally::new(z.k(), g.num_layers());
    tally.fill_path(&path_rows(z), &e);
    Ok(tally.sup_dyn())
}

/// Number of configurations enumerated for `free` free labels.
pub fn configurations(k: usize, free: usize) -> f64 {
    (k as f64).powi(free as i32)
}

fn check_budget(k: usize, free: usize, budget: u64) -> Result<u64> {
    let required = configurations(k, free);
    if required > budget as f64 {
        return Err(Error::BudgetExceeded { required, budget });
    }
    Ok(required as u64)
}

/// Writes the base-`k` digits of `index` into `digits`, most significant first.
fn decode(mut index: u64, k: usize, digits: &mut [usize]) {
    for d in digits.iter_mut().rev() {
        *d = (index % k as u64) as usize;
        index /= k as u64;
    }
}

/// Advances a mixed-radix counter; returns false on wrap-around.
fn increment(digits: &mut [usize], k: usize) -> bool {
    for d in digits.iter_mut().rev() {
        *d += 1;
        if *d < k {
            return true;
        }
        *d = 0;
    }
    false
}

/// Runs `visit(chunk_state, digits)` for every configuration of `free`
/// base-`k` digits, chunked for parallelism; returns the per-chunk states
/// in configuration order.
fn enumerate<S, F>(k: usize, free: usize, total: u64, init: impl Fn() -> S + Sync, visit: F) -> Vec<S>
where
    S: Send,
    F: Fn(&mut S, u64, &[usize]) + Sync,
{
    let chunks = total.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * CHUNK;
            let end = (start + CHUNK).min(total);
            let mut state = init();
            let mut digits = vec![0usize; free];
            decode(start, k, &mut digits);
            for idx in start..end {
                visit(&mut state, idx, &digits);
                increment(&mut digits, k);
            }
            state
        })
        .collect()
}

/// `ln KT_k(A)`: log-sum-exp of [`log_complete_kt_ml`] over all `k^n`
/// labelings.
pub fn log_kt_ml_exact(g: &GraphCollection, k: usize, budget: u64) -> Result<LogEvidence> {
    if k == 0 {
        return Err(Error::InvalidParameters("k must be at least 1".into()));
    }
    let n = g.n();
    let total = check_budget(k, n, budget)?;
    let e = EdgeLists::new(g);
    let lg = HalfLnGamma::for_problem(n, g.num_layers(), k);
    let layers = g.num_layers();
    let parts = enumerate(
        k,
        n,
        total,
        || (LogSumExp::new(), Tally::new(k, layers)),
        |(acc, tally), _, digits| {
            tally.fill_ml(digits, &e);
            acc.push(tally.kt_ml(&lg));
        },
    );
    let mut acc = LogSumExp::new();
    for (part, _) in &parts {
        acc.merge(part);
    }
    Ok(LogEvidence {
        value: acc.value(),
        k,
        engine: Engine::Exact,
    })
}

fn check_z1(g: &GraphCollection, z1: &LabelAssignment, k: usize) -> Result<()> {
    if z1.n() != g.n() {
        return Err(Error::DimensionMismatch {
            what: "initial labeling length vs node count",
            expected: g.n(),
            found: z1.n(),
        });
    }
    if let Some((node, &l)) = z1.labels().iter().enumerate().find(|(_, &l)| l >= k) {
        return Err(Error::LabelOutOfRange {
            node,
            label: l + 1,
            k,
        });
    }
    Ok(())
}

/// `ln KT_k(A | z^1)`: log-sum-exp of [`log_complete_kt_dyn`] over all
/// continuations `z^{2:T}` of the given first configuration.
pub fn log_kt_dyn_exact(
    g: &GraphCollection,
    z1: &LabelAssignment,
    k: usize,
    budget: u64,
) -> Result<LogEvidence> {
    check_z1(g, z1, k)?;
    let (n, layers) = (g.n(), g.num_layers());
    let free = n * (layers - 1);
    let total = check_budget(k, free, budget)?;
    let e = EdgeLists::new(g);
    let lg = HalfLnGamma::for_problem(n, layers, k);
    let parts = enumerate(
        k,
        free,
        total,
        || (LogSumExp::new(), Tally::new(k, layers)),
        |(acc, tally), _, digits| {
            let mut rows: Vec<&[usize]> = vec![z1.labels()];
            rows.extend(digits.chunks(n));
            tally.fill_path(&rows, &e);
            acc.push(tally.kt_dyn(&lg));
        },
    );
    let mut acc = LogSumExp::new();
    for (part, _) in &parts {
        acc.merge(part);
    }
    Ok(LogEvidence {
        value: acc.value(),
        k,
        engine: Engine::Exact,
    })
}

/// A profile-likelihood labeling and its complete-data log-likelihood at
/// the MLEs.
#[derive(Clone, Debug, PartialEq)]
pub struct Profile<L> {
    pub labels: L,
    pub log_likelihood: f64,
}

#[derive(Clone, Copy)]
struct Best {
    value: f64,
    index: u64,
}

fn improves(candidate: f64, best: f64) -> bool {
    best == f64::NEG_INFINITY || candidate > best + TIE_TOL * best.abs().max(1.0)
}

fn best_of(parts: impl IntoIterator<Item = Best>) -> Best {
    let mut best = Best {
        value: f64::NEG_INFINITY,
        index: 0,
    };
    for b in parts {
        if improves(b.value, best.value) {
            best = b;
        }
    }
    best
}

/// Labeling maximizing the complete-data likelihood over `[k]^n`; ties go
/// to the lexicographically smallest labeling.
pub fn profile_labels_ml(
    g: &GraphCollection,
    k: usize,
    budget: u64,
) -> Result<Profile<LabelAssignment>> {
    if k == 0 {
        return Err(Error::InvalidParameters("k must be at least 1".into()));
    }
    let n = g.n();
    let total = check_budget(k, n, budget)?;
    let e = EdgeLists::new(g);
    let layers = g.num_layers();
    let parts = enumerate(
        k,
        n,
        total,
        || {
            (
                Best {
                    value: f64::NEG_INFINITY,
                    index: 0,
                },
                Tally::new(k, layers),
            )
        },
        |(best, tally), idx, digits| {
            tally.fill_ml(digits, &e);
            let v = tally.sup_ml(n);
            if improves(v, best.value) {
                *best = Best { value: v, index: idx };
            }
        },
    );
    let best = best_of(parts.into_iter().map(|(b, _)| b));
    let mut digits = vec![0; n];
    decode(best.index, k, &mut digits);
    Ok(Profile {
        labels: LabelAssignment::new(k, digits)?,
        log_likelihood: best.value,
    })
}

/// Continuation `z^{2:T}` maximizing the conditional complete-data
/// likelihood given `z1`; ties go to the lexicographically smallest.
pub fn profile_labels_dyn(
    g: &GraphCollection,
    z1: &LabelAssignment,
    k: usize,
    budget: u64,
) -> Result<Profile<LabelPath>> {
    check_z1(g, z1, k)?;
    let (n, layers) = (g.n(), g.num_layers());
    let free = n * (layers - 1);
    let total = check_budget(k, free, budget)?;
    let e = EdgeLists::new(g);
    let parts = enumerate(
        k,
        free,
        total,
        || {
            (
                Best {
                    value: f64::NEG_INFINITY,
                    index: 0,
                },
                Tally::new(k, layers),
            )
        },
        |(best, tally), idx, digits| {
            let mut rows: Vec<&[usize]> = vec![z1.labels()];
            rows.extend(digits.chunks(n));
            tally.fill_path(&rows, &e);
            let v = tally.sup_dyn();
            if improves(v, best.value) {
                *best = Best { value: v, index: idx };
            }
        },
    );
    let best = best_of(parts.into_iter().map(|(b, _)| b));
    let mut digits = vec![0; free];
    decode(best.index, k, &mut digits);
    let mut rows = vec![z1.labels().to_vec()];
    rows.extend(digits.chunks(n).map(<[usize]>::to_vec));
    Ok(Profile {
        labels: LabelPath::new(k, rows)?,
        log_likelihood: best.value,
    })
}

/// The two sides of the uniform likelihood/KT sandwich for one labeling:
/// `gap = ln sup P − ln KT` and the order-dependent upper bound on it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Prop1Gap {
    pub gap: f64,
    pub bound: f64,
}

impl Prop1Gap {
    pub fn holds(&self) -> bool {
        self.gap >= 0.0 && self.gap <= self.bound
    }
}

/// `T k (k + 1) + 1`.
pub fn prop1_constant_ml(k: usize, layers: usize) -> f64 {
    (layers * k * (k + 1) + 1) as f64
}

/// `k / (3T) [k (k - 1) + 2] + T k (k - 1) + 2k`.
pub fn prop1_constant_dyn(k: usize, layers: usize) -> f64 {
    let (kf, tf) = (k as f64, layers as f64);
    kf / (3.0 * tf) * (kf * (kf - 1.0) + 2.0) + tf * kf * (kf - 1.0) + 2.0 * kf
}

pub fn prop1_bound_ml(k: usize, n: usize, layers: usize) -> f64 {
    let (kf, tf) = (k as f64, layers as f64);
    (tf * kf * (kf + 1.0) + kf - 1.0) / 2.0 * (n as f64).ln() + prop1_constant_ml(k, layers)
}

pub fn prop1_bound_dyn(k: usize, n: usize, layers: usize) -> f64 {
    let (kf, nf, tf) = (k as f64, n as f64, layers as f64);
    kf / 2.0 * (nf * nf * tf).ln()
        + kf * (kf - 1.0) / 2.0 * (nf * tf).ln()
        + tf * kf * (kf - 1.0) / 2.0 * nf.ln()
        + prop1_constant_dyn(k, layers)
}

pub fn prop1_gap_ml(z: &LabelAssignment, g: &GraphCollection) -> Result<Prop1Gap> {
    let gap = log_sup_complete_ml(z, g)? - log_complete_kt_ml(z, g)?;
    Ok(Prop1Gap {
        gap,
        bound: prop1_bound_ml(z.k(), g.n(), g.num_layers()),
    })
}

pub fn prop1_gap_dyn(z: &LabelPath, g: &GraphCollection) -> Result<Prop1Gap> {
    let gap = log_sup_complete_dyn(z, g)? - log_complete_kt_dyn(z, g)?;
    Ok(Prop1Gap {
        gap,
        bound: prop1_bound_dyn(z.k(), g.n(), g.num_layers()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{block_counts, Adjacency};
    use crate::special::{ln_gamma, log_sum_exp};

    /// All graphs on `n` nodes with `layers` layers.
    pub(crate) fn all_graphs(n: usize, layers: usize) -> Vec<GraphCollection> {
        let pairs: Vec<(usize, usize)> =
            (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
        let bits = pairs.len() * layers;
        (0..1u64 << bits)
            .map(|code| {
                let layers = (0..layers)
                    .map(|t| {
                        let edges = pairs
                            .iter()
                            .enumerate()
                            .filter(|(p, _)| code >> (t * pairs.len() + p) & 1 == 1)
                            .map(|(_, &e)| e);
                        Adjacency::from_edges(n, edges).unwrap()
                    })
                    .collect();
                GraphCollection::new(layers).unwrap()
            })
            .collect()
    }

    /// Direct evaluation from `BlockCounts` with `ln_gamma`, independent of
    /// the half-integer table and the tally.
    fn kt_ml_oracle(z: &LabelAssignment, g: &GraphCollection) -> f64 {
        let c = block_counts(z, g).unwrap();
        let k = z.k();
        let n = z.n() as f64;
        let kf = k as f64;
        let mut v = ln_gamma(kf / 2.0) - ln_gamma(n + kf / 2.0);
        for a in 0..k {
            v += ln_gamma(c.node_count(a) as f64 + 0.5) - ln_gamma(0.5);
        }
        for t in 0..g.num_layers() {
            for a in 0..k {
                for b in a..k {
                    let (o, m) = (c.edges(t, a, b) as f64, c.pair_count(a, b) as f64);
                    v += ln_gamma(o + 0.5) + ln_gamma(m - o + 0.5) - ln_gamma(m + 1.0)
                        - (ln_gamma(0.5) * 2.0);
                }
            }
        }
        v
    }

    #[test]
    fn two_nodes_single_edge_mass_is_half() {
        for g in all_graphs(2, 1) {
            let z = LabelAssignment::constant(1, 2);
            let v = log_complete_kt_ml(&z, &g).unwrap();
            assert!((v - 0.5f64.ln()).abs() < 1e-14);
        }
    }

    #[test]
    fn single_node_is_dirichlet_term_only() {
        let g = GraphCollection::empty(1, 3).unwrap();
        for k in 1..=4 {
            let z = LabelAssignment::new(k, vec![0]).unwrap();
            // One draw from Dirichlet(1/2,..)-multinomial: probability 1/k.
            let v = log_complete_kt_ml(&z, &g).unwrap();
            assert!((v + (k as f64).ln()).abs() < 1e-13, "k = {k}");
        }
    }

    #[test]
    fn complete_mass_matches_block_count_oracle() {
        let graphs = all_graphs(4, 1);
        for (gi, g) in graphs.iter().enumerate().step_by(5) {
            for code in 0..81u64 {
                let mut d = vec![0; 4];
                decode(code, 3, &mut d);
                let z = LabelAssignment::new(3, d).unwrap();
                let a = log_complete_kt_ml(&z, g).unwrap();
                let b = kt_ml_oracle(&z, g);
                assert!((a - b).abs() < 1e-12, "graph {gi} labels {code}");
            }
        }
    }

    #[test]
    fn fixed_labels_sum_to_prior_mass() {
        // Summing the joint mass of (z, A) over every graph leaves the
        // Dirichlet(1/2)-multinomial mass of z.
        let z = LabelAssignment::from_one_based(2, &[1, 2, 2]).unwrap();
        let total = log_sum_exp(all_graphs(3, 2).iter().map(|g| log_complete_kt_ml(&z, g).unwrap()));
        let prior = ln_gamma(1.0) - ln_gamma(4.0) + ln_gamma(1.5) + ln_gamma(2.5) - 2.0 * ln_gamma(0.5);
        assert!((total - prior).abs() < 1e-12, "{total} vs {prior}");
    }

    #[test]
    fn k_one_collapses_to_single_configuration() {
        for g in all_graphs(3, 2).iter().step_by(9) {
            let e = log_kt_ml_exact(g, 1, DEFAULT_BUDGET).unwrap();
            let c = log_complete_kt_ml(&LabelAssignment::constant(1, 3), g).unwrap();
            assert_eq!(e.value, c);
            assert_eq!(e.engine, Engine::Exact);
        }
    }

    #[test]
    fn normalizes_over_all_graphs() {
        for layers in 1..=2 {
            for k in 1..=3 {
                let total = log_sum_exp(
                    all_graphs(3, layers)
                        .iter()
                        .map(|g| log_kt_ml_exact(g, k, DEFAULT_BUDGET).unwrap().value),
                );
                assert!(total.abs() < 1e-10, "T = {layers}, k = {k}: {total}");
            }
        }
    }

    #[test]
    fn exact_evidence_is_permutation_invariant() {
        let g = GraphCollection::new(vec![
            Adjacency::from_edges(5, [(0, 1), (1, 2), (3, 4)]).unwrap(),
            Adjacency::from_edges(5, [(0, 4), (1, 3)]).unwrap(),
        ])
        .unwrap();
        let perm = [3, 0, 4, 1, 2];
        for k in 1..=3 {
            let a = log_kt_ml_exact(&g, k, DEFAULT_BUDGET).unwrap().value;
            let b = log_kt_ml_exact(&g.permuted(&perm), k, DEFAULT_BUDGET).unwrap().value;
            assert!((a - b).abs() < 1e-11);
            assert!(a <= 0.0);
        }
    }

    #[test]
    fn budget_is_enforced() {
        let g = GraphCollection::empty(10, 1).unwrap();
        let err = log_kt_ml_exact(&g, 5, 1000).unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded { budget: 1000, .. }));
        assert!(err.to_string().contains("variational"));
        let z1 = LabelAssignment::constant(2, 10);
        let g2 = GraphCollection::empty(10, 3).unwrap();
        assert!(log_kt_dyn_exact(&g2, &z1, 2, 1000).is_err());
    }

    #[test]
    fn dynamic_single_step_has_no_transition_term() {
        let g = GraphCollection::new(vec![Adjacency::from_edges(4, [(0, 1), (2, 3), (0, 2)]).unwrap()])
            .unwrap();
        let z = LabelAssignment::from_one_based(2, &[1, 1, 2, 2]).unwrap();
        let path = LabelPath::new(2, vec![z.labels().to_vec()]).unwrap();
        let dynv = log_complete_kt_dyn(&path, &g).unwrap();
        let c = block_counts(&z, &g).unwrap();
        let mut expect = 0.0;
        for a in 0..2 {
            for b in a..2 {
                expect += crate::special::ln_beta_ratio(c.edges(0, a, b) as f64, c.pair_count(a, b) as f64);
            }
        }
        assert!((dynv - expect).abs() < 1e-12);
        let ev = log_kt_dyn_exact(&g, &z, 2, DEFAULT_BUDGET).unwrap();
        assert!((ev.value - dynv).abs() < 1e-12);
    }

    #[test]
    fn dynamic_one_node_transition_mass() {
        // Γ(1/2 + 1) Γ(1) / [Γ(1 + 1) Γ(1/2)] = 1/2 for either destination.
        let g = GraphCollection::empty(1, 2).unwrap();
        for dest in 0..2 {
            let p = LabelPath::new(2, vec![vec![0], vec![dest]]).unwrap();
            let v = log_complete_kt_dyn(&p, &g).unwrap();
            assert!((v - 0.5f64.ln()).abs() < 1e-14);
        }
    }

    #[test]
    fn dynamic_evidence_is_permutation_invariant() {
        let g = GraphCollection::new(vec![
            Adjacency::from_edges(4, [(0, 1), (2, 3)]).unwrap(),
            Adjacency::from_edges(4, [(0, 1), (1, 2)]).unwrap(),
            Adjacency::from_edges(4, [(1, 3)]).unwrap(),
        ])
        .unwrap();
        let z1 = LabelAssignment::from_one_based(2, &[1, 1, 2, 2]).unwrap();
        let perm = [2, 0, 3, 1];
        let a = log_kt_dyn_exact(&g, &z1, 2, DEFAULT_BUDGET).unwrap().value;
        let b = log_kt_dyn_exact(&g.permuted(&perm), &z1.permuted(&perm), 2, DEFAULT_BUDGET)
            .unwrap()
            .value;
        assert!((a - b).abs() < 1e-11);
    }

    #[test]
    fn dynamic_normalizes_over_all_graphs() {
        for z1 in [[0, 0], [0, 1], [1, 0]] {
            let z1 = LabelAssignment::new(2, z1.to_vec()).unwrap();
            let total = log_sum_exp(
                all_graphs(2, 2)
                    .iter()
                    .map(|g| log_kt_dyn_exact(g, &z1, 2, DEFAULT_BUDGET).unwrap().value),
            );
            assert!(total.abs() < 1e-10);
        }
    }

    #[test]
    fn z1_validation() {
        let g = GraphCollection::empty(3, 2).unwrap();
        let z1 = LabelAssignment::new(3, vec![0, 2, 1]).unwrap();
        assert!(matches!(log_kt_dyn_exact(&g, &z1, 2, DEFAULT_BUDGET), Err(Error::LabelOutOfRange { .. })));
        let short = LabelAssignment::new(2, vec![0, 1]).unwrap();
        assert!(log_kt_dyn_exact(&g, &short, 2, DEFAULT_BUDGET).is_err());
    }

    fn two_triangles() -> GraphCollection {
        let a = Adjacency::from_edges(6, [(0, 1), (0, 2), (1, 2), (3, 4), (3, 5), (4, 5)]).unwrap();
        GraphCollection::new(vec![a]).unwrap()
    }

    #[test]
    fn profile_recovers_cliques() {
        let g = two_triangles();
        let p = profile_labels_ml(&g, 2, DEFAULT_BUDGET).unwrap();
        assert_eq!(p.labels.labels(), &[0, 0, 0, 1, 1, 1]);
        let p1 = profile_labels_ml(&g, 1, DEFAULT_BUDGET).unwrap();
        assert_eq!(p1.labels.labels(), &[0; 6]);
        // Brute-force check of the argmax value.
        let mut best = f64::NEG_INFINITY;
        for code in 0..64u64 {
            let mut d = vec![0; 6];
            decode(code, 2, &mut d);
            let z = LabelAssignment::new(2, d).unwrap();
            best = best.max(log_sup_complete_ml(&z, &g).unwrap());
        }
        assert!((best - p.log_likelihood).abs() < 1e-12);
    }

    #[test]
    fn profile_dominates_truth_and_grows_with_k() {
        let g = GraphCollection::new(vec![
            Adjacency::from_edges(5, [(0, 1), (1, 2), (0, 2), (3, 4), (2, 3)]).unwrap(),
            Adjacency::from_edges(5, [(0, 1), (3, 4)]).unwrap(),
        ])
        .unwrap();
        let truth = LabelAssignment::from_one_based(2, &[1, 1, 1, 2, 2]).unwrap();
        let p2 = profile_labels_ml(&g, 2, DEFAULT_BUDGET).unwrap();
        assert!(p2.log_likelihood >= log_sup_complete_ml(&truth, &g).unwrap());
        let mut last = f64::NEG_INFINITY;
        for k in 1..=5 {
            let p = profile_labels_ml(&g, k, DEFAULT_BUDGET).unwrap();
            assert!(p.log_likelihood >= last - 1e-12);
            last = p.log_likelihood;
        }
    }

    #[test]
    fn dynamic_profile_keeps_first_row() {
        let g = GraphCollection::new(vec![
            Adjacency::from_edges(4, [(0, 1), (2, 3)]).unwrap(),
            Adjacency::from_edges(4, [(0, 1), (2, 3)]).unwrap(),
        ])
        .unwrap();
        let z1 = LabelAssignment::from_one_based(2, &[1, 1, 2, 2]).unwrap();
        let p = profile_labels_dyn(&g, &z1, 2, DEFAULT_BUDGET).unwrap();
        assert_eq!(p.labels.layer(0), z1.labels());
        assert_eq!(p.labels.layer(1), z1.labels());
    }

    #[test]
    fn prop1_constants() {
        assert_eq!(prop1_constant_ml(2, 1), 7.0);
        assert_eq!(prop1_constant_ml(1, 1), 3.0);
        // k/(3T)[k(k-1)+2] + T k(k-1) + 2k at k = 2, T = 1: 8/3 + 2 + 4.
        assert!((prop1_constant_dyn(2, 1) - (8.0 / 3.0 + 6.0)).abs() < 1e-15);
    }

    #[test]
    fn prop1_sandwich_exhaustive_small() {
        let graphs = all_graphs(4, 2);
        for g in graphs.iter().step_by(17) {
            for code in 0..16u64 {
                let mut d = vec![0; 4];
                decode(code, 2, &mut d);
                let z = LabelAssignment::new(2, d).unwrap();
                let gap = prop1_gap_ml(&z, g).unwrap();
                assert!(gap.holds(), "{gap:?}");
            }
        }
    }
}
