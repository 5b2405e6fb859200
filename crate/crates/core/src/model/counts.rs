use super::graph::GraphCollection;
use super::labels::{LabelAssignment, Labeling};
use crate::error::{Error, Result};

/// Sufficient statistics of a labeled collection: node counts, pair counts,
/// edge counts per block and layer, and (for label paths) transition counts.
///
/// Edge counts are kept as full symmetric `k x k` tables so that
/// `edges(t, a, b) == edges(t, b, a)`; the meaningful half is `a <= b`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockCounts {
    k: usize,
    node_counts: Vec<Vec<u64>>,
    edge_counts: Vec<Vec<u64>>,
    transitions: Option<Vec<u64>>,
    total_edges: Vec<u64>,
}

#[inline]
pub(crate) fn pairs_between(na: u64, nb: u64, same: bool) -> u64 {
    if same {
        na * na.saturating_sub(1) / 2
    } else {
        na * nb
    }
}

/// Computes [`BlockCounts`] in one pass per layer.
pub fn block_counts<L: Labeling>(z: &L, g: &GraphCollection) -> Result<BlockCounts> {
    let n = g.n();
    if z.n() != n {
        return Err(Error::DimensionMismatch {
            what: "labeling length vs node count",
            expected: n,
            found: z.n(),
        });
    }
    let layers = g.num_layers();
    if let Some(len) = z.path_len() {
        if len != layers {
            return Err(Error::DimensionMismatch {
                what: "label path length vs layer count",
                expected: layers,
                found: len,
            });
        }
    }
    let k = z.k();
    for t in 0..layers {
        if let Some((node, &label)) = z.labels_at(t).iter().enumerate().find(|(_, &l)| l >= k) {
            return Err(Error::LabelOutOfRange {
                node,
                label: label + 1,
                k,
            });
        }
    }

    let mut node_counts = Vec::with_capacity(layers);
    let mut edge_counts = Vec::with_capacity(layers);
    let mut total_edges = Vec::with_capacity(layers);
    for t in 0..layers {
        let labels = z.labels_at(t);
        let mut nc = vec![0u64; k];
        for &l in labels {
            nc[l] += 1;
        }
        let mut ec = vec![0u64; k * k];
        let mut total = 0u64;
        for (i, j) in g.layer(t).edges() {
            let (a, b) = (labels[i], labels[j]);
            ec[a * k + b] += 1;
            if a != b {
                ec[b * k + a] += 1;
            }
            total += 1;
        }
        node_counts.push(nc);
        edge_counts.push(ec);
        total_edges.push(total);
    }

    let transitions = z.path_len().map(|len| {
        let mut c = vec![0u64; k * k];
        for t in 1..len {
            let (prev, next) = (z.labels_at(t - 1), z.labels_at(t));
            for i in 0..n {
                c[prev[i] * k + next[i]] += 1;
            }
        }
        c
    });

    Ok(BlockCounts {
        k,
        node_counts,
        edge_counts,
        transitions,
        total_edges,
    })
}

impl BlockCounts {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn num_layers(&self) -> usize {
        self.node_counts.len()
    }

    /// `n_a` at the first layer; for a layer-invariant labeling this is the
    /// only node count.
    pub fn node_count(&self, a: usize) -> u64 {
        self.node_counts[0][a]
    }

    pub fn node_count_at(&self, t: usize, a: usize) -> u64 {
        self.node_counts[t][a]
    }

    pub fn node_counts_at(&self, t: usize) -> &[u64] {
        &self.node_counts[t]
    }

    /// `n_ab`: `n_a n_b` off the diagonal and `n_a (n_a - 1) / 2` on it.
    pub fn pair_count(&self, a: usize, b: usize) -> u64 {
        self.pair_count_at(0, a, b)
    }

    pub fn pair_count_at(&self, t: usize, a: usize, b: usize) -> u64 {
        let nc = &self.node_counts[t];
        pairs_between(nc[a], nc[b], a == b)
    }

    /// `o_ab` in layer `t`.
    pub fn edges(&self, t: usize, a: usize, b: usize) -> u64 {
        self.edge_counts[t][a * self.k + b]
    }

    /// `õ_ab`: equal to `o_ab` off the diagonal and `2 o_aa` on it.
    pub fn edges_tilde(&self, t: usize, a: usize, b: usize) -> u64 {
        let o = self.edges(t, a, b);
        if a == b {
            2 * o
        } else {
            o
        }
    }

    pub fn total_edges(&self, t: usize) -> u64 {
        self.total_edges[t]
    }

    pub fn has_transitions(&self) -> bool {
        self.transitions.is_some()
    }

    /// `c_ab`; zero for a layer-invariant labeling.
    pub fn transition(&self, a: usize, b: usize) -> u64 {
        self.transitions.as_ref().map_or(0, |c| c[a * self.k + b])
    }

    pub fn transition_total(&self) -> u64 {
        self.transitions.as_ref().map_or(0, |c| c.iter().sum())
    }
}

/// Joint frequency table between two labelings of the same nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfusionMatrix {
    rows: usize,
    cols: usize,
    n: usize,
    q: Vec<f64>,
}

/// `Q[a][a'] = #{i : zbar_i = a, z_i = a'} / n`.
pub fn confusion_matrix(zbar: &LabelAssignment, z: &LabelAssignment) -> Result<ConfusionMatrix> {
    if zbar.n() != z.n() {
        return Err(Error::DimensionMismatch {
            what: "labeling lengths",
            expected: zbar.n(),
            found: z.n(),
        });
    }
    let (rows, cols, n) = (zbar.k(), z.k(), z.n());
    let mut counts = vec![0usize; rows * cols];
    for (&a, &b) in zbar.labels().iter().zip(z.labels()) {
        counts[a * cols + b] += 1;
    }
    let q = counts.iter().map(|&c| c as f64 / n as f64).collect();
    Ok(ConfusionMatrix { rows, cols, n, q })
}

impl ConfusionMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.q[a * self.cols + b]
    }

    pub fn total_mass(&self) -> f64 {
        self.q.iter().sum()
    }

    /// `n Qᵀ 1`, the class counts of the second labeling.
    pub fn column_counts(&self) -> Vec<f64> {
        (0..self.cols)
            .map(|b| self.n as f64 * (0..self.rows).map(|a| self.get(a, b)).sum::<f64>())
            .collect()
    }

    /// `Q 1`, the class frequencies of the first labeling.
    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows)
            .map(|a| (0..self.cols).map(|b| self.get(a, b)).sum())
            .collect()
    }

    /// True when every row and column holds exactly one non-zero entry.
    pub fn is_permutation_pattern(&self) -> bool {
        let nz = |a: usize, b: usize| self.get(a, b) > 0.0;
        self.rows == self.cols
            && (0..self.rows).all(|a| (0..self.cols).filter(|&b| nz(a, b)).count() == 1)
            && (0..self.cols).all(|b| (0..self.rows).filter(|&a| nz(a, b)).count() == 1)
    }

    /// `Q S Qᵀ` for a `cols x cols` matrix `s`.
    pub fn sandwich(&self, s: &super::params::SquareMatrix) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.rows]; self.rows];
        for (a, row) in out.iter_mut().enumerate() {
            for (b, cell) in row.iter_mut().enumerate() {
                let mut acc = 0.0;
                for x in 0..self.cols {
                    for y in 0..self.cols {
                        acc += self.get(a, x) * s.get(x, y) * self.get(b, y);
                    }
                }
                *cell = acc;
            }
        }
        out
    }
}
