use crate::error::{Error, Result};

/// A symmetric binary adjacency matrix with an empty diagonal, stored as
/// packed 64-bit rows.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Adjacency {
    n: usize,
    words: usize,
    bits: Vec<u64>,
}

impl Adjacency {
    pub fn empty(n: usize) -> Self {
        let words = n.div_ceil(64);
        Self {
            n,
            words,
            bits: vec![0; n * words],
        }
    }

    pub fn complete(n: usize) -> Self {
        Self::from_fn(n, |_, _| true)
    }

    /// Builds a matrix by evaluating `edge(i, j)` once for every pair `i < j`.
    pub fn from_fn(n: usize, mut edge: impl FnMut(usize, usize) -> bool) -> Self {
        let mut adj = Self::empty(n);
        for i in 0..n {
            for j in (i + 1)..n {
                if edge(i, j) {
                    adj.insert(i, j);
                }
            }
        }
        adj
    }

    /// Builds a matrix from an undirected edge list (0-based endpoints).
    /// Duplicate edges are merged; self-loops are rejected.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut adj = Self::empty(n);
        for (i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge ({i}, {j}) has an endpoint outside 0..{n}"
                )));
            }
            if i == j {
                return Err(Error::InvalidGraph(format!("self-loop at node {i}")));
            }
            adj.insert(i, j);
        }
        Ok(adj)
    }

    /// Parses a dense 0/1 matrix, checking symmetry and the empty diagonal.
    pub fn from_dense(rows: &[Vec<u8>]) -> Result<Self> {
        let n = rows.len();
        let mut adj = Self::empty(n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    what: "adjacency row length",
                    expected: n,
                    found: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                if v > 1 {
                    return Err(Error::InvalidGraph(format!(
                        "entry ({i}, {j}) = {v} is not binary"
                    )));
                }
                if i == j && v != 0 {
                    return Err(Error::InvalidGraph(format!("self-loop at node {i}")));
                }
                if rows[j][i] != v {
                    return Err(Error::InvalidGraph(format!(
                        "asymmetric entries at ({i}, {j})"
                    )));
                }
                if j > i && v == 1 {
                    adj.insert(i, j);
                }
            }
        }
        Ok(adj)
    }

    fn insert(&mut self, i: usize, j: usize) {
        self.bits[i * self.words + j / 64] |= 1 << (j % 64);
        self.bits[j * self.words + i / 64] |= 1 << (i % 64);
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.words + j / 64] >> (j % 64) & 1 == 1
    }

    fn row(&self, i: usize) -> &[u64] {
        &self.bits[i * self.words..(i + 1) * self.words]
    }

    /// Neighbours of `i` in increasing order.
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.row(i).iter().enumerate().flat_map(|(w, &word)| {
            let mut rest = word;
            std::iter::from_fn(move || {
                if rest == 0 {
                    None
                } else {
                    let b = rest.trailing_zeros() as usize;
                    rest &= rest - 1;
                    Some(w * 64 + b)
                }
            })
        })
    }

    pub fn degree(&self, i: usize) -> usize {
        self.row(i).iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.n).map(|i| self.degree(i)).collect()
    }

    /// Number of undirected edges.
    pub fn edge_count(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum::<usize>() / 2
    }

    /// Undirected edges `(i, j)` with `i < j`, in row-major order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |i| self.neighbors(i).filter(move |&j| j > i).map(move |j| (i, j)))
    }

    pub fn to_dense(&self) -> Vec<Vec<u8>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.has_edge(i, j) as u8).collect())
            .collect()
    }

    /// Relabels nodes so that node `i` becomes node `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.n, "permutation length");
        let mut out = Self::empty(self.n);
        for (i, j) in self.edges() {
            out.insert(perm[i], perm[j]);
        }
        out
    }

    /// Adjacency lists, one per node.
    pub fn adjacency_lists(&self) -> Vec<Vec<u32>> {
        (0..self.n)
            .map(|i| self.neighbors(i).map(|j| j as u32).collect())
            .collect()
    }
}

/// `T` graphs on a common node set: the observed adjacency array.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphCollection {
    n: usize,
    layers: Vec<Adjacency>,
}

impl GraphCollection {
    pub fn new(layers: Vec<Adjacency>) -> Result<Self> {
        let first = layers
            .first()
            .ok_or_else(|| Error::InvalidGraph("a collection needs at least one layer".into()))?;
        let n = first.n();
        if n == 0 {
            return Err(Error::InvalidGraph("graphs need at least one node".into()));
        }
        for layer in &layers {
            if layer.n() != n {
                return Err(Error::DimensionMismatch {
                    what: "layer node count",
                    expected: n,
                    found: layer.n(),
                });
            }
        }
        Ok(Self { n, layers })
    }

    pub fn empty(n: usize, layers: usize) -> Result<Self> {
        Self::new(vec![Adjacency::empty(n); layers])
    }

    pub fn from_dense(layers: &[Vec<Vec<u8>>]) -> Result<Self> {
        Self::new(
            layers
                .iter()
                .map(|l| Adjacency::from_dense(l))
                .collect::<Result<Vec<_>>>()?,
        )
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn layer(&self, t: usize) -> &Adjacency {
        &self.layers[t]
    }

    pub fn layers(&self) -> &[Adjacency] {
        &self.layers
    }

    pub fn total_edges(&self) -> usize {
        self.layers.iter().map(Adjacency::edge_count).sum()
    }

    /// Applies the same node relabeling to every layer.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self {
            n: self.n,
            layers: self.layers.iter().map(|l| l.permuted(perm)).collect(),
        }
    }

    /// The single-layer collection holding layer `t`.
    pub fn single_layer(&self, t: usize) -> Self {
        Self {
            n: self.n,
            layers: vec![self.layers[t].clone()],
        }
    }

    /// Layers `ts` in the given order.
    pub fn select_layers(&self, ts: &[usize]) -> Self {
        Self {
            n: self.n,
            layers: ts.iter().map(|&t| self.layers[t].clone()).collect(),
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<Vec<u8>>> {
        self.layers.iter().map(Adjacency::to_dense).collect()
    }
}
