use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A node-to-community map shared by all layers. Labels are 0-based in
/// memory; [`LabelAssignment::from_one_based`] and
/// [`LabelAssignment::to_one_based`] convert at I/O boundaries.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LabelAssignment {
    k: usize,
    labels: Vec<usize>,
}

fn check_range(k: usize, labels: &[usize]) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidParameters("community count must be at least 1".into()));
    }
    if let Some((node, &label)) = labels.iter().enumerate().find(|(_, &l)| l >= k) {
        return Err(Error::LabelOutOfRange {
            node,
            label: label + 1,
            k,
        });
    }
    Ok(())
}

impl LabelAssignment {
    pub fn new(k: usize, labels: Vec<usize>) -> Result<Self> {
        check_range(k, &labels)?;
        Ok(Self { k, labels })
    }

    pub fn from_one_based(k: usize, labels: &[usize]) -> Result<Self> {
        if let Some((node, _)) = labels.iter().enumerate().find(|(_, &l)| l == 0) {
            return Err(Error::LabelOutOfRange { node, label: 0, k });
        }
        Self::new(k, labels.iter().map(|&l| l - 1).collect())
    }

    /// Every node in community 0.
    pub fn constant(k: usize, n: usize) -> Self {
        Self {
            k: k.max(1),
            labels: vec![0; n],
        }
    }

    pub fn to_one_based(&self) -> Vec<usize> {
        self.labels.iter().map(|&l| l + 1).collect()
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.k];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Number of communities with at least one member.
    pub fn occupied(&self) -> usize {
        self.class_counts().iter().filter(|&&c| c > 0).count()
    }

    /// Node `i` moves to position `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let mut labels = vec![0; self.labels.len()];
        for (i, &l) in self.labels.iter().enumerate() {
            labels[perm[i]] = l;
        }
        Self { k: self.k, labels }
    }

    /// Re-reads the labels in a model with `k` communities, merging every
    /// label `>= k` into the last community.
    pub fn coarsened(&self, k: usize) -> Self {
        let k = k.max(1);
        Self {
            k,
            labels: self.labels.iter().map(|&l| l.min(k - 1)).collect(),
        }
    }
}

/// A label per node and per layer (time step).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LabelPath {
    k: usize,
    n: usize,
    labels: Vec<Vec<usize>>,
}

impl LabelPath {
    pub fn new(k: usize, labels: Vec<Vec<usize>>) -> Result<Self> {
        let n = labels
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::InvalidParameters("a label path needs at least one step".into()))?;
        for row in &labels {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    what: "label path row length",
                    expected: n,
                    found: row.len(),
                });
            }
            check_range(k, row)?;
        }
        Ok(Self { k, n, labels })
    }

    pub fn from_one_based(k: usize, labels: &[Vec<usize>]) -> Result<Self> {
        let mut rows = Vec::with_capacity(labels.len());
        for row in labels {
            if let Some((node, _)) = row.iter().enumerate().find(|(_, &l)| l == 0) {
                return Err(Error::LabelOutOfRange { node, label: 0, k });
            }
            rows.push(row.iter().map(|&l| l - 1).collect());
        }
        Self::new(k, rows)
    }

    pub fn to_one_based(&self) -> Vec<Vec<usize>> {
        self.labels
            .iter()
            .map(|row| row.iter().map(|&l| l + 1).collect())
            .collect()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn num_layers(&self) -> usize {
        self.labels.len()
    }

    pub fn layer(&self, t: usize) -> &[usize] {
        &self.labels[t]
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.labels
    }

    /// The conditioning configuration at the first time step.
    pub fn first(&self) -> LabelAssignment {
        LabelAssignment {
            k: self.k,
            labels: self.labels[0].clone(),
        }
    }
}

/// Anything that assigns labels per layer; a [`LabelAssignment`] uses the
/// same labels at every layer.
pub trait Labeling {
    fn n(&self) -> usize;
    fn k(&self) -> usize;
    fn labels_at(&self, t: usize) -> &[usize];
    /// `Some(T)` for a time-indexed path, `None` for a layer-invariant labeling.
    fn path_len(&self) -> Option<usize>;
}

impl Labeling for LabelAssignment {
    fn n(&self) -> usize {
        self.labels.len()
    }
    fn k(&self) -> usize {
        self.k
    }
    fn labels_at(&self, _t: usize) -> &[usize] {
        &self.labels
    }
    fn path_len(&self) -> Option<usize> {
        None
    }
}

impl Labeling for LabelPath {
    fn n(&self) -> usize {
        self.n
    }
    fn k(&self) -> usize {
        self.k
    }
    fn labels_at(&self, t: usize) -> &[usize] {
        &self.labels[t]
    }
    fn path_len(&self) -> Option<usize> {
        Some(self.labels.len())
    }
}

/// 1-based on-disk form of a [`LabelAssignment`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LabelFile {
    pub k: usize,
    pub labels: Vec<usize>,
}

impl From<&LabelAssignment> for LabelFile {
    fn from(z: &LabelAssignment) -> Self {
        Self {
            k: z.k(),
            labels: z.to_one_based(),
        }
    }
}

impl TryFrom<LabelFile> for LabelAssignment {
    type Error = Error;
    fn try_from(f: LabelFile) -> Result<Self> {
        LabelAssignment::from_one_based(f.k, &f.labels)
    }
}
