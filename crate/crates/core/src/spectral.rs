//! Spectral clustering of the aggregated adjacency and the Bethe–Hessian
//! order-selection baseline.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Adjacency, GraphCollection, LabelAssignment};
use crate::rng::{stream, STREAM_FIT};

/// Eigenvalues within this distance of zero count as non-negative.
pub const ZERO_EIGENVALUE_TOL: f64 = 1e-10;

const EIGEN_MAX_ITERS: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpectralConfig {
    pub kmeans_restarts: usize,
    pub kmeans_iters: usize,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        Self {
            kmeans_restarts: 10,
            kmeans_iters: 100,
        }
    }
}

fn eigen(m: DMatrix<f64>) -> Result<SymmetricEigen<f64, nalgebra::Dyn>> {
    SymmetricEigen::try_new(m, f64::EPSILON, EIGEN_MAX_ITERS)
        .ok_or_else(|| Error::Eigen(format!("no convergence within {EIGEN_MAX_ITERS} iterations")))
}

fn aggregate(g: &GraphCollection) -> DMatrix<f64> {
    let n = g.n();
    let mut m = DMatrix::zeros(n, n);
    for layer in g.layers() {
        for (i, j) in layer.edges() {
            m[(i, j)] += 1.0;
            m[(j, i)] += 1.0;
        }
    }
    m
}

/// Clusters nodes by k-means on the leading-`k` eigenvectors (by
/// eigenvalue magnitude) of `Σ_t A^t`. Labels are numbered in order of
/// first appearance.
pub fn spectral_cluster(
    g: &GraphCollection,
    k: usize,
    cfg: &SpectralConfig,
    seed: u64,
) -> Result<LabelAssignment> {
    let n = g.n();
    if k == 0 || k > n {
        return Err(Error::InvalidParameters(format!("need 1 <= k <= n = {n}, got k = {k}")));
    }
    if k == 1 {
        return Ok(LabelAssignment::constant(1, n));
    }
    let eig = eigen(aggregate(g))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .abs()
            .total_cmp(&eig.eigenvalues[a].abs())
            .then(a.cmp(&b))
    });
    let mut points = vec![0.0; n * k];
    for (c, &col) in order.iter().take(k).enumerate() {
        for i in 0..n {
            points[i * k + c] = eig.eigenvectors[(i, col)];
        }
    }
    let mut rng = stream(seed, STREAM_FIT);
    let labels = kmeans(&points, k, k, cfg, &mut rng);
    LabelAssignment::new(k, canonical(labels, k))
}

fn canonical(labels: Vec<usize>, k: usize) -> Vec<usize> {
    let mut map = vec![usize::MAX; k];
    let mut next = 0;
    labels
        .into_iter()
        .map(|l| {
            if map[l] == usize::MAX {
                map[l] = next;
                next += 1;
            }
            map[l]
        })
        .collect()
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Lloyd iterations from k-means++ seeds; best inertia over restarts.
/// `points` is row-major with `dim` columns.
pub fn kmeans(
    points: &[f64],
    dim: usize,
    k: usize,
    cfg: &SpectralConfig,
    rng: &mut ChaCha8Rng,
) -> Vec<usize> {
    let n = points.len() / dim;
    let row = |i: usize| &points[i * dim..(i + 1) * dim];
    let mut best: Option<(f64, Vec<usize>)> = None;
    for _ in 0..cfg.kmeans_restarts.max(1) {
        // k-means++ seeding.
        let mut centers = Vec::with_capacity(k * dim);
        centers.extend_from_slice(row(rng.gen_range(0..n)));
        let mut d2: Vec<f64> = (0..n).map(|i| dist2(row(i), &centers[..dim])).collect();
        for _ in 1..k {
            let total: f64 = d2.iter().sum();
            let pick = if total > 0.0 {
                let u = rng.gen::<f64>() * total;
                let mut acc = 0.0;
                let mut pick = n - 1;
                for (i, &w) in d2.iter().enumerate() {
                    acc += w;
                    if u < acc {
                        pick = i;
                        break;
                    }
                }
                pick
            } else {
                rng.gen_range(0..n)
            };
            let c = row(pick).to_vec();
            for (i, d) in d2.iter_mut().enumerate() {
                *d = d.min(dist2(row(i), &c));
            }
            centers.extend_from_slice(&c);
        }

        let mut labels = vec![0usize; n];
        for it in 0..cfg.kmeans_iters.max(1) {
            let mut changed = false;
            for (i, l) in labels.iter_mut().enumerate() {
                let (mut bl, mut bd) = (0, f64::INFINITY);
                for c in 0..k {
                    let d = dist2(row(i), &centers[c * dim..(c + 1) * dim]);
                    if d < bd {
                        bd = d;
                        bl = c;
                    }
                }
                if *l != bl {
                    *l = bl;
                    changed = true;
                }
            }
            if !changed && it > 0 {
                break;
            }
            let mut sums = vec![0.0; k * dim];
            let mut counts = vec![0usize; k];
            for (i, &l) in labels.iter().enumerate() {
                counts[l] += 1;
                for (s, x) in sums[l * dim..(l + 1) * dim].iter_mut().zip(row(i)) {
                    *s += x;
                }
            }
            for c in 0..k {
                // Empty clusters keep their previous center.
                if counts[c] > 0 {
                    for d in 0..dim {
                        centers[c * dim + d] = sums[c * dim + d] / counts[c] as f64;
                    }
                }
            }
        }
        let inertia: f64 = labels
            .iter()
            .enumerate()
            .map(|(i, &l)| dist2(row(i), &centers[l * dim..(l + 1) * dim]))
            .sum();
        if best.as_ref().is_none_or(|(b, _)| inertia < *b) {
            best = Some((inertia, labels));
        }
    }
    best.map(|(_, l)| l).unwrap_or_default()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BhmcSelection {
    pub k: usize,
    /// Number of negative eigenvalues before capping.
    pub negative_eigenvalues: usize,
    pub radius: f64,
    /// Set when the graph has no edges; `k` is then 0.
    pub empty_graph: bool,
}

/// Moment-corrected radius `sqrt(Σ d_i² / Σ d_i − 1)`, clamped at 0.
pub fn bethe_hessian_radius(a: &Adjacency) -> f64 {
    let d = a.degrees();
    let s1: f64 = d.iter().map(|&x| x as f64).sum();
    let s2: f64 = d.iter().map(|&x| (x * x) as f64).sum();
    if s1 == 0.0 {
        return 0.0;
    }
    (s2 / s1 - 1.0).max(0.0).sqrt()
}

/// `H(r) = (r² − 1) I − r A + D`.
pub fn bethe_hessian(a: &Adjacency, r: f64) -> DMatrix<f64> {
    let n = a.n();
    let mut h = DMatrix::from_diagonal_element(n, n, r * r - 1.0);
    for i in 0..n {
        h[(i, i)] += a.degree(i) as f64;
    }
    for (i, j) in a.edges() {
        h[(i, j)] -= r;
        h[(j, i)] -= r;
    }
    h
}

/// Counts negative eigenvalues of the Bethe–Hessian, capped at `k_max`.
pub fn bhmc_select(a: &Adjacency, k_max: usize) -> Result<BhmcSelection> {
    if a.n() < 2 {
        return Err(Error::InvalidGraph("Bethe-Hessian selection needs n >= 2".into()));
    }
    if a.edge_count() == 0 {
        return Ok(BhmcSelection {
            k: 0,
            negative_eigenvalues: 0,
            radius: 0.0,
            empty_graph: true,
        });
    }
    let r = bethe_hessian_radius(a);
    let eig = eigen(bethe_hessian(a, r))?;
    let neg = eig.eigenvalues.iter().filter(|&&l| l < -ZERO_EIGENVALUE_TOL).count();
    Ok(BhmcSelection {
        k: neg.min(k_max),
        negative_eigenvalues: neg,
        radius: r,
        empty_graph: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cliques(sizes: &[usize]) -> Adjacency {
        let mut start = 0;
        let mut edges = Vec::new();
        for &s in sizes {
            for i in start..start + s {
                for j in (i + 1)..start + s {
                    edges.push((i, j));
                }
            }
            start += s;
        }
        Adjacency::from_edges(start, edges).unwrap()
    }

    #[test]
    fn separates_disconnected_cliques() {
        let g = GraphCollection::new(vec![cliques(&[5, 5]), cliques(&[5, 5])]).unwrap();
        let z = spectral_cluster(&g, 2, &SpectralConfig::default(), 1).unwrap();
        assert_eq!(z.labels(), &[0, 0, 0, 0, 0, 1, 1, 1, 1, 1]);
        let z1 = spectral_cluster(&g, 1, &SpectralConfig::default(), 1).unwrap();
        assert_eq!(z1.labels(), &[0; 10]);
        assert!(spectral_cluster(&g, 11, &SpectralConfig::default(), 1).is_err());
    }

    #[test]
    fn bhmc_two_cliques() {
        let a = cliques(&[20, 20]);
        let s = bhmc_select(&a, 10).unwrap();
        assert!((s.radius - 18f64.sqrt()).abs() < 1e-12);
        assert_eq!(s.k, 2);
        // Oracle: H = 36 I − √18 A, and each clique spectrum is {19, −1×19}.
        let expected_neg = 2 * usize::from(36.0 - 18f64.sqrt() * 19.0 < 0.0)
            + 38 * usize::from(36.0 + 18f64.sqrt() < 0.0);
        assert_eq!(s.negative_eigenvalues, expected_neg);
        assert_eq!(bhmc_select(&a, 1).unwrap().k, 1);
    }

    #[test]
    fn bhmc_empty_graph_warns() {
        let s = bhmc_select(&Adjacency::empty(5), 4).unwrap();
        assert_eq!(s.k, 0);
        assert!(s.empty_graph);
    }

    #[test]
    fn bethe_hessian_symmetric() {
        let a = cliques(&[3, 4]);
        let h = bethe_hessian(&a, 1.5);
        assert_eq!(h.clone(), h.transpose());
    }
}
