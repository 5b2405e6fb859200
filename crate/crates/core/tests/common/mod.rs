#![allow(dead_code)]

use blockorder::{Adjacency, GraphCollection, LabelAssignment, LabelPath};

/// Every graph collection on `n` nodes with `layers` layers.
pub fn all_graphs(n: usize, layers: usize) -> Vec<GraphCollection> {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
    let bits = pairs.len() * layers;
    (0..1u64 << bits)
        .map(|code| graph_from_code(n, layers, &pairs, code))
        .collect()
}

pub fn graph_from_code(n: usize, layers: usize, pairs: &[(usize, usize)], code: u64) -> GraphCollection {
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
}

/// Every labeling of `n` nodes into `k` classes, lexicographic.
pub fn all_labelings(n: usize, k: usize) -> Vec<LabelAssignment> {
    let total = (k as u64).pow(n as u32);
    (0..total)
        .map(|mut code| {
            let mut d = vec![0; n];
            for x in d.iter_mut().rev() {
                *x = (code % k as u64) as usize;
                code /= k as u64;
            }
            LabelAssignment::new(k, d).unwrap()
        })
        .collect()
}

/// Every label path of `layers` steps.
pub fn all_paths(n: usize, k: usize, layers: usize) -> Vec<LabelPath> {
    let flat = all_labelings(n * layers, k);
    flat.into_iter()
        .map(|z| LabelPath::new(k, z.labels().chunks(n).map(<[usize]>::to_vec).collect()).unwrap())
        .collect()
}

/// `n` nodes split into consecutive cliques of the given sizes, repeated over
/// `layers` layers.
pub fn cliques(sizes: &[usize], layers: usize) -> GraphCollection {
    let n: usize = sizes.iter().sum();
    let mut edges = Vec::new();
    let mut start = 0;
    for &s in sizes {
        for i in start..start + s {
            for j in (i + 1)..start + s {
                edges.push((i, j));
            }
        }
        start += s;
    }
    let a = Adjacency::from_edges(n, edges).unwrap();
    GraphCollection::new(vec![a; layers]).unwrap()
}

pub fn log_sum_exp(xs: impl IntoIterator<Item = f64>) -> f64 {
    let xs: Vec<f64> = xs.into_iter().collect();
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}
