//! Seeded generators for multi-layer and dynamic block models, plus the
//! simulation scenarios used by the experiment harness.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    Adjacency, DynParams, GraphCollection, LabelAssignment, LabelPath, MlParams, SquareMatrix,
};
use crate::rng::{stream, STREAM_DATA, STREAM_PARAMS};

const POWER_ITER_CAP: usize = 100_000;
const POWER_ITER_TOL: f64 = 1e-12;

/// Draws an index from a probability vector by inversion.
fn categorical(rng: &mut ChaCha8Rng, probs: &[f64]) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (a, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return a;
        }
    }
    // Rounding left u above the last partial sum; take the last positive class.
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

fn sample_layer(rng: &mut ChaCha8Rng, labels: &[usize], p: &SquareMatrix) -> Adjacency {
    Adjacency::from_fn(labels.len(), |i, j| rng.gen::<f64>() < p.get(labels[i], labels[j]))
}

/// Samples labels i.i.d. from `pi`, then every layer given the labels.
pub fn sample_mlsbm(
    n: usize,
    params: &MlParams,
    seed: u64,
) -> Result<(LabelAssignment, GraphCollection)> {
    if n == 0 {
        return Err(Error::InvalidParameters("n must be positive".into()));
    }
    let mut rng = stream(seed, STREAM_DATA);
    let labels: Vec<usize> = (0..n).map(|_| categorical(&mut rng, params.pi())).collect();
    let layers = params
        .connectivity()
        .iter()
        .map(|p| sample_layer(&mut rng, &labels, p))
        .collect();
    Ok((LabelAssignment::new(params.k(), labels)?, GraphCollection::new(layers)?))
}

/// Samples one stationary Markov label path per node, then each layer given
/// that step's labels.
pub fn sample_dynsbm(
    n: usize,
    params: &DynParams,
    seed: u64,
) -> Result<(LabelPath, GraphCollection)> {
    if n == 0 {
        return Err(Error::InvalidParameters("n must be positive".into()));
    }
    let mut rng = stream(seed, STREAM_DATA);
    let steps = params.num_layers();
    let mut rows: Vec<Vec<usize>> = Vec::with_capacity(steps);
    rows.push((0..n).map(|_| categorical(&mut rng, params.alpha())).collect());
    for t in 1..steps {
        let row = rows[t - 1]
            .iter()
            .map(|&a| categorical(&mut rng, params.trans().row(a)))
            .collect();
        rows.push(row);
    }
    let layers = params
        .connectivity()
        .iter()
        .zip(&rows)
        .map(|(p, labels)| sample_layer(&mut rng, labels, p))
        .collect();
    Ok((LabelPath::new(params.k(), rows)?, GraphCollection::new(layers)?))
}

/// Whether some power of the support pattern is strictly positive
/// (irreducible and aperiodic). Wielandt: it suffices to check the
/// power `(k - 1)^2 + 1`.
fn is_primitive(trans: &SquareMatrix) -> bool {
    let k = trans.dim();
    let support: Vec<bool> = (0..k * k).map(|i| trans.get(i / k, i % k) > 0.0).collect();
    let mut power = support.clone();
    for _ in 1..((k - 1) * (k - 1) + 1) {
        let mut next = vec![false; k * k];
        for a in 0..k {
            for b in 0..k {
                next[a * k + b] = (0..k).any(|c| power[a * k + c] && support[c * k + b]);
            }
        }
        power = next;
    }
    power.iter().all(|&x| x)
}

/// Left fixed point of a row-stochastic matrix by power iteration from the
/// uniform vector.
pub fn stationary_distribution(trans: &SquareMatrix) -> Result<Vec<f64>> {
    let k = trans.dim();
    if k == 0 {
        return Err(Error::InvalidParameters("empty transition matrix".into()));
    }
    if !is_primitive(trans) {
        return Err(Error::NotErgodic(format!("{:?}", trans.rows())));
    }
    let mut alpha = vec![1.0 / k as f64; k];
    let mut next = vec![0.0; k];
    for _ in 0..POWER_ITER_CAP {
        for (b, slot) in next.iter_mut().enumerate() {
            *slot = (0..k).map(|a| alpha[a] * trans.get(a, b)).sum();
        }
        let s: f64 = next.iter().sum();
        next.iter_mut().for_each(|x| *x /= s);
        let change = alpha
            .iter()
            .zip(&next)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        std::mem::swap(&mut alpha, &mut next);
        if change <= POWER_ITER_TOL {
            return Ok(alpha);
        }
    }
    Err(Error::StationaryNotConverged {
        iterations: POWER_ITER_CAP,
    })
}

/// Per-layer scale factors applied to base connectivity matrices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparsityScaling {
    pub rho: Vec<f64>,
    #[serde(rename = "S")]
    pub base: Vec<SquareMatrix>,
}

impl SparsityScaling {
    pub fn new(rho: Vec<f64>, base: Vec<SquareMatrix>) -> Result<Self> {
        if rho.len() != base.len() || rho.is_empty() {
            return Err(Error::DimensionMismatch {
                what: "scale factors vs base matrices",
                expected: base.len(),
                found: rho.len(),
            });
        }
        for (t, (&r, s)) in rho.iter().zip(&base).enumerate() {
            if !(r > 0.0 && r <= 1.0) {
                return Err(Error::InvalidParameters(format!("rho[{t}] = {r} is outside (0, 1]")));
            }
            if s.min_entry() < 0.0 {
                return Err(Error::InvalidParameters(format!("S[{t}] has a negative entry")));
            }
            if r * s.max_entry() > 1.0 {
                return Err(Error::InvalidParameters(format!(
                    "rho[{t}] * S[{t}] exceeds 1 (max entry {})",
                    r * s.max_entry()
                )));
            }
        }
        Ok(Self { rho, base })
    }

    /// A scaling whose factor is the same for every layer, as the dynamic
    /// model requires.
    pub fn time_constant(rho: f64, base: Vec<SquareMatrix>) -> Result<Self> {
        Self::new(vec![rho; base.len()], base)
    }

    pub fn is_time_constant(&self) -> bool {
        self.rho.windows(2).all(|w| w[0] == w[1])
    }

    pub fn connectivity(&self) -> Vec<SquareMatrix> {
        self.rho.iter().zip(&self.base).map(|(&r, s)| s.scaled(r)).collect()
    }
}

/// A scenario's drawn parameters and the data sampled from them.
#[derive(Clone, Debug)]
pub struct ScenarioDraw {
    pub params: MlParams,
    pub labels: LabelAssignment,
    pub graphs: GraphCollection,
    /// Present for sparse designs.
    pub scaling: Option<SparsityScaling>,
}

/// Number of communities in the mixed assortative/disassortative design.
pub const FIG1_K: usize = 6;
/// Default layer count for that design.
pub const FIG1_LAYERS: usize = 5;

/// The 6-block connectivity with `u1..u4 ~ U(0.6, 1)`: blocks 1-3 are
/// assortative (diagonal `u1, u2, u3`, 0.4 between them), blocks 4-6 are
/// disassortative (0.4 on the diagonal, `u4` between them), 0.2 across the
/// two groups.
pub fn fig1_connectivity(u: [f64; 4]) -> SquareMatrix {
    SquareMatrix::from_fn(FIG1_K, |a, b| {
        let (ga, gb) = (a < 3, b < 3);
        match (ga, gb) {
            (true, true) if a == b => u[a],
            (true, true) => 0.4,
            (false, false) if a == b => 0.4,
            (false, false) => u[3],
            _ => 0.2,
        }
    })
}

/// Draws the 6-block design. With `redraw_per_layer` the `u`'s are drawn
/// independently for every layer; otherwise one draw is shared.
pub fn scenario_fig1(
    n: usize,
    layers: usize,
    redraw_per_layer: bool,
    seed: u64,
) -> Result<ScenarioDraw> {
    let mut rng = stream(seed, STREAM_PARAMS);
    let draw_u = |rng: &mut ChaCha8Rng| -> [f64; 4] {
        std::array::from_fn(|_| rng.gen_range(0.6..1.0))
    };
    let shared = draw_u(&mut rng);
    let connectivity = (0..layers)
        .map(|t| {
            if redraw_per_layer && t > 0 {
                fig1_connectivity(draw_u(&mut rng))
            } else {
                fig1_connectivity(shared)
            }
        })
        .collect();
    let params = MlParams::new(vec![1.0 / FIG1_K as f64; FIG1_K], connectivity)?;
    let (labels, graphs) = sample_mlsbm(n, &params, seed)?;
    Ok(ScenarioDraw {
        params,
        labels,
        graphs,
        scaling: None,
    })
}

pub const SPARSE_K: usize = 3;
pub const SPARSE_LAYERS: usize = 4;
pub const SPARSE_N: usize = 300;

/// Base matrices `S_t = I + 11ᵀ + E_t` with `E_t` symmetric, entries
/// i.i.d. `U[-0.1, 0.1]` on and above the diagonal.
pub fn sparse_base(k: usize, layers: usize, rng: &mut ChaCha8Rng) -> Vec<SquareMatrix> {
    (0..layers)
        .map(|_| {
            let mut s = SquareMatrix::zeros(k);
            for a in 0..k {
                for b in a..k {
                    let eps = rng.gen_range(-0.1..=0.1);
                    let v = 1.0 + if a == b { 1.0 } else { 0.0 } + eps;
                    s.set(a, b, v);
                    s.set(b, a, v);
                }
            }
            s
        })
        .collect()
}

/// The sparse 3-block design `P_t = rho * S_t`, uniform proportions.
pub fn scenario_sparse(n: usize, layers: usize, rho: f64, seed: u64) -> Result<ScenarioDraw> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::InvalidParameters(format!("rho = {rho} must be positive")));
    }
    let mut rng = stream(seed, STREAM_PARAMS);
    let base = sparse_base(SPARSE_K, layers, &mut rng);
    let scaling = SparsityScaling::time_constant(rho, base)?;
    let params = MlParams::new(vec![1.0 / SPARSE_K as f64; SPARSE_K], scaling.connectivity())?;
    let (labels, graphs) = sample_mlsbm(n, &params, seed)?;
    Ok(ScenarioDraw {
        params,
        labels,
        graphs,
        scaling: Some(scaling),
    })
}

/// [`scenario_sparse`] at the table's size: `n = 300`, four layers.
pub fn scenario_sparse_table1(rho: f64, seed: u64) -> Result<ScenarioDraw> {
    scenario_sparse(SPARSE_N, SPARSE_LAYERS, rho, seed)
}

pub const RATE_K: usize = 2;

/// Two assortative blocks: diagonal entries `U(0.7, 1)`, off-diagonal
/// `U(0, 0.1)`, drawn independently per layer.
pub fn scenario_rate(n: usize, layers: usize, seed: u64) -> Result<ScenarioDraw> {
    let mut rng = stream(seed, STREAM_PARAMS);
    let connectivity = (0..layers)
        .map(|_| {
            let d0 = rng.gen_range(0.7..1.0);
            let d1 = rng.gen_range(0.7..1.0);
            let off = rng.gen_range(0.0..0.1);
            SquareMatrix::from_rows(vec![vec![d0, off], vec![off, d1]]).expect("2x2")
        })
        .collect();
    let params = MlParams::new(vec![0.5, 0.5], connectivity)?;
    let (labels, graphs) = sample_mlsbm(n, &params, seed)?;
    Ok(ScenarioDraw {
        params,
        labels,
        graphs,
        scaling: None,
    })
}
