use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SIMPLEX_TOL: f64 = 1e-12;
const FIXED_POINT_TOL: f64 = 1e-10;

/// Dense square matrix of reals, row-major. Serializes as nested rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct SquareMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn filled(dim: usize, value: f64) -> Self {
        Self {
            dim,
            data: vec![value; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, |a, b| if a == b { 1.0 } else { 0.0 })
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for a in 0..dim {
            for b in 0..dim {
                data.push(f(a, b));
            }
        }
        Self { dim, data }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    what: "matrix row length",
                    expected: dim,
                    found: row.len(),
                });
            }
            data.extend(row);
        }
        Ok(Self { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.data[a * self.dim + b]
    }

    #[inline]
    pub fn set(&mut self, a: usize, b: usize, v: f64) {
        self.data[a * self.dim + b] = v;
    }

    pub fn row(&self, a: usize) -> &[f64] {
        &self.data[a * self.dim..(a + 1) * self.dim]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.dim.max(1)).map(<[f64]>::to_vec).collect()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.dim).all(|a| (0..a).all(|b| (self.get(a, b) - self.get(b, a)).abs() <= tol))
    }

    pub fn max_entry(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_entry(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

impl TryFrom<Vec<Vec<f64>>> for SquareMatrix {
    type Error = Error;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_rows(rows)
    }
}

impl From<SquareMatrix> for Vec<Vec<f64>> {
    fn from(m: SquareMatrix) -> Self {
        m.rows()
    }
}

fn check_connectivity(k: usize, p: &[SquareMatrix]) -> Result<()> {
    if p.is_empty() {
        return Err(Error::InvalidParameters("need at least one connectivity matrix".into()));
    }
    for (t, m) in p.iter().enumerate() {
        if m.dim() != k {
            return Err(Error::DimensionMismatch {
                what: "connectivity matrix dimension",
                expected: k,
                found: m.dim(),
            });
        }
        if !m.is_symmetric(SIMPLEX_TOL) {
            return Err(Error::InvalidParameters(format!("P[{t}] is not symmetric")));
        }
        if m.data.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidParameters(format!("P[{t}] has entries outside [0, 1]")));
        }
    }
    Ok(())
}

fn check_simplex(what: &str, v: &[f64]) -> Result<()> {
    if v.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::InvalidParameters(format!("{what} has a negative or non-finite entry")));
    }
    let s: f64 = v.iter().sum();
    if (s - 1.0).abs() > SIMPLEX_TOL {
        return Err(Error::InvalidParameters(format!("{what} sums to {s}, not 1")));
    }
    Ok(())
}

/// Multi-layer parameters: class proportions and one connectivity matrix per layer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MlParamsRepr", into = "MlParamsRepr")]
pub struct MlParams {
    pi: Vec<f64>,
    connectivity: Vec<SquareMatrix>,
}

#[derive(Clone, Serialize, Deserialize)]
struct MlParamsRepr {
    pi: Vec<f64>,
    #[serde(rename = "P")]
    connectivity: Vec<SquareMatrix>,
}

impl TryFrom<MlParamsRepr> for MlParams {
    type Error = Error;
    fn try_from(r: MlParamsRepr) -> Result<Self> {
        MlParams::new(r.pi, r.connectivity)
    }
}

impl From<MlParams> for MlParamsRepr {
    fn from(p: MlParams) -> Self {
        Self {
            pi: p.pi,
            connectivity: p.connectivity,
        }
    }
}

impl MlParams {
    pub fn new(pi: Vec<f64>, connectivity: Vec<SquareMatrix>) -> Result<Self> {
        if pi.is_empty() {
            return Err(Error::InvalidParameters("pi must have at least one entry".into()));
        }
        check_simplex("pi", &pi)?;
        check_connectivity(pi.len(), &connectivity)?;
        Ok(Self { pi, connectivity })
    }

    pub fn k(&self) -> usize {
        self.pi.len()
    }

    pub fn num_layers(&self) -> usize {
        self.connectivity.len()
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn connectivity(&self) -> &[SquareMatrix] {
        &self.connectivity
    }
}

/// Dynamic parameters: a row-stochastic transition matrix, its stationary
/// law, and per-step connectivity with time-constant diagonal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DynParamsRepr", into = "DynParamsRepr")]
pub struct DynParams {
    trans: SquareMatrix,
    connectivity: Vec<SquareMatrix>,
    alpha: Vec<f64>,
}

#[derive(Clone, Serialize, Deserialize)]
struct DynParamsRepr {
    trans: SquareMatrix,
    #[serde(rename = "P")]
    connectivity: Vec<SquareMatrix>,
    #[serde(default)]
    alpha: Option<Vec<f64>>,
}

impl TryFrom<DynParamsRepr> for DynParams {
    type Error = Error;
    fn try_from(r: DynParamsRepr) -> Result<Self> {
        match r.alpha {
            Some(alpha) => DynParams::with_alpha(r.trans, r.connectivity, alpha),
            None => DynParams::new(r.trans, r.connectivity),
        }
    }
}

impl From<DynParams> for DynParamsRepr {
    fn from(p: DynParams) -> Self {
        Self {
            trans: p.trans,
            connectivity: p.connectivity,
            alpha: Some(p.alpha),
        }
    }
}

impl DynParams {
    /// Computes the stationary law by power iteration; fails when `trans`
    /// is reducible or periodic.
    pub fn new(trans: SquareMatrix, connectivity: Vec<SquareMatrix>) -> Result<Self> {
        Self::check(&trans, &connectivity)?;
        let alpha = crate::sampler::stationary_distribution(&trans)?;
        Ok(Self {
            trans,
            connectivity,
            alpha,
        })
    }

    /// Uses a caller-supplied stationary law, which only has to be a left
    /// fixed point of `trans`. Needed for chains without a unique one.
    pub fn with_alpha(
        trans: SquareMatrix,
        connectivity: Vec<SquareMatrix>,
        alpha: Vec<f64>,
    ) -> Result<Self> {
        Self::check(&trans, &connectivity)?;
        let k = trans.dim();
        if alpha.len() != k {
            return Err(Error::DimensionMismatch {
                what: "stationary vector length",
                expected: k,
                found: alpha.len(),
            });
        }
        check_simplex("alpha", &alpha)?;
        let residual = (0..k)
            .map(|b| ((0..k).map(|a| alpha[a] * trans.get(a, b)).sum::<f64>() - alpha[b]).abs())
            .fold(0.0, f64::max);
        if residual > FIXED_POINT_TOL {
            return Err(Error::InvalidParameters(format!(
                "alpha is not stationary (residual {residual:e})"
            )));
        }
        Ok(Self {
            trans,
            connectivity,
            alpha,
        })
    }

    fn check(trans: &SquareMatrix, connectivity: &[SquareMatrix]) -> Result<()> {
        let k = trans.dim();
        if k == 0 {
            return Err(Error::InvalidParameters("empty transition matrix".into()));
        }
        for a in 0..k {
            check_simplex(&format!("transition row {a}"), trans.row(a))?;
        }
        check_connectivity(k, connectivity)?;
        for a in 0..k {
            let d = connectivity[0].get(a, a);
            if connectivity.iter().any(|m| (m.get(a, a) - d).abs() > SIMPLEX_TOL) {
                return Err(Error::InvalidParameters(format!(
                    "diagonal entry P[{a}][{a}] varies over time"
                )));
            }
        }
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.trans.dim()
    }

    pub fn num_layers(&self) -> usize {
        self.connectivity.len()
    }

    pub fn trans(&self) -> &SquareMatrix {
        &self.trans
    }

    pub fn connectivity(&self) -> &[SquareMatrix] {
        &self.connectivity
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }
}
