//! Order estimation for multi-layer and dynamic stochastic block models.
//!
//! The estimator maximizes `ln KT_k(A) − pen(k, n, T)` over `k`, where
//! `KT_k` is the integrated likelihood under Jeffreys-type priors
//! (Dirichlet(1/2) on class weights or transition rows, Beta(1/2, 1/2) on
//! connectivities). The evidence is computed exactly by enumeration for
//! tiny graphs ([`exact`]) and approximated by a variational lower bound
//! otherwise ([`vbem`]). Spectral baselines live in [`spectral`]; the
//! simulation harness in [`harness`].

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod exact;
pub mod harness;
pub mod model;
pub mod penalty;
pub mod rng;
pub mod sampler;
pub mod selector;
pub mod special;
pub mod spectral;
pub mod vbem;

pub use error::{Error, Result};
pub use exact::{Engine, LogEvidence};
pub use model::{
    block_counts, confusion_matrix, Adjacency, BlockCounts, ConfusionMatrix, DynParams,
    GraphCollection, LabelAssignment, LabelPath, Labeling, MlParams, SquareMatrix,
};
pub use penalty::{pen_dyn, pen_ml, PenaltyConfig};
