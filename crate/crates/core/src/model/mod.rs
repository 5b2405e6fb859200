//! Graphs, labelings, parameters and the block counters every estimator
//! consumes.

mod counts;
mod graph;
pub mod io;
mod labels;
mod params;

pub use counts::{block_counts, confusion_matrix, BlockCounts, ConfusionMatrix};
pub(crate) use counts::pairs_between;
pub use graph::{Adjacency, GraphCollection};
pub use labels::{LabelAssignment, LabelFile, LabelPath, Labeling};
pub use params::{DynParams, MlParams, SquareMatrix};
