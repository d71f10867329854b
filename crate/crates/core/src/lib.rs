//! Factor-of-iid percolation on random regular graphs: sampling, block
//! factors, edge-profile statistics, entropy bounds, exact counting, coupled
//! copies and source/sink-free orientations.

pub mod bounds;
pub mod counting;
pub mod coupling;
pub mod error;
pub mod factor;
pub mod graph;
pub mod labels;
pub mod local;
pub mod matching;
pub mod orient;
pub mod seed;
pub mod stats;

pub use error::{Error, Result};
pub use factor::{BlockFactor, Colour, ColoringField, Projection};
pub use graph::RegularMultigraph;
pub use labels::LabelField;
