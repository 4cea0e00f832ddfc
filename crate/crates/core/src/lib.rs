pub mod analysis;
pub mod artifact;
pub mod corpus;
pub mod embedding;
pub mod error;
pub mod features;
pub mod rng;
pub mod selection;
pub mod regressor;
pub mod splitting;
pub mod pipeline;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
