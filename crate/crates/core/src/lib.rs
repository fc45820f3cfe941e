//! Explaining concept drift by example.
//!
//! Given a stream split into time bins by a drift detector, the crate trains a
//! probabilistic classifier that predicts the bin of a sample, turns its
//! posteriors into identifiability scores, finds characteristic samples by
//! clustering identifiability-reweighted data, and pairs each characteristic
//! sample with its minimal-cost counterpart in every other bin.

pub mod assign;
pub mod error;
pub mod eval;
pub mod identifiability;
pub mod io;
pub mod pipeline;
pub mod proto;
pub mod random;
pub mod synth;
pub mod timeclf;
pub mod types;

pub use error::{Error, Result};
pub use identifiability::{entropy, identifiability, mean_identifiability};
pub use types::{
    Dataset, FeatureVector, IdentifiabilityScore, TimeBin, TimePosterior, TimedSample,
};
