//! Greedy hierarchical ball selection for Euclidean `(k, z)`-clustering.
//!
//! The pipeline is: [`metricspace::normalize`] the input so the smallest
//! nonzero pairwise distance is 1, estimate the value of every ball
//! `B(p, Δ/(2c)^ℓ)` ([`count_sketch`]), then repeatedly pick the most valuable
//! available ball, descend through geometrically smaller balls to a center and
//! invalidate every ball close to that center ([`greedy_core`]). Neighborhoods
//! come from shifted-grid LSH tables ([`lsh_index`]). Every randomized piece
//! has an exact counterpart so runs can be replayed against
//! [`reference_oracles`].

pub mod count_sketch;
pub mod error;
pub mod greedy_core;
pub mod lsh_index;
pub mod metricspace;
pub mod reference_oracles;
mod seeds;

pub use error::{Error, Result};
pub use greedy_core::{BallRef, GreedyState, Instrumentation, Mode, SequenceTrace, Solution};
pub use metricspace::{ClusterParams, Dataset, ScaleInfo};
