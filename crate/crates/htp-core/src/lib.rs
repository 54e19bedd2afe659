//! Sequential recommender built around three temporal pattern families:
//! item-oriented absolute time, item time intervals, and recommendation time
//! intervals. Ships its own reverse-mode differentiation core, data pipeline,
//! trainer and ranking evaluator.

pub mod diffcore;

pub use diffcore::{DiffError, Tape, Tensor, Var};
