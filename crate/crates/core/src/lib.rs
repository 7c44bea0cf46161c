//! Rank aggregation through Lehmer codes.

pub mod baselines;
pub mod bench;
pub mod distance;
pub mod error;
pub(crate) mod fenwick;
pub mod half;
pub mod io;
pub mod lca;
pub mod lehmer;
pub mod models;
pub mod ranking;
pub mod rng;
pub mod tally;

pub use error::{Error, Result};
pub use half::HalfInt;
