//! Structure learning for Suppes-Bayes causal networks over binary
//! cross-sectional data: prima-facie constraint mining, five decomposable
//! scores, three search strategies, a cumulative-phenomena data generator
//! and a benchmark harness.

pub mod datagen;
pub mod error;
pub mod eval;
pub mod io;
pub mod model;
pub mod rng;
pub mod scoring;
pub mod search;
pub mod suppes;

pub use error::{Error, Result};
