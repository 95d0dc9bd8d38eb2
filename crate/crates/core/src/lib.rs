//! Causal optimal transport abstraction (COTA).
//!
//! Learns stochastic abstraction maps between a base and an abstracted
//! discrete structural causal model from paired interventional samples.

pub mod abstraction;
pub mod config;
pub mod cost;
pub mod datasets;
pub mod docalc;
pub mod downstream;
pub mod domain;
pub mod error;
pub mod eval;
pub mod measures;
pub mod model_file;
pub mod ot;
pub mod poset;
pub mod rng;
pub mod scm;

pub use error::{CotaError, Result};
