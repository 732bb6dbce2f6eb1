//! Finite-dimensional twisted partial actions, semidirect product bundles,
//! ternary rings of operators, and the classification of regular bundles.

pub mod algebra;
pub mod bundle;
pub mod classify;
pub mod cli;
pub mod error;
pub mod fixtures;
pub mod config;
pub mod group;
pub mod io;
pub mod linalg;
pub mod report;
pub mod tpa;
pub mod tro;

pub use error::{Error, Result};
