//! Text segmentation by lexical cohesion with the Link Set Median (LSM)
//! procedure, and the tools to evaluate it: reference boundaries from section
//! headings, recall and precision, a seeded random baseline, and a
//! permutation test.

pub mod baselines;
pub mod cli;
pub mod cohesion;
pub mod error;
pub mod evaluation;
pub mod lsm;
pub mod pipeline;
pub mod records;
pub mod synthetic;
pub mod text;

pub use error::{Error, Result};
