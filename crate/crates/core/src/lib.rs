//! Two-stage prediction intervals: a classifier's Venn-Abers interval width
//! scales the conformal intervals of a downstream regressor.

pub mod conformal;
pub mod datagen;
pub mod error;
pub mod features;
pub mod harness;
pub mod learners;
pub mod metrics;
pub mod numfmt;
pub mod par;
pub mod rng;
pub mod venn_abers;

pub use error::{CascadeError, Result};
pub use par::ExecMode;
