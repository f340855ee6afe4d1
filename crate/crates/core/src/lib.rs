//! Trait inference from facial-emotion probability streams.
//!
//! Participants watch a fixed sequence of 15 videos while a facial emotion
//! recogniser logs per-frame probabilities for seven emotions. This crate
//! turns those logs into a participant × 105 feature matrix, relates the
//! features to 22 personality, risk and moral-value scores with classical
//! statistics, trains class-balanced gradient-boosted classifiers on
//! tercile-binned scores, and explains them with exact tree SHAP values.
//!
//! A synthetic cohort generator with planted emotion–trait links doubles as
//! the ground truth for the whole pipeline.

pub mod cohort;
pub mod config;
pub mod error;
pub mod eval;
pub mod features;
pub mod gbt;
pub mod matrix;
pub mod pipeline;
pub mod report;
pub mod resample;
pub mod shap;
pub mod stats;
pub mod synth;
pub mod util;

pub use error::{Error, Result};
