//! Floor and inside/outside-region classification from WiFi RSSI
//! fingerprints with AdaBoost over multinomial gradient-boosted trees,
//! stratified cross-validation, and per-user experiment orchestration.

pub mod activity;
pub mod adaboost;
pub mod data;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod gbt;
pub mod matrix;
pub mod seed;

pub use error::{Error, Result};
pub use matrix::Matrix;
