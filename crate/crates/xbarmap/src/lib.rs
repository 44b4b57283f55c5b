//! Maps pattern-pruned CNN weights onto RRAM crossbar arrays and simulates
//! inference at operation-unit granularity.
//!
//! The pipeline runs in four stages: prune kernels onto a small per-layer
//! set of candidate patterns ([`prune`]), reorder and pack the surviving
//! kernels into crossbar pattern blocks ([`mapping`]), execute the mapped
//! layer one operation unit at a time ([`sim`]), and convert the resulting
//! activation counts into energy ([`energy`]). A dense column-per-filter
//! mapping serves as the comparison baseline throughout.

pub mod chart;
pub mod energy;
pub mod error;
pub mod manifest;
pub mod mapping;
pub mod model;
pub mod par;
pub mod prune;
pub mod reference;
pub mod report;
pub mod sim;
pub mod stream;
pub mod synth;
pub mod verify;

pub use error::{Error, Result};
pub use model::{FeatureMap, HardwareConfig, LayerWeights, OutputMap, Pattern, PatternAssignment};
