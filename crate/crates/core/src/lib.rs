//! Continuous gesture recognition from depth-map sequences.
//!
//! The pipeline: quantity-of-movement temporal segmentation
//! ([`qomseg`]), improved depth motion map construction and power-rainbow
//! pseudo-coloring ([`idmm`]), pluggable segment classification with a
//! nearest-neighbor template baseline ([`classify`]), and mean-Jaccard
//! evaluation ([`eval`]). [`synth`] generates sequences with known ground
//! truth for end-to-end verification and [`pipeline`] wires the stages
//! together.

pub mod classify;
pub mod depthio;
pub mod error;
pub mod eval;
pub mod idmm;
pub mod pipeline;
pub mod qomseg;
pub mod synth;

pub use error::{Error, Result};
