//! Behavioral simulator for 1FeFET1R content-addressable memory.
//!
//! The crate is organized bottom-up:
//!
//! * [`device`] – FeFET I-V law, series current limiter, threshold-voltage sampling.
//! * [`cam`] – cells, words and arrays, the two-step search and its decoders.
//! * [`sensing`] – thermometer-code ADC and the serial stage latency/energy model.
//! * [`montecarlo`] – device-variation experiments over CAM words.
//! * [`hdc`] – hypervector genome matcher that uses a CAM array as its search backend.

pub mod cam;
pub mod device;
pub mod error;
pub mod hdc;
pub mod montecarlo;
pub mod sensing;
pub mod stats;

pub use error::{Error, Result};
