//! LoRa chirp-spread-spectrum reception with multi-antenna combining.
//!
//! The crate covers the full chain used to study receive diversity at a
//! LoRa gateway: chirp synthesis and FFT demodulation ([`chirp`]), flat
//! block-fading channels ([`channel`]), coherent, non-coherent and iterative
//! semi-coherent detectors ([`detectors`]), numerical error-rate theory
//! ([`theory`]), a deterministic parallel Monte Carlo engine ([`montecarlo`])
//! and path-loss based coverage arithmetic ([`linkbudget`]).

pub mod channel;
pub mod chirp;
pub mod cli;
pub mod detectors;
pub mod error;
pub mod linkbudget;
pub mod montecarlo;
pub mod theory;

pub use error::{Error, Result};
pub use num_complex::Complex64;
