//! Link-level simulator for LoRa and DLoRa chirp spread spectrum modulations.
//!
//! The crate models the 12 logical channels obtained by combining spreading
//! factors 7–12 with the two chirp directions (conventional up-chirps and
//! DLoRa down-chirps). It provides:
//!
//! - baseband chirp waveform generation at chip instants and at arbitrary
//!   continuous time ([`waveform`]),
//! - the noncoherent dechirp-and-DFT symbol demodulator ([`demod`]),
//! - packet-size arithmetic and bit-error accounting ([`framing`]),
//! - a Monte-Carlo engine that collides two fully overlapping packets at a
//!   prescribed SIR and estimates BER/PER ([`collision`]),
//! - SIR grid sweeps and extraction of the 12×12 isolation-threshold matrix
//!   ([`sweep`]),
//! - CSV/JSON/IQ serialization of results ([`report`]).
//!
//! Monte-Carlo trials draw from per-trial ChaCha substreams keyed by trial
//! index, so every estimate is reproducible bit-for-bit regardless of how the
//! work is scheduled. The `parallel` feature (on by default) runs trials and
//! channel pairs on a rayon pool; without it the same code runs sequentially
//! and produces identical numbers.

pub mod collision;
pub mod demod;
pub mod error;
pub mod exec;
pub mod framing;
pub mod params;
pub mod report;
pub mod sweep;
pub mod waveform;

pub use error::{Error, Result};
pub use params::{Channel, ChirpFamily, ComplexSample, PhyParams, Symbol};
