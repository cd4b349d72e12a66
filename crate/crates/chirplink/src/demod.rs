//! Noncoherent dechirp-and-DFT symbol demodulation.
//!
//! A received symbol window is multiplied by the conjugate base chirp of its
//! channel, which turns a clean symbol `a` into a complex tone at discrete
//! frequency `a/M` cycles per sample. An M-point DFT then concentrates that
//! tone in bin `a`, and the decision is the magnitude argmax. The same
//! structure serves both chirp families; only the base chirp changes.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::params::{ChirpFamily, ComplexSample, PhyParams, Symbol};
use crate::waveform::chirp_samples;

/// Decision for one symbol window: the argmax bin and the full magnitude
/// spectrum it was taken over.
#[derive(Debug, Clone, PartialEq)]
pub struct DemodResult {
    pub symbol: Symbol,
    pub magnitudes: Vec<f64>,
}

impl DemodResult {
    /// Picks the maximizing bin; equal magnitudes resolve to the lowest index.
    pub fn from_magnitudes(magnitudes: Vec<f64>) -> Result<Self> {
        if magnitudes.is_empty() {
            return Err(Error::InvalidInput("empty magnitude vector".into()));
        }
        Ok(DemodResult {
            symbol: argmax(&magnitudes) as Symbol,
            magnitudes,
        })
    }
}

/// Index of the strictly largest entry, lowest index on ties.
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Multiplies a one-symbol window by the conjugate base chirp of the channel.
///
/// The window must hold exactly `M` chip-rate samples.
pub fn dechirp(
    window: &[ComplexSample],
    params: &PhyParams,
    family: ChirpFamily,
) -> Result<Vec<ComplexSample>> {
    if window.len() != params.m() {
        return Err(Error::InvalidInput(format!(
            "window length {} does not match M = {}",
            window.len(),
            params.m()
        )));
    }
    let base = chirp_samples(params, family, 0)?;
    Ok(window
        .iter()
        .zip(&base)
        .map(|(w, b)| w * b.conj())
        .collect())
}

/// Magnitudes of the unnormalized forward DFT,
/// `|Σ_n s[n]·exp(-j2πkn/N)|` for each bin `k`.
///
/// The length must be a power of two (it is always `M` in this crate).
pub fn dft_magnitudes(samples: &[ComplexSample]) -> Result<Vec<f64>> {
    if samples.is_empty() || !samples.len().is_power_of_two() {
        return Err(Error::InvalidInput(format!(
            "DFT length {} is not a power of two",
            samples.len()
        )));
    }
    let fft = fft_for(samples.len());
    let mut buf = samples.to_vec();
    fft.process(&mut buf);
    Ok(buf.iter().map(|c| c.norm()).collect())
}

/// Demodulates a single symbol window.
pub fn demodulate_symbol(
    window: &[ComplexSample],
    params: &PhyParams,
    family: ChirpFamily,
) -> Result<DemodResult> {
    let mags = dft_magnitudes(&dechirp(window, params, family)?)?;
    DemodResult::from_magnitudes(mags)
}

/// Demodulates `n_chirps` consecutive symbol windows starting at sample 0.
///
/// Symbol `i` is decided from `samples[i·M .. (i+1)·M]`. The input must hold
/// at least `n_chirps·M` samples.
pub fn demodulate_packet(
    samples: &[ComplexSample],
    params: &PhyParams,
    family: ChirpFamily,
    n_chirps: usize,
) -> Result<Vec<Symbol>> {
    let m = params.m();
    if samples.len() < n_chirps * m {
        return Err(Error::InvalidInput(format!(
            "need {} samples for {n_chirps} symbols at M = {m}, got {}",
            n_chirps * m,
            samples.len()
        )));
    }
    if n_chirps == 0 {
        return Ok(Vec::new());
    }
    let base_conj: Vec<ComplexSample> = chirp_samples(params, family, 0)?
        .iter()
        .map(|c| c.conj())
        .collect();
    let fft = fft_for(m);
    let mut scratch = vec![ComplexSample::default(); fft.get_inplace_scratch_len()];
    let mut buf = vec![ComplexSample::default(); m];
    let mut mags = vec![0.0f64; m];
    let mut out = Vec::with_capacity(n_chirps);
    for i in 0..n_chirps {
        let window = &samples[i * m..(i + 1) * m];
        for ((dst, w), b) in buf.iter_mut().zip(window).zip(&base_conj) {
            *dst = w * b;
        }
        fft.process_with_scratch(&mut buf, &mut scratch);
        // argmax over squared magnitudes decides the same bin as over
        // magnitudes
        for (mag, c) in mags.iter_mut().zip(&buf) {
            *mag = c.norm_sqr();
        }
        out.push(argmax(&mags) as Symbol);
    }
    Ok(out)
}

type FftCache = Mutex<HashMap<usize, Arc<dyn Fft<f64>>>>;

fn fft_for(len: usize) -> Arc<dyn Fft<f64>> {
    static CACHE: OnceLock<FftCache> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    let mut map = cache.lock().unwrap();
    map.entry(len)
        .or_insert_with(|| FftPlanner::new().plan_fft_forward(len))
        .clone()
}
