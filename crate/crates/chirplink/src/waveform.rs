//! Chirp waveform generation.
//!
//! A symbol `a` of an up-chirp channel starts at frequency `B(a/M - 1/2)`
//! and ramps up with slope `B²/M`; when the trajectory reaches the band edge
//! `+B/2` (at `t = (M-a)/B`) it folds down by `B` and keeps ramping. The
//! down-chirp family mirrors this: same starting frequency, slope `-B²/M`,
//! fold up by `B` when the trajectory passes `-B/2` (at `t = a/B`). The
//! transmitted sample is `exp(j·phase)` with the phase the integral of the
//! instantaneous frequency and zero initial phase.
//!
//! Phases are accumulated in cycles and reduced modulo one cycle before the
//! complex exponential is taken, which keeps the argument of sin/cos small.
//! At chip instants `t = n/B` the fold contributes a whole number of cycles,
//! so the discrete-time samples are insensitive to it.

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::params::{ChirpFamily, ComplexSample, PhyParams, Symbol};

/// Evaluates the baseband chirp of `symbol` at an arbitrary instant
/// `t ∈ [0, T_s)` within the symbol.
pub fn chirp_value(
    params: &PhyParams,
    family: ChirpFamily,
    symbol: Symbol,
    t: f64,
) -> Result<ComplexSample> {
    check_symbol(params, symbol)?;
    if !(t >= 0.0 && t < params.symbol_period_s()) {
        return Err(Error::OutsideSymbolWindow {
            t,
            window: params.symbol_period_s(),
        });
    }
    let m = params.m() as f64;
    let a = symbol as f64;
    let b = params.bandwidth_hz();
    let u = b * t; // elapsed time in chip units
    let cycles = match family {
        ChirpFamily::Up => {
            let fold = if t >= (m - a) / b { u } else { 0.0 };
            u * (a / m - 0.5 + u / (2.0 * m)) - fold
        }
        ChirpFamily::Down => {
            let fold = if t > a / b { u } else { 0.0 };
            u * (a / m - 0.5 - u / (2.0 * m)) + fold
        }
    };
    let phase = TAU * (cycles - cycles.floor());
    Ok(ComplexSample::new(phase.cos(), phase.sin()))
}

/// Instantaneous frequency of the chirp at `t ∈ [0, T_s)`, in Hz.
///
/// The returned value always lies in `[-B/2, B/2)`.
pub fn instantaneous_frequency(
    params: &PhyParams,
    family: ChirpFamily,
    symbol: Symbol,
    t: f64,
) -> Result<f64> {
    check_symbol(params, symbol)?;
    if !(t >= 0.0 && t < params.symbol_period_s()) {
        return Err(Error::OutsideSymbolWindow {
            t,
            window: params.symbol_period_s(),
        });
    }
    let m = params.m() as f64;
    let a = symbol as f64;
    let b = params.bandwidth_hz();
    let start = b * (a / m - 0.5);
    let slope = b * b / m;
    Ok(match family {
        ChirpFamily::Up => {
            let f = start + slope * t;
            if t >= (m - a) / b {
                f - b
            } else {
                f
            }
        }
        ChirpFamily::Down => {
            let f = start - slope * t;
            if t > a / b {
                f + b
            } else {
                f
            }
        }
    })
}

/// One symbol period of the chirp sampled at the chip rate: entry `n` is
/// [`chirp_value`] at `t = n/B`, for `n = 0..M`.
pub fn chirp_samples(
    params: &PhyParams,
    family: ChirpFamily,
    symbol: Symbol,
) -> Result<Vec<ComplexSample>> {
    let b = params.bandwidth_hz();
    (0..params.m())
        .map(|n| chirp_value(params, family, symbol, n as f64 / b))
        .collect()
}

/// Chip-rate samples of a whole symbol sequence, one symbol period each.
pub fn modulate_symbols(
    params: &PhyParams,
    family: ChirpFamily,
    symbols: &[Symbol],
) -> Result<Vec<ComplexSample>> {
    let mut out = Vec::with_capacity(symbols.len() * params.m());
    for &a in symbols {
        out.extend(chirp_samples(params, family, a)?);
    }
    Ok(out)
}

fn check_symbol(params: &PhyParams, symbol: Symbol) -> Result<()> {
    if (symbol as usize) >= params.m() {
        return Err(Error::InvalidParameter(format!(
            "symbol {symbol} out of range 0..{} for SF{}",
            params.m(),
            params.sf()
        )));
    }
    Ok(())
}
