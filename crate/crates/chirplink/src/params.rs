//! Channel numerology: spreading factors, chirp directions and derived
//! per-symbol timing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest supported spreading factor.
pub const MIN_SF: u8 = 7;
/// Largest supported spreading factor.
pub const MAX_SF: u8 = 12;
/// Number of logical channels: six spreading factors times two chirp
/// directions.
pub const CHANNEL_COUNT: usize = 12;

/// Modulation symbol value, `0..M` for the owning channel's alphabet size.
pub type Symbol = u16;

/// Complex baseband sample.
pub type ComplexSample = num_complex::Complex64;

/// Chirp direction. `Up` is the conventional LoRa rising ramp, `Down` the
/// DLoRa falling ramp.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChirpFamily {
    Up,
    Down,
}

impl ChirpFamily {
    pub fn all() -> [ChirpFamily; 2] {
        [ChirpFamily::Up, ChirpFamily::Down]
    }
}

impl std::fmt::Display for ChirpFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ChirpFamily::Up => write!(f, "up"),
            ChirpFamily::Down => write!(f, "down"),
        }
    }
}

/// One of the 12 logical channels: a spreading factor plus a chirp direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Channel {
    pub sf: u8,
    pub family: ChirpFamily,
}

impl Channel {
    pub fn new(sf: u8, family: ChirpFamily) -> Result<Self> {
        check_sf(sf)?;
        Ok(Channel { sf, family })
    }

    /// All 12 channels in matrix order: SF7..SF12 up, then SF7..SF12 down.
    pub fn all() -> [Channel; CHANNEL_COUNT] {
        let mut out = [Channel {
            sf: MIN_SF,
            family: ChirpFamily::Up,
        }; CHANNEL_COUNT];
        for (i, ch) in out.iter_mut().enumerate() {
            ch.sf = MIN_SF + (i % 6) as u8;
            ch.family = if i < 6 {
                ChirpFamily::Up
            } else {
                ChirpFamily::Down
            };
        }
        out
    }

    /// Position of this channel in [`Channel::all`] order, `0..12`.
    pub fn index(&self) -> usize {
        let base = (self.sf - MIN_SF) as usize;
        match self.family {
            ChirpFamily::Up => base,
            ChirpFamily::Down => base + 6,
        }
    }

    pub fn from_index(index: usize) -> Result<Self> {
        if index >= CHANNEL_COUNT {
            return Err(Error::InvalidParameter(format!(
                "channel index {index} out of range 0..{CHANNEL_COUNT}"
            )));
        }
        Ok(Channel::all()[index])
    }

    /// Short label used in tables and CLI arguments: `7`..`12` for up-chirp
    /// channels, `7_D`..`12_D` for down-chirp channels.
    pub fn label(&self) -> String {
        match self.family {
            ChirpFamily::Up => format!("{}", self.sf),
            ChirpFamily::Down => format!("{}_D", self.sf),
        }
    }

    /// Parses a channel label as produced by [`Channel::label`].
    pub fn parse_label(s: &str) -> Result<Self> {
        let s = s.trim();
        let (digits, family) = match s.strip_suffix("_D").or_else(|| s.strip_suffix("_d")) {
            Some(rest) => (rest, ChirpFamily::Down),
            None => (s, ChirpFamily::Up),
        };
        let sf: u8 = digits.parse().map_err(|_| {
            Error::InvalidParameter(format!(
                "invalid channel label '{s}': expected 7..12 or 7_D..12_D"
            ))
        })?;
        Channel::new(sf, family)
    }

    /// Numerology for this channel at the given bandwidth.
    pub fn params(&self, bandwidth_hz: f64) -> Result<PhyParams> {
        PhyParams::new(self.sf, bandwidth_hz)
    }
}

impl std::fmt::Display for Channel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.label())
    }
}

/// Per-channel numerology: alphabet size and timing derived from the
/// spreading factor and bandwidth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhyParams {
    sf: u8,
    bandwidth_hz: f64,
    m: usize,
    chip_period_s: f64,
    symbol_period_s: f64,
}

impl PhyParams {
    /// Builds the numerology for a spreading factor and bandwidth.
    ///
    /// `M = 2^SF`, the chip period is `1/B` and the symbol period `M/B`.
    pub fn new(sf: u8, bandwidth_hz: f64) -> Result<Self> {
        check_sf(sf)?;
        if !(bandwidth_hz.is_finite() && bandwidth_hz > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "bandwidth_hz must be positive and finite, got {bandwidth_hz}"
            )));
        }
        let m = 1usize << sf;
        let chip_period_s = 1.0 / bandwidth_hz;
        Ok(PhyParams {
            sf,
            bandwidth_hz,
            m,
            chip_period_s,
            symbol_period_s: m as f64 * chip_period_s,
        })
    }

    pub fn sf(&self) -> u8 {
        self.sf
    }

    pub fn bandwidth_hz(&self) -> f64 {
        self.bandwidth_hz
    }

    /// Symbol alphabet size `M = 2^SF`, also the number of chips per symbol.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn chip_period_s(&self) -> f64 {
        self.chip_period_s
    }

    pub fn symbol_period_s(&self) -> f64 {
        self.symbol_period_s
    }
}

fn check_sf(sf: u8) -> Result<()> {
    if !(MIN_SF..=MAX_SF).contains(&sf) {
        return Err(Error::InvalidParameter(format!(
            "spreading factor {sf} out of range {MIN_SF}..={MAX_SF}"
        )));
    }
    Ok(())
}
