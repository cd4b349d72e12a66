//! Two-packet collision trials and Monte-Carlo BER estimation.
//!
//! Each trial builds a reference packet and a fully overlapping interfering
//! packet, offsets the interferer by a random shift of `n_int` whole chips
//! plus `n_float/SR` of a chip, scales it for the prescribed SIR, and
//! demodulates the reference packet from the sum. The receiver is chip-
//! synchronous with the reference packet; interferer samples at the receiver
//! instants are evaluated from the continuous-time chirp expression.
//!
//! Trials are numbered, and trial `i` draws only from a ChaCha substream of
//! stream id `i`, so accumulating counts in trial order gives the same
//! estimate no matter how trials are scheduled.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{run_batch, Exec};
use crate::demod::demodulate_packet;
use crate::framing::{
    bit_errors, chirp_count, interferer_chirp_count, payload_bit_count, random_packet,
    time_on_air_chips, Packet,
};
use crate::params::{Channel, ComplexSample, PhyParams};

/// Misalignment of the interfering packet: `n_int` whole chips plus
/// `n_float/sr` of one chip, for a total shift in `[0, M_i·T)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Shift {
    pub n_int: u32,
    pub n_float: u32,
    pub sr: u32,
}

impl Shift {
    /// Shift duration in seconds for a given chip period.
    pub fn time_s(&self, chip_period_s: f64) -> f64 {
        (self.n_int as f64 + self.n_float as f64 / self.sr as f64) * chip_period_s
    }
}

/// One reference/interferer collision setup.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollisionConfig {
    pub ref_channel: Channel,
    pub int_channel: Channel,
    /// Signal-to-interference ratio in dB; the reference has amplitude 1.
    pub sir_db: f64,
    /// Payload size in bytes, shared by both packets.
    pub n_bytes: u32,
    /// Code rate index `0..=3`.
    pub cr: u8,
    /// Sub-chip shift resolution.
    pub sr: u32,
    pub bandwidth_hz: f64,
}

impl CollisionConfig {
    pub fn validate(&self) -> Result<()> {
        PhyParams::new(self.ref_channel.sf, self.bandwidth_hz)?;
        PhyParams::new(self.int_channel.sf, self.bandwidth_hz)?;
        if !self.sir_db.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "sir_db must be finite, got {}",
                self.sir_db
            )));
        }
        if self.n_bytes == 0 {
            return Err(Error::InvalidParameter("n_bytes must be >= 1".into()));
        }
        if self.cr > 3 {
            return Err(Error::InvalidParameter(format!(
                "code rate index {} out of range 0..=3",
                self.cr
            )));
        }
        if self.sr == 0 {
            return Err(Error::InvalidParameter("sr must be >= 1".into()));
        }
        Ok(())
    }
}

/// Accumulated error counts for one SIR point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BerEstimate {
    pub bit_errors: u64,
    pub bits_observed: u64,
    pub packet_errors: u64,
    pub packets_observed: u64,
    pub ber: f64,
    pub per: f64,
}

/// Outcome of a single collision trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialOutcome {
    pub bit_errors: u32,
    pub bits: u32,
    pub packet_error: bool,
}

/// Interferer amplitude for a given SIR in dB, with the reference at
/// amplitude 1: `A_i = 10^(-SIR/20)`.
pub fn amplitude_for_sir(sir_db: f64) -> f64 {
    10f64.powf(-sir_db / 20.0)
}

/// Draws a uniform shift: `n_int` over the interferer's chip alphabet and
/// `n_float` over the `sr` sub-chip positions.
pub fn draw_shift(rng: &mut impl Rng, m_i: u32, sr: u32) -> Shift {
    Shift {
        n_int: rng.random_range(0..m_i),
        n_float: rng.random_range(0..sr),
        sr,
    }
}

/// Samples the shifted interfering packet at the receiver's chip instants.
///
/// The interferer starts `t_shift` before the reference window, so receiver
/// sample `k` falls at interferer-local time `k·T + t_shift`. Sub-chip
/// arithmetic is done in integer ticks of `T/sr` to keep chip-aligned shifts
/// exactly on the discrete sample grid.
pub fn interferer_at_receiver(
    packet: &Packet,
    shift: Shift,
    params_i: &PhyParams,
    n_samples: usize,
) -> Result<Vec<ComplexSample>> {
    if packet.channel.sf != params_i.sf() {
        return Err(Error::InvalidInput(format!(
            "packet SF{} does not match params SF{}",
            packet.channel.sf,
            params_i.sf()
        )));
    }
    let sr = shift.sr as u64;
    let ticks_per_symbol = params_i.m() as u64 * sr;
    let ticks_per_second = params_i.bandwidth_hz() * shift.sr as f64;
    let offset_ticks = shift.n_int as u64 * sr + shift.n_float as u64;
    let family = packet.channel.family;
    let mut out = Vec::with_capacity(n_samples);
    for k in 0..n_samples as u64 {
        let ticks = k * sr + offset_ticks;
        let sym_idx = (ticks / ticks_per_symbol) as usize;
        let &symbol = packet
            .symbols
            .get(sym_idx)
            .ok_or(Error::CoverageViolation {
                sample: k as usize,
                symbol: sym_idx,
                available: packet.symbols.len(),
            })?;
        let t_local = (ticks % ticks_per_symbol) as f64 / ticks_per_second;
        let v = crate::waveform::chirp_value(params_i, family, symbol, t_local)?;
        out.push(packet.amplitude * v);
    }
    Ok(out)
}

/// Runs one collision trial: build both packets, sum, demodulate the
/// reference, count bit errors.
///
/// Draw order from `rng`: reference symbols, interferer symbols, then the
/// shift.
pub fn run_collision_trial(cfg: &CollisionConfig, rng: &mut impl Rng) -> Result<TrialOutcome> {
    let params_r = PhyParams::new(cfg.ref_channel.sf, cfg.bandwidth_hz)?;
    let params_i = PhyParams::new(cfg.int_channel.sf, cfg.bandwidth_hz)?;
    let n_bits = payload_bit_count(cfg.n_bytes, cfg.ref_channel.sf)?;
    let n_chirps_r = chirp_count(n_bits, cfg.cr, cfg.ref_channel.sf)?;
    let toa = time_on_air_chips(n_chirps_r, params_r.m() as u32);
    let n_chirps_i = interferer_chirp_count(toa, params_i.m() as u32);

    let ref_packet = random_packet(rng, cfg.ref_channel, n_chirps_r, 1.0);
    let int_packet = random_packet(rng, cfg.int_channel, n_chirps_i, amplitude_for_sir(cfg.sir_db));
    let shift = draw_shift(rng, params_i.m() as u32, cfg.sr);

    let mut received = ref_packet.samples(&params_r)?;
    debug_assert_eq!(received.len() as u64, toa);
    let interference = interferer_at_receiver(&int_packet, shift, &params_i, received.len())?;
    for (r, i) in received.iter_mut().zip(interference) {
        *r += i;
    }

    let decided = demodulate_packet(&received, &params_r, cfg.ref_channel.family, n_chirps_r as usize)?;
    let errors: u32 = ref_packet
        .symbols
        .iter()
        .zip(&decided)
        .map(|(&sent, &got)| bit_errors(sent, got, cfg.ref_channel.sf))
        .sum();
    Ok(TrialOutcome {
        bit_errors: errors,
        bits: n_chirps_r * cfg.ref_channel.sf as u32,
        packet_error: errors > 0,
    })
}

/// RNG for trial `trial` of a point seeded with `seed`: one ChaCha stream per
/// trial, independent of execution order.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// SplitMix64-style seed derivation for building independent seed chains,
/// e.g. per channel pair and per SIR grid point.
pub fn derive_seed(base: u64, tag: u64) -> u64 {
    splitmix64(base ^ splitmix64(tag))
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

const INITIAL_TRIAL_BATCH: u64 = 8;
const MAX_TRIAL_BATCH: u64 = 128;

/// Accumulates whole-packet trials until `min_errors` bit errors are observed
/// or `bits_observed` reaches `max_bits`.
///
/// Hitting `max_bits` with zero errors yields `ber = 0`; the recorded bit
/// count tells the caller the resolution of that zero. The result is
/// bit-identical for a given `(cfg, min_errors, max_bits, seed)` under any
/// driver and any degree of parallelism: counts are folded in trial order and
/// trial `i` depends only on `(seed, i)`.
pub fn estimate_ber(
    cfg: &CollisionConfig,
    min_errors: u64,
    max_bits: u64,
    seed: u64,
    exec: Exec,
) -> Result<BerEstimate> {
    cfg.validate()?;
    if min_errors == 0 {
        return Err(Error::InvalidParameter("min_errors must be >= 1".into()));
    }
    if max_bits == 0 {
        return Err(Error::InvalidParameter("max_bits must be >= 1".into()));
    }
    let mut bit_errors = 0u64;
    let mut bits = 0u64;
    let mut packet_errors = 0u64;
    let mut packets = 0u64;
    let mut next_trial = 0u64;
    let mut batch = INITIAL_TRIAL_BATCH;
    'accumulate: loop {
        let outcomes = run_batch(exec, next_trial..next_trial + batch, |i| {
            run_collision_trial(cfg, &mut trial_rng(seed, i))
        });
        for outcome in outcomes {
            let t = outcome?;
            bit_errors += t.bit_errors as u64;
            bits += t.bits as u64;
            packet_errors += t.packet_error as u64;
            packets += 1;
            if bit_errors >= min_errors || bits >= max_bits {
                break 'accumulate;
            }
        }
        next_trial += batch;
        batch = (batch * 2).min(MAX_TRIAL_BATCH);
    }
    Ok(BerEstimate {
        bit_errors,
        bits_observed: bits,
        packet_errors,
        packets_observed: packets,
        ber: bit_errors as f64 / bits as f64,
        per: packet_errors as f64 / packets as f64,
    })
}
