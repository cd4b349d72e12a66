//! Packet-size arithmetic, payload generation and bit-error accounting.
//!
//! Payload bytes are padded up to a whole number of interleaving blocks of
//! `4·SF` bits, then the chirp count follows from the coding rate
//! `4/(CR+4)`. No actual FEC is applied: the code rate only enters the
//! length arithmetic, and bit errors are counted on the raw demodulated
//! symbol bits.

use rand::Rng;

use crate::error::{Error, Result};
use crate::params::{Channel, ComplexSample, PhyParams, Symbol, MAX_SF, MIN_SF};
use crate::waveform::modulate_symbols;

/// Payload size and code rate of a simulated frame on one channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameConfig {
    pub n_bytes: u32,
    /// Code rate index, `0..=3`, for rate `4/(cr+4)`.
    pub cr: u8,
    pub channel: Channel,
}

impl FrameConfig {
    pub fn new(n_bytes: u32, cr: u8, channel: Channel) -> Result<Self> {
        if n_bytes == 0 {
            return Err(Error::InvalidParameter("n_bytes must be >= 1".into()));
        }
        if cr > 3 {
            return Err(Error::InvalidParameter(format!(
                "code rate index {cr} out of range 0..=3"
            )));
        }
        Ok(FrameConfig {
            n_bytes,
            cr,
            channel,
        })
    }

    /// Number of chirps in the frame after padding and coding.
    pub fn chirp_count(&self) -> Result<u32> {
        let bits = payload_bit_count(self.n_bytes, self.channel.sf)?;
        chirp_count(bits, self.cr, self.channel.sf)
    }
}

/// Pads `8·n_bytes` payload bits up to the next multiple of `4·sf`.
pub fn payload_bit_count(n_bytes: u32, sf: u8) -> Result<u32> {
    if n_bytes == 0 {
        return Err(Error::InvalidParameter("n_bytes must be >= 1".into()));
    }
    if !(MIN_SF..=MAX_SF).contains(&sf) {
        return Err(Error::InvalidParameter(format!(
            "spreading factor {sf} out of range {MIN_SF}..={MAX_SF}"
        )));
    }
    let block = 4 * sf as u32;
    Ok((8 * n_bytes).div_ceil(block) * block)
}

/// Number of chirps carrying `n_bits` payload bits at code rate `4/(cr+4)`.
pub fn chirp_count(n_bits: u32, cr: u8, sf: u8) -> Result<u32> {
    if n_bits == 0 {
        return Err(Error::InvalidParameter("n_bits must be >= 1".into()));
    }
    if cr > 3 {
        return Err(Error::InvalidParameter(format!(
            "code rate index {cr} out of range 0..=3"
        )));
    }
    if !(MIN_SF..=MAX_SF).contains(&sf) {
        return Err(Error::InvalidParameter(format!(
            "spreading factor {sf} out of range {MIN_SF}..={MAX_SF}"
        )));
    }
    Ok((n_bits * (cr as u32 + 4)).div_ceil(4 * sf as u32))
}

/// Packet duration in chip periods: `n_chirps · m`.
pub fn time_on_air_chips(n_chirps: u32, m: u32) -> u64 {
    n_chirps as u64 * m as u64
}

/// Number of chirps the interfering packet needs to cover a reference packet
/// of `toa_chips` chips under any admissible shift.
///
/// The extra symbol absorbs shifts of up to one interferer symbol period, so
/// `result · m_i >= toa_chips + m_i` always holds.
pub fn interferer_chirp_count(toa_chips: u64, m_i: u32) -> u32 {
    (toa_chips.div_ceil(m_i as u64) + 1) as u32
}

/// A symbol sequence on one channel with a linear amplitude.
#[derive(Debug, Clone, PartialEq)]
pub struct Packet {
    pub channel: Channel,
    pub symbols: Vec<Symbol>,
    pub amplitude: f64,
}

impl Packet {
    /// Chip-rate baseband samples of the whole packet, scaled by its
    /// amplitude.
    pub fn samples(&self, params: &PhyParams) -> Result<Vec<ComplexSample>> {
        let mut out = modulate_symbols(params, self.channel.family, &self.symbols)?;
        if self.amplitude != 1.0 {
            for v in &mut out {
                *v *= self.amplitude;
            }
        }
        Ok(out)
    }
}

/// Draws `n_chirps` i.i.d. uniform symbols on the channel's alphabet.
pub fn random_packet(
    rng: &mut impl Rng,
    channel: Channel,
    n_chirps: u32,
    amplitude: f64,
) -> Packet {
    let m = 1u16 << channel.sf;
    let symbols = (0..n_chirps).map(|_| rng.random_range(0..m)).collect();
    Packet {
        channel,
        symbols,
        amplitude,
    }
}

/// Hamming distance between the `sf`-bit natural binary representations of
/// two symbols.
pub fn bit_errors(sent: Symbol, received: Symbol, sf: u8) -> u32 {
    debug_assert!(sent < (1 << sf) && received < (1 << sf));
    (sent ^ received).count_ones()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::ChirpFamily;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn payload_bit_count_reference_values() {
        assert_eq!(payload_bit_count(20, 7).unwrap(), 168);
        assert_eq!(payload_bit_count(20, 12).unwrap(), 192);
        assert_eq!(payload_bit_count(1, 7).unwrap(), 28);
    }

    #[test]
    fn payload_bit_count_rejects_bad_input() {
        assert!(payload_bit_count(0, 7).is_err());
        assert!(payload_bit_count(20, 6).is_err());
        assert!(payload_bit_count(20, 13).is_err());
    }

    #[test]
    fn payload_bit_count_block_aligned_for_all_sizes() {
        for sf in MIN_SF..=MAX_SF {
            for n in 1..=255u32 {
                let bits = payload_bit_count(n, sf).unwrap();
                assert_eq!(bits % (4 * sf as u32), 0);
                assert!(bits >= 8 * n);
                assert!(bits < 8 * n + 4 * sf as u32);
            }
        }
    }

    #[test]
    fn chirp_count_reference_values() {
        assert_eq!(chirp_count(168, 1, 7).unwrap(), 30);
        assert_eq!(chirp_count(192, 1, 12).unwrap(), 20);
        assert_eq!(chirp_count(28, 0, 7).unwrap(), 4);
        assert!(chirp_count(168, 4, 7).is_err());
        assert!(chirp_count(0, 1, 7).is_err());
    }

    #[test]
    fn time_on_air_reference_values() {
        assert_eq!(time_on_air_chips(30, 128), 3840);
        assert_eq!(time_on_air_chips(20, 4096), 81920);
        assert_eq!(time_on_air_chips(1, 128), 128);
    }

    #[test]
    fn interferer_chirp_count_reference_values() {
        assert_eq!(interferer_chirp_count(3840, 256), 16);
        assert_eq!(interferer_chirp_count(3840, 128), 31);
        assert_eq!(interferer_chirp_count(1, 128), 2);
    }

    #[test]
    fn interferer_always_covers_reference_plus_shift() {
        // Any shift below one interferer symbol is absorbed by the +1.
        for sf_r in MIN_SF..=MAX_SF {
            for sf_i in MIN_SF..=MAX_SF {
                let m_r = 1u32 << sf_r;
                let m_i = 1u32 << sf_i;
                let n_chirps = chirp_count(payload_bit_count(20, sf_r).unwrap(), 1, sf_r).unwrap();
                let toa = time_on_air_chips(n_chirps, m_r);
                let n_i = interferer_chirp_count(toa, m_i);
                assert!(n_i as u64 * m_i as u64 >= toa + m_i as u64);
            }
        }
    }

    #[test]
    fn frame_config_matches_composed_arithmetic() {
        let ch = Channel::new(7, ChirpFamily::Up).unwrap();
        let frame = FrameConfig::new(20, 1, ch).unwrap();
        assert_eq!(frame.chirp_count().unwrap(), 30);
        assert!(FrameConfig::new(0, 1, ch).is_err());
        assert!(FrameConfig::new(20, 4, ch).is_err());
    }

    #[test]
    fn random_packet_is_reproducible_and_in_range() {
        let ch = Channel::new(7, ChirpFamily::Up).unwrap();
        let a = random_packet(&mut ChaCha8Rng::seed_from_u64(9), ch, 30, 1.0);
        let b = random_packet(&mut ChaCha8Rng::seed_from_u64(9), ch, 30, 1.0);
        assert_eq!(a, b);
        assert_eq!(a.symbols.len(), 30);
        assert!(a.symbols.iter().all(|&s| s < 128));
    }

    #[test]
    fn random_packet_symbols_are_uniform() {
        // 10^5 draws at SF7: each of the 128 values should land within 5σ of
        // the expected count, σ = sqrt(N·p·(1-p)).
        let ch = Channel::new(7, ChirpFamily::Up).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let n = 100_000u32;
        let pkt = random_packet(&mut rng, ch, n, 1.0);
        let mut counts = [0u32; 128];
        for &s in &pkt.symbols {
            counts[s as usize] += 1;
        }
        let p = 1.0 / 128.0;
        let mean = n as f64 * p;
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        for (v, &c) in counts.iter().enumerate() {
            assert!(
                (c as f64 - mean).abs() < 5.0 * sigma,
                "value {v}: count {c}, mean {mean:.1}"
            );
        }
    }

    #[test]
    fn bit_error_reference_values() {
        assert_eq!(bit_errors(5, 5, 7), 0);
        assert_eq!(bit_errors(0, 1, 7), 1);
        assert_eq!(bit_errors(0, 127, 7), 7);
    }

    proptest! {
        #[test]
        fn bit_errors_is_a_metric(a in 0u16..128, b in 0u16..128, c in 0u16..128) {
            let dab = bit_errors(a, b, 7);
            let dba = bit_errors(b, a, 7);
            prop_assert_eq!(dab, dba);
            prop_assert_eq!(dab == 0, a == b);
            prop_assert!(dab <= 7);
            prop_assert!(bit_errors(a, c, 7) <= dab + bit_errors(b, c, 7));
        }
    }
}
