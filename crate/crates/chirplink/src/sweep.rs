//! SIR grid sweeps, threshold extraction and the 12×12 isolation matrix.
//!
//! For each (reference, interferer) channel pair the BER is estimated on an
//! ascending SIR grid. The isolation threshold is the first grid point from
//! which the estimated BER stays at or below the target for every higher
//! evaluated point; a single Monte-Carlo dip below target does not count.
//! Sweeps may stop early once the crossing has been confirmed on
//! [`CONFIRM_POINTS`] consecutive grid points, in which case the curve is
//! marked partial.

use serde::{Deserialize, Serialize};

use crate::collision::{derive_seed, estimate_ber, BerEstimate, CollisionConfig};
use crate::error::{Error, Result};
use crate::exec::{run_batch, Exec};
use crate::params::{Channel, CHANNEL_COUNT};

/// Consecutive at-or-below-target grid points required before an early-exit
/// sweep stops.
pub const CONFIRM_POINTS: usize = 3;

/// Sweep parameters. The defaults are the reference simulation setup:
/// 125 kHz bandwidth, code rate 4/5, 20-byte payloads, SIR from −30 to
/// +10 dB in 1 dB steps, target BER 0.01, at least 100 bit errors per point
/// and 100 sub-chip shift positions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub sir_min_db: f64,
    pub sir_max_db: f64,
    pub sir_step_db: f64,
    pub target_ber: f64,
    pub min_errors: u64,
    pub max_bits: u64,
    pub sr: u32,
    pub n_bytes: u32,
    pub cr: u8,
    pub bandwidth_hz: f64,
    pub seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            sir_min_db: -30.0,
            sir_max_db: 10.0,
            sir_step_db: 1.0,
            target_ber: 0.01,
            min_errors: 100,
            max_bits: 10_000_000,
            sr: 100,
            n_bytes: 20,
            cr: 1,
            bandwidth_hz: 125_000.0,
            seed: 0,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !self.sir_min_db.is_finite() || !self.sir_max_db.is_finite() {
            return bad(format!(
                "sir_min_db/sir_max_db must be finite, got {} and {}",
                self.sir_min_db, self.sir_max_db
            ));
        }
        if self.sir_min_db > self.sir_max_db {
            return bad(format!(
                "sir_min_db ({}) must not exceed sir_max_db ({})",
                self.sir_min_db, self.sir_max_db
            ));
        }
        if !(self.sir_step_db.is_finite() && self.sir_step_db > 0.0) {
            return bad(format!("sir_step_db must be > 0, got {}", self.sir_step_db));
        }
        if !(self.target_ber > 0.0 && self.target_ber < 1.0) {
            return bad(format!(
                "target_ber must lie in (0, 1), got {}",
                self.target_ber
            ));
        }
        if self.min_errors == 0 {
            return bad("min_errors must be >= 1".into());
        }
        if self.max_bits == 0 {
            return bad("max_bits must be >= 1".into());
        }
        if self.sr == 0 {
            return bad("sr must be >= 1".into());
        }
        if self.n_bytes == 0 {
            return bad("n_bytes must be >= 1".into());
        }
        if self.cr > 3 {
            return bad(format!("cr must lie in 0..=3, got {}", self.cr));
        }
        if !(self.bandwidth_hz.is_finite() && self.bandwidth_hz > 0.0) {
            return bad(format!(
                "bandwidth_hz must be > 0, got {}",
                self.bandwidth_hz
            ));
        }
        Ok(())
    }

    fn collision_config(&self, ref_channel: Channel, int_channel: Channel, sir_db: f64) -> CollisionConfig {
        CollisionConfig {
            ref_channel,
            int_channel,
            sir_db,
            n_bytes: self.n_bytes,
            cr: self.cr,
            sr: self.sr,
            bandwidth_hz: self.bandwidth_hz,
        }
    }
}

/// The ascending SIR grid `sir_min, sir_min + step, …` up to `sir_max`
/// inclusive. A single-point grid (`sir_min == sir_max`) is allowed.
pub fn sir_grid(cfg: &SweepConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let span = cfg.sir_max_db - cfg.sir_min_db;
    // tolerate round-off at the top of the grid
    let count = (span / cfg.sir_step_db + 1e-9).floor() as usize + 1;
    Ok((0..count)
        .map(|i| cfg.sir_min_db + i as f64 * cfg.sir_step_db)
        .collect())
}

/// Whether a sweep evaluates the full grid or may stop after the threshold
/// crossing has been confirmed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMode {
    FullGrid,
    EarlyExit,
}

/// BER estimates for one channel pair over the evaluated part of the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerCurve {
    pub ref_channel: Channel,
    pub int_channel: Channel,
    /// `(sir_db, estimate)` per evaluated grid point, ascending in SIR.
    pub points: Vec<(f64, BerEstimate)>,
    /// True when an early exit skipped the remaining grid points.
    pub partial: bool,
}

/// Sweeps one channel pair across the SIR grid.
///
/// Each grid point gets its own seed derived from the config seed, the pair
/// and the point index, so any sub-grid is consistent with the full grid.
pub fn sweep_pair(
    ref_channel: Channel,
    int_channel: Channel,
    cfg: &SweepConfig,
    mode: SweepMode,
    exec: Exec,
) -> Result<BerCurve> {
    let grid = sir_grid(cfg)?;
    let pair_seed = pair_seed(cfg.seed, ref_channel, int_channel);
    let mut points = Vec::new();
    let mut consecutive_ok = 0usize;
    let mut partial = false;
    for (i, &sir_db) in grid.iter().enumerate() {
        let point_seed = derive_seed(pair_seed, i as u64);
        let ccfg = cfg.collision_config(ref_channel, int_channel, sir_db);
        let est = estimate_ber(&ccfg, cfg.min_errors, cfg.max_bits, point_seed, exec)?;
        consecutive_ok = if est.ber <= cfg.target_ber {
            consecutive_ok + 1
        } else {
            0
        };
        points.push((sir_db, est));
        if mode == SweepMode::EarlyExit && consecutive_ok >= CONFIRM_POINTS && i + 1 < grid.len() {
            partial = true;
            break;
        }
    }
    Ok(BerCurve {
        ref_channel,
        int_channel,
        points,
        partial,
    })
}

fn pair_seed(seed: u64, ref_channel: Channel, int_channel: Channel) -> u64 {
    derive_seed(
        seed,
        (ref_channel.index() as u64) * CHANNEL_COUNT as u64 + int_channel.index() as u64,
    )
}

/// Reads the isolation threshold off a BER curve: the lowest evaluated SIR
/// from which the estimate stays at or below `target_ber` on every higher
/// evaluated point. `None` when no such point exists.
pub fn threshold_from_curve(curve: &BerCurve, target_ber: f64) -> Option<f64> {
    let points = &curve.points;
    let mut start = points.len();
    while start > 0 && points[start - 1].1.ber <= target_ber {
        start -= 1;
    }
    if start == points.len() {
        None
    } else {
        Some(points[start].0)
    }
}

/// Result of one channel pair in the matrix: the threshold (if reached on the
/// grid) plus the trial volume behind it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairOutcome {
    pub threshold_db: Option<f64>,
    pub points_evaluated: usize,
    pub partial_sweep: bool,
    pub bits: u64,
    pub bit_errors: u64,
    pub packets: u64,
    pub packet_errors: u64,
}

impl PairOutcome {
    fn from_curve(curve: &BerCurve, target_ber: f64) -> Self {
        PairOutcome {
            threshold_db: threshold_from_curve(curve, target_ber),
            points_evaluated: curve.points.len(),
            partial_sweep: curve.partial,
            bits: curve.points.iter().map(|(_, e)| e.bits_observed).sum(),
            bit_errors: curve.points.iter().map(|(_, e)| e.bit_errors).sum(),
            packets: curve.points.iter().map(|(_, e)| e.packets_observed).sum(),
            packet_errors: curve.points.iter().map(|(_, e)| e.packet_errors).sum(),
        }
    }
}

/// 12×12 SIR isolation thresholds: rows are the reference channel, columns
/// the interfering channel, both in [`Channel::all`] order. Cells are `None`
/// when the pair was not computed (filtered runs).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdMatrix {
    /// Row/column labels, `7..12` then `7_D..12_D`.
    pub channels: Vec<String>,
    /// `entries[ref][int]`.
    pub entries: Vec<Vec<Option<PairOutcome>>>,
}

impl ThresholdMatrix {
    pub fn entry(&self, ref_channel: Channel, int_channel: Channel) -> &Option<PairOutcome> {
        &self.entries[ref_channel.index()][int_channel.index()]
    }

    /// True when every one of the 144 pairs has been computed.
    pub fn complete(&self) -> bool {
        self.entries
            .iter()
            .flatten()
            .all(|cell| cell.is_some())
    }
}

/// Builds the isolation matrix for every channel pair, or for `filter` only.
///
/// Pair seeds depend on the pair identity and the config seed, never on the
/// filter, so a filtered run reproduces the corresponding cells of the full
/// matrix exactly. Sweeps use early exit.
pub fn build_matrix(
    cfg: &SweepConfig,
    filter: Option<&[(Channel, Channel)]>,
    exec: Exec,
) -> Result<ThresholdMatrix> {
    cfg.validate()?;
    let all = Channel::all();
    let pairs: Vec<(Channel, Channel)> = match filter {
        Some(list) => list.to_vec(),
        None => all
            .iter()
            .flat_map(|&r| all.iter().map(move |&i| (r, i)))
            .collect(),
    };
    let outcomes = run_batch(exec, 0..pairs.len() as u64, |idx| {
        let (r, i) = pairs[idx as usize];
        sweep_pair(r, i, cfg, SweepMode::EarlyExit, exec)
            .map(|curve| (r, i, PairOutcome::from_curve(&curve, cfg.target_ber)))
    });
    let mut entries: Vec<Vec<Option<PairOutcome>>> =
        vec![vec![None; CHANNEL_COUNT]; CHANNEL_COUNT];
    for outcome in outcomes {
        let (r, i, cell) = outcome?;
        entries[r.index()][i.index()] = Some(cell);
    }
    Ok(ThresholdMatrix {
        channels: all.iter().map(|c| c.label()).collect(),
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::ChirpFamily;

    fn estimate(ber: f64) -> BerEstimate {
        BerEstimate {
            bit_errors: (ber * 10_000.0) as u64,
            bits_observed: 10_000,
            packet_errors: 0,
            packets_observed: 10,
            ber,
            per: 0.0,
        }
    }

    fn curve(points: &[(f64, f64)]) -> BerCurve {
        BerCurve {
            ref_channel: Channel::new(7, ChirpFamily::Up).unwrap(),
            int_channel: Channel::new(8, ChirpFamily::Up).unwrap(),
            points: points.iter().map(|&(s, b)| (s, estimate(b))).collect(),
            partial: false,
        }
    }

    #[test]
    fn default_grid_is_41_points() {
        let grid = sir_grid(&SweepConfig::default()).unwrap();
        assert_eq!(grid.len(), 41);
        assert_eq!(grid[0], -30.0);
        assert_eq!(grid[40], 10.0);
        for w in grid.windows(2) {
            assert!((w[1] - w[0] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn grid_edge_cases() {
        let mut cfg = SweepConfig {
            sir_min_db: 0.0,
            sir_max_db: 1.0,
            ..SweepConfig::default()
        };
        assert_eq!(sir_grid(&cfg).unwrap(), vec![0.0, 1.0]);

        cfg.sir_max_db = 0.0;
        assert_eq!(sir_grid(&cfg).unwrap(), vec![0.0]);

        cfg.sir_min_db = 1.0;
        assert!(sir_grid(&cfg).is_err());

        cfg.sir_min_db = 0.0;
        cfg.sir_step_db = 0.0;
        assert!(sir_grid(&cfg).is_err());
    }

    #[test]
    fn threshold_is_first_sustained_crossing() {
        let c = curve(&[(-3.0, 0.5), (-2.0, 0.2), (-1.0, 0.009), (0.0, 0.001)]);
        assert_eq!(threshold_from_curve(&c, 0.01), Some(-1.0));
    }

    #[test]
    fn threshold_unreachable_when_never_below_target() {
        let c = curve(&[(-3.0, 0.5), (-2.0, 0.2), (-1.0, 0.09), (0.0, 0.03)]);
        assert_eq!(threshold_from_curve(&c, 0.01), None);
    }

    #[test]
    fn single_dip_does_not_set_the_threshold() {
        let c = curve(&[
            (-5.0, 0.04),
            (-4.0, 0.008),
            (-3.0, 0.02),
            (-2.0, 0.005),
            (-1.0, 0.001),
        ]);
        assert_eq!(threshold_from_curve(&c, 0.01), Some(-2.0));
    }

    #[test]
    fn threshold_at_last_point_only() {
        let c = curve(&[(-2.0, 0.2), (-1.0, 0.009)]);
        assert_eq!(threshold_from_curve(&c, 0.01), Some(-1.0));
    }

    #[test]
    fn config_validation_names_the_offending_key() {
        let mut cfg = SweepConfig {
            sir_step_db: 0.0,
            ..SweepConfig::default()
        };
        let msg = cfg.validate().unwrap_err().to_string();
        assert!(msg.contains("sir_step_db"), "{msg}");

        cfg.sir_step_db = 1.0;
        cfg.target_ber = 1.5;
        assert!(cfg.validate().unwrap_err().to_string().contains("target_ber"));

        cfg.target_ber = 0.01;
        cfg.cr = 9;
        assert!(cfg.validate().unwrap_err().to_string().contains("cr"));
    }

    #[test]
    fn quick_sweep_produces_ascending_curve_with_early_exit() {
        // Deliberately coarse budget: this exercises the plumbing, not the
        // physics.
        let cfg = SweepConfig {
            sir_min_db: -16.0,
            sir_max_db: 0.0,
            sir_step_db: 2.0,
            min_errors: 20,
            max_bits: 5_000,
            seed: 5,
            ..SweepConfig::default()
        };
        let r = Channel::new(7, ChirpFamily::Up).unwrap();
        let i = Channel::new(8, ChirpFamily::Up).unwrap();
        let curve = sweep_pair(r, i, &cfg, SweepMode::EarlyExit, Exec::Auto).unwrap();
        assert!(!curve.points.is_empty());
        for w in curve.points.windows(2) {
            assert!(w[0].0 < w[1].0);
        }
        if curve.partial {
            assert!(curve.points.len() < sir_grid(&cfg).unwrap().len());
            let tail = &curve.points[curve.points.len() - CONFIRM_POINTS..];
            assert!(tail.iter().all(|(_, e)| e.ber <= cfg.target_ber));
        }
        // a sub-grid re-run reproduces the same estimates per grid index
        let again = sweep_pair(r, i, &cfg, SweepMode::EarlyExit, Exec::Sequential).unwrap();
        assert_eq!(curve, again);
    }

    #[test]
    fn filtered_matrix_fills_only_requested_cells() {
        let cfg = SweepConfig {
            sir_min_db: -6.0,
            sir_max_db: -4.0,
            sir_step_db: 1.0,
            min_errors: 10,
            max_bits: 2_000,
            seed: 9,
            ..SweepConfig::default()
        };
        let r = Channel::new(7, ChirpFamily::Up).unwrap();
        let i = Channel::new(7, ChirpFamily::Down).unwrap();
        let m = build_matrix(&cfg, Some(&[(r, i)]), Exec::Auto).unwrap();
        assert!(!m.complete());
        assert!(m.entry(r, i).is_some());
        let filled: usize = m
            .entries
            .iter()
            .flatten()
            .filter(|cell| cell.is_some())
            .count();
        assert_eq!(filled, 1);

        // the same cell out of a two-pair run is bit-identical
        let m2 = build_matrix(&cfg, Some(&[(i, r), (r, i)]), Exec::Sequential).unwrap();
        assert_eq!(m.entry(r, i), m2.entry(r, i));
    }
}
