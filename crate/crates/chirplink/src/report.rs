//! Serialization of simulator artifacts: CSV tables, JSON mirrors, run
//! manifests, config files and binary IQ traces.
//!
//! All numeric text output uses `.` as the decimal separator regardless of
//! locale. JSON artifacts are deterministic for deterministic inputs, so
//! re-running with the same seed reproduces them byte for byte; the manifest
//! carries the timestamp and is written as a separate file for that reason.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::collision::BerEstimate;
use crate::error::{Error, Result};
use crate::params::{Channel, ComplexSample};
use crate::sweep::{BerCurve, SweepConfig, ThresholdMatrix};

/// CSV rendering of a BER curve, one row per evaluated grid point.
pub fn curve_to_csv(curve: &BerCurve) -> String {
    let mut out = String::from("sir_db,bits,bit_errors,ber,packets,packet_errors,per\n");
    for (sir_db, est) in &curve.points {
        let BerEstimate {
            bit_errors,
            bits_observed,
            packet_errors,
            packets_observed,
            ber,
            per,
        } = est;
        out.push_str(&format!(
            "{sir_db},{bits_observed},{bit_errors},{ber},{packets_observed},{packet_errors},{per}\n"
        ));
    }
    out
}

/// CSV rendering of the threshold matrix: rows are reference channels,
/// columns interfering channels. Unreached thresholds render as `NA`,
/// uncomputed pairs as empty cells.
pub fn matrix_to_csv(matrix: &ThresholdMatrix) -> String {
    let mut out = String::from("ref");
    for label in &matrix.channels {
        out.push(',');
        out.push_str(label);
    }
    out.push('\n');
    for (row, label) in matrix.entries.iter().zip(&matrix.channels) {
        out.push_str(label);
        for cell in row {
            out.push(',');
            if let Some(pair) = cell {
                match pair.threshold_db {
                    Some(db) => out.push_str(&format!("{db}")),
                    None => out.push_str("NA"),
                }
            }
        }
        out.push('\n');
    }
    out
}

/// Loads a sweep config from a JSON file. Missing keys take the default
/// values; unknown keys are rejected with the key named in the error.
pub fn load_sweep_config(path: &Path) -> Result<SweepConfig> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let cfg: SweepConfig = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    cfg.validate()?;
    Ok(cfg)
}

/// Writes a string artifact, mapping failures to an error carrying the path.
pub fn write_text(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Serializes a value as pretty JSON with a trailing newline.
pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable artifact");
    s.push('\n');
    s
}

/// Reads a threshold matrix back from its JSON mirror.
pub fn read_matrix_json(path: &Path) -> Result<ThresholdMatrix> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Everything needed to reproduce a run: tool identity, seed, the full
/// config snapshot and per-pair trial volumes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub created_utc: String,
    pub seed: u64,
    pub config: SweepConfig,
    pub pairs: Vec<ManifestPair>,
}

/// Trial volume for one computed channel pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestPair {
    pub ref_channel: String,
    pub int_channel: String,
    pub threshold_db: Option<f64>,
    pub points_evaluated: usize,
    pub partial_sweep: bool,
    pub bits: u64,
    pub bit_errors: u64,
    pub packets: u64,
    pub packet_errors: u64,
}

impl RunManifest {
    pub fn new(tool: &str, version: &str, created_utc: String, config: SweepConfig) -> Self {
        RunManifest {
            tool: tool.to_string(),
            version: version.to_string(),
            created_utc,
            seed: config.seed,
            config,
            pairs: Vec::new(),
        }
    }

    pub fn record_curve(&mut self, curve: &BerCurve, target_ber: f64) {
        self.pairs.push(ManifestPair {
            ref_channel: curve.ref_channel.label(),
            int_channel: curve.int_channel.label(),
            threshold_db: crate::sweep::threshold_from_curve(curve, target_ber),
            points_evaluated: curve.points.len(),
            partial_sweep: curve.partial,
            bits: curve.points.iter().map(|(_, e)| e.bits_observed).sum(),
            bit_errors: curve.points.iter().map(|(_, e)| e.bit_errors).sum(),
            packets: curve.points.iter().map(|(_, e)| e.packets_observed).sum(),
            packet_errors: curve.points.iter().map(|(_, e)| e.packet_errors).sum(),
        });
    }

    pub fn record_matrix(&mut self, matrix: &ThresholdMatrix) {
        let channels = Channel::all();
        for (r, row) in matrix.entries.iter().enumerate() {
            for (c, cell) in row.iter().enumerate() {
                if let Some(pair) = cell {
                    self.pairs.push(ManifestPair {
                        ref_channel: channels[r].label(),
                        int_channel: channels[c].label(),
                        threshold_db: pair.threshold_db,
                        points_evaluated: pair.points_evaluated,
                        partial_sweep: pair.partial_sweep,
                        bits: pair.bits,
                        bit_errors: pair.bit_errors,
                        packets: pair.packets,
                        packet_errors: pair.packet_errors,
                    });
                }
            }
        }
    }
}

/// A baseband IQ capture: chip-rate complex samples of one channel.
///
/// On disk the samples are interleaved little-endian `f32` pairs
/// `(re, im)`; a JSON sidecar at `<path>.json` carries the sample rate and
/// channel descriptor.
#[derive(Debug, Clone, PartialEq)]
pub struct IqTrace {
    pub sample_rate_hz: f64,
    pub channel: Channel,
    pub samples: Vec<ComplexSample>,
}

#[derive(Debug, Serialize, Deserialize)]
struct IqSidecar {
    sample_rate_hz: f64,
    channel: Channel,
    sample_count: usize,
}

impl IqTrace {
    /// Writes the raw sample file plus its JSON sidecar.
    pub fn write(&self, path: &Path) -> Result<()> {
        let io_err = |source| Error::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut file = fs::File::create(path).map_err(io_err)?;
        let mut bytes = Vec::with_capacity(self.samples.len() * 8);
        for s in &self.samples {
            bytes.extend_from_slice(&(s.re as f32).to_le_bytes());
            bytes.extend_from_slice(&(s.im as f32).to_le_bytes());
        }
        file.write_all(&bytes).map_err(io_err)?;
        let sidecar = IqSidecar {
            sample_rate_hz: self.sample_rate_hz,
            channel: self.channel,
            sample_count: self.samples.len(),
        };
        write_text(&sidecar_path(path), &to_json_string(&sidecar))
    }

    /// Reads a trace written by [`IqTrace::write`], sidecar included.
    pub fn read(path: &Path) -> Result<IqTrace> {
        let sidecar_file = sidecar_path(path);
        let text = fs::read_to_string(&sidecar_file).map_err(|source| Error::Io {
            path: sidecar_file.clone(),
            source,
        })?;
        let sidecar: IqSidecar = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: sidecar_file,
            message: e.to_string(),
        })?;
        let samples = read_iq_samples(path)?;
        if samples.len() != sidecar.sample_count {
            return Err(Error::InvalidInput(format!(
                "IQ file holds {} samples but the sidecar declares {}",
                samples.len(),
                sidecar.sample_count
            )));
        }
        Ok(IqTrace {
            sample_rate_hz: sidecar.sample_rate_hz,
            channel: sidecar.channel,
            samples,
        })
    }
}

/// Reads raw interleaved little-endian `f32` IQ pairs without a sidecar.
pub fn read_iq_samples(path: &Path) -> Result<Vec<ComplexSample>> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut bytes = Vec::new();
    fs::File::open(path)
        .map_err(io_err)?
        .read_to_end(&mut bytes)
        .map_err(io_err)?;
    if bytes.len() % 8 != 0 {
        return Err(Error::InvalidInput(format!(
            "IQ file length {} is not a multiple of 8 bytes (f32 re/im pairs)",
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|chunk| {
            let re = f32::from_le_bytes(chunk[0..4].try_into().unwrap());
            let im = f32::from_le_bytes(chunk[4..8].try_into().unwrap());
            ComplexSample::new(re as f64, im as f64)
        })
        .collect())
}

fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_os_string();
    s.push(".json");
    s.into()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::ChirpFamily;
    use crate::sweep::PairOutcome;

    fn sample_curve() -> BerCurve {
        BerCurve {
            ref_channel: Channel::new(7, ChirpFamily::Up).unwrap(),
            int_channel: Channel::new(8, ChirpFamily::Up).unwrap(),
            points: vec![(
                -10.0,
                BerEstimate {
                    bit_errors: 103,
                    bits_observed: 6930,
                    packet_errors: 30,
                    packets_observed: 33,
                    ber: 103.0 / 6930.0,
                    per: 30.0 / 33.0,
                },
            )],
            partial: true,
        }
    }

    #[test]
    fn curve_csv_shape_and_decimal_separator() {
        let csv = curve_to_csv(&sample_curve());
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "sir_db,bits,bit_errors,ber,packets,packet_errors,per"
        );
        let row = lines.next().unwrap();
        assert!(row.starts_with("-10,6930,103,0.014"), "{row}");
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields.len(), 7);
        assert!(fields[3].contains('.') && fields[6].contains('.'));
        assert!(lines.next().is_none());
    }

    #[test]
    fn matrix_csv_and_json_round_trip() {
        let mut entries: Vec<Vec<Option<PairOutcome>>> = vec![vec![None; 12]; 12];
        entries[0][1] = Some(PairOutcome {
            threshold_db: Some(-10.0),
            points_evaluated: 14,
            partial_sweep: true,
            bits: 123_456,
            bit_errors: 789,
            packets: 600,
            packet_errors: 120,
        });
        entries[0][6] = Some(PairOutcome {
            threshold_db: None,
            points_evaluated: 41,
            partial_sweep: false,
            bits: 9,
            bit_errors: 9,
            packets: 1,
            packet_errors: 1,
        });
        let matrix = ThresholdMatrix {
            channels: Channel::all().iter().map(|c| c.label()).collect(),
            entries,
        };

        let csv = matrix_to_csv(&matrix);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 13);
        assert_eq!(lines[0], "ref,7,8,9,10,11,12,7_D,8_D,9_D,10_D,11_D,12_D");
        let row7: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(row7[0], "7");
        assert_eq!(row7[2], "-10");
        assert_eq!(row7[7], "NA");
        assert_eq!(row7[3], "");

        let dir = std::env::temp_dir().join("chirplink_report_test");
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("matrix.json");
        write_text(&path, &to_json_string(&matrix)).unwrap();
        let back = read_matrix_json(&path).unwrap();
        assert_eq!(back, matrix);
    }

    #[test]
    fn config_loading_defaults_and_rejections() {
        let dir = std::env::temp_dir().join("chirplink_config_test");
        fs::create_dir_all(&dir).unwrap();

        let empty = dir.join("empty.json");
        write_text(&empty, "{}\n").unwrap();
        assert_eq!(load_sweep_config(&empty).unwrap(), SweepConfig::default());

        let partial = dir.join("partial.json");
        write_text(&partial, "{\"sr\": 1, \"seed\": 42}\n").unwrap();
        let cfg = load_sweep_config(&partial).unwrap();
        assert_eq!(cfg.sr, 1);
        assert_eq!(cfg.seed, 42);
        assert_eq!(cfg.n_bytes, 20);

        let invalid = dir.join("invalid.json");
        write_text(&invalid, "{\"sir_step_db\": 0}\n").unwrap();
        let msg = load_sweep_config(&invalid).unwrap_err().to_string();
        assert!(msg.contains("sir_step_db"), "{msg}");

        let unknown = dir.join("unknown.json");
        write_text(&unknown, "{\"sir_stepp\": 1}\n").unwrap();
        let msg = load_sweep_config(&unknown).unwrap_err().to_string();
        assert!(msg.contains("sir_stepp"), "{msg}");

        let missing = dir.join("does_not_exist.json");
        let msg = load_sweep_config(&missing).unwrap_err().to_string();
        assert!(msg.contains("does_not_exist.json"), "{msg}");
    }

    #[test]
    fn iq_trace_round_trips_at_f32_precision() {
        let dir = std::env::temp_dir().join("chirplink_iq_test");
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("trace.iq");
        let channel = Channel::new(7, ChirpFamily::Down).unwrap();
        let samples: Vec<ComplexSample> = (0..64)
            .map(|n| ComplexSample::new((n as f64 * 0.1).cos(), (n as f64 * 0.1).sin()))
            .collect();
        let trace = IqTrace {
            sample_rate_hz: 125_000.0,
            channel,
            samples: samples.clone(),
        };
        trace.write(&path).unwrap();

        let back = IqTrace::read(&path).unwrap();
        assert_eq!(back.sample_rate_hz, 125_000.0);
        assert_eq!(back.channel, channel);
        assert_eq!(back.samples.len(), samples.len());
        for (orig, round) in samples.iter().zip(&back.samples) {
            assert_eq!(round.re, orig.re as f32 as f64);
            assert_eq!(round.im, orig.im as f32 as f64);
        }
    }
}
