//! SNR-controlled mixing of background noise into clean utterances.
//!
//! SNR is measured over whole-utterance RMS. The noisy slice is added
//! without renormalization; samples pushed outside [-1, 1] are hard-clipped
//! and counted. Only 16-bit PCM mono WAV is read and written.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AugmentError {
    #[error("waveform is empty")]
    EmptyInput,
    #[error("noise has zero energy")]
    ZeroNoise,
    #[error("sample rates differ: signal {signal} Hz, noise {noise} Hz")]
    RateMismatch { signal: u32, noise: u32 },
    #[error("noise ({noise} samples) is shorter than the signal ({signal} samples)")]
    NoiseTooShort { signal: usize, noise: usize },
    #[error("{path}: only 16-bit PCM mono WAV is supported")]
    UnsupportedFormat { path: PathBuf },
    #[error("{path}: {source}")]
    Wav { path: PathBuf, source: hound::Error },
    #[error("invalid SNR level '{0}'")]
    BadLevel(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    /// Samples in [-1, 1].
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Self {
        Self { samples, sample_rate }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

pub fn measure_rms(w: &Waveform) -> Result<f64, AugmentError> {
    if w.is_empty() {
        return Err(AugmentError::EmptyInput);
    }
    let sum: f64 = w.samples.iter().map(|x| x * x).sum();
    Ok((sum / w.len() as f64).sqrt())
}

/// Noise gain giving `snr_db` between the signal and the scaled noise.
pub fn snr_gain(signal_rms: f64, noise_rms: f64, snr_db: f64) -> Result<f64, AugmentError> {
    if noise_rms <= 0.0 {
        return Err(AugmentError::ZeroNoise);
    }
    Ok(signal_rms / noise_rms * 10f64.powf(-snr_db / 20.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mixed {
    pub waveform: Waveform,
    /// Start of the noise slice, in samples.
    pub offset: usize,
    pub gain: f64,
    pub clipped: usize,
}

/// Adds a seeded random slice of `noise` to `signal` at `snr_db`.
/// `f64::INFINITY` means no noise: the signal is returned unchanged.
pub fn mix_at_snr(signal: &Waveform, noise: &Waveform, snr_db: f64, seed: u64) -> Result<Mixed, AugmentError> {
    if signal.is_empty() {
        return Err(AugmentError::EmptyInput);
    }
    if snr_db == f64::INFINITY {
        return Ok(Mixed {
            waveform: signal.clone(),
            offset: 0,
            gain: 0.0,
            clipped: 0,
        });
    }
    if signal.sample_rate != noise.sample_rate {
        return Err(AugmentError::RateMismatch {
            signal: signal.sample_rate,
            noise: noise.sample_rate,
        });
    }
    if noise.len() < signal.len() {
        return Err(AugmentError::NoiseTooShort {
            signal: signal.len(),
            noise: noise.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let offset = rng.random_range(0..=noise.len() - signal.len());
    let slice = &noise.samples[offset..offset + signal.len()];
    let noise_rms = measure_rms(&Waveform::new(slice.to_vec(), noise.sample_rate))?;
    let gain = snr_gain(measure_rms(signal)?, noise_rms, snr_db)?;
    let mut clipped = 0;
    let samples = signal
        .samples
        .iter()
        .zip(slice)
        .map(|(s, n)| {
            let x = s + gain * n;
            if x.abs() > 1.0 {
                clipped += 1;
                x.clamp(-1.0, 1.0)
            } else {
                x
            }
        })
        .collect();
    Ok(Mixed {
        waveform: Waveform::new(samples, signal.sample_rate),
        offset,
        gain,
        clipped,
    })
}

pub fn read_wav(path: &Path) -> Result<Waveform, AugmentError> {
    let wav_err = |source| AugmentError::Wav {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = hound::WavReader::open(path).map_err(wav_err)?;
    let spec = reader.spec();
    if spec.channels != 1 || spec.bits_per_sample != 16 || spec.sample_format != hound::SampleFormat::Int {
        return Err(AugmentError::UnsupportedFormat {
            path: path.to_path_buf(),
        });
    }
    let samples = reader
        .samples::<i16>()
        .map(|s| s.map(|v| f64::from(v) / 32768.0))
        .collect::<Result<Vec<_>, _>>()
        .map_err(wav_err)?;
    Ok(Waveform::new(samples, spec.sample_rate))
}

pub fn write_wav(path: &Path, w: &Waveform) -> Result<(), AugmentError> {
    let wav_err = |source| AugmentError::Wav {
        path: path.to_path_buf(),
        source,
    };
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: w.sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(wav_err)?;
    for &x in &w.samples {
        let v = (x * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        writer.write_sample(v).map_err(wav_err)?;
    }
    writer.finalize().map_err(wav_err)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnrSpec {
    pub levels: Vec<f64>,
    pub seed: u64,
}

impl Default for SnrSpec {
    fn default() -> Self {
        Self {
            levels: vec![5.0, 10.0, 20.0],
            seed: 0,
        }
    }
}

/// Parses `5,10,20`.
pub fn parse_levels(text: &str) -> Result<Vec<f64>, AugmentError> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| AugmentError::BadLevel(s.to_string()))
        })
        .collect()
}

/// One line per input path; blank lines and `#` comments are skipped.
/// Relative paths are taken relative to the manifest's directory.
pub fn read_manifest(path: &Path) -> Result<Vec<PathBuf>, AugmentError> {
    let base = path.parent().unwrap_or(Path::new("."));
    Ok(fs::read_to_string(path)?
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| base.join(l))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRow {
    pub input: String,
    pub level: f64,
    pub offset_samples: usize,
    pub gain: f64,
    pub clipped_samples: usize,
}

#[derive(Debug, Default)]
pub struct CorpusReport {
    pub rows: Vec<ManifestRow>,
    pub outputs: Vec<PathBuf>,
    /// Inputs that failed, with the reason. The run continues past them.
    pub errors: Vec<(PathBuf, String)>,
}

/// 64-bit FNV-1a.
fn fnv1a(text: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in text.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Seed for one input: the run seed xor a hash of the file stem.
pub fn entry_seed(seed: u64, stem: &str) -> u64 {
    seed ^ fnv1a(stem)
}

pub const OUTPUT_MANIFEST: &str = "manifest.csv";

/// Mixes every input at every level into `out_dir/<stem>.snr<level>.wav`
/// and writes `out_dir/manifest.csv`.
pub fn augment_corpus(inputs: &[PathBuf], noise_path: &Path, spec: &SnrSpec, out_dir: &Path) -> Result<CorpusReport, AugmentError> {
    let noise = read_wav(noise_path)?;
    fs::create_dir_all(out_dir)?;
    let mut report = CorpusReport::default();
    for input in inputs {
        if let Err(e) = augment_one(input, &noise, spec, out_dir, &mut report) {
            report.errors.push((input.clone(), e.to_string()));
        }
    }
    let mut csv = csv::Writer::from_path(out_dir.join(OUTPUT_MANIFEST))?;
    for row in &report.rows {
        csv.serialize(row)?;
    }
    if report.rows.is_empty() {
        csv.write_record(["input", "level", "offset_samples", "gain", "clipped_samples"])?;
    }
    csv.flush()?;
    Ok(report)
}

fn augment_one(
    input: &Path,
    noise: &Waveform,
    spec: &SnrSpec,
    out_dir: &Path,
    report: &mut CorpusReport,
) -> Result<(), AugmentError> {
    let signal = read_wav(input)?;
    let stem = input
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let seed = entry_seed(spec.seed, &stem);
    // Mix every level before writing anything so a failure leaves no
    // partial set of outputs for this input.
    let mixes = spec
        .levels
        .iter()
        .enumerate()
        .map(|(k, &level)| mix_at_snr(&signal, noise, level, seed.wrapping_add(k as u64)).map(|m| (level, m)))
        .collect::<Result<Vec<_>, _>>()?;
    for (level, m) in mixes {
        let out = out_dir.join(format!("{stem}.snr{level}.wav"));
        write_wav(&out, &m.waveform)?;
        report.rows.push(ManifestRow {
            input: input.display().to_string(),
            level,
            offset_samples: m.offset,
            gain: m.gain,
            clipped_samples: m.clipped,
        });
        report.outputs.push(out);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sine(n: usize, amp: f64) -> Waveform {
        let samples = (0..n)
            .map(|i| amp * (2.0 * std::f64::consts::PI * 440.0 * i as f64 / 16000.0).sin())
            .collect();
        Waveform::new(samples, 16000)
    }

    #[test]
    fn rms_examples() {
        assert_eq!(measure_rms(&Waveform::new(vec![0.5; 100], 8000)).unwrap(), 0.5);
        assert_eq!(measure_rms(&Waveform::new(vec![0.0; 100], 8000)).unwrap(), 0.0);
        let unit = sine(16000, 1.0);
        assert!((measure_rms(&unit).unwrap() - 1.0 / 2f64.sqrt()).abs() < 1e-6);
        assert!(matches!(
            measure_rms(&Waveform::new(vec![], 8000)),
            Err(AugmentError::EmptyInput)
        ));
    }

    #[test]
    fn gain_examples() {
        assert!((snr_gain(0.2, 0.1, 20.0).unwrap() - 0.2).abs() < 1e-12);
        assert!((snr_gain(0.1, 0.1, 0.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((snr_gain(0.1, 0.1, 5.0).unwrap() - 0.5623).abs() < 1e-4);
        assert!(matches!(snr_gain(0.1, 0.0, 5.0), Err(AugmentError::ZeroNoise)));
    }

    #[test]
    fn infinite_snr_is_identity() {
        let s = sine(100, 0.3);
        let noise = Waveform::new(vec![0.1; 10], 8000);
        let m = mix_at_snr(&s, &noise, f64::INFINITY, 1).unwrap();
        assert_eq!(m.waveform, s);
        assert_eq!(m.clipped, 0);
    }

    #[test]
    fn mix_preconditions_and_determinism() {
        let s = sine(100, 0.3);
        let noise = Waveform::new((0..1000).map(|i| ((i * 7919) % 200) as f64 / 1000.0 - 0.1).collect(), 16000);
        let a = mix_at_snr(&s, &noise, 10.0, 42).unwrap();
        assert_eq!(a, mix_at_snr(&s, &noise, 10.0, 42).unwrap());
        assert_eq!(a.waveform.len(), s.len());
        let offsets: std::collections::BTreeSet<usize> =
            (0..8).map(|seed| mix_at_snr(&s, &noise, 10.0, seed).unwrap().offset).collect();
        assert!(offsets.len() > 1);
        let short = Waveform::new(vec![0.1; 50], 16000);
        assert!(matches!(mix_at_snr(&s, &short, 5.0, 0), Err(AugmentError::NoiseTooShort { .. })));
        let other_rate = Waveform::new(vec![0.1; 1000], 8000);
        assert!(matches!(mix_at_snr(&s, &other_rate, 5.0, 0), Err(AugmentError::RateMismatch { .. })));
    }

    #[test]
    fn clipping_is_counted() {
        let s = Waveform::new(vec![0.9; 100], 8000);
        let noise = Waveform::new(vec![0.5; 100], 8000);
        let m = mix_at_snr(&s, &noise, 0.0, 0).unwrap();
        assert_eq!(m.clipped, 100);
        assert!(m.waveform.samples.iter().all(|&x| x == 1.0));
    }

    #[test]
    fn levels_parse() {
        assert_eq!(parse_levels("5,10,20").unwrap(), vec![5.0, 10.0, 20.0]);
        assert!(parse_levels("5,x").is_err());
    }
}
