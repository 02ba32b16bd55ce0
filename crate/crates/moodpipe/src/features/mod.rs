//! Framing and track-level feature matrix assembly.
//!
//! Each clip is truncated to the corpus-minimum sample count, cut into
//! overlapping frames (0.5 s window, 0.25 s hop by default), run through the
//! base per-frame extractors, and every feature's time series is aggregated
//! into mean, standard deviation, skewness and kurtosis.

pub mod extractors;
pub mod stats;

pub use extractors::{BaseFeature, BaseFeatureSet, FrameAnalyzer, WindowFunction};
pub use stats::{aggregate, AggregateStats, STAT_NAMES};

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{audio_path, decode_wav, wav_info, AudioClip};
use crate::error::{Error, Result};
use crate::hash::{combine, sha256_hex};

/// Framing parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameSpec {
    pub window_seconds: f64,
    pub hop_seconds: f64,
    #[serde(default)]
    pub window_function: WindowFunction,
}

impl Default for FrameSpec {
    fn default() -> Self {
        FrameSpec {
            window_seconds: 0.5,
            hop_seconds: 0.25,
            window_function: WindowFunction::Hann,
        }
    }
}

impl FrameSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.hop_seconds > 0.0 && self.hop_seconds <= self.window_seconds) {
            return Err(Error::Config(format!(
                "frame spec requires 0 < hop <= window, got hop {} window {}",
                self.hop_seconds, self.window_seconds
            )));
        }
        Ok(())
    }

    pub fn window_samples(&self, sample_rate: u32) -> usize {
        (self.window_seconds * sample_rate as f64).floor() as usize
    }

    pub fn hop_samples(&self, sample_rate: u32) -> usize {
        ((self.hop_seconds * sample_rate as f64).floor() as usize).max(1)
    }

    pub fn config_hash(&self) -> String {
        sha256_hex(
            format!(
                "window={};hop={};fn={}",
                self.window_seconds,
                self.hop_seconds,
                self.window_function.name()
            )
            .as_bytes(),
        )
    }
}

/// Cut a clip into overlapping raw frames; the trailing partial window is
/// discarded. Errors when the clip is shorter than one window.
pub fn frame_signal<'a>(clip: &'a AudioClip, spec: &FrameSpec) -> Result<Vec<&'a [f64]>> {
    spec.validate()?;
    frame_samples(&clip.samples, clip.sample_rate, spec, 0)
}

fn frame_samples<'a>(
    samples: &'a [f64],
    sample_rate: u32,
    spec: &FrameSpec,
    track: u32,
) -> Result<Vec<&'a [f64]>> {
    let window = spec.window_samples(sample_rate);
    let hop = spec.hop_samples(sample_rate);
    if window == 0 || samples.len() < window {
        return Err(Error::ClipTooShort {
            track,
            samples: samples.len(),
            window,
        });
    }
    let count = (samples.len() - window) / hop + 1;
    Ok((0..count)
        .map(|i| &samples[i * hop..i * hop + window])
        .collect())
}

/// Compute one frame's feature vector in set order.
///
/// Convenience form for a standalone frame: spectral flux has no previous
/// frame here and is 0. Batch extraction reuses a [`FrameAnalyzer`] and
/// chains flux across frames.
pub fn frame_features(frame: &[f64], sample_rate: u32, set: &BaseFeatureSet) -> Vec<f64> {
    let analyzer = FrameAnalyzer::new(set, sample_rate, frame.len(), WindowFunction::Hann);
    analyzer.analyze(frame, None).0
}

/// Hashes identifying the inputs a feature matrix was computed from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixProvenance {
    pub corpus_hash: String,
    pub spec_hash: String,
    pub set_hash: String,
}

/// Track × (feature × statistic) matrix with named columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub track_ids: Vec<u32>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub provenance: MatrixProvenance,
}

impl FeatureMatrix {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// One column by index.
    pub fn column(&self, index: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[index]).collect()
    }

    /// Row subset in the given order (used by fold splits).
    pub fn select_rows(&self, indices: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            track_ids: indices.iter().map(|&i| self.track_ids[i]).collect(),
            columns: self.columns.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            provenance: self.provenance.clone(),
        }
    }

    /// Column subset by name; unknown names error.
    pub fn select_columns(&self, names: &[String]) -> Result<FeatureMatrix> {
        let indices: Vec<usize> = names
            .iter()
            .map(|n| {
                self.column_index(n)
                    .ok_or_else(|| Error::MissingColumn(n.clone()))
            })
            .collect::<Result<_>>()?;
        Ok(FeatureMatrix {
            track_ids: self.track_ids.clone(),
            columns: names.to_vec(),
            rows: self
                .rows
                .iter()
                .map(|r| indices.iter().map(|&i| r[i]).collect())
                .collect(),
            provenance: self.provenance.clone(),
        })
    }

    /// Names of columns constant across all rows (dead-extractor guard;
    /// reported by the CLI, never fatal).
    pub fn constant_columns(&self) -> Vec<String> {
        if self.rows.len() < 2 {
            return Vec::new();
        }
        self.columns
            .iter()
            .enumerate()
            .filter(|(i, _)| {
                let first = self.rows[0][*i];
                self.rows.iter().all(|r| r[*i] == first)
            })
            .map(|(_, n)| n.clone())
            .collect()
    }
}

/// Column names for a feature set: `<feature>__<stat>` in set order.
pub fn column_names(set: &BaseFeatureSet) -> Vec<String> {
    let mut names = Vec::with_capacity(set.len() * 4);
    for f in &set.features {
        for stat in STAT_NAMES {
            names.push(format!("{}__{stat}", f.name()));
        }
    }
    names
}

/// Extract the feature row of a single clip already truncated by the caller.
fn clip_row(
    samples: &[f64],
    sample_rate: u32,
    spec: &FrameSpec,
    set: &BaseFeatureSet,
    track: u32,
) -> Result<Vec<f64>> {
    let frames = frame_samples(samples, sample_rate, spec, track)?;
    let analyzer = FrameAnalyzer::new(
        set,
        sample_rate,
        spec.window_samples(sample_rate),
        spec.window_function,
    );
    let mut series: Vec<Vec<f64>> = vec![Vec::with_capacity(frames.len()); set.len()];
    let mut prev: Option<Vec<f64>> = None;
    for frame in frames {
        let (values, mags) = analyzer.analyze(frame, prev.as_deref());
        for (s, v) in series.iter_mut().zip(values) {
            s.push(v);
        }
        if mags.is_some() {
            prev = mags;
        }
    }
    let mut row = Vec::with_capacity(set.len() * 4);
    for s in &series {
        row.extend(aggregate(s).as_array());
    }
    Ok(row)
}

fn content_hash(clips: &[(u32, AudioClip)]) -> String {
    let parts: Vec<(String, String)> = clips
        .iter()
        .map(|(id, clip)| {
            let mut bytes = Vec::with_capacity(clip.samples.len() * 8 + 8);
            bytes.extend_from_slice(&clip.sample_rate.to_le_bytes());
            for s in &clip.samples {
                bytes.extend_from_slice(&s.to_le_bytes());
            }
            (id.to_string(), sha256_hex(&bytes))
        })
        .collect();
    let refs: Vec<(&str, &str)> = parts
        .iter()
        .map(|(a, b)| (a.as_str(), b.as_str()))
        .collect();
    combine(&refs)
}

/// Extract the feature matrix from clips in memory.
///
/// Clips are truncated to the shortest clip's sample count before framing;
/// rows follow the given (track-id-sorted) order. Extraction is parallel per
/// track and assembled by index, so the result is independent of scheduling.
pub fn extract_matrix(
    clips: &[(u32, AudioClip)],
    spec: &FrameSpec,
    set: &BaseFeatureSet,
) -> Result<FeatureMatrix> {
    spec.validate()?;
    let min_samples = clips
        .iter()
        .map(|(_, c)| c.samples.len())
        .min()
        .ok_or_else(|| Error::Config("cannot extract features from an empty corpus".into()))?;

    let rows: Result<Vec<Vec<f64>>> = clips
        .par_iter()
        .map(|(id, clip)| clip_row(&clip.samples[..min_samples], clip.sample_rate, spec, set, *id))
        .collect();

    Ok(FeatureMatrix {
        track_ids: clips.iter().map(|(id, _)| *id).collect(),
        columns: column_names(set),
        rows: rows?,
        provenance: MatrixProvenance {
            corpus_hash: content_hash(clips),
            spec_hash: spec.config_hash(),
            set_hash: set.config_hash(),
        },
    })
}

/// Streaming extraction from an audio directory: clips are loaded, hashed,
/// truncated and reduced to their feature row one track at a time, so the
/// whole corpus is never resident.
pub fn extract_from_dir(
    track_ids: &[u32],
    audio_dir: &Path,
    spec: &FrameSpec,
    set: &BaseFeatureSet,
) -> Result<FeatureMatrix> {
    spec.validate()?;
    if track_ids.is_empty() {
        return Err(Error::Config("cannot extract features from an empty corpus".into()));
    }
    // Header pass: corpus-minimum sample count for the truncation rule.
    let mut min_samples = usize::MAX;
    for &id in track_ids {
        let info = wav_info(&audio_path(audio_dir, id))?;
        min_samples = min_samples.min(info.frames);
    }

    let results: Result<Vec<(Vec<f64>, String)>> = track_ids
        .par_iter()
        .map(|&id| {
            let path = audio_path(audio_dir, id);
            let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
            let file_hash = sha256_hex(&bytes);
            let clip = decode_wav(&bytes, &path)?;
            drop(bytes);
            let take = min_samples.min(clip.samples.len());
            let row = clip_row(&clip.samples[..take], clip.sample_rate, spec, set, id)?;
            Ok((row, file_hash))
        })
        .collect();
    let results = results?;

    let hash_parts: Vec<(String, String)> = track_ids
        .iter()
        .zip(&results)
        .map(|(id, (_, h))| (id.to_string(), h.clone()))
        .collect();
    let refs: Vec<(&str, &str)> = hash_parts
        .iter()
        .map(|(a, b)| (a.as_str(), b.as_str()))
        .collect();

    Ok(FeatureMatrix {
        track_ids: track_ids.to_vec(),
        columns: column_names(set),
        rows: results.into_iter().map(|(row, _)| row).collect(),
        provenance: MatrixProvenance {
            corpus_hash: combine(&refs),
            spec_hash: spec.config_hash(),
            set_hash: set.config_hash(),
        },
    })
}

/// CSV form: provenance comment, header (`track_id` + column names), rows.
pub fn matrix_to_csv(matrix: &FeatureMatrix) -> String {
    let mut out = format!(
        "# corpus={} spec={} set={}\n",
        matrix.provenance.corpus_hash, matrix.provenance.spec_hash, matrix.provenance.set_hash
    );
    out.push_str("track_id");
    for c in &matrix.columns {
        out.push(',');
        out.push_str(c);
    }
    out.push('\n');
    for (id, row) in matrix.track_ids.iter().zip(&matrix.rows) {
        out.push_str(&id.to_string());
        for v in row {
            out.push(',');
            out.push_str(&format!("{v}"));
        }
        out.push('\n');
    }
    out
}

/// Parse the CSV form written by [`matrix_to_csv`].
pub fn matrix_from_csv(text: &str) -> Result<FeatureMatrix> {
    let mut provenance = MatrixProvenance {
        corpus_hash: String::new(),
        spec_hash: String::new(),
        set_hash: String::new(),
    };
    let mut lines = text.lines().peekable();
    while let Some(line) = lines.peek() {
        if let Some(rest) = line.strip_prefix('#') {
            for part in rest.split_whitespace() {
                if let Some(h) = part.strip_prefix("corpus=") {
                    provenance.corpus_hash = h.to_string();
                } else if let Some(h) = part.strip_prefix("spec=") {
                    provenance.spec_hash = h.to_string();
                } else if let Some(h) = part.strip_prefix("set=") {
                    provenance.set_hash = h.to_string();
                }
            }
            lines.next();
        } else {
            break;
        }
    }
    let bad = |msg: &str| Error::Config(format!("feature csv: {msg}"));
    let header = lines.next().ok_or_else(|| bad("missing header"))?;
    let mut fields = header.split(',');
    if fields.next() != Some("track_id") {
        return Err(bad("first column must be track_id"));
    }
    let columns: Vec<String> = fields.map(|s| s.to_string()).collect();

    let mut track_ids = Vec::new();
    let mut rows = Vec::new();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let id: u32 = fields
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("bad track id"))?;
        let row: Vec<f64> = fields
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad("bad float cell"))?;
        if row.len() != columns.len() {
            return Err(bad("row width differs from header"));
        }
        track_ids.push(id);
        rows.push(row);
    }
    Ok(FeatureMatrix {
        track_ids,
        columns,
        rows,
        provenance,
    })
}

const BINARY_MAGIC: &[u8; 4] = b"MPFC";
const BINARY_VERSION: u32 = 1;

/// Compact binary cache of a feature matrix (little-endian, versioned).
pub fn matrix_to_binary(matrix: &FeatureMatrix) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(BINARY_MAGIC);
    out.extend_from_slice(&BINARY_VERSION.to_le_bytes());
    let write_str = |out: &mut Vec<u8>, s: &str| {
        out.extend_from_slice(&(s.len() as u32).to_le_bytes());
        out.extend_from_slice(s.as_bytes());
    };
    write_str(&mut out, &matrix.provenance.corpus_hash);
    write_str(&mut out, &matrix.provenance.spec_hash);
    write_str(&mut out, &matrix.provenance.set_hash);
    out.extend_from_slice(&(matrix.track_ids.len() as u64).to_le_bytes());
    out.extend_from_slice(&(matrix.columns.len() as u64).to_le_bytes());
    for id in &matrix.track_ids {
        out.extend_from_slice(&id.to_le_bytes());
    }
    for c in &matrix.columns {
        write_str(&mut out, c);
    }
    for row in &matrix.rows {
        for v in row {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

/// Parse the binary cache form.
pub fn matrix_from_binary(bytes: &[u8]) -> Result<FeatureMatrix> {
    let bad = |msg: &str| Error::Config(format!("feature cache: {msg}"));
    let mut at = 0usize;
    let take = |at: &mut usize, n: usize| -> Result<&[u8]> {
        let slice = bytes
            .get(*at..*at + n)
            .ok_or_else(|| bad("unexpected end of data"))?;
        *at += n;
        Ok(slice)
    };
    if take(&mut at, 4)? != BINARY_MAGIC {
        return Err(bad("bad magic"));
    }
    let version = u32::from_le_bytes(take(&mut at, 4)?.try_into().unwrap());
    if version != BINARY_VERSION {
        return Err(bad(&format!("unsupported version {version}")));
    }
    let read_str = |at: &mut usize| -> Result<String> {
        let len = u32::from_le_bytes(take(at, 4)?.try_into().unwrap()) as usize;
        Ok(String::from_utf8_lossy(take(at, len)?).into_owned())
    };
    let corpus_hash = read_str(&mut at)?;
    let spec_hash = read_str(&mut at)?;
    let set_hash = read_str(&mut at)?;
    let n_rows = u64::from_le_bytes(take(&mut at, 8)?.try_into().unwrap()) as usize;
    let n_cols = u64::from_le_bytes(take(&mut at, 8)?.try_into().unwrap()) as usize;
    let mut track_ids = Vec::with_capacity(n_rows);
    for _ in 0..n_rows {
        track_ids.push(u32::from_le_bytes(take(&mut at, 4)?.try_into().unwrap()));
    }
    let mut columns = Vec::with_capacity(n_cols);
    for _ in 0..n_cols {
        columns.push(read_str(&mut at)?);
    }
    let mut rows = Vec::with_capacity(n_rows);
    for _ in 0..n_rows {
        let mut row = Vec::with_capacity(n_cols);
        for _ in 0..n_cols {
            row.push(f64::from_le_bytes(take(&mut at, 8)?.try_into().unwrap()));
        }
        rows.push(row);
    }
    Ok(FeatureMatrix {
        track_ids,
        columns,
        rows,
        provenance: MatrixProvenance {
            corpus_hash,
            spec_hash,
            set_hash,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};

    fn clip(samples: Vec<f64>, sr: u32) -> AudioClip {
        AudioClip {
            samples,
            sample_rate: sr,
        }
    }

    fn sine(freq: f64, sr: u32, seconds: f64, amp: f64) -> Vec<f64> {
        let len = (seconds * sr as f64) as usize;
        (0..len)
            .map(|i| amp * (2.0 * std::f64::consts::PI * freq * i as f64 / sr as f64).sin())
            .collect()
    }

    fn noise(len: usize, amp: f64, seed: u64) -> Vec<f64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..len).map(|_| rng.gen_range(-amp..amp)).collect()
    }

    #[test]
    fn one_second_clip_yields_three_frames() {
        let c = clip(vec![0.1; 44100], 44100);
        let frames = frame_signal(&c, &FrameSpec::default()).unwrap();
        assert_eq!(frames.len(), 3);
        assert_eq!(frames[0].len(), 22050);
    }

    #[test]
    fn exact_window_clip_yields_one_frame() {
        let c = clip(vec![0.1; 22050], 44100);
        let frames = frame_signal(&c, &FrameSpec::default()).unwrap();
        assert_eq!(frames.len(), 1);
    }

    #[test]
    fn thirty_second_clip_yields_119_frames() {
        // Counting oracle: starts at multiples of the hop while a full
        // window fits.
        let sr = 44100u32;
        let samples = vec![0.0; 30 * sr as usize];
        let spec = FrameSpec::default();
        let window = spec.window_samples(sr);
        let hop = spec.hop_samples(sr);
        let mut count = 0usize;
        let mut start = 0usize;
        while start + window <= samples.len() {
            count += 1;
            start += hop;
        }
        assert_eq!(count, 119);
        let c = clip(samples, sr);
        let frames = frame_signal(&c, &spec).unwrap();
        assert_eq!(frames.len(), 119);
    }

    #[test]
    fn short_clip_errors() {
        let c = clip(vec![0.0; 1000], 44100);
        assert!(matches!(
            frame_signal(&c, &FrameSpec::default()),
            Err(Error::ClipTooShort { .. })
        ));
    }

    #[test]
    fn invalid_spec_rejected() {
        let c = clip(vec![0.0; 44100], 44100);
        let spec = FrameSpec {
            window_seconds: 0.2,
            hop_seconds: 0.3,
            window_function: WindowFunction::Hann,
        };
        assert!(frame_signal(&c, &spec).is_err());
    }

    #[test]
    fn identical_clips_give_identical_rows() {
        let sr = 8000;
        let samples = sine(440.0, sr, 1.2, 0.5);
        let clips = vec![(1u32, clip(samples.clone(), sr)), (2u32, clip(samples, sr))];
        let m = extract_matrix(&clips, &FrameSpec::default(), &BaseFeatureSet::canonical()).unwrap();
        assert_eq!(m.rows[0], m.rows[1]);
        assert_eq!(m.columns.len(), 104); // 4 stats x 26 extractors
    }

    #[test]
    fn truncation_to_shortest_clip() {
        let sr = 8000;
        let short = sine(300.0, sr, 2.0, 0.4);
        let long = {
            let mut s = short.clone();
            s.extend(sine(900.0, sr, 1.0, 0.9));
            s
        };
        let spec = FrameSpec::default();
        let set = BaseFeatureSet::canonical();
        let m = extract_matrix(
            &[(1, clip(short.clone(), sr)), (2, clip(long, sr))],
            &spec,
            &set,
        )
        .unwrap();
        // The long clip's row must equal the row of its truncated form.
        let m_trunc = extract_matrix(&[(2, clip(short, sr))], &spec, &set).unwrap();
        assert_eq!(m.rows[1], m_trunc.rows[0]);
        assert_eq!(m.rows[0], m.rows[1], "same audio after truncation");
    }

    #[test]
    fn amplitude_scaling_covariance() {
        let sr = 8000;
        let mut samples = noise(sr as usize * 2, 0.3, 5);
        for (i, s) in samples.iter_mut().enumerate() {
            *s += 0.3 * (2.0 * std::f64::consts::PI * 350.0 * i as f64 / sr as f64).sin();
        }
        let scaled: Vec<f64> = samples.iter().map(|x| x * 2.0).collect();
        let spec = FrameSpec::default();
        let set = BaseFeatureSet::canonical();
        let a = extract_matrix(&[(1, clip(samples, sr))], &spec, &set).unwrap();
        let b = extract_matrix(&[(1, clip(scaled, sr))], &spec, &set).unwrap();

        for (i, name) in a.columns.iter().enumerate() {
            let (va, vb) = (a.rows[0][i], b.rows[0][i]);
            let is_scaling_family = name.starts_with("rms__")
                || name.starts_with("loudness__")
                || name.starts_with("spectral_flux__");
            let stat = name.rsplit("__").next().unwrap();
            if stat == "skew" || stat == "kurt" {
                assert_relative_eq!(va, vb, epsilon = 1e-9, max_relative = 1e-9);
            } else if is_scaling_family {
                assert_relative_eq!(2.0 * va, vb, epsilon = 1e-12, max_relative = 1e-9);
            } else {
                // zcr, centroid, rolloff, flatness and friends are
                // amplitude-invariant.
                assert_relative_eq!(va, vb, epsilon = 1e-9, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn hop_shift_changes_stationary_statistics_little() {
        let sr = 8000;
        // Dense framing over a long signal: a one-hop shift swaps a single
        // frame in ~2000, so means must move well under 1%.
        let spec = FrameSpec {
            window_seconds: 0.1,
            hop_seconds: 0.05,
            window_function: WindowFunction::Hann,
        };
        let hop = spec.hop_samples(sr);
        let base = noise(sr as usize * 100, 0.5, 9);
        let shifted = base[hop..].to_vec();
        let truncated = base[..base.len() - hop].to_vec();
        let set = BaseFeatureSet::canonical();
        let a = extract_matrix(&[(1, clip(truncated, sr))], &spec, &set).unwrap();
        let b = extract_matrix(&[(1, clip(shifted, sr))], &spec, &set).unwrap();
        for (i, name) in a.columns.iter().enumerate() {
            // Means of a stationary signal are robust to a one-hop shift.
            // Statistics hovering near zero make a plain ratio meaningless,
            // so the feature's own frame-to-frame std provides the scale.
            if name.ends_with("__mean") {
                let (va, vb) = (a.rows[0][i], b.rows[0][i]);
                let std_col = name.replace("__mean", "__std");
                let scale = a.rows[0][a.column_index(&std_col).unwrap()];
                let denom = va.abs().max(vb.abs()).max(scale);
                if denom == 0.0 {
                    assert_eq!(va, vb, "{name}");
                } else {
                    assert!((va - vb).abs() / denom < 0.01, "{name}: {va} vs {vb}");
                }
            }
        }
    }

    #[test]
    fn extraction_is_deterministic() {
        let sr = 8000;
        let samples = noise(sr as usize * 2, 0.4, 21);
        let clips = vec![(7u32, clip(samples, sr))];
        let spec = FrameSpec::default();
        let set = BaseFeatureSet::canonical();
        let a = extract_matrix(&clips, &spec, &set).unwrap();
        let b = extract_matrix(&clips, &spec, &set).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn csv_round_trip() {
        let m = FeatureMatrix {
            track_ids: vec![1, 2],
            columns: vec!["a__mean".into(), "a__std".into()],
            rows: vec![vec![0.123456789012345, -1.5], vec![2.0, 3.25]],
            provenance: MatrixProvenance {
                corpus_hash: "c".into(),
                spec_hash: "s".into(),
                set_hash: "f".into(),
            },
        };
        let csv = matrix_to_csv(&m);
        let back = matrix_from_csv(&csv).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn binary_round_trip() {
        let m = FeatureMatrix {
            track_ids: vec![10, 20, 30],
            columns: vec!["x__mean".into()],
            rows: vec![vec![1.0], vec![f64::MIN_POSITIVE], vec![-0.0]],
            provenance: MatrixProvenance {
                corpus_hash: "abc".into(),
                spec_hash: "def".into(),
                set_hash: "ghi".into(),
            },
        };
        let bytes = matrix_to_binary(&m);
        let back = matrix_from_binary(&bytes).unwrap();
        assert_eq!(m, back);
        assert!(matrix_from_binary(&bytes[..10]).is_err());
    }

    #[test]
    fn dead_extractor_guard_reports_constant_columns() {
        let m = FeatureMatrix {
            track_ids: vec![1, 2],
            columns: vec!["a__mean".into(), "b__mean".into()],
            rows: vec![vec![1.0, 5.0], vec![2.0, 5.0]],
            provenance: MatrixProvenance {
                corpus_hash: String::new(),
                spec_hash: String::new(),
                set_hash: String::new(),
            },
        };
        assert_eq!(m.constant_columns(), vec!["b__mean".to_string()]);
    }
}
