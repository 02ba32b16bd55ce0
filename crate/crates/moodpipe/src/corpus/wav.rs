//! Minimal RIFF/WAVE reader and writer.
//!
//! Supports PCM 16-bit and IEEE-float 32-bit, mono or stereo. Stereo is
//! downmixed to mono by channel averaging at load time; samples are
//! normalized to [-1, 1]. All multi-byte fields are little-endian on disk,
//! so decoding is independent of host endianness. The writer emits PCM16
//! mono and exists for fixtures and the synthetic corpus generator.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

use super::AudioClip;

const FORMAT_PCM: u16 = 1;
const FORMAT_IEEE_FLOAT: u16 = 3;

/// Header-level facts about a WAV file, obtained without decoding samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WavInfo {
    pub sample_rate: u32,
    pub channels: u16,
    /// Per-channel sample frames in the data chunk.
    pub frames: usize,
}

impl WavInfo {
    pub fn duration_seconds(&self) -> f64 {
        self.frames as f64 / self.sample_rate as f64
    }
}

struct FmtChunk {
    format_tag: u16,
    channels: u16,
    sample_rate: u32,
    bits_per_sample: u16,
}

fn read_u16(bytes: &[u8], at: usize) -> Option<u16> {
    bytes.get(at..at + 2).map(|b| u16::from_le_bytes([b[0], b[1]]))
}

fn read_u32(bytes: &[u8], at: usize) -> Option<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
}

/// Walk the chunk list, returning the fmt description and the data chunk range.
fn parse_chunks(bytes: &[u8], path: &Path) -> Result<(FmtChunk, usize, usize)> {
    let not_wave = || Error::NotWave {
        path: path.display().to_string(),
    };
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(not_wave());
    }

    let mut fmt: Option<FmtChunk> = None;
    let mut data: Option<(usize, usize)> = None;
    let mut at = 12;
    while at + 8 <= bytes.len() {
        let id = &bytes[at..at + 4];
        let size = read_u32(bytes, at + 4).ok_or_else(not_wave)? as usize;
        let body = at + 8;
        match id {
            b"fmt " => {
                let format_tag = read_u16(bytes, body).ok_or_else(not_wave)?;
                let channels = read_u16(bytes, body + 2).ok_or_else(not_wave)?;
                let sample_rate = read_u32(bytes, body + 4).ok_or_else(not_wave)?;
                let bits_per_sample = read_u16(bytes, body + 14).ok_or_else(not_wave)?;
                fmt = Some(FmtChunk {
                    format_tag,
                    channels,
                    sample_rate,
                    bits_per_sample,
                });
            }
            b"data" => {
                data = Some((body, size));
            }
            _ => {} // skip LIST, fact, cue, ...
        }
        // Chunks are word-aligned; odd sizes carry a pad byte.
        at = body + size + (size & 1);
        if data.is_some() && fmt.is_some() {
            break;
        }
    }

    let fmt = fmt.ok_or_else(not_wave)?;
    let (data_at, data_len) = data.ok_or_else(not_wave)?;
    Ok((fmt, data_at, data_len))
}

fn check_format(fmt: &FmtChunk, path: &Path) -> Result<usize> {
    let unsupported = |detail: String| Error::UnsupportedWav {
        path: path.display().to_string(),
        detail,
    };
    if fmt.channels == 0 || fmt.channels > 2 {
        return Err(unsupported(format!("{} channels", fmt.channels)));
    }
    match (fmt.format_tag, fmt.bits_per_sample) {
        (FORMAT_PCM, 16) => Ok(2),
        (FORMAT_IEEE_FLOAT, 32) => Ok(4),
        (FORMAT_PCM, bits) => Err(unsupported(format!("PCM {bits}-bit"))),
        (FORMAT_IEEE_FLOAT, bits) => Err(unsupported(format!("float {bits}-bit"))),
        (tag, bits) => Err(unsupported(format!("format tag {tag}, {bits}-bit"))),
    }
}

/// Read only the header of a WAV file.
pub fn wav_info(path: &Path) -> Result<WavInfo> {
    use std::io::Read;
    // Headers are at the front; 64 KiB comfortably covers metadata chunks
    // that precede data while avoiding a full read of the samples.
    let mut file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut head = vec![0u8; 64 * 1024];
    let mut filled = 0;
    loop {
        let n = file
            .read(&mut head[filled..])
            .map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        filled += n;
        if filled == head.len() {
            break;
        }
    }
    head.truncate(filled);
    let parsed = match parse_chunks(&head, path) {
        Ok(p) => Ok(p),
        // The data chunk header may sit past the probe window; retry on the
        // full file before reporting.
        Err(_) => {
            let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
            parse_chunks(&bytes, path)
        }
    };
    let (fmt, _data_at, data_len) = parsed?;
    let bytes_per_sample = check_format(&fmt, path)?;
    let frame_bytes = bytes_per_sample * fmt.channels as usize;
    Ok(WavInfo {
        sample_rate: fmt.sample_rate,
        channels: fmt.channels,
        frames: data_len / frame_bytes,
    })
}

/// Decode a WAV file into a mono [`AudioClip`] with samples in [-1, 1].
pub fn load_wav(path: &Path) -> Result<AudioClip> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_wav(&bytes, path)
}

/// Decode WAV bytes already in memory; `path` is used in error messages.
pub fn decode_wav(bytes: &[u8], path: &Path) -> Result<AudioClip> {
    let (fmt, data_at, data_len) = parse_chunks(bytes, path)?;
    let bytes_per_sample = check_format(&fmt, path)?;

    let available = bytes.len().saturating_sub(data_at);
    if available < data_len {
        return Err(Error::TruncatedWav {
            path: path.display().to_string(),
            expected: data_len,
            actual: available,
        });
    }
    let data = &bytes[data_at..data_at + data_len];

    let channels = fmt.channels as usize;
    let frame_bytes = bytes_per_sample * channels;
    let frames = data_len / frame_bytes;
    let mut samples = Vec::with_capacity(frames);

    match bytes_per_sample {
        2 => {
            for f in 0..frames {
                let mut acc = 0.0f64;
                for c in 0..channels {
                    let at = f * frame_bytes + c * 2;
                    let v = i16::from_le_bytes([data[at], data[at + 1]]);
                    acc += v as f64 / 32768.0;
                }
                samples.push(acc / channels as f64);
            }
        }
        4 => {
            for f in 0..frames {
                let mut acc = 0.0f64;
                for c in 0..channels {
                    let at = f * frame_bytes + c * 4;
                    let v = f32::from_le_bytes([data[at], data[at + 1], data[at + 2], data[at + 3]]);
                    acc += (v as f64).clamp(-1.0, 1.0);
                }
                samples.push(acc / channels as f64);
            }
        }
        _ => unreachable!("check_format admits only 2 or 4 bytes per sample"),
    }

    Ok(AudioClip {
        samples,
        sample_rate: fmt.sample_rate,
    })
}

/// Write a mono PCM16 WAV file. Samples are clamped to [-1, 1].
pub fn write_wav_mono16(path: &Path, samples: &[f64], sample_rate: u32) -> Result<()> {
    let data_len = samples.len() * 2;
    let mut out = Vec::with_capacity(44 + data_len);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len as u32).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&FORMAT_PCM.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes()); // channels
    out.extend_from_slice(&sample_rate.to_le_bytes());
    out.extend_from_slice(&(sample_rate * 2).to_le_bytes()); // byte rate
    out.extend_from_slice(&2u16.to_le_bytes()); // block align
    out.extend_from_slice(&16u16.to_le_bytes()); // bits per sample
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());
    for &s in samples {
        let v = (s.clamp(-1.0, 1.0) * 32767.0).round() as i16;
        out.extend_from_slice(&v.to_le_bytes());
    }
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&out).map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Write a stereo PCM16 WAV file; used by tests for downmix checks.
pub fn write_wav_stereo16(
    path: &Path,
    left: &[f64],
    right: &[f64],
    sample_rate: u32,
) -> Result<()> {
    assert_eq!(left.len(), right.len(), "stereo channels must align");
    let data_len = left.len() * 4;
    let mut out = Vec::with_capacity(44 + data_len);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len as u32).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&FORMAT_PCM.to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&sample_rate.to_le_bytes());
    out.extend_from_slice(&(sample_rate * 4).to_le_bytes());
    out.extend_from_slice(&4u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());
    for (&l, &r) in left.iter().zip(right) {
        out.extend_from_slice(&((l.clamp(-1.0, 1.0) * 32767.0).round() as i16).to_le_bytes());
        out.extend_from_slice(&((r.clamp(-1.0, 1.0) * 32767.0).round() as i16).to_le_bytes());
    }
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&out).map_err(|e| Error::io(path, e))?;
    Ok(())
}
