//! Per-frame base feature extractors.
//!
//! Time-domain extractors (RMS, ZCR, low-energy ratio, f0) see the raw
//! frame; spectral extractors work on the magnitude/power spectrum of the
//! Hann-windowed frame, zero-padded to the next power of two. Silence
//! conventions keep every value finite: an all-zero spectrum has centroid,
//! spread, rolloff, entropy and crest 0 and flatness 1; a silent or
//! aperiodic frame has f0 = 0.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::hash::sha256_hex;

/// One base per-frame feature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseFeature {
    Rms,
    Zcr,
    LowEnergyRatio,
    SpectralCentroid,
    SpectralSpread,
    SpectralRolloff85,
    SpectralRolloff95,
    SpectralFlux,
    SpectralFlatness,
    SpectralEntropy,
    SpectralCrest,
    /// Mel-frequency cepstral coefficient; index runs 1..=13.
    Mfcc(u8),
    F0,
    Loudness,
}

impl BaseFeature {
    pub fn name(&self) -> String {
        match self {
            BaseFeature::Rms => "rms".into(),
            BaseFeature::Zcr => "zcr".into(),
            BaseFeature::LowEnergyRatio => "low_energy_ratio".into(),
            BaseFeature::SpectralCentroid => "spectral_centroid".into(),
            BaseFeature::SpectralSpread => "spectral_spread".into(),
            BaseFeature::SpectralRolloff85 => "spectral_rolloff85".into(),
            BaseFeature::SpectralRolloff95 => "spectral_rolloff95".into(),
            BaseFeature::SpectralFlux => "spectral_flux".into(),
            BaseFeature::SpectralFlatness => "spectral_flatness".into(),
            BaseFeature::SpectralEntropy => "spectral_entropy".into(),
            BaseFeature::SpectralCrest => "spectral_crest".into(),
            BaseFeature::Mfcc(i) => format!("mfcc_{i:02}"),
            BaseFeature::F0 => "f0".into(),
            BaseFeature::Loudness => "loudness".into(),
        }
    }

    pub fn parse(name: &str) -> Option<BaseFeature> {
        let canonical = BaseFeatureSet::canonical();
        canonical
            .features
            .iter()
            .copied()
            .find(|f| f.name() == name)
    }

    fn is_spectral(&self) -> bool {
        !matches!(
            self,
            BaseFeature::Rms | BaseFeature::Zcr | BaseFeature::LowEnergyRatio | BaseFeature::F0
        )
    }
}

/// Ordered collection of base features; order fixes the column layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseFeatureSet {
    pub features: Vec<BaseFeature>,
}

pub const MEL_BANDS: usize = 26;
pub const MFCC_COUNT: usize = 13;
const MFCC_LOG_FLOOR: f64 = 1e-12;
const F0_MIN_HZ: f64 = 50.0;
const F0_MAX_HZ: f64 = 1000.0;
const F0_VOICING_THRESHOLD: f64 = 0.3;

impl BaseFeatureSet {
    /// The canonical 26-extractor set.
    pub fn canonical() -> Self {
        let mut features = vec![
            BaseFeature::Rms,
            BaseFeature::Zcr,
            BaseFeature::LowEnergyRatio,
            BaseFeature::SpectralCentroid,
            BaseFeature::SpectralSpread,
            BaseFeature::SpectralRolloff85,
            BaseFeature::SpectralRolloff95,
            BaseFeature::SpectralFlux,
            BaseFeature::SpectralFlatness,
            BaseFeature::SpectralEntropy,
            BaseFeature::SpectralCrest,
        ];
        for i in 1..=MFCC_COUNT as u8 {
            features.push(BaseFeature::Mfcc(i));
        }
        features.push(BaseFeature::F0);
        features.push(BaseFeature::Loudness);
        BaseFeatureSet { features }
    }

    /// Build from feature names; `None` on an unknown or duplicate name.
    pub fn from_names(names: &[String]) -> Option<Self> {
        let mut features = Vec::with_capacity(names.len());
        for n in names {
            features.push(BaseFeature::parse(n)?);
        }
        let mut seen = std::collections::HashSet::new();
        if !features.iter().all(|f| seen.insert(*f)) {
            return None;
        }
        Some(BaseFeatureSet { features })
    }

    pub fn names(&self) -> Vec<String> {
        self.features.iter().map(|f| f.name()).collect()
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    /// Configuration hash covering the feature list and fixed parameters.
    pub fn config_hash(&self) -> String {
        let desc = format!(
            "features={};mel_bands={MEL_BANDS};mfcc_floor={MFCC_LOG_FLOOR};f0=[{F0_MIN_HZ},{F0_MAX_HZ}]@{F0_VOICING_THRESHOLD}",
            self.names().join(",")
        );
        sha256_hex(desc.as_bytes())
    }
}

/// Prepared analyzer for one (sample rate, window length, feature set)
/// combination: FFT plans, Hann window, mel filterbank and A-weighting
/// curve are built once and shared across frames and threads.
pub struct FrameAnalyzer {
    set: BaseFeatureSet,
    sample_rate: u32,
    window_len: usize,
    fft_len: usize,
    fft: Arc<dyn Fft<f64>>,
    autocorr_len: usize,
    autocorr_fft: Arc<dyn Fft<f64>>,
    autocorr_ifft: Arc<dyn Fft<f64>>,
    window: Vec<f64>,
    /// Sparse triangular mel filters: (bin, weight) pairs per band.
    mel_bank: Vec<Vec<(usize, f64)>>,
    /// Linear A-weighting gain per spectrum bin.
    a_weights: Vec<f64>,
    needs_spectrum: bool,
    needs_mel: bool,
    needs_autocorr: bool,
}

fn next_pow2(n: usize) -> usize {
    n.next_power_of_two()
}

fn mel_of(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

fn hz_of(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Linear-gain A-weighting (IEC 61672), normalized to 1 at 1 kHz.
fn a_weight(f: f64) -> f64 {
    if f <= 0.0 {
        return 0.0;
    }
    let f2 = f * f;
    let ra = (12194.0f64.powi(2) * f2 * f2)
        / ((f2 + 20.6f64.powi(2))
            * ((f2 + 107.7f64.powi(2)) * (f2 + 737.9f64.powi(2))).sqrt()
            * (f2 + 12194.0f64.powi(2)));
    let ra_1k = 0.7943352560634689; // R_A(1000)
    ra / ra_1k
}

/// Analysis window applied before the FFT (raw frames always feed the
/// time-domain extractors).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowFunction {
    #[default]
    Hann,
    Rectangular,
}

impl WindowFunction {
    pub fn name(self) -> &'static str {
        match self {
            WindowFunction::Hann => "hann",
            WindowFunction::Rectangular => "rectangular",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name.trim().to_lowercase().as_str() {
            "hann" => Some(WindowFunction::Hann),
            "rectangular" | "rect" => Some(WindowFunction::Rectangular),
            _ => None,
        }
    }

    fn coefficients(self, len: usize) -> Vec<f64> {
        match self {
            WindowFunction::Hann => (0..len)
                .map(|i| {
                    let x = std::f64::consts::PI * i as f64 / len as f64;
                    x.sin() * x.sin()
                })
                .collect(),
            WindowFunction::Rectangular => vec![1.0; len],
        }
    }
}

impl FrameAnalyzer {
    pub fn new(
        set: &BaseFeatureSet,
        sample_rate: u32,
        window_len: usize,
        window_function: WindowFunction,
    ) -> Self {
        assert!(window_len > 0, "window must be non-empty");
        let fft_len = next_pow2(window_len);
        let autocorr_len = next_pow2(2 * window_len);
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(fft_len);
        let autocorr_fft = planner.plan_fft_forward(autocorr_len);
        let autocorr_ifft = planner.plan_fft_inverse(autocorr_len);

        let window = window_function.coefficients(window_len);

        let bins = fft_len / 2 + 1;
        let bin_hz = sample_rate as f64 / fft_len as f64;

        // Triangular mel filterbank over [0, sr/2].
        let nyquist = sample_rate as f64 / 2.0;
        let mel_points: Vec<f64> = (0..MEL_BANDS + 2)
            .map(|i| hz_of(mel_of(nyquist) * i as f64 / (MEL_BANDS + 1) as f64))
            .collect();
        let mut mel_bank = Vec::with_capacity(MEL_BANDS);
        for m in 0..MEL_BANDS {
            let (lo, peak, hi) = (mel_points[m], mel_points[m + 1], mel_points[m + 2]);
            let mut filter = Vec::new();
            for k in 0..bins {
                let f = k as f64 * bin_hz;
                let w = if f > lo && f < peak {
                    (f - lo) / (peak - lo)
                } else if (f - peak).abs() < 1e-12 {
                    1.0
                } else if f > peak && f < hi {
                    (hi - f) / (hi - peak)
                } else {
                    0.0
                };
                if w > 0.0 {
                    filter.push((k, w));
                }
            }
            mel_bank.push(filter);
        }

        let a_weights: Vec<f64> = (0..bins).map(|k| a_weight(k as f64 * bin_hz)).collect();

        let needs_spectrum = set.features.iter().any(|f| f.is_spectral());
        let needs_mel = set.features.iter().any(|f| matches!(f, BaseFeature::Mfcc(_)));
        let needs_autocorr = set.features.contains(&BaseFeature::F0);

        FrameAnalyzer {
            set: set.clone(),
            sample_rate,
            window_len,
            fft_len,
            fft,
            autocorr_len,
            autocorr_fft,
            autocorr_ifft,
            window,
            mel_bank,
            a_weights,
            needs_spectrum,
            needs_mel,
            needs_autocorr,
        }
    }

    pub fn window_len(&self) -> usize {
        self.window_len
    }

    /// Magnitude spectrum of the Hann-windowed, zero-padded frame.
    fn magnitude_spectrum(&self, frame: &[f64]) -> Vec<f64> {
        let mut buf = vec![Complex::new(0.0, 0.0); self.fft_len];
        for (i, (&x, &w)) in frame.iter().zip(&self.window).enumerate() {
            buf[i].re = x * w;
        }
        self.fft.process(&mut buf);
        buf[..self.fft_len / 2 + 1].iter().map(|c| c.norm()).collect()
    }

    /// Normalized autocorrelation over the f0 lag range, via FFT.
    fn f0_estimate(&self, frame: &[f64]) -> f64 {
        let mean = frame.iter().sum::<f64>() / frame.len() as f64;
        let mut buf = vec![Complex::new(0.0, 0.0); self.autocorr_len];
        for (i, &x) in frame.iter().enumerate() {
            buf[i].re = x - mean;
        }
        self.autocorr_fft.process(&mut buf);
        for c in buf.iter_mut() {
            *c = Complex::new(c.norm_sqr(), 0.0);
        }
        self.autocorr_ifft.process(&mut buf);
        let r0 = buf[0].re;
        if r0 <= 0.0 {
            return 0.0;
        }
        let sr = self.sample_rate as f64;
        let lag_min = (sr / F0_MAX_HZ).floor().max(1.0) as usize;
        let lag_max = ((sr / F0_MIN_HZ).ceil() as usize).min(frame.len().saturating_sub(1));
        if lag_min >= lag_max {
            return 0.0;
        }
        let mut best_lag = lag_min;
        let mut best = f64::MIN;
        for lag in lag_min..=lag_max {
            let rho = buf[lag].re / r0;
            if rho > best {
                best = rho;
                best_lag = lag;
            }
        }
        if best < F0_VOICING_THRESHOLD {
            0.0
        } else {
            sr / best_lag as f64
        }
    }

    /// Compute the configured features for one frame.
    ///
    /// `prev_magnitudes` is the previous frame's magnitude spectrum, used by
    /// spectral flux (the first frame of a track passes `None` and gets
    /// flux 0). Returns the feature values in set order plus this frame's
    /// magnitude spectrum when one was computed.
    pub fn analyze(
        &self,
        frame: &[f64],
        prev_magnitudes: Option<&[f64]>,
    ) -> (Vec<f64>, Option<Vec<f64>>) {
        assert!(!frame.is_empty(), "frame must be non-empty");
        let magnitudes = if self.needs_spectrum {
            Some(self.magnitude_spectrum(frame))
        } else {
            None
        };

        let spectral = magnitudes
            .as_deref()
            .map(|m| SpectralSummary::new(m, self.sample_rate, self.fft_len));

        let mel_log: Option<Vec<f64>> = if self.needs_mel {
            let m = magnitudes.as_deref().expect("mel requires the spectrum");
            Some(
                self.mel_bank
                    .iter()
                    .map(|filter| {
                        let e: f64 = filter.iter().map(|&(k, w)| w * m[k] * m[k]).sum();
                        e.max(MFCC_LOG_FLOOR).ln()
                    })
                    .collect(),
            )
        } else {
            None
        };

        let f0 = if self.needs_autocorr {
            self.f0_estimate(frame)
        } else {
            0.0
        };

        let values = self
            .set
            .features
            .iter()
            .map(|feature| match feature {
                BaseFeature::Rms => rms(frame),
                BaseFeature::Zcr => zcr(frame, self.sample_rate),
                BaseFeature::LowEnergyRatio => low_energy_ratio(frame),
                BaseFeature::F0 => f0,
                BaseFeature::SpectralCentroid => spectral.as_ref().unwrap().centroid,
                BaseFeature::SpectralSpread => spectral.as_ref().unwrap().spread,
                BaseFeature::SpectralRolloff85 => spectral.as_ref().unwrap().rolloff85,
                BaseFeature::SpectralRolloff95 => spectral.as_ref().unwrap().rolloff95,
                BaseFeature::SpectralFlatness => spectral.as_ref().unwrap().flatness,
                BaseFeature::SpectralEntropy => spectral.as_ref().unwrap().entropy,
                BaseFeature::SpectralCrest => spectral.as_ref().unwrap().crest,
                BaseFeature::SpectralFlux => {
                    spectral_flux(magnitudes.as_deref().unwrap(), prev_magnitudes)
                }
                BaseFeature::Mfcc(i) => {
                    let logs = mel_log.as_deref().expect("mfcc requires mel energies");
                    dct2_coefficient(logs, *i as usize)
                }
                BaseFeature::Loudness => {
                    let m = magnitudes.as_deref().unwrap();
                    loudness(m, &self.a_weights, self.fft_len)
                }
            })
            .collect();

        (values, magnitudes)
    }
}

struct SpectralSummary {
    centroid: f64,
    spread: f64,
    rolloff85: f64,
    rolloff95: f64,
    flatness: f64,
    entropy: f64,
    crest: f64,
}

impl SpectralSummary {
    fn new(magnitudes: &[f64], sample_rate: u32, fft_len: usize) -> Self {
        let bin_hz = sample_rate as f64 / fft_len as f64;
        let total_mag: f64 = magnitudes.iter().sum();
        let powers: Vec<f64> = magnitudes.iter().map(|m| m * m).collect();
        let total_power: f64 = powers.iter().sum();

        let centroid = if total_mag > 0.0 {
            magnitudes
                .iter()
                .enumerate()
                .map(|(k, m)| k as f64 * bin_hz * m)
                .sum::<f64>()
                / total_mag
        } else {
            0.0
        };

        let spread = if total_mag > 0.0 {
            (magnitudes
                .iter()
                .enumerate()
                .map(|(k, m)| (k as f64 * bin_hz - centroid).powi(2) * m)
                .sum::<f64>()
                / total_mag)
                .sqrt()
        } else {
            0.0
        };

        let rolloff = |fraction: f64| -> f64 {
            if total_power <= 0.0 {
                return 0.0;
            }
            let target = fraction * total_power;
            let mut acc = 0.0;
            for (k, p) in powers.iter().enumerate() {
                acc += p;
                if acc >= target {
                    return k as f64 * bin_hz;
                }
            }
            (powers.len() - 1) as f64 * bin_hz
        };

        // Geometric/arithmetic mean ratio of the power spectrum; the tiny
        // epsilon keeps the log finite, and an all-zero spectrum is 1 by
        // convention.
        let eps = 1e-20;
        let n = powers.len() as f64;
        let flatness = if total_power <= 0.0 {
            1.0
        } else {
            let log_gm = powers.iter().map(|p| (p + eps).ln()).sum::<f64>() / n;
            log_gm.exp() / (total_power / n + eps)
        };

        let entropy = if total_power > 0.0 {
            let h: f64 = powers
                .iter()
                .filter(|&&p| p > 0.0)
                .map(|&p| {
                    let q = p / total_power;
                    -q * q.log2()
                })
                .sum();
            h / (n.log2())
        } else {
            0.0
        };

        let crest = if total_power > 0.0 {
            powers.iter().cloned().fold(f64::MIN, f64::max) / (total_power / n)
        } else {
            0.0
        };

        SpectralSummary {
            centroid,
            spread,
            rolloff85: rolloff(0.85),
            rolloff95: rolloff(0.95),
            flatness,
            entropy,
            crest,
        }
    }
}

fn rms(frame: &[f64]) -> f64 {
    (frame.iter().map(|x| x * x).sum::<f64>() / frame.len() as f64).sqrt()
}

/// Zero crossings per second.
fn zcr(frame: &[f64], sample_rate: u32) -> f64 {
    let crossings = frame
        .windows(2)
        .filter(|w| (w[0] < 0.0 && w[1] > 0.0) || (w[0] > 0.0 && w[1] < 0.0))
        .count();
    crossings as f64 * sample_rate as f64 / frame.len() as f64
}

/// Fraction of samples whose magnitude is below the frame RMS.
fn low_energy_ratio(frame: &[f64]) -> f64 {
    let r = rms(frame);
    if r <= 0.0 {
        return 0.0;
    }
    frame.iter().filter(|x| x.abs() < r).count() as f64 / frame.len() as f64
}

/// L2 magnitude-spectrum difference against the previous frame, per bin.
fn spectral_flux(magnitudes: &[f64], prev: Option<&[f64]>) -> f64 {
    match prev {
        None => 0.0,
        Some(p) => {
            let sum: f64 = magnitudes
                .iter()
                .zip(p)
                .map(|(m, q)| (m - q) * (m - q))
                .sum();
            sum.sqrt() / magnitudes.len() as f64
        }
    }
}

/// A-weighted spectral magnitude norm; a loudness proxy that scales
/// linearly with amplitude.
fn loudness(magnitudes: &[f64], a_weights: &[f64], fft_len: usize) -> f64 {
    let sum: f64 = magnitudes
        .iter()
        .zip(a_weights)
        .map(|(m, w)| (m * w) * (m * w))
        .sum();
    sum.sqrt() / fft_len as f64
}

/// DCT-II coefficient `k` of `values` (not orthonormalized).
fn dct2_coefficient(values: &[f64], k: usize) -> f64 {
    let m = values.len() as f64;
    values
        .iter()
        .enumerate()
        .map(|(i, &v)| v * (std::f64::consts::PI * k as f64 * (2.0 * i as f64 + 1.0) / (2.0 * m)).cos())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};

    fn sine(freq: f64, sr: u32, len: usize, amp: f64) -> Vec<f64> {
        (0..len)
            .map(|i| amp * (2.0 * std::f64::consts::PI * freq * i as f64 / sr as f64).sin())
            .collect()
    }

    #[test]
    fn silent_frame_has_silence_defaults() {
        let set = BaseFeatureSet::canonical();
        let analyzer = FrameAnalyzer::new(&set, 44100, 2048, WindowFunction::Hann);
        let frame = vec![0.0; 2048];
        let (values, _) = analyzer.analyze(&frame, None);
        let names = set.names();
        for (name, v) in names.iter().zip(&values) {
            let expect = if name == "spectral_flatness" { 1.0 } else { 0.0 };
            // MFCCs of silence are a DCT of a constant vector: zero up to
            // summation dust.
            assert_relative_eq!(*v, expect, epsilon = 1e-9);
        }
    }

    #[test]
    fn sine_centroid_and_zcr_match_analytic_values() {
        let sr = 44100;
        let window = 22050;
        let set = BaseFeatureSet::canonical();
        let analyzer = FrameAnalyzer::new(&set, sr, window, WindowFunction::Hann);
        let frame = sine(1000.0, sr, window, 0.8);
        let (values, _) = analyzer.analyze(&frame, None);
        let names = set.names();
        let get = |name: &str| values[names.iter().position(|n| n == name).unwrap()];

        // Closed form for a sinusoid: centroid at the tone frequency,
        // 2 * f crossings per second.
        assert_relative_eq!(get("spectral_centroid"), 1000.0, max_relative = 0.01);
        assert_relative_eq!(get("zcr"), 2000.0, max_relative = 0.01);
        assert_relative_eq!(get("f0"), 1000.0, max_relative = 0.03);
        // |sin| < rms over exactly half the cycle.
        assert_relative_eq!(get("low_energy_ratio"), 0.5, max_relative = 0.01);
        // rms of a sinusoid = amp / sqrt(2)
        assert_relative_eq!(get("rms"), 0.8 / 2f64.sqrt(), max_relative = 1e-3);
        // A tone concentrates power: low flatness and entropy, high crest.
        assert!(get("spectral_flatness") < 0.1);
        assert!(get("spectral_crest") > 10.0);
    }

    #[test]
    fn white_noise_is_spectrally_flat() {
        let sr = 44100;
        let window = 4096;
        let set = BaseFeatureSet::canonical();
        let analyzer = FrameAnalyzer::new(&set, sr, window, WindowFunction::Hann);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let frame: Vec<f64> = (0..window).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (values, _) = analyzer.analyze(&frame, None);
        let names = set.names();
        let get = |name: &str| values[names.iter().position(|n| n == name).unwrap()];
        assert!(
            get("spectral_flatness") > 0.5,
            "flatness {}",
            get("spectral_flatness")
        );
        assert!(get("spectral_entropy") > 0.8);
        assert_eq!(get("f0"), 0.0, "noise is unvoiced");
    }

    #[test]
    fn low_frequency_tone_f0() {
        let sr = 44100;
        let set = BaseFeatureSet { features: vec![BaseFeature::F0] };
        let analyzer = FrameAnalyzer::new(&set, sr, 22050, WindowFunction::Hann);
        let frame = sine(220.0, sr, 22050, 0.5);
        let (values, _) = analyzer.analyze(&frame, None);
        assert_relative_eq!(values[0], 220.0, max_relative = 0.03);
    }

    #[test]
    fn flux_is_zero_without_previous_frame_and_positive_on_change() {
        let sr = 44100;
        let set = BaseFeatureSet { features: vec![BaseFeature::SpectralFlux] };
        let analyzer = FrameAnalyzer::new(&set, sr, 2048, WindowFunction::Hann);
        let a = sine(500.0, sr, 2048, 0.5);
        let b = sine(900.0, sr, 2048, 0.5);
        let (v0, mags) = analyzer.analyze(&a, None);
        assert_eq!(v0[0], 0.0);
        let (v1, _) = analyzer.analyze(&b, mags.as_deref());
        assert!(v1[0] > 0.0);
    }

    #[test]
    fn mfccs_are_amplitude_invariant_for_nonsilent_signal() {
        let sr = 22050;
        let set = BaseFeatureSet::canonical();
        let analyzer = FrameAnalyzer::new(&set, sr, 4096, WindowFunction::Hann);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let frame: Vec<f64> = (0..4096).map(|_| rng.gen_range(-0.4..0.4)).collect();
        let scaled: Vec<f64> = frame.iter().map(|x| x * 2.0).collect();
        let (v1, _) = analyzer.analyze(&frame, None);
        let (v2, _) = analyzer.analyze(&scaled, None);
        let names = set.names();
        for (name, (a, b)) in names.iter().zip(v1.iter().zip(&v2)) {
            if name.starts_with("mfcc_") {
                assert_relative_eq!(a, b, epsilon = 1e-9, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn canonical_set_has_26_unique_names() {
        let set = BaseFeatureSet::canonical();
        assert_eq!(set.len(), 26);
        let names = set.names();
        let unique: std::collections::HashSet<&String> = names.iter().collect();
        assert_eq!(unique.len(), 26);
    }

    #[test]
    fn set_round_trips_through_names() {
        let set = BaseFeatureSet::canonical();
        let again = BaseFeatureSet::from_names(&set.names()).unwrap();
        assert_eq!(set, again);
        assert!(BaseFeatureSet::from_names(&["nope".to_string()]).is_none());
    }
}
