//! Log mel filter-bank front end and fixed-length segmentation.
//!
//! Defaults follow a conventional ASR front end: 25 ms Hamming windows every
//! 10 ms, an FFT of the next power of two above the window (512 points at
//! 16 kHz), power spectrum, 40 HTK-mel triangular filters spanning 0 Hz to
//! Nyquist, and an energy floor of 1e-10 before the natural log. No
//! pre-emphasis unless configured.

mod fft;

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub use fft::Fft;

use crate::math;

pub const DEFAULT_WIN_MS: u32 = 25;
pub const DEFAULT_HOP_MS: u32 = 10;
pub const DEFAULT_N_MELS: usize = 40;
pub const DEFAULT_SEGMENT_SECONDS: u32 = 25;
pub const ENERGY_FLOOR: f64 = 1e-10;
pub const MIN_SAMPLE_RATE_HZ: u32 = 8000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DspError {
    #[error("signal has {samples} samples, shorter than one {window}-sample window")]
    TooShort { samples: usize, window: usize },
    #[error("sample rate {0} Hz is below 8000 Hz")]
    SampleRate(u32),
    #[error("sample {index} = {value} is outside [-1, 1] or not finite")]
    SampleRange { index: usize, value: f32 },
    #[error("frame has {got} samples, expected {expected}")]
    FrameLength { got: usize, expected: usize },
    #[error("invalid front-end config: {0}")]
    Config(&'static str),
    #[error("feature matrix has no frames")]
    EmptyFeatures,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    pub samples: Vec<f32>,
    pub sample_rate_hz: u32,
}

impl Waveform {
    pub fn validate(&self) -> Result<(), DspError> {
        if self.sample_rate_hz < MIN_SAMPLE_RATE_HZ {
            return Err(DspError::SampleRate(self.sample_rate_hz));
        }
        if let Some((index, &value)) = self
            .samples
            .iter()
            .enumerate()
            .find(|(_, x)| !(x.is_finite() && x.abs() <= 1.0 + 1e-6))
        {
            return Err(DspError::SampleRange { index, value });
        }
        Ok(())
    }

    pub fn duration_ms(&self) -> f64 {
        self.samples.len() as f64 * 1000.0 / self.sample_rate_hz as f64
    }
}

/// Samples spanned by `ms` milliseconds at `sample_rate_hz`, rounded.
pub fn samples_for_ms(sample_rate_hz: u32, ms: u32) -> usize {
    math::round(sample_rate_hz as f64 * ms as f64 / 1000.0) as usize
}

/// `floor((n - window) / hop) + 1`, or 0 when the signal is shorter than a window.
pub fn frame_count(n: usize, window: usize, hop: usize) -> usize {
    if n < window {
        0
    } else {
        (n - window) / hop + 1
    }
}

/// Cuts the waveform into overlapping frames of `win_ms` every `hop_ms`.
pub fn frame_signal(wave: &Waveform, win_ms: u32, hop_ms: u32) -> Result<Vec<Vec<f32>>, DspError> {
    let w = samples_for_ms(wave.sample_rate_hz, win_ms);
    let h = samples_for_ms(wave.sample_rate_hz, hop_ms);
    if w == 0 || h == 0 {
        return Err(DspError::Config("window and hop must span at least one sample"));
    }
    let n = wave.samples.len();
    if n < w {
        return Err(DspError::TooShort { samples: n, window: w });
    }
    Ok((0..frame_count(n, w, h))
        .map(|i| wave.samples[i * h..i * h + w].to_vec())
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrontEndConfig {
    pub n_mels: usize,
    pub win_ms: u32,
    pub hop_ms: u32,
    /// Coefficient `a` in `y[n] = x[n] - a·x[n-1]`, applied per frame.
    pub pre_emphasis: Option<f64>,
    pub f_min_hz: f64,
    /// Defaults to Nyquist.
    pub f_max_hz: Option<f64>,
    pub segment_seconds: u32,
}

impl Default for FrontEndConfig {
    fn default() -> Self {
        FrontEndConfig {
            n_mels: DEFAULT_N_MELS,
            win_ms: DEFAULT_WIN_MS,
            hop_ms: DEFAULT_HOP_MS,
            pre_emphasis: None,
            f_min_hz: 0.0,
            f_max_hz: None,
            segment_seconds: DEFAULT_SEGMENT_SECONDS,
        }
    }
}

impl FrontEndConfig {
    /// Frames per fixed-length segment.
    pub fn frames_per_segment(&self) -> usize {
        (self.segment_seconds as usize * 1000) / self.hop_ms as usize
    }
}

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * math::log10(1.0 + hz / 700.0)
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (math::powf(10.0, mel / 2595.0) - 1.0)
}

/// One triangular filter stored sparsely from `first_bin`.
#[derive(Debug, Clone, PartialEq)]
struct Triangle {
    first_bin: usize,
    weights: Vec<f64>,
}

/// Precomputed window, FFT and mel filters for one sample rate.
#[derive(Debug, Clone)]
pub struct FilterBank {
    config: FrontEndConfig,
    sample_rate_hz: u32,
    window: Vec<f64>,
    hop: usize,
    fft: Fft,
    filters: Vec<Triangle>,
    centers_hz: Vec<f64>,
}

impl FilterBank {
    pub fn new(config: FrontEndConfig, sample_rate_hz: u32) -> Result<Self, DspError> {
        if sample_rate_hz < MIN_SAMPLE_RATE_HZ {
            return Err(DspError::SampleRate(sample_rate_hz));
        }
        if config.n_mels == 0 {
            return Err(DspError::Config("n_mels must be at least 1"));
        }
        if config.hop_ms == 0 || config.win_ms == 0 || config.segment_seconds == 0 {
            return Err(DspError::Config("window, hop and segment length must be positive"));
        }
        let nyquist = sample_rate_hz as f64 / 2.0;
        let f_max = config.f_max_hz.unwrap_or(nyquist);
        if !(config.f_min_hz >= 0.0 && config.f_min_hz < f_max && f_max <= nyquist) {
            return Err(DspError::Config("need 0 <= f_min < f_max <= Nyquist"));
        }
        let win = samples_for_ms(sample_rate_hz, config.win_ms);
        let hop = samples_for_ms(sample_rate_hz, config.hop_ms);
        let n_fft = win.next_power_of_two();
        let window = if win == 1 {
            vec![1.0]
        } else {
            (0..win)
                .map(|i| {
                    0.54 - 0.46 * math::cos(core::f64::consts::TAU * i as f64 / (win - 1) as f64)
                })
                .collect()
        };

        let (mel_lo, mel_hi) = (hz_to_mel(config.f_min_hz), hz_to_mel(f_max));
        let points: Vec<f64> = (0..config.n_mels + 2)
            .map(|i| mel_to_hz(mel_lo + (mel_hi - mel_lo) * i as f64 / (config.n_mels + 1) as f64))
            .collect();
        let bin_hz = sample_rate_hz as f64 / n_fft as f64;
        let n_bins = n_fft / 2 + 1;
        let filters = points
            .windows(3)
            .map(|p| {
                let (lo, center, hi) = (p[0], p[1], p[2]);
                let weights: Vec<(usize, f64)> = (0..n_bins)
                    .filter_map(|k| {
                        let f = k as f64 * bin_hz;
                        let w = ((f - lo) / (center - lo)).min((hi - f) / (hi - center));
                        (w > 0.0).then_some((k, w))
                    })
                    .collect();
                match weights.first() {
                    Some(&(first_bin, _)) => Triangle {
                        first_bin,
                        weights: weights.iter().map(|(_, w)| *w).collect(),
                    },
                    None => Triangle {
                        first_bin: 0,
                        weights: Vec::new(),
                    },
                }
            })
            .collect();
        let centers_hz = points[1..=config.n_mels].to_vec();
        Ok(FilterBank {
            config,
            sample_rate_hz,
            window,
            hop,
            fft: Fft::new(n_fft),
            filters,
            centers_hz,
        })
    }

    pub fn config(&self) -> &FrontEndConfig {
        &self.config
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    pub fn window_len(&self) -> usize {
        self.window.len()
    }

    pub fn hop_len(&self) -> usize {
        self.hop
    }

    pub fn fft_len(&self) -> usize {
        self.fft.len()
    }

    pub fn n_mels(&self) -> usize {
        self.config.n_mels
    }

    pub fn centers_hz(&self) -> &[f64] {
        &self.centers_hz
    }

    /// Sum of filter weights at each FFT bin.
    pub fn bin_coverage(&self) -> Vec<f64> {
        let mut cover = vec![0.0; self.fft.len() / 2 + 1];
        for t in &self.filters {
            for (i, w) in t.weights.iter().enumerate() {
                cover[t.first_bin + i] += w;
            }
        }
        cover
    }

    /// Log mel energies of one frame of exactly one window length.
    pub fn log_mel_filterbank(&self, frame: &[f32]) -> Result<Vec<f64>, DspError> {
        let mut re = Vec::new();
        let mut im = Vec::new();
        let mut buf = Vec::new();
        self.log_mel_into(frame, &mut buf, &mut re, &mut im)
    }

    fn log_mel_into(
        &self,
        frame: &[f32],
        buf: &mut Vec<f64>,
        re: &mut Vec<f64>,
        im: &mut Vec<f64>,
    ) -> Result<Vec<f64>, DspError> {
        if frame.len() != self.window.len() {
            return Err(DspError::FrameLength {
                got: frame.len(),
                expected: self.window.len(),
            });
        }
        buf.clear();
        match self.config.pre_emphasis {
            Some(a) => buf.extend((0..frame.len()).map(|i| {
                let prev = if i == 0 { frame[0] } else { frame[i - 1] };
                frame[i] as f64 - a * prev as f64
            })),
            None => buf.extend(frame.iter().map(|x| *x as f64)),
        }
        for (x, w) in buf.iter_mut().zip(&self.window) {
            *x *= w;
        }
        let power = self.fft.power_spectrum(buf, re, im);
        Ok(self
            .filters
            .iter()
            .map(|t| {
                let e: f64 = t
                    .weights
                    .iter()
                    .zip(&power[t.first_bin..])
                    .map(|(w, p)| w * p)
                    .sum();
                math::ln(e.max(ENERGY_FLOOR))
            })
            .collect())
    }

    /// Frames the waveform and computes log mel energies for every frame.
    pub fn extract(&self, wave: &Waveform) -> Result<FeatureMatrix, DspError> {
        wave.validate()?;
        if wave.sample_rate_hz != self.sample_rate_hz {
            return Err(DspError::SampleRate(wave.sample_rate_hz));
        }
        let w = self.window.len();
        let n = wave.samples.len();
        if n < w {
            return Err(DspError::TooShort { samples: n, window: w });
        }
        let t = frame_count(n, w, self.hop);
        let m = self.config.n_mels;
        let mut data = Vec::with_capacity(t * m);
        let (mut buf, mut re, mut im) = (Vec::new(), Vec::new(), Vec::new());
        for i in 0..t {
            let frame = &wave.samples[i * self.hop..i * self.hop + w];
            let row = self.log_mel_into(frame, &mut buf, &mut re, &mut im)?;
            data.extend(row.into_iter().map(|x| x as f32));
        }
        Ok(FeatureMatrix {
            data,
            n_frames: t,
            n_mels: m,
            hop_ms: self.config.hop_ms,
            win_ms: self.config.win_ms,
        })
    }
}

/// Convenience wrapper building a default bank for one frame.
pub fn log_mel_filterbank(frame: &[f32], sample_rate_hz: u32, n_mels: usize) -> Result<Vec<f64>, DspError> {
    let cfg = FrontEndConfig {
        n_mels,
        ..FrontEndConfig::default()
    };
    FilterBank::new(cfg, sample_rate_hz)?.log_mel_filterbank(frame)
}

/// Row-major `n_frames × n_mels` log filter-bank energies.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub data: Vec<f32>,
    pub n_frames: usize,
    pub n_mels: usize,
    pub hop_ms: u32,
    pub win_ms: u32,
}

impl FeatureMatrix {
    pub fn row(&self, t: usize) -> &[f32] {
        &self.data[t * self.n_mels..(t + 1) * self.n_mels]
    }

    /// Single-frame matrix, used for non-acoustic feature vectors.
    pub fn from_vector(values: Vec<f32>) -> Self {
        FeatureMatrix {
            n_frames: 1,
            n_mels: values.len(),
            data: values,
            hop_ms: DEFAULT_HOP_MS,
            win_ms: DEFAULT_WIN_MS,
        }
    }
}

/// Fixed-length slice of a feature matrix. Only the first `real_frames`
/// rows carry data; the rest hold the log energy floor.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub frames: Vec<f32>,
    pub n_frames: usize,
    pub n_mels: usize,
    pub real_frames: usize,
    pub start_frame: usize,
}

impl Segment {
    pub fn row(&self, t: usize) -> &[f32] {
        &self.frames[t * self.n_mels..(t + 1) * self.n_mels]
    }

    pub fn is_padded(&self) -> bool {
        self.real_frames < self.n_frames
    }

    /// `true` for real frames, `false` for padding.
    pub fn mask(&self) -> Vec<bool> {
        (0..self.n_frames).map(|t| t < self.real_frames).collect()
    }

    /// Segment holding only padding.
    pub fn fully_padded(n_frames: usize, n_mels: usize) -> Self {
        Segment {
            frames: vec![padding_value(); n_frames * n_mels],
            n_frames,
            n_mels,
            real_frames: 0,
            start_frame: 0,
        }
    }
}

pub fn padding_value() -> f32 {
    math::ln(ENERGY_FLOOR) as f32
}

/// Consecutive non-overlapping segments of `segment_seconds` each at the
/// matrix's hop. The last one is padded up to full length; at least one
/// segment is always produced for non-empty input.
pub fn segment_stream(features: &FeatureMatrix, segment_seconds: u32) -> Result<Vec<Segment>, DspError> {
    if features.hop_ms == 0 {
        return Err(DspError::Config("hop must be positive"));
    }
    segment_frames(features, frames_for_seconds(segment_seconds, features.hop_ms))
}

/// [`segment_stream`] with an explicit segment length in frames.
pub fn segment_frames(features: &FeatureMatrix, frames_per_segment: usize) -> Result<Vec<Segment>, DspError> {
    if features.n_frames == 0 {
        return Err(DspError::EmptyFeatures);
    }
    if frames_per_segment == 0 {
        return Err(DspError::Config("segments need at least one frame"));
    }
    let m = features.n_mels;
    let pad = padding_value();
    let mut out = Vec::new();
    let mut start = 0;
    while start < features.n_frames {
        let real = (features.n_frames - start).min(frames_per_segment);
        let mut frames = Vec::with_capacity(frames_per_segment * m);
        frames.extend_from_slice(&features.data[start * m..(start + real) * m]);
        frames.resize(frames_per_segment * m, pad);
        out.push(Segment {
            frames,
            n_frames: frames_per_segment,
            n_mels: m,
            real_frames: real,
            start_frame: start,
        });
        start += real;
    }
    Ok(out)
}

/// Frames per `seconds` at `hop_ms`.
pub fn frames_for_seconds(seconds: u32, hop_ms: u32) -> usize {
    seconds as usize * 1000 / hop_ms as usize
}
