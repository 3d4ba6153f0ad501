//! Audio containers, real FFT/IFFT and the short-time transform.
//!
//! Transforms are one-sided: a real buffer of `n` samples maps to `n/2 + 1`
//! complex bins spaced `sample_rate / n` apart. Any length is accepted; the
//! underlying planner handles non-power-of-two sizes directly, so no padding
//! is introduced and `origin_length` is always the true sample count.

use std::cell::RefCell;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{invalid, Error, Result};

/// Sample rate used throughout the toolkit unless a caller says otherwise.
pub const DEFAULT_SAMPLE_RATE: u32 = 16_000;
pub const DEFAULT_FRAME_LEN: usize = 512;
pub const DEFAULT_HOP: usize = 256;

/// Uniformly sampled waveform. Stereo data is interleaved `[l0, r0, l1, r1, ...]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    samples: Vec<f64>,
    sample_rate: u32,
    channels: u16,
}

impl AudioBuffer {
    pub fn new(samples: Vec<f64>, sample_rate: u32, channels: u16) -> Result<Self> {
        if sample_rate == 0 {
            return invalid("sample rate must be positive");
        }
        if channels != 1 && channels != 2 {
            return invalid(format!("unsupported channel count {channels}"));
        }
        if samples.len() % channels as usize != 0 {
            return invalid("sample count is not a multiple of the channel count");
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return invalid(format!("non-finite sample at index {i}"));
        }
        Ok(Self {
            samples,
            sample_rate,
            channels,
        })
    }

    pub fn mono(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        Self::new(samples, sample_rate, 1)
    }

    /// Interleaves two mono buffers of equal length and rate.
    pub fn stereo(left: &AudioBuffer, right: &AudioBuffer) -> Result<Self> {
        if !left.is_mono() || !right.is_mono() {
            return invalid("stereo() expects two mono buffers");
        }
        if left.sample_rate != right.sample_rate || left.len() != right.len() {
            return invalid("left and right buffers differ in rate or length");
        }
        let samples = left
            .samples
            .iter()
            .zip(&right.samples)
            .flat_map(|(&l, &r)| [l, r])
            .collect();
        Self::new(samples, left.sample_rate, 2)
    }

    /// Splits a stereo buffer into its two mono channels.
    pub fn split_stereo(&self) -> Result<(AudioBuffer, AudioBuffer)> {
        if self.channels != 2 {
            return invalid("split_stereo() expects a stereo buffer");
        }
        let left = self.samples.iter().step_by(2).copied().collect();
        let right = self.samples.iter().skip(1).step_by(2).copied().collect();
        Ok((
            AudioBuffer::mono(left, self.sample_rate)?,
            AudioBuffer::mono(right, self.sample_rate)?,
        ))
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn channels(&self) -> u16 {
        self.channels
    }

    pub fn is_mono(&self) -> bool {
        self.channels == 1
    }

    /// Number of frames (samples per channel).
    pub fn len(&self) -> usize {
        self.samples.len() / self.channels as usize
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.len() as f64 / self.sample_rate as f64
    }

    pub fn rms(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        (self.samples.iter().map(|s| s * s).sum::<f64>() / self.samples.len() as f64).sqrt()
    }

    pub fn scaled(&self, gain: f64) -> Result<Self> {
        Self::new(
            self.samples.iter().map(|s| s * gain).collect(),
            self.sample_rate,
            self.channels,
        )
    }

    /// Returns a copy scaled to unit RMS. Silent buffers are returned unchanged.
    pub fn normalized_rms(&self) -> Result<Self> {
        let rms = self.rms();
        if rms == 0.0 {
            return Ok(self.clone());
        }
        self.scaled(1.0 / rms)
    }

    /// Reads a 16-bit PCM or 32-bit float WAV file.
    pub fn read_wav(path: impl AsRef<Path>) -> Result<Self> {
        let mut reader = hound::WavReader::open(path)?;
        let spec = reader.spec();
        let samples: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
            (hound::SampleFormat::Int, 16) => reader
                .samples::<i16>()
                .map(|s| s.map(|v| v as f64 / 32768.0))
                .collect::<std::result::Result<_, _>>()?,
            (hound::SampleFormat::Float, 32) => reader
                .samples::<f32>()
                .map(|s| s.map(f64::from))
                .collect::<std::result::Result<_, _>>()?,
            (fmt, bits) => {
                return Err(Error::Format(format!(
                    "unsupported WAV encoding {fmt:?} with {bits} bits"
                )))
            }
        };
        Self::new(samples, spec.sample_rate, spec.channels)
    }

    /// Writes the buffer as a little-endian WAV file.
    pub fn write_wav(&self, path: impl AsRef<Path>, encoding: WavEncoding) -> Result<()> {
        let spec = hound::WavSpec {
            channels: self.channels,
            sample_rate: self.sample_rate,
            bits_per_sample: match encoding {
                WavEncoding::Pcm16 => 16,
                WavEncoding::Float32 => 32,
            },
            sample_format: match encoding {
                WavEncoding::Pcm16 => hound::SampleFormat::Int,
                WavEncoding::Float32 => hound::SampleFormat::Float,
            },
        };
        let mut writer = hound::WavWriter::create(path, spec)?;
        for &s in &self.samples {
            match encoding {
                WavEncoding::Pcm16 => {
                    let v = (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
                    writer.write_sample(v)?;
                }
                WavEncoding::Float32 => writer.write_sample(s as f32)?,
            }
        }
        writer.finalize()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WavEncoding {
    Pcm16,
    Float32,
}

/// One-sided spectrum of a real signal.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub bins: Vec<Complex64>,
    pub bin_hz: f64,
    pub origin_length: usize,
}

impl Spectrum {
    pub fn new(bins: Vec<Complex64>, bin_hz: f64, origin_length: usize) -> Result<Self> {
        if bins.len() != origin_length / 2 + 1 {
            return invalid(format!(
                "{} bins inconsistent with origin length {origin_length}",
                bins.len()
            ));
        }
        if !(bin_hz > 0.0) {
            return invalid("bin spacing must be positive");
        }
        Ok(Self {
            bins,
            bin_hz,
            origin_length,
        })
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    pub fn sample_rate(&self) -> f64 {
        self.bin_hz * self.origin_length as f64
    }

    pub fn freq(&self, k: usize) -> f64 {
        k as f64 * self.bin_hz
    }

    /// Signal energy implied by this spectrum (Parseval), i.e. `Σ x²`.
    pub fn energy(&self) -> f64 {
        let n = self.origin_length;
        let mut acc = 0.0;
        for (k, b) in self.bins.iter().enumerate() {
            let weight = if k == 0 || (n % 2 == 0 && k == n / 2) {
                1.0
            } else {
                2.0
            };
            acc += weight * b.norm_sqr();
        }
        acc / n as f64
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(len)
        } else {
            p.plan_fft_forward(len)
        }
    })
}

/// Forward transform of a raw sample slice.
pub fn fft_slice(samples: &[f64], sample_rate: f64) -> Result<Spectrum> {
    let n = samples.len();
    if n < 2 {
        return invalid("fft needs at least two samples");
    }
    let mut buf: Vec<Complex64> = samples.iter().map(|&s| Complex64::new(s, 0.0)).collect();
    plan(n, false).process(&mut buf);
    buf.truncate(n / 2 + 1);
    Spectrum::new(buf, sample_rate / n as f64, n)
}

/// One-sided forward transform of a mono buffer.
pub fn fft(buf: &AudioBuffer) -> Result<Spectrum> {
    if !buf.is_mono() {
        return invalid("fft expects a mono buffer");
    }
    fft_slice(buf.samples(), buf.sample_rate() as f64)
}

/// Inverse transform returning raw samples; imaginary parts of the DC and
/// Nyquist bins are ignored.
pub fn ifft_samples(spec: &Spectrum) -> Result<Vec<f64>> {
    let n = spec.origin_length;
    if spec.bins.len() != n / 2 + 1 || n < 2 {
        return invalid(format!(
            "{} bins inconsistent with origin length {n}",
            spec.bins.len()
        ));
    }
    let mut full = vec![Complex64::new(0.0, 0.0); n];
    full[..spec.bins.len()].copy_from_slice(&spec.bins);
    full[0].im = 0.0;
    if n % 2 == 0 {
        full[n / 2].im = 0.0;
    }
    for k in 1..n.div_ceil(2) {
        full[n - k] = full[k].conj();
    }
    plan(n, true).process(&mut full);
    let scale = 1.0 / n as f64;
    Ok(full.iter().map(|c| c.re * scale).collect())
}

pub fn ifft(spec: &Spectrum) -> Result<AudioBuffer> {
    let samples = ifft_samples(spec)?;
    AudioBuffer::mono(samples, spec.sample_rate().round() as u32)
}

/// Analysis/synthesis taper.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Window {
    Rectangular,
    /// Periodic Hann; satisfies constant overlap-add at 50% overlap.
    #[default]
    Hann,
}

impl Window {
    pub fn coefficients(self, len: usize) -> Vec<f64> {
        match self {
            Window::Rectangular => vec![1.0; len],
            Window::Hann => (0..len)
                .map(|i| {
                    0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / len as f64).cos()
                })
                .collect(),
        }
    }
}

/// Short-time transform.
#[derive(Debug, Clone, PartialEq)]
pub struct Stft {
    pub frames: Vec<Spectrum>,
    pub frame_len: usize,
    pub hop: usize,
    pub sample_rate: u32,
}

/// Number of full frames that fit in `len` samples.
pub fn frame_count(len: usize, frame_len: usize, hop: usize) -> usize {
    if frame_len > len || hop == 0 {
        0
    } else {
        (len - frame_len) / hop + 1
    }
}

pub fn stft(buf: &AudioBuffer, frame_len: usize, hop: usize, window: Window) -> Result<Stft> {
    if !buf.is_mono() {
        return invalid("stft expects a mono buffer");
    }
    if frame_len < 2 || hop == 0 || hop > frame_len {
        return invalid(format!("bad framing: frame_len {frame_len}, hop {hop}"));
    }
    if frame_len > buf.len() {
        return invalid(format!(
            "frame length {frame_len} exceeds buffer length {}",
            buf.len()
        ));
    }
    let w = window.coefficients(frame_len);
    let sr = buf.sample_rate() as f64;
    let frames = (0..frame_count(buf.len(), frame_len, hop))
        .map(|i| {
            let seg: Vec<f64> = buf.samples()[i * hop..i * hop + frame_len]
                .iter()
                .zip(&w)
                .map(|(s, w)| s * w)
                .collect();
            fft_slice(&seg, sr)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Stft {
        frames,
        frame_len,
        hop,
        sample_rate: buf.sample_rate(),
    })
}

/// Weighted overlap-add inverse. Each frame is re-windowed and the sum is
/// divided by the accumulated squared window, so any window with full
/// coverage reconstructs interior samples exactly.
pub fn istft(s: &Stft, window: Window) -> Result<AudioBuffer> {
    if s.frames.is_empty() {
        return invalid("empty stft");
    }
    if s.frames.iter().any(|f| f.origin_length != s.frame_len) {
        return invalid("frame length mismatch inside stft");
    }
    let w = window.coefficients(s.frame_len);
    let out_len = (s.frames.len() - 1) * s.hop + s.frame_len;
    let mut out = vec![0.0; out_len];
    let mut norm = vec![0.0; out_len];
    for (i, frame) in s.frames.iter().enumerate() {
        let seg = ifft_samples(frame)?;
        let start = i * s.hop;
        for (j, (x, wj)) in seg.iter().zip(&w).enumerate() {
            out[start + j] += x * wj;
            norm[start + j] += wj * wj;
        }
    }
    for (o, n) in out.iter_mut().zip(&norm) {
        if *n > 1e-12 {
            *o /= n;
        } else {
            *o = 0.0;
        }
    }
    AudioBuffer::mono(out, s.sample_rate)
}
