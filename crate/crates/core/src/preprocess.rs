//! Voiced-speech detection, time masking and spectral flooring.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::renderer::BinauralRecording;
use crate::signal::{fft_slice, frame_count, ifft_samples, AudioBuffer, Spectrum, Window};

/// Pitch-detector settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VoicingConfig {
    pub frame_len: usize,
    pub hop: usize,
    /// Samples analysed around each frame centre.
    pub analysis_len: usize,
    pub min_f0_hz: f64,
    pub max_f0_hz: f64,
    /// Logistic slope and centre applied to the harmonicity score.
    pub slope: f64,
    pub bias: f64,
}

impl Default for VoicingConfig {
    fn default() -> Self {
        Self {
            frame_len: crate::signal::DEFAULT_FRAME_LEN,
            hop: crate::signal::DEFAULT_HOP,
            analysis_len: 1024,
            min_f0_hz: 50.0,
            max_f0_hz: 450.0,
            slope: 20.0,
            bias: 0.45,
        }
    }
}

/// Per-frame voicing probability and pitch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoicingDecision {
    pub probability: Vec<f64>,
    pub pitch_hz: Vec<Option<f64>>,
    pub frame_len: usize,
    pub hop: usize,
}

impl VoicingDecision {
    pub fn len(&self) -> usize {
        self.probability.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probability.is_empty()
    }

    pub fn voiced_fraction(&self, threshold: f64) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        self.probability.iter().filter(|&&p| p >= threshold).count() as f64 / self.len() as f64
    }

    /// A decision with every frame set to `probability`, for `len` samples.
    pub fn uniform(len: usize, frame_len: usize, hop: usize, probability: f64) -> Self {
        let n = frame_count(len, frame_len, hop);
        Self {
            probability: vec![probability; n],
            pitch_hz: vec![None; n],
            frame_len,
            hop,
        }
    }
}

/// Frames quieter than this fraction of the loudest frame count as silence.
const SILENCE_RATIO: f64 = 1e-10;

pub fn detect_voicing(buf: &AudioBuffer) -> Result<VoicingDecision> {
    detect_voicing_with(buf, &VoicingConfig::default())
}

/// Harmonicity-based voicing detector.
///
/// Around each frame centre a Hann-windowed segment is zero-padded to twice
/// its length and its power spectrum is summed against cosine combs
/// `cos(2π f τ)` for every candidate period `τ`; this is the segment's
/// autocorrelation. Dividing by the window's own autocorrelation and by the
/// zero-lag value gives a score near 1 for periodic input and near 0 for
/// noise. The period is the shortest candidate scoring within 0.05 of the
/// best one, refined parabolically.
pub fn detect_voicing_with(buf: &AudioBuffer, cfg: &VoicingConfig) -> Result<VoicingDecision> {
    if !buf.is_mono() {
        return invalid("voicing detection expects a mono buffer");
    }
    if cfg.hop == 0 || cfg.hop > cfg.frame_len {
        return invalid("bad voicing frame grid");
    }
    if buf.len() < cfg.frame_len {
        return invalid(format!(
            "buffer of {} samples is shorter than one {}-sample frame",
            buf.len(),
            cfg.frame_len
        ));
    }
    let fs = buf.sample_rate() as f64;
    let w_len = cfg.analysis_len;
    let lag_min = (fs / cfg.max_f0_hz).floor().max(2.0) as usize;
    let lag_max = (fs / cfg.min_f0_hz).ceil() as usize;
    if !(cfg.min_f0_hz > 0.0 && cfg.min_f0_hz < cfg.max_f0_hz) || lag_max + 1 >= w_len / 2 {
        return invalid("pitch range does not fit the analysis window");
    }

    let window = Window::Hann.coefficients(w_len);
    let window_acf = autocorrelation(&window, fs, f64::INFINITY)?;
    let x = buf.samples();
    let frames = frame_count(x.len(), cfg.frame_len, cfg.hop);

    let mut segs = Vec::with_capacity(frames);
    for i in 0..frames {
        let centre = (i * cfg.hop + cfg.frame_len / 2) as isize;
        let start = centre - (w_len / 2) as isize;
        let seg: Vec<f64> = (0..w_len)
            .map(|j| {
                let t = start + j as isize;
                if t >= 0 && (t as usize) < x.len() {
                    x[t as usize] * window[j]
                } else {
                    0.0
                }
            })
            .collect();
        segs.push(seg);
    }
    let energies: Vec<f64> = segs.iter().map(|s| s.iter().map(|v| v * v).sum()).collect();
    let loudest = energies.iter().cloned().fold(0.0, f64::max);

    let mut probability = Vec::with_capacity(frames);
    let mut pitch_hz = Vec::with_capacity(frames);
    for (seg, &e) in segs.iter().zip(&energies) {
        if loudest == 0.0 || e <= SILENCE_RATIO * loudest {
            probability.push(0.0);
            pitch_hz.push(None);
            continue;
        }
        let acf = autocorrelation(seg, fs, HARMONIC_BAND_HZ)?;
        let norm = |k: usize| (acf[k] / window_acf[k]) / (acf[0] / window_acf[0]);
        let score: Vec<f64> = (0..=lag_max + 1).map(norm).collect();

        let mut best = f64::NEG_INFINITY;
        for &s in &score[lag_min..=lag_max] {
            best = best.max(s);
        }
        let is_peak = |k: usize| score[k] >= score[k - 1] && score[k] >= score[k + 1];
        let lag = (lag_min..=lag_max)
            .find(|&k| is_peak(k) && score[k] >= best - 0.05)
            .unwrap_or_else(|| {
                (lag_min..=lag_max)
                    .max_by(|&a, &b| score[a].total_cmp(&score[b]))
                    .expect("non-empty lag range")
            });
        let (a, b, c) = (score[lag - 1], score[lag], score[lag + 1]);
        let denom = a - 2.0 * b + c;
        let (offset, peak) = if denom < 0.0 {
            let d = (0.5 * (a - c) / denom).clamp(-0.5, 0.5);
            (d, b - 0.25 * (a - c) * d)
        } else {
            (0.0, b)
        };
        let p = 1.0 / (1.0 + (-cfg.slope * (peak.min(1.0) - cfg.bias)).exp());
        let f0 = (fs / (lag as f64 + offset)).clamp(cfg.min_f0_hz, cfg.max_f0_hz);
        probability.push(p);
        pitch_hz.push((p >= 0.5).then_some(f0));
    }
    Ok(VoicingDecision {
        probability,
        pitch_hz,
        frame_len: cfg.frame_len,
        hop: cfg.hop,
    })
}

/// Harmonics above this band are faded out of the comb sum; single-sample
/// glottal pulses otherwise decorrelate under sub-sample period offsets.
const HARMONIC_BAND_HZ: f64 = 1000.0;

/// Linear autocorrelation via the power spectrum of a zero-padded copy, with
/// the spectrum faded to zero between `band_hz` and twice that.
fn autocorrelation(x: &[f64], fs: f64, band_hz: f64) -> Result<Vec<f64>> {
    let mut padded = x.to_vec();
    padded.resize(2 * x.len(), 0.0);
    let spec = fft_slice(&padded, fs)?;
    let power: Vec<Complex64> = spec
        .bins
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let w = if spec.freq(k) <= band_hz {
                1.0
            } else {
                let t = ((spec.freq(k) - band_hz) / band_hz).min(1.0);
                (0.5 * std::f64::consts::PI * t).cos().powi(2)
            };
            Complex64::new(c.norm_sqr() * w, 0.0)
        })
        .collect();
    let mut r = ifft_samples(&Spectrum::new(power, spec.bin_hz, spec.origin_length)?)?;
    r.truncate(x.len());
    Ok(r)
}

/// Length of the raised-cosine ramps at mask edges.
pub const MASK_RAMP_S: f64 = 0.005;

/// Per-sample gain in `[0, 1]` implied by `decision` for a signal of `len`
/// samples.
///
/// Frame `i` owns the `hop` samples centred on its centre; samples before the
/// first centre region belong to the first frame and the tail to the last.
/// Ramps sit inside the kept regions so that dropped frames are exactly zero.
pub fn time_mask(len: usize, sample_rate: u32, decision: &VoicingDecision, threshold: f64) -> Result<Vec<f64>> {
    let frames = frame_count(len, decision.frame_len, decision.hop);
    if frames != decision.len() || frames == 0 {
        return invalid(format!(
            "voicing grid has {} frames but the signal needs {frames}",
            decision.len()
        ));
    }
    let hop = decision.hop;
    let mut mask = vec![0.0; len];
    for (i, &p) in decision.probability.iter().enumerate() {
        if p < threshold {
            continue;
        }
        let centre = i * hop + decision.frame_len / 2;
        let start = if i == 0 { 0 } else { centre - hop / 2 };
        let end = if i + 1 == frames { len } else { centre - hop / 2 + hop };
        mask[start..end].iter_mut().for_each(|m| *m = 1.0);
    }

    let ramp = (MASK_RAMP_S * sample_rate as f64).round() as usize;
    if ramp > 0 {
        let mut t = 0;
        while t < len {
            if mask[t] == 0.0 {
                t += 1;
                continue;
            }
            let start = t;
            while t < len && mask[t] == 1.0 {
                t += 1;
            }
            let end = t;
            let r = ramp.min((end - start) / 2);
            for j in 0..r {
                let g = 0.5 * (1.0 - (std::f64::consts::PI * (j as f64 + 0.5) / r as f64).cos());
                if start > 0 {
                    mask[start + j] = g;
                }
                if end < len {
                    mask[end - 1 - j] = g;
                }
            }
        }
    }
    Ok(mask)
}

/// Zeroes unvoiced frames in both ears with one shared mask.
pub fn mask_unvoiced(rec: &BinauralRecording, decision: &VoicingDecision, threshold: f64) -> Result<BinauralRecording> {
    let mask = time_mask(rec.len(), rec.sample_rate(), decision, threshold)?;
    let apply = |b: &AudioBuffer| -> Vec<f64> { b.samples().iter().zip(&mask).map(|(s, m)| s * m).collect() };
    rec.with_ears(apply(&rec.left), apply(&rec.right))
}

/// Average of the two ears, the signal voicing is detected on.
pub fn mid_signal(rec: &BinauralRecording) -> Result<AudioBuffer> {
    let mid = rec
        .left
        .samples()
        .iter()
        .zip(rec.right.samples())
        .map(|(l, r)| 0.5 * (l + r))
        .collect();
    AudioBuffer::mono(mid, rec.sample_rate())
}

/// How the spectral floor is estimated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum FloorMode {
    /// One threshold from the mean over all bins.
    Global,
    /// Per-bin threshold from the mean over a band of `width_hz` around it.
    Local { width_hz: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FloorConfig {
    pub factor: f64,
    pub mode: FloorMode,
}

impl Default for FloorConfig {
    fn default() -> Self {
        Self {
            factor: 1.0,
            mode: FloorMode::Global,
        }
    }
}

/// Zeroes bins whose energy falls below the mean bin energy.
pub fn spectral_floor_mask(spec: &Spectrum) -> Spectrum {
    spectral_floor_mask_with(spec, 1.0)
}

pub fn spectral_floor_mask_with(spec: &Spectrum, factor: f64) -> Spectrum {
    apply_floor(spec, floor_threshold(spec, factor))
}

/// `factor` times the mean of `|X_k|²`.
pub fn floor_threshold(spec: &Spectrum, factor: f64) -> f64 {
    if spec.bins.is_empty() {
        return 0.0;
    }
    factor * spec.bins.iter().map(|c| c.norm_sqr()).sum::<f64>() / spec.bins.len() as f64
}

/// Zeroes bins with `|X_k|² < threshold`.
pub fn apply_floor(spec: &Spectrum, threshold: f64) -> Spectrum {
    let bins = spec
        .bins
        .iter()
        .map(|&c| if c.norm_sqr() < threshold { Complex64::new(0.0, 0.0) } else { c })
        .collect();
    Spectrum { bins, ..*spec }
}

/// Per-bin thresholds shared by both ears, from the two-ear mean energy.
pub fn pair_thresholds(left: &Spectrum, right: &Spectrum, cfg: &FloorConfig) -> Result<Vec<f64>> {
    if left.len() != right.len() {
        return invalid("ear spectra differ in length");
    }
    let joint: Vec<f64> = left
        .bins
        .iter()
        .zip(&right.bins)
        .map(|(l, r)| 0.5 * (l.norm_sqr() + r.norm_sqr()))
        .collect();
    let n = joint.len();
    Ok(match cfg.mode {
        FloorMode::Global => {
            let mean = joint.iter().sum::<f64>() / n as f64;
            vec![cfg.factor * mean; n]
        }
        FloorMode::Local { width_hz } => {
            let half = ((0.5 * width_hz / left.bin_hz).round() as usize).max(1);
            let mut prefix = vec![0.0; n + 1];
            for (k, e) in joint.iter().enumerate() {
                prefix[k + 1] = prefix[k] + e;
            }
            (0..n)
                .map(|k| {
                    let lo = k.saturating_sub(half);
                    let hi = (k + half + 1).min(n);
                    cfg.factor * (prefix[hi] - prefix[lo]) / (hi - lo) as f64
                })
                .collect()
        }
    })
}

/// Applies the shared floor: a bin is zeroed in both ears when the mean of
/// the two ears' energies falls below its threshold.
pub fn spectral_floor_pair(left: &Spectrum, right: &Spectrum, cfg: &FloorConfig) -> Result<(Spectrum, Spectrum)> {
    let thr = pair_thresholds(left, right, cfg)?;
    let zero = Complex64::new(0.0, 0.0);
    let mut l = left.clone();
    let mut r = right.clone();
    for k in 0..thr.len() {
        if 0.5 * (l.bins[k].norm_sqr() + r.bins[k].norm_sqr()) < thr[k] {
            l.bins[k] = zero;
            r.bins[k] = zero;
        }
    }
    Ok((l, r))
}

/// Voicing threshold and floor applied ahead of feature extraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PreprocessConfig {
    pub voicing: VoicingConfig,
    pub threshold: f64,
    /// Skip time masking entirely.
    pub keep_unvoiced: bool,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            voicing: VoicingConfig::default(),
            threshold: 0.5,
            keep_unvoiced: false,
        }
    }
}

/// Detects voicing on the mid signal and masks both ears.
pub fn preprocess(rec: &BinauralRecording, cfg: &PreprocessConfig) -> Result<BinauralRecording> {
    if cfg.keep_unvoiced {
        return Ok(rec.clone());
    }
    let decision = detect_voicing_with(&mid_signal(rec)?, &cfg.voicing)?;
    mask_unvoiced(rec, &decision, cfg.threshold)
}
