//! Interaural level and time differences, the aliasing band split, the
//! ratio channel, and the five-channel tensor the estimator consumes.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::directivity::SPEED_OF_SOUND;
use crate::error::{invalid, Error, Result};
use crate::geometry::wrap_deg;
use crate::preprocess::{spectral_floor_pair, FloorConfig, FloorMode};
use crate::renderer::BinauralRecording;
use crate::signal::{fft_slice, frame_count, stft, Spectrum, Window};

/// ILD values are clamped to `±ILD_LIMIT_DB`.
pub const ILD_LIMIT_DB: f64 = 60.0;
pub const CHANNELS: usize = 5;
pub const DEFAULT_LENGTH: usize = 512;

/// Per-bin values with a validity flag; invalid bins hold 0.
#[derive(Debug, Clone, PartialEq)]
pub struct BinValues {
    pub values: Vec<f64>,
    pub valid: Vec<bool>,
}

fn check_pair(yl: &Spectrum, yr: &Spectrum) -> Result<()> {
    if yl.len() != yr.len() || yl.origin_length != yr.origin_length {
        return invalid(format!("spectra differ in length ({} vs {})", yl.len(), yr.len()));
    }
    Ok(())
}

/// `20 log10(|Y_l| / |Y_r|)` per bin, clamped to ±60 dB. Bins where both
/// ears are zero are invalid.
pub fn ild(yl: &Spectrum, yr: &Spectrum) -> Result<BinValues> {
    check_pair(yl, yr)?;
    let mut values = Vec::with_capacity(yl.len());
    let mut valid = Vec::with_capacity(yl.len());
    for (l, r) in yl.bins.iter().zip(&yr.bins) {
        let (ml, mr) = (l.norm(), r.norm());
        if ml == 0.0 && mr == 0.0 {
            values.push(0.0);
            valid.push(false);
        } else {
            // difference of logs keeps ear swaps an exact negation
            let db = 20.0 * (ml.log10() - mr.log10());
            values.push(db.clamp(-ILD_LIMIT_DB, ILD_LIMIT_DB));
            valid.push(true);
        }
    }
    Ok(BinValues { values, valid })
}

/// `∠(Y_l / Y_r) / (2π f)` per bin, in seconds, from the principal phase.
/// DC, the Nyquist bin of even-length transforms and bins where either ear
/// is zero are invalid.
pub fn itd(yl: &Spectrum, yr: &Spectrum) -> Result<BinValues> {
    check_pair(yl, yr)?;
    let n = yl.len();
    let nyquist = (yl.origin_length % 2 == 0).then_some(n - 1);
    let mut values = Vec::with_capacity(n);
    let mut valid = Vec::with_capacity(n);
    for (k, (l, r)) in yl.bins.iter().zip(&yr.bins).enumerate() {
        if k == 0 || Some(k) == nyquist || l.norm() == 0.0 || r.norm() == 0.0 {
            values.push(0.0);
            valid.push(false);
            continue;
        }
        let phase = (l * r.conj()).arg();
        values.push(phase / (std::f64::consts::TAU * yl.freq(k)));
        valid.push(true);
    }
    Ok(BinValues { values, valid })
}

/// Frequency above which interaural phase wraps for a head of width `h_m`.
pub fn aliasing_frequency(h_m: f64, c_mps: f64) -> f64 {
    c_mps / (2.0 * h_m)
}

/// Splits per-bin values at `f_split`: `low` holds bins with `f ≤ f_split`.
pub fn split_bands(vec: &[f64], bin_hz: f64, f_split: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let k = split_index(vec.len(), bin_hz, f_split)?;
    Ok((vec[..k].to_vec(), vec[k..].to_vec()))
}

/// Number of bins at or below `f_split`.
pub fn split_index(bins: usize, bin_hz: f64, f_split: f64) -> Result<usize> {
    if bins == 0 || !(bin_hz > 0.0) {
        return invalid("empty spectrum");
    }
    let top = (bins - 1) as f64 * bin_hz;
    if !(f_split >= 0.0 && f_split <= top) {
        return invalid(format!("split frequency {f_split} Hz outside [0, {top}] Hz"));
    }
    Ok(((f_split / bin_hz).floor() as usize + 1).min(bins))
}

/// Smallest ILD magnitude (dB) the ratio channel divides by.
pub const RATIO_EPSILON_DB: f64 = 0.5;

/// Linear convolution of `ild_high` with the reciprocal of the regularized
/// `ild_low`, centre-cropped (or zero-padded around the centre) to `len`.
pub fn ratio_feature(ild_low: &[f64], ild_high: &[f64], len: usize) -> Vec<f64> {
    ratio_feature_eps(ild_low, ild_high, len, RATIO_EPSILON_DB)
}

pub fn ratio_feature_eps(ild_low: &[f64], ild_high: &[f64], len: usize, eps: f64) -> Vec<f64> {
    if ild_low.is_empty() || ild_high.is_empty() {
        return vec![0.0; len];
    }
    let inv: Vec<f64> = ild_low
        .iter()
        .map(|&x| {
            let s = if x < 0.0 { -1.0 } else { 1.0 };
            1.0 / (s * x.abs().max(eps))
        })
        .collect();
    let full = convolve(ild_high, &inv);
    centre_crop(&full, len)
}

fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len() + b.len() - 1;
    let mut out = vec![0.0; n];
    for (i, &x) in a.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (o, &y) in out[i..i + b.len()].iter_mut().zip(b) {
            *o += x * y;
        }
    }
    out
}

fn centre_crop(full: &[f64], len: usize) -> Vec<f64> {
    if full.len() >= len {
        let start = (full.len() - len) / 2;
        full[start..start + len].to_vec()
    } else {
        let mut out = vec![0.0; len];
        let start = (len - full.len()) / 2;
        out[start..start + full.len()].copy_from_slice(full);
        out
    }
}

/// Resamples per-bin values to `len` cells by averaging the valid bins that
/// fall in each cell. Cells with no valid bin hold 0. When there are fewer
/// bins than cells each cell takes the bin under its centre.
pub fn downsample(values: &[f64], valid: &[bool], len: usize) -> Vec<f64> {
    let n = values.len();
    if n == 0 {
        return vec![0.0; len];
    }
    (0..len)
        .map(|i| {
            let (lo, hi) = if n >= len {
                (i * n / len, (i + 1) * n / len)
            } else {
                let c = ((2 * i + 1) * n) / (2 * len);
                (c, c + 1)
            };
            let mut sum = 0.0;
            let mut count = 0usize;
            for k in lo..hi {
                if valid[k] {
                    sum += values[k];
                    count += 1;
                }
            }
            if count == 0 {
                0.0
            } else {
                sum / count as f64
            }
        })
        .collect()
}

/// How spectra are formed before ILD/ITD.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum SpectralMode {
    /// One transform over the whole recording.
    WholeUtterance,
    /// Per-frame ILD/ITD averaged over frames where the bin survives.
    Framed { frame_len: usize, hop: usize },
}

/// Fifth-channel definition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum RatioMode {
    /// `ild_high ∗ 1 / reg(ild_low)`.
    InverseConvolution { epsilon_db: f64 },
    /// Two-ear energy of each high-band cell relative to the mean low-band
    /// energy, in dB.
    EnergyRatio,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    /// Cells per channel.
    pub length: usize,
    pub spectral: SpectralMode,
    /// Shared interaural floor; `None` keeps every bin.
    pub floor: Option<FloorConfig>,
    pub ratio: RatioMode,
    pub speed_of_sound_mps: f64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            length: DEFAULT_LENGTH,
            spectral: SpectralMode::WholeUtterance,
            floor: Some(FloorConfig {
                factor: 1.0,
                mode: FloorMode::Global,
            }),
            ratio: RatioMode::InverseConvolution {
                epsilon_db: RATIO_EPSILON_DB,
            },
            speed_of_sound_mps: SPEED_OF_SOUND,
        }
    }
}

/// Five channels of `len` cells: `ild_low`, `ild_high`, `itd_low`,
/// `itd_high`, `ratio`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTensor {
    pub data: Vec<f64>,
    pub len: usize,
    pub bin_hz: f64,
    /// Number of bins at or below the aliasing frequency.
    pub split_bin: usize,
}

impl FeatureTensor {
    pub fn channel(&self, c: usize) -> &[f64] {
        &self.data[c * self.len..(c + 1) * self.len]
    }

    pub fn from_channels(channels: [Vec<f64>; CHANNELS], bin_hz: f64, split_bin: usize) -> Result<Self> {
        let len = channels[0].len();
        if channels.iter().any(|c| c.len() != len) || len == 0 {
            return invalid("feature channels must share a nonzero length");
        }
        if channels.iter().flatten().any(|v| !v.is_finite()) {
            return invalid("non-finite feature value");
        }
        Ok(Self {
            data: channels.concat(),
            len,
            bin_hz,
            split_bin,
        })
    }

    pub fn to_f32(&self) -> Vec<f32> {
        self.data.iter().map(|&v| v as f32).collect()
    }
}

/// Per-bin ILD and ITD of a recording under `cfg`'s spectral mode.
fn per_bin(rec: &BinauralRecording, cfg: &FeatureConfig) -> Result<(BinValues, BinValues, f64, Vec<f64>)> {
    let fs = rec.sample_rate() as f64;
    match cfg.spectral {
        SpectralMode::WholeUtterance => {
            let yl = fft_slice(rec.left.samples(), fs)?;
            let yr = fft_slice(rec.right.samples(), fs)?;
            let (yl, yr) = match &cfg.floor {
                Some(f) => spectral_floor_pair(&yl, &yr, f)?,
                None => (yl, yr),
            };
            let energy = yl
                .bins
                .iter()
                .zip(&yr.bins)
                .map(|(l, r)| 0.5 * (l.norm_sqr() + r.norm_sqr()))
                .collect();
            Ok((ild(&yl, &yr)?, itd(&yl, &yr)?, yl.bin_hz, energy))
        }
        SpectralMode::Framed { frame_len, hop } => {
            if frame_count(rec.len(), frame_len, hop) == 0 {
                return invalid("recording shorter than one frame");
            }
            let sl = stft(&rec.left, frame_len, hop, Window::Hann)?;
            let sr = stft(&rec.right, frame_len, hop, Window::Hann)?;
            let bins = frame_len / 2 + 1;
            // per-bin threshold from the bin's mean energy over frames
            let joint = |f: usize, k: usize| 0.5 * (sl.frames[f].bins[k].norm_sqr() + sr.frames[f].bins[k].norm_sqr());
            let frames = sl.frames.len();
            let mean: Vec<f64> = (0..bins)
                .map(|k| (0..frames).map(|f| joint(f, k)).sum::<f64>() / frames as f64)
                .collect();
            let factor = cfg.floor.map(|f| f.factor).unwrap_or(0.0);
            let mut sums = [vec![0.0; bins], vec![0.0; bins]];
            let mut counts = [vec![0usize; bins], vec![0usize; bins]];
            let zero = Complex64::new(0.0, 0.0);
            for f in 0..frames {
                let mut l = sl.frames[f].clone();
                let mut r = sr.frames[f].clone();
                for k in 0..bins {
                    if joint(f, k) < factor * mean[k] {
                        l.bins[k] = zero;
                        r.bins[k] = zero;
                    }
                }
                for (j, v) in [ild(&l, &r)?, itd(&l, &r)?].iter().enumerate() {
                    for k in 0..bins {
                        if v.valid[k] {
                            sums[j][k] += v.values[k];
                            counts[j][k] += 1;
                        }
                    }
                }
            }
            let finish = |j: usize| BinValues {
                values: (0..bins)
                    .map(|k| if counts[j][k] > 0 { sums[j][k] / counts[j][k] as f64 } else { 0.0 })
                    .collect(),
                valid: counts[j].iter().map(|&c| c > 0).collect(),
            };
            Ok((finish(0), finish(1), sl.frames[0].bin_hz, mean))
        }
    }
}

/// Builds the five-channel tensor for a (preprocessed) recording.
pub fn assemble(rec: &BinauralRecording, cfg: &FeatureConfig) -> Result<FeatureTensor> {
    if cfg.length == 0 {
        return invalid("feature length must be positive");
    }
    let silent = |s: &[f64]| s.iter().all(|&v| v == 0.0);
    if silent(rec.left.samples()) && silent(rec.right.samples()) {
        return Err(Error::EmptyFeatures("recording is all zeros".into()));
    }
    let (ild_v, itd_v, bin_hz, energy) = per_bin(rec, cfg)?;
    if !ild_v.valid.iter().any(|&v| v) {
        return Err(Error::EmptyFeatures("no bin survived the spectral floor".into()));
    }
    let bins = ild_v.values.len();
    let f_split = aliasing_frequency(rec.geometry.h_m, cfg.speed_of_sound_mps).min((bins - 1) as f64 * bin_hz);
    let k = split_index(bins, bin_hz, f_split)?;
    let len = cfg.length;

    let ild_low = downsample(&ild_v.values[..k], &ild_v.valid[..k], len);
    let ild_high = downsample(&ild_v.values[k..], &ild_v.valid[k..], len);
    let itd_low = downsample(&itd_v.values[..k], &itd_v.valid[..k], len);
    let itd_high = downsample(&itd_v.values[k..], &itd_v.valid[k..], len);
    let ratio = match cfg.ratio {
        RatioMode::InverseConvolution { epsilon_db } => ratio_feature_eps(&ild_low, &ild_high, len, epsilon_db),
        RatioMode::EnergyRatio => {
            let low: Vec<f64> = energy[..k].iter().copied().filter(|&e| e > 0.0).collect();
            let low_mean = if low.is_empty() { 0.0 } else { low.iter().sum::<f64>() / low.len() as f64 };
            let (db, ok): (Vec<f64>, Vec<bool>) = energy[k..]
                .iter()
                .map(|&e| {
                    if e > 0.0 && low_mean > 0.0 {
                        ((10.0 * (e / low_mean).log10()).clamp(-ILD_LIMIT_DB * 2.0, ILD_LIMIT_DB * 2.0), true)
                    } else {
                        (0.0, false)
                    }
                })
                .unzip();
            downsample(&db, &ok, len)
        }
    };
    FeatureTensor::from_channels([ild_low, ild_high, itd_low, itd_high, ratio], bin_hz, k)
}

/// A labelled set of feature tensors stored as `f32`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureBatch {
    pub len: usize,
    pub channels: usize,
    /// `(θ_dir, θ_ori)` in degrees per sample.
    pub labels: Vec<(f64, f64)>,
    /// `count × channels × len`, row-major.
    pub data: Vec<f32>,
}

const FEAT_MAGIC: &[u8; 4] = b"FEAT";
const FEAT_VERSION: u32 = 1;

impl FeatureBatch {
    pub fn new(len: usize, channels: usize) -> Self {
        Self {
            len,
            channels,
            labels: Vec::new(),
            data: Vec::new(),
        }
    }

    pub fn from_tensors(tensors: &[FeatureTensor], labels: Vec<(f64, f64)>) -> Result<Self> {
        if tensors.len() != labels.len() {
            return invalid("tensor and label counts differ");
        }
        let len = tensors.first().map(|t| t.len).unwrap_or(DEFAULT_LENGTH);
        let mut b = Self::new(len, CHANNELS);
        for (t, l) in tensors.iter().zip(labels) {
            b.push(t, l)?;
        }
        Ok(b)
    }

    pub fn push(&mut self, t: &FeatureTensor, label: (f64, f64)) -> Result<()> {
        if t.len != self.len || t.data.len() != self.channels * self.len {
            return invalid("tensor shape does not match the batch");
        }
        self.data.extend(t.data.iter().map(|&v| v as f32));
        self.labels.push(label);
        Ok(())
    }

    pub fn count(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn sample_size(&self) -> usize {
        self.channels * self.len
    }

    pub fn sample(&self, i: usize) -> &[f32] {
        let s = self.sample_size();
        &self.data[i * s..(i + 1) * s]
    }

    /// Samples at `idx`, in order.
    pub fn subset(&self, idx: &[usize]) -> Self {
        let mut out = Self::new(self.len, self.channels);
        for &i in idx {
            out.data.extend_from_slice(self.sample(i));
            out.labels.push(self.labels[i]);
        }
        out
    }

    /// The batch as heard with the ears swapped: interaural channels
    /// negated, the ratio channel kept and both angles mirrored.
    pub fn mirrored(&self) -> Result<Self> {
        if self.channels != CHANNELS {
            return invalid("mirroring needs the five-channel layout");
        }
        let interaural = 4 * self.len;
        let mut out = Self::new(self.len, self.channels);
        for i in 0..self.count() {
            let s = self.sample(i);
            out.data.extend(s[..interaural].iter().map(|&v| -v));
            out.data.extend_from_slice(&s[interaural..]);
            let (d, o) = self.labels[i];
            out.labels.push((wrap_deg(-d), wrap_deg(-o)));
        }
        Ok(out)
    }

    pub fn append(&mut self, other: &FeatureBatch) -> Result<()> {
        if other.len != self.len || other.channels != self.channels {
            return invalid("batch shapes differ");
        }
        self.data.extend_from_slice(&other.data);
        self.labels.extend_from_slice(&other.labels);
        Ok(())
    }

    pub fn write(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(FEAT_MAGIC)?;
        w.write_u32::<LittleEndian>(FEAT_VERSION)?;
        w.write_u64::<LittleEndian>(self.count() as u64)?;
        w.write_u32::<LittleEndian>(self.len as u32)?;
        w.write_u32::<LittleEndian>(self.channels as u32)?;
        for &(d, o) in &self.labels {
            w.write_f64::<LittleEndian>(d)?;
            w.write_f64::<LittleEndian>(o)?;
        }
        for &v in &self.data {
            w.write_f32::<LittleEndian>(v)?;
        }
        Ok(())
    }

    pub fn read(r: &mut impl Read) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != FEAT_MAGIC {
            return Err(Error::Format("not a feature batch (bad magic)".into()));
        }
        let version = r.read_u32::<LittleEndian>()?;
        if version != FEAT_VERSION {
            return Err(Error::Format(format!("unsupported feature batch version {version}")));
        }
        let count = r.read_u64::<LittleEndian>()? as usize;
        let len = r.read_u32::<LittleEndian>()? as usize;
        let channels = r.read_u32::<LittleEndian>()? as usize;
        if len == 0 || channels == 0 || count.checked_mul(len * channels).is_none_or(|n| n > 1 << 34) {
            return Err(Error::Format("implausible feature batch dimensions".into()));
        }
        let mut labels = Vec::with_capacity(count);
        for _ in 0..count {
            let d = r.read_f64::<LittleEndian>()?;
            let o = r.read_f64::<LittleEndian>()?;
            labels.push((d, o));
        }
        let mut data = vec![0f32; count * len * channels];
        r.read_f32_into::<LittleEndian>(&mut data)?;
        Ok(Self {
            len,
            channels,
            labels,
            data,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read(&mut BufReader::new(File::open(path)?))
    }
}
