//! Binaural rendering of a talker for a listener.
//!
//! Each ear's signal is the product, in the frequency domain, of the source
//! spectrum, the listener's HRTF for that ear at `θ_dir` and the talker's
//! voice directivity at the ear-specific angle from [`parallax_adjust`]:
//!
//! ```text
//! Y_l(f) = X(f) H_l(θ_dir, f) V(θ_ori - α, f)
//! Y_r(f) = X(f) H_r(θ_dir, f) V(θ_ori + β, f)
//! ```
//!
//! The near-field render multiplies the HRTFs by the rigid-sphere distance
//! variation function for the scene distance. The far-field render skips that
//! correction and samples the directivity at `θ_ori` for both ears.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::directivity::{parallax_adjust, DirectivityTable, NearFieldParams, TableKind};
use crate::error::{invalid, Result};
use crate::geometry::SceneGeometry;
use crate::signal::{fft_slice, ifft_samples, AudioBuffer, Spectrum, WavEncoding};

/// A rendered two-ear recording with its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct BinauralRecording {
    pub left: AudioBuffer,
    pub right: AudioBuffer,
    pub geometry: SceneGeometry,
    /// `(θ_dir, θ_ori)` in degrees.
    pub labels: (f64, f64),
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    geometry: SceneGeometry,
    theta_dir_deg: f64,
    theta_ori_deg: f64,
    sample_rate: u32,
}

impl BinauralRecording {
    pub fn new(left: AudioBuffer, right: AudioBuffer, geometry: SceneGeometry) -> Result<Self> {
        if !left.is_mono() || !right.is_mono() {
            return invalid("recording ears must be mono");
        }
        if left.len() != right.len() || left.sample_rate() != right.sample_rate() {
            return invalid("left and right ears differ in length or sample rate");
        }
        geometry.validate()?;
        Ok(Self {
            left,
            right,
            labels: (geometry.theta_dir_deg, geometry.theta_ori_deg),
            geometry,
        })
    }

    pub fn len(&self) -> usize {
        self.left.len()
    }

    pub fn is_empty(&self) -> bool {
        self.left.is_empty()
    }

    pub fn sample_rate(&self) -> u32 {
        self.left.sample_rate()
    }

    /// Same scene with both ears replaced.
    pub fn with_ears(&self, left: Vec<f64>, right: Vec<f64>) -> Result<Self> {
        let sr = self.sample_rate();
        Self::new(AudioBuffer::mono(left, sr)?, AudioBuffer::mono(right, sr)?, self.geometry)
    }

    /// Writes a stereo WAV at `path` and the scene as JSON at `path` + `.json`.
    pub fn save(&self, path: impl AsRef<Path>, encoding: WavEncoding) -> Result<()> {
        let path = path.as_ref();
        AudioBuffer::stereo(&self.left, &self.right)?.write_wav(path, encoding)?;
        let sidecar = Sidecar {
            geometry: self.geometry,
            theta_dir_deg: self.labels.0,
            theta_ori_deg: self.labels.1,
            sample_rate: self.sample_rate(),
        };
        std::fs::write(sidecar_path(path), serde_json::to_string_pretty(&sidecar)?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let (left, right) = AudioBuffer::read_wav(path)?.split_stereo()?;
        let sidecar: Sidecar = serde_json::from_str(&std::fs::read_to_string(sidecar_path(path))?)?;
        Self::new(left, right, sidecar.geometry)
    }
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Near-field render.
pub fn render(
    source: &AudioBuffer,
    geom: &SceneGeometry,
    hrtf_l: &DirectivityTable,
    hrtf_r: &DirectivityTable,
    vdp: &DirectivityTable,
    nf: &NearFieldParams,
) -> Result<BinauralRecording> {
    geom.validate()?;
    let (vl, vr) = parallax_adjust(geom);
    let hl = hrtf_l.lookup_near_field(geom.theta_dir_deg, nf, geom.r_m)?;
    let hr = hrtf_r.lookup_near_field(geom.theta_dir_deg, nf, geom.r_m)?;
    compose(source, geom, [hrtf_l, hrtf_r, vdp], [hl, hr, vdp.lookup_row(vl), vdp.lookup_row(vr)])
}

/// Far-field render: no distance correction, no parallax.
pub fn render_far_field(
    source: &AudioBuffer,
    geom: &SceneGeometry,
    hrtf_l: &DirectivityTable,
    hrtf_r: &DirectivityTable,
    vdp: &DirectivityTable,
) -> Result<BinauralRecording> {
    geom.validate()?;
    let v = vdp.lookup_row(geom.theta_ori_deg);
    compose(
        source,
        geom,
        [hrtf_l, hrtf_r, vdp],
        [
            hrtf_l.lookup_row(geom.theta_dir_deg),
            hrtf_r.lookup_row(geom.theta_dir_deg),
            v.clone(),
            v,
        ],
    )
}

/// `rows` holds the left HRTF, right HRTF, left VDP and right VDP responses
/// on their tables' native grids.
fn compose(
    source: &AudioBuffer,
    geom: &SceneGeometry,
    tables: [&DirectivityTable; 3],
    rows: [Vec<Complex64>; 4],
) -> Result<BinauralRecording> {
    if !source.is_mono() {
        return invalid("render expects a mono source");
    }
    let n = source.len();
    if n < 2 {
        return invalid("source needs at least two samples");
    }
    let [hl_t, hr_t, v_t] = tables;
    for (t, want) in [
        (hl_t, TableKind::HrtfLeft),
        (hr_t, TableKind::HrtfRight),
        (v_t, TableKind::Vdp),
    ] {
        if t.kind() != want {
            return invalid(format!("expected a {} table, got {}", want.name(), t.kind().name()));
        }
    }
    let fs = source.sample_rate() as f64;
    for t in tables {
        let table_fs = t.bin_hz() * t.filter_len() as f64;
        if ((table_fs - fs) / fs).abs() > 1e-9 {
            return invalid(format!(
                "table sampled for {table_fs} Hz but source is {fs} Hz"
            ));
        }
    }

    let m = transform_len(n, tables.iter().map(|t| t.filter_len()).max().unwrap_or(2));
    let mut padded = source.samples().to_vec();
    padded.resize(m, 0.0);
    let x = fft_slice(&padded, fs)?;

    let [hl, hr, vl, vr] = rows.map(|r| to_grid(&r, m));
    let ear = |h: &[Complex64], v: &[Complex64]| -> Result<Vec<f64>> {
        let bins = x
            .bins
            .iter()
            .zip(h)
            .zip(v)
            .map(|((a, b), c)| a * b * c)
            .collect();
        let mut y = ifft_samples(&Spectrum::new(bins, x.bin_hz, m)?)?;
        y.truncate(n);
        Ok(y)
    };
    let left = ear(&hl, &vl)?;
    let right = ear(&hr, &vr)?;
    let sr = source.sample_rate();
    BinauralRecording::new(AudioBuffer::mono(left, sr)?, AudioBuffer::mono(right, sr)?, *geom)
}

/// Transform length for a source of `n` samples and filters of `filter_len`.
///
/// Tables at least as long as the source are used on their own grid; the
/// source is zero-padded up to the table length. Otherwise the source is
/// padded by at least the filter length to keep the circular product from
/// wrapping, rounded up to an even 5-smooth size.
fn transform_len(n: usize, filter_len: usize) -> usize {
    if filter_len >= n {
        filter_len
    } else {
        smooth_len(n + filter_len)
    }
}

fn smooth_len(min: usize) -> usize {
    let mut m = min.next_multiple_of(2);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 2;
    }
}

/// Resamples a one-sided response onto the grid of an `m`-point transform by
/// zero-padding its impulse response. Responses already on that grid are
/// returned unchanged.
fn to_grid(row: &[Complex64], m: usize) -> Vec<Complex64> {
    if row.len() == m / 2 + 1 {
        return row.to_vec();
    }
    let l = 2 * (row.len() - 1);
    let spec = Spectrum {
        bins: row.to_vec(),
        bin_hz: 1.0,
        origin_length: l,
    };
    let h = ifft_samples(&spec).expect("row length is consistent");
    // the second half of the impulse response is negative time
    let half = l / 2;
    let mut long = vec![0.0; m];
    long[..half].copy_from_slice(&h[..half]);
    long[m - (l - half)..].copy_from_slice(&h[half..]);
    fft_slice(&long, m as f64).expect("m >= 2").bins
}
