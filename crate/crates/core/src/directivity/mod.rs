//! Listener HRTFs and speaker voice-directivity patterns on the horizontal
//! plane: storage, interpolation, near-field correction and synthetic
//! analytic models.

mod io;
mod parallax;
pub mod sphere;
mod synth;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{wrap_deg, MIN_DISTANCE_M};
use crate::signal::Spectrum;

pub use parallax::parallax_adjust;
pub use sphere::Sphere;
pub use synth::{synth_hrtf, synth_hrtf_model, synth_vdp, synth_vdp_grid, vdp_gain, HeadModel};

/// What a table describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TableKind {
    HrtfLeft,
    HrtfRight,
    Vdp,
}

impl TableKind {
    fn code(self) -> u32 {
        match self {
            TableKind::HrtfLeft => 0,
            TableKind::HrtfRight => 1,
            TableKind::Vdp => 2,
        }
    }

    fn from_code(c: u32) -> Option<Self> {
        match c {
            0 => Some(TableKind::HrtfLeft),
            1 => Some(TableKind::HrtfRight),
            2 => Some(TableKind::Vdp),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TableKind::HrtfLeft => "hrtf-left",
            TableKind::HrtfRight => "hrtf-right",
            TableKind::Vdp => "vdp",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        [TableKind::HrtfLeft, TableKind::HrtfRight, TableKind::Vdp]
            .into_iter()
            .find(|k| k.name() == s)
    }
}

/// Upper bound on any stored magnitude.
pub const MAX_MAGNITUDE: f64 = 1e4;

/// Azimuth-indexed complex frequency responses.
///
/// Rows are sampled at `bin_hz` spacing starting at DC, so a row of `B` bins
/// corresponds to a real filter of length `2 (B - 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectivityTable {
    azimuths_deg: Vec<f64>,
    responses: Vec<Vec<Complex64>>,
    bin_hz: f64,
    kind: TableKind,
    reference_distance_m: f64,
}

impl DirectivityTable {
    pub fn new(
        azimuths_deg: Vec<f64>,
        responses: Vec<Vec<Complex64>>,
        bin_hz: f64,
        kind: TableKind,
        reference_distance_m: f64,
    ) -> Result<Self> {
        if azimuths_deg.len() < 3 {
            return invalid("a directivity table needs at least 3 azimuths");
        }
        if azimuths_deg.len() != responses.len() {
            return invalid("azimuth count does not match response count");
        }
        if azimuths_deg
            .iter()
            .any(|a| !a.is_finite() || !(-180.0..180.0).contains(a))
        {
            return invalid("azimuths must lie in [-180, 180)");
        }
        if azimuths_deg.windows(2).any(|w| w[0] >= w[1]) {
            return invalid("azimuths must be strictly increasing");
        }
        let bins = responses[0].len();
        if bins < 2 || responses.iter().any(|r| r.len() != bins) {
            return invalid("all responses must share a bin count of at least 2");
        }
        for (row, az) in responses.iter().zip(&azimuths_deg) {
            if let Some(k) = row.iter().position(|c| {
                let m = c.norm();
                !c.re.is_finite() || !c.im.is_finite() || !(m > 0.0 && m < MAX_MAGNITUDE)
            }) {
                return invalid(format!(
                    "response at {az} deg, bin {k} has magnitude {} outside (0, {MAX_MAGNITUDE})",
                    row[k].norm()
                ));
            }
        }
        if !(bin_hz > 0.0) || !(reference_distance_m > 0.0) {
            return invalid("bin spacing and reference distance must be positive");
        }
        Ok(Self {
            azimuths_deg,
            responses,
            bin_hz,
            kind,
            reference_distance_m,
        })
    }

    pub fn azimuths_deg(&self) -> &[f64] {
        &self.azimuths_deg
    }

    pub fn responses(&self) -> &[Vec<Complex64>] {
        &self.responses
    }

    pub fn bin_hz(&self) -> f64 {
        self.bin_hz
    }

    pub fn bins(&self) -> usize {
        self.responses[0].len()
    }

    pub fn kind(&self) -> TableKind {
        self.kind
    }

    pub fn reference_distance_m(&self) -> f64 {
        self.reference_distance_m
    }

    /// Length of the real filter a row represents.
    pub fn filter_len(&self) -> usize {
        2 * (self.bins() - 1)
    }

    /// Largest magnitude anywhere in the table.
    pub fn max_gain(&self) -> f64 {
        self.responses
            .iter()
            .flatten()
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }

    /// Index of `az` if it is a grid point.
    fn exact_index(&self, az: f64) -> Option<usize> {
        self.azimuths_deg.binary_search_by(|a| a.total_cmp(&az)).ok()
    }

    /// Neighboring grid rows around `az` (circularly) with their angular
    /// distances `(lo, hi, d_lo, d_hi)`.
    fn neighbors(&self, az: f64) -> (usize, usize, f64, f64) {
        let n = self.azimuths_deg.len();
        let first = self.azimuths_deg[0];
        let last = self.azimuths_deg[n - 1];
        if az < first || az > last {
            // the gap across the ±180 seam
            let d_lo = if az > last { az - last } else { az + 360.0 - last };
            let d_hi = if az < first { first - az } else { first + 360.0 - az };
            return (n - 1, 0, d_lo, d_hi);
        }
        let hi = self.azimuths_deg.partition_point(|&a| a < az);
        let lo = hi - 1;
        (lo, hi, az - self.azimuths_deg[lo], self.azimuths_deg[hi] - az)
    }

    /// Response at an arbitrary azimuth.
    ///
    /// Grid hits return the stored row unchanged. Elsewhere magnitude and
    /// frequency-unwrapped phase are interpolated linearly between the two
    /// neighbouring rows. The weights are formed from the two angular
    /// distances so that mirrored queries on mirrored tables agree exactly.
    pub fn lookup(&self, azimuth_deg: f64) -> Spectrum {
        let bins = self.lookup_row(azimuth_deg);
        let n = self.filter_len();
        Spectrum {
            bins,
            bin_hz: self.bin_hz,
            origin_length: n,
        }
    }

    pub(crate) fn lookup_row(&self, azimuth_deg: f64) -> Vec<Complex64> {
        let az = wrap_deg(azimuth_deg);
        if let Some(i) = self.exact_index(az) {
            return self.responses[i].clone();
        }
        let (lo, hi, d_lo, d_hi) = self.neighbors(az);
        interpolate_rows(&self.responses[lo], &self.responses[hi], d_lo, d_hi)
    }

    /// Applies the rigid-sphere distance variation function to every row.
    ///
    /// The correction is the sphere response for a source at
    /// `target_distance_m` divided by the response at the reference distance,
    /// evaluated at each row's angle of incidence on this table's ear.
    pub fn near_field_correct(
        &self,
        params: &NearFieldParams,
        target_distance_m: f64,
    ) -> Result<DirectivityTable> {
        let ear = self.ear_azimuth(params)?;
        params.check_target(target_distance_m)?;
        if target_distance_m == params.reference_distance_m {
            return Ok(self.clone());
        }
        let responses = self
            .azimuths_deg
            .iter()
            .zip(&self.responses)
            .map(|(&az, row)| {
                let dvf = params.dvf_row(self.bin_hz, row.len(), incidence_deg(az, ear), target_distance_m);
                row.iter().zip(&dvf).map(|(h, d)| h * d).collect()
            })
            .collect();
        DirectivityTable::new(
            self.azimuths_deg.clone(),
            responses,
            self.bin_hz,
            self.kind,
            target_distance_m,
        )
    }

    /// Near-field corrected response at one azimuth. Identical to
    /// `near_field_correct(..)?.lookup(az)` but only corrects the rows the
    /// interpolation touches.
    pub fn lookup_near_field(
        &self,
        azimuth_deg: f64,
        params: &NearFieldParams,
        target_distance_m: f64,
    ) -> Result<Vec<Complex64>> {
        let ear = self.ear_azimuth(params)?;
        params.check_target(target_distance_m)?;
        if target_distance_m == params.reference_distance_m {
            return Ok(self.lookup_row(azimuth_deg));
        }
        let corrected = |idx: &[usize]| -> Vec<Vec<Complex64>> {
            let inc: Vec<f64> = idx.iter().map(|&i| incidence_deg(self.azimuths_deg[i], ear)).collect();
            let dvf = params.dvf_rows(self.bin_hz, self.bins(), &inc, target_distance_m);
            idx.iter()
                .zip(&dvf)
                .map(|(&i, d)| self.responses[i].iter().zip(d).map(|(h, d)| h * d).collect())
                .collect()
        };
        let az = wrap_deg(azimuth_deg);
        if let Some(i) = self.exact_index(az) {
            return Ok(corrected(&[i]).remove(0));
        }
        let (lo, hi, d_lo, d_hi) = self.neighbors(az);
        let rows = corrected(&[lo, hi]);
        Ok(interpolate_rows(&rows[0], &rows[1], d_lo, d_hi))
    }

    fn ear_azimuth(&self, params: &NearFieldParams) -> Result<f64> {
        match self.kind {
            TableKind::HrtfLeft => Ok(-params.ear_azimuth_deg),
            TableKind::HrtfRight => Ok(params.ear_azimuth_deg),
            TableKind::Vdp => invalid("near-field correction applies to HRTF tables only"),
        }
    }
}

/// Angle between a source at `source_az` and an ear at `ear_az`, in `[0, 180]`.
pub(crate) fn incidence_deg(source_az: f64, ear_az: f64) -> f64 {
    wrap_deg(source_az - ear_az).abs()
}

fn unwrapped_phase(row: &[Complex64]) -> Vec<f64> {
    use std::f64::consts::TAU;
    let mut out = Vec::with_capacity(row.len());
    let mut prev = row[0].arg();
    let mut offset = 0.0;
    out.push(prev);
    for c in &row[1..] {
        let p = c.arg();
        let d = p - prev;
        if d > std::f64::consts::PI {
            offset -= TAU;
        } else if d < -std::f64::consts::PI {
            offset += TAU;
        }
        out.push(p + offset);
        prev = p;
    }
    out
}

fn interpolate_rows(a: &[Complex64], b: &[Complex64], d_a: f64, d_b: f64) -> Vec<Complex64> {
    let total = d_a + d_b;
    // the nearer row gets the larger weight
    let w_a = d_b / total;
    let w_b = d_a / total;
    let pa = unwrapped_phase(a);
    let pb = unwrapped_phase(b);
    a.iter()
        .zip(b)
        .zip(pa.iter().zip(&pb))
        .map(|((ca, cb), (&fa, &fb))| {
            let mag = w_a * ca.norm() + w_b * cb.norm();
            let phase = w_a * fa + w_b * fb;
            Complex64::from_polar(mag, phase)
        })
        .collect()
}

/// Inputs to the near-field (distance variation) correction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NearFieldParams {
    /// Half the head width.
    pub head_radius_m: f64,
    pub speed_of_sound_mps: f64,
    /// Distance at which the tables being corrected were measured;
    /// `f64::INFINITY` (serialized as `null`) denotes plane-wave tables.
    #[serde(with = "crate::serde_util::far_field")]
    pub reference_distance_m: f64,
    /// Azimuth of the right ear; the left ear sits at the negative angle.
    #[serde(default = "default_ear_azimuth")]
    pub ear_azimuth_deg: f64,
}

fn default_ear_azimuth() -> f64 {
    90.0
}

pub const SPEED_OF_SOUND: f64 = 343.0;

impl Default for NearFieldParams {
    fn default() -> Self {
        Self {
            head_radius_m: 0.09,
            speed_of_sound_mps: SPEED_OF_SOUND,
            reference_distance_m: f64::INFINITY,
            ear_azimuth_deg: 90.0,
        }
    }
}

impl NearFieldParams {
    pub fn new(head_radius_m: f64, speed_of_sound_mps: f64, reference_distance_m: f64) -> Result<Self> {
        let p = Self {
            head_radius_m,
            speed_of_sound_mps,
            reference_distance_m,
            ear_azimuth_deg: 90.0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_ear_azimuth(mut self, deg: f64) -> Result<Self> {
        self.ear_azimuth_deg = deg;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.head_radius_m > 0.05 && self.head_radius_m < 0.15) {
            return invalid(format!("head radius {} m outside (0.05, 0.15)", self.head_radius_m));
        }
        if !(self.speed_of_sound_mps > 0.0) {
            return invalid("speed of sound must be positive");
        }
        if !(self.reference_distance_m > 2.0 * self.head_radius_m) {
            return invalid("reference distance must exceed the head diameter");
        }
        if !(self.ear_azimuth_deg > 0.0 && self.ear_azimuth_deg < 180.0) {
            return invalid("ear azimuth must lie in (0, 180)");
        }
        Ok(())
    }

    pub fn head_width_m(&self) -> f64 {
        2.0 * self.head_radius_m
    }

    pub fn sphere(&self) -> Sphere {
        Sphere {
            radius_m: self.head_radius_m,
            speed_of_sound_mps: self.speed_of_sound_mps,
        }
    }

    fn check_target(&self, target_distance_m: f64) -> Result<()> {
        self.validate()?;
        if !(target_distance_m >= MIN_DISTANCE_M.max(2.0 * self.head_radius_m)) {
            return Err(Error::InvalidGeometry(format!(
                "target distance {target_distance_m} m is inside the head diameter or below {MIN_DISTANCE_M} m"
            )));
        }
        Ok(())
    }

    /// Distance variation function over `bins` bins spaced `bin_hz` apart.
    pub fn dvf_row(&self, bin_hz: f64, bins: usize, incidence_deg: f64, target_distance_m: f64) -> Vec<Complex64> {
        self.dvf_rows(bin_hz, bins, &[incidence_deg], target_distance_m).remove(0)
    }

    /// [`dvf_row`](Self::dvf_row) for several incidence angles at once.
    pub fn dvf_rows(&self, bin_hz: f64, bins: usize, incidence_deg: &[f64], target_distance_m: f64) -> Vec<Vec<Complex64>> {
        let mut out = vec![vec![Complex64::new(1.0, 0.0); bins]; incidence_deg.len()];
        if target_distance_m == self.reference_distance_m {
            return out;
        }
        let sphere = self.sphere();
        for k in 0..bins {
            let f = k as f64 * bin_hz;
            let num = sphere.responses(f, incidence_deg, target_distance_m);
            let den = sphere.responses(f, incidence_deg, self.reference_distance_m);
            for (j, row) in out.iter_mut().enumerate() {
                row[k] = num[j] / den[j];
            }
        }
        out
    }
}

pub use io::{read_table, write_table};
