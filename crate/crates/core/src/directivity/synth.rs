//! Analytic stand-ins for measured HRTF and voice-directivity datasets.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{incidence_deg, DirectivityTable, NearFieldParams, TableKind};
use crate::error::{invalid, Result};
use crate::geometry::wrap_deg;

/// Spherical head with offset ears and an optional rear pinna shadow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeadModel {
    pub near_field: NearFieldParams,
    /// Depth of the high-frequency attenuation the pinna applies to sources
    /// behind it, in `[0, 1)`. Zero gives a bare sphere.
    #[serde(default)]
    pub pinna_shadow: f64,
}

impl HeadModel {
    pub fn sphere_only(near_field: NearFieldParams) -> Self {
        Self {
            near_field,
            pinna_shadow: 0.0,
        }
    }

    /// Real gain of the right pinna for a source at `az_deg`.
    fn pinna_gain(&self, az_deg: f64, freq_hz: f64) -> f64 {
        if self.pinna_shadow == 0.0 {
            return 1.0;
        }
        // the opening faces 40 degrees forward of the ear position
        let facing = self.near_field.ear_azimuth_deg - 40.0;
        let psi = wrap_deg(az_deg - facing).to_radians();
        let t = ((freq_hz - 1500.0) / 4500.0).clamp(0.0, 1.0);
        let ramp = t * t * (3.0 - 2.0 * t);
        1.0 - self.pinna_shadow * ramp * 0.5 * (1.0 - psi.cos())
    }
}

fn grid(step_deg: f64) -> Result<Vec<f64>> {
    let n = 360.0 / step_deg;
    if !(step_deg > 0.0) || (n - n.round()).abs() > 1e-9 || n.round() < 3.0 {
        return invalid(format!("grid step {step_deg} does not divide 360"));
    }
    let n = n.round() as usize;
    Ok((0..n).map(|i| -180.0 + step_deg * i as f64).collect())
}

/// Rigid-sphere HRTF pair on a `grid_step_deg` azimuth grid.
///
/// Responses are the sphere's surface pressure at each ear for a source at
/// the parameters' reference distance (plane wave when infinite), so they
/// carry both the interaural delay and head shadowing. The left table is the
/// exact mirror image of the right one.
pub fn synth_hrtf(
    params: &NearFieldParams,
    grid_step_deg: f64,
    bins: usize,
    bin_hz: f64,
) -> Result<(DirectivityTable, DirectivityTable)> {
    synth_hrtf_model(&HeadModel::sphere_only(*params), grid_step_deg, bins, bin_hz)
}

pub fn synth_hrtf_model(
    head: &HeadModel,
    grid_step_deg: f64,
    bins: usize,
    bin_hz: f64,
) -> Result<(DirectivityTable, DirectivityTable)> {
    head.near_field.validate()?;
    if !(0.0..1.0).contains(&head.pinna_shadow) {
        return invalid("pinna shadow must lie in [0, 1)");
    }
    if bins < 2 {
        return invalid("need at least two bins");
    }
    let az = grid(grid_step_deg)?;
    let sphere = head.near_field.sphere();
    let ear = head.near_field.ear_azimuth_deg;
    let reference = head.near_field.reference_distance_m;

    let right: Vec<Vec<Complex64>> = az
        .iter()
        .map(|&a| {
            let gamma = incidence_deg(a, ear);
            (0..bins)
                .map(|k| {
                    let f = k as f64 * bin_hz;
                    sphere.response(f, gamma, reference) * head.pinna_gain(a, f)
                })
                .collect()
        })
        .collect();

    // left(θ) = right(-θ); index of -θ on a symmetric grid
    let n = az.len();
    let left: Vec<Vec<Complex64>> = (0..n).map(|i| right[(n - i) % n].clone()).collect();

    Ok((
        DirectivityTable::new(az.clone(), left, bin_hz, TableKind::HrtfLeft, reference)?,
        DirectivityTable::new(az, right, bin_hz, TableKind::HrtfRight, reference)?,
    ))
}

/// Frequency-dependent cardioid-family gain
/// `g(θ, f) = (1 - a) + a (1 + cos θ) / 2` with `a(f) = strength · min(1, f / 8 kHz)`.
pub fn vdp_gain(strength: f64, theta_deg: f64, freq_hz: f64) -> f64 {
    let a = strength * (freq_hz / 8000.0).min(1.0);
    let c = theta_deg.abs().to_radians().cos();
    // same as (1 - a) + a (1 + cos θ) / 2, written so the front is exactly 1
    1.0 - a * 0.5 * (1.0 - c)
}

/// Synthetic voice directivity on a 5 degree grid.
pub fn synth_vdp(directivity_strength: f64, bins: usize, bin_hz: f64) -> Result<DirectivityTable> {
    synth_vdp_grid(directivity_strength, 5.0, bins, bin_hz)
}

pub fn synth_vdp_grid(
    directivity_strength: f64,
    grid_step_deg: f64,
    bins: usize,
    bin_hz: f64,
) -> Result<DirectivityTable> {
    if !(directivity_strength >= 0.0) {
        return invalid("directivity strength must be non-negative");
    }
    let az = grid(grid_step_deg)?;
    let rows = az
        .iter()
        .map(|&a| {
            (0..bins)
                .map(|k| Complex64::new(vdp_gain(directivity_strength, a, k as f64 * bin_hz), 0.0))
                .collect()
        })
        .collect();
    DirectivityTable::new(az, rows, bin_hz, TableKind::Vdp, 1.0)
}
