//! Speaker/listener geometry on the horizontal plane.
//!
//! Azimuths are in degrees, measured from the listener's facing direction,
//! positive toward the listener's right. `theta_ori` is the speaker's facing
//! direction relative to the speaker-to-listener line, with the same
//! handedness.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Wraps an angle in degrees into `[-180, 180)`.
pub fn wrap_deg(x: f64) -> f64 {
    if (-180.0..180.0).contains(&x) {
        return x;
    }
    let k = ((x + 180.0) / 360.0).floor();
    let w = x - 360.0 * k;
    // guard against rounding pushing the result onto the open end
    if w >= 180.0 {
        w - 360.0
    } else if w < -180.0 {
        w + 360.0
    } else {
        w
    }
}

/// Circular distance between two angles, in `[0, 180]`.
pub fn angular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(360.0);
    d.min(360.0 - d)
}

pub const MIN_DISTANCE_M: f64 = 0.2;
pub const MAX_DISTANCE_M: f64 = 1e7;

/// Scene parameters for one speaker/listener pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SceneGeometry {
    pub theta_dir_deg: f64,
    pub theta_ori_deg: f64,
    /// Distance between the two head centers.
    pub r_m: f64,
    /// Listener head width (ear to ear).
    pub h_m: f64,
}

impl SceneGeometry {
    /// Builds a validated geometry; angles are wrapped into `[-180, 180)`.
    pub fn new(theta_dir_deg: f64, theta_ori_deg: f64, r_m: f64, h_m: f64) -> Result<Self> {
        let g = Self {
            theta_dir_deg: wrap_deg(theta_dir_deg),
            theta_ori_deg: wrap_deg(theta_ori_deg),
            r_m,
            h_m,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.theta_dir_deg.is_finite() || !self.theta_ori_deg.is_finite() {
            return Err(Error::InvalidGeometry("non-finite angle".into()));
        }
        if !(MIN_DISTANCE_M..=MAX_DISTANCE_M).contains(&self.r_m) {
            return Err(Error::InvalidGeometry(format!(
                "distance {} m outside [{MIN_DISTANCE_M}, {MAX_DISTANCE_M}]",
                self.r_m
            )));
        }
        if !(self.h_m > 0.1 && self.h_m < 0.3) {
            return Err(Error::InvalidGeometry(format!(
                "head width {} m outside (0.1, 0.3)",
                self.h_m
            )));
        }
        if self.r_m <= self.h_m {
            return Err(Error::InvalidGeometry("distance must exceed head width".into()));
        }
        Ok(())
    }

    /// Whether the right ear faces the speaker. `theta_dir = 0` counts as right.
    pub fn right_ipsilateral(&self) -> bool {
        self.theta_dir_deg >= 0.0
    }

    /// Offset of the far ear, `asin((h/2)/r)`, in degrees.
    pub fn alpha_deg(&self) -> f64 {
        (0.5 * self.h_m / self.r_m).asin().to_degrees()
    }

    /// Offset of the near ear for a right-ipsilateral scene at `theta_dir_deg`
    /// (degrees): `atan((h cos θ / 2) / (r - h sin θ / 2))`.
    pub fn beta_deg_at(&self, theta_dir_deg: f64) -> f64 {
        let t = theta_dir_deg.to_radians();
        let half = 0.5 * self.h_m;
        (half * t.cos() / (self.r_m - half * t.sin())).atan().to_degrees()
    }

    /// The same scene seen in a mirror through the median plane.
    pub fn mirrored(&self) -> Self {
        Self {
            theta_dir_deg: wrap_deg(-self.theta_dir_deg),
            theta_ori_deg: wrap_deg(-self.theta_ori_deg),
            ..*self
        }
    }
}
