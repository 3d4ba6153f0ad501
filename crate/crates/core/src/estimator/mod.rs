//! CNN regressor for `(θ_dir, θ_ori)` and an exhaustive template-matching
//! baseline.

mod checkpoint;
mod network;
mod template;
mod train;

pub use checkpoint::{load_model, read_model, save_model, write_model};
pub use network::{Architecture, Cache, ConvSpec, Network, Scalar, OUTPUTS};
pub use template::{template_match, TemplateBank};
pub use train::{fine_tune, loss_and_grad, train, train_generic, Schedule, TrainConfig, TrainLog};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::features::FeatureTensor;
use crate::geometry::wrap_deg;

/// The trained model type.
pub type EstimatorModel = Network<f32>;

/// Raw network outputs and the angles they decode to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnglePrediction {
    pub sin_dir: f64,
    pub cos_dir: f64,
    pub sin_ori: f64,
    pub cos_ori: f64,
    pub theta_dir_deg: f64,
    pub theta_ori_deg: f64,
}

impl AnglePrediction {
    pub fn from_raw(raw: [f64; 4]) -> Self {
        let [sin_dir, cos_dir, sin_ori, cos_ori] = raw;
        Self {
            sin_dir,
            cos_dir,
            sin_ori,
            cos_ori,
            theta_dir_deg: decode_angle(sin_dir, cos_dir),
            theta_ori_deg: decode_angle(sin_ori, cos_ori),
        }
    }

    /// Exact encoding of a pair of angles.
    pub fn from_angles(theta_dir_deg: f64, theta_ori_deg: f64) -> Self {
        let raw = encode_target(theta_dir_deg, theta_ori_deg);
        Self {
            theta_dir_deg: wrap_deg(theta_dir_deg),
            theta_ori_deg: wrap_deg(theta_ori_deg),
            ..Self::from_raw(raw)
        }
    }

    pub fn raw(&self) -> [f64; 4] {
        [self.sin_dir, self.cos_dir, self.sin_ori, self.cos_ori]
    }
}

/// `(sin θ_dir, cos θ_dir, sin θ_ori, cos θ_ori)`.
pub fn encode_target(theta_dir_deg: f64, theta_ori_deg: f64) -> [f64; 4] {
    let (sd, cd) = theta_dir_deg.to_radians().sin_cos();
    let (so, co) = theta_ori_deg.to_radians().sin_cos();
    [sd, cd, so, co]
}

/// `atan2(s, c)` in degrees, in [-180, 180).
pub fn decode_angle(s: f64, c: f64) -> f64 {
    wrap_deg(s.atan2(c).to_degrees())
}

/// Mean squared error over the four components.
pub fn loss(pred: &AnglePrediction, target: (f64, f64)) -> f64 {
    let t = encode_target(target.0, target.1);
    pred.raw().iter().zip(t).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / 4.0
}

impl<T: Scalar> Network<T> {
    /// Inference on a single feature tensor.
    pub fn estimate(&self, x: &FeatureTensor) -> Result<AnglePrediction> {
        if x.len * crate::features::CHANNELS != self.input_size() || self.arch.input_channels != crate::features::CHANNELS {
            return invalid(format!(
                "feature tensor of length {} does not match model input length {}",
                x.len, self.arch.input_len
            ));
        }
        let input: Vec<T> = x.data.iter().map(|&v| T::of(v)).collect();
        Ok(self.predict_angles(&input, 1)?.remove(0))
    }

    /// Inference over `count` sample-major inputs.
    pub fn predict_angles(&self, input: &[T], count: usize) -> Result<Vec<AnglePrediction>> {
        let out = self.predict(input, count)?;
        if self.arch.outputs() != OUTPUTS {
            return invalid("model does not have four outputs");
        }
        Ok(out
            .chunks_exact(OUTPUTS)
            .map(|o| AnglePrediction::from_raw([o[0], o[1], o[2], o[3]].map(|v| v.to_f64().unwrap_or(f64::NAN))))
            .collect())
    }

    pub fn all_finite(&self) -> bool {
        self.params.iter().chain(&self.input_mean).chain(&self.input_scale).all(|v| v.is_finite())
    }
}

impl EstimatorModel {
    /// Predictions for every sample of a batch, in chunks of `chunk`.
    pub fn predict_batch(&self, batch: &crate::features::FeatureBatch, chunk: usize) -> Result<Vec<AnglePrediction>> {
        use rayon::prelude::*;
        if batch.len != self.arch.input_len || batch.channels != self.arch.input_channels {
            return invalid("batch shape does not match the model");
        }
        let d = batch.sample_size();
        let chunk = chunk.max(1);
        let parts = batch
            .data
            .par_chunks(chunk * d)
            .map(|c| self.predict_angles(c, c.len() / d))
            .collect::<Result<Vec<_>>>()?;
        Ok(parts.into_iter().flatten().collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_prediction_loss() {
        let p = AnglePrediction::from_raw([0.0; 4]);
        assert_eq!(loss(&p, (0.0, 0.0)), 0.5);
        let q = AnglePrediction::from_angles(33.0, -120.0);
        assert_eq!(loss(&q, (33.0, -120.0)), 0.0);
    }

    #[test]
    fn decode_round_trips_on_degree_grid() {
        for k in -180..180 {
            let t = k as f64;
            let [s, c, _, _] = encode_target(t, 0.0);
            assert!((decode_angle(s, c) - t).abs() < 1e-9, "{t}");
            // scale invariance
            assert!((decode_angle(3.0 * s, 3.0 * c) - t).abs() < 1e-9);
        }
    }
}
