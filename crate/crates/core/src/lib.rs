//! Near-field binaural speech synthesis, interaural features and joint
//! estimation of speaker direction and speaker head orientation.
//!
//! The pipeline runs in five stages:
//!
//! 1. [`directivity`] holds listener HRTFs and speaker voice-directivity
//!    patterns (VDPs), with analytic rigid-sphere and cardioid stand-ins.
//! 2. [`renderer`] composes a source with both patterns for a given
//!    [`SceneGeometry`].
//! 3. [`preprocess`] keeps voiced speech and drops weak spectral bins.
//! 4. [`features`] turns a recording into a five-channel [`FeatureTensor`].
//! 5. [`estimator`] regresses `(θ_dir, θ_ori)` with a 1-D CNN, or looks them
//!    up in a template bank.
//!
//! [`harness`] ties the stages into datasets, experiments and reports.

pub mod directivity;
pub mod error;
pub mod estimator;
pub mod features;
pub mod geometry;
pub mod harness;
pub mod preprocess;
pub mod renderer;
mod serde_util;
pub mod signal;

pub use directivity::{DirectivityTable, NearFieldParams, TableKind};
pub use error::{Error, Result};
pub use features::{FeatureConfig, FeatureTensor};
pub use geometry::{angular_distance, wrap_deg, SceneGeometry};
pub use renderer::{render, render_far_field, BinauralRecording};
pub use signal::{AudioBuffer, Spectrum};
