//! Datasets, metrics, diagnostics and the experiment protocols.

pub mod corpus;
pub mod dataset;
pub mod diagnostics;
pub mod experiment;
pub mod metrics;
pub mod speech;

pub use dataset::{generate_dataset, DatasetSpec, World};
pub use experiment::{run_experiment, ExperimentConfig, ExperimentName, ExperimentOutcome};
pub use diagnostics::{correlation_diagnostic, CorrelationMatrices};
pub use metrics::{angular_error, evaluate, facing_classify, EvalReport, FacingClass, FacingRule};
pub use speech::{synth_speech, synth_speech_with, SpeechOptions};
