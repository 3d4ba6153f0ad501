//! Named train/evaluate protocols.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::dataset::{generate_dataset, Dataset, DatasetSpec};
use super::metrics::{evaluate, EvalReport, FacingRule};
use crate::directivity::{HeadModel, NearFieldParams};
use crate::error::{invalid, Result};
use crate::estimator::{fine_tune, train, Architecture, EstimatorModel, Schedule, TrainConfig, TrainLog};
use crate::features::{FeatureConfig, RatioMode, CHANNELS};
use crate::preprocess::{FloorConfig, FloorMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentName {
    Main,
    NearVsFar,
    KnownVsUnknownHrtf,
    /// Near-field and far-field training plus the known/unknown comparison
    /// on the near-field model.
    All,
}

impl std::str::FromStr for ExperimentName {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "main" => Ok(Self::Main),
            "near-vs-far" => Ok(Self::NearVsFar),
            "known-vs-unknown-hrtf" => Ok(Self::KnownVsUnknownHrtf),
            "all" => Ok(Self::All),
            _ => invalid(format!("unknown experiment {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArchPreset {
    /// Stride 2 in every convolution.
    Desk,
    /// Stride 2 in even-numbered convolutions only.
    EvenStride,
}

impl ArchPreset {
    pub fn build(self, input_len: usize) -> Architecture {
        match self {
            ArchPreset::Desk => Architecture::desk(input_len),
            ArchPreset::EvenStride => Architecture::even_stride(input_len),
        }
    }
}

/// Which listeners and talkers the test set draws from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Split {
    /// Test heads and talkers never appear in training.
    SubjectDisjoint,
    /// Test scenes use the training pools.
    Shared,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub train_count: usize,
    pub test_count: usize,
    pub split: Split,
    pub train_heads: Vec<HeadModel>,
    pub test_heads: Vec<HeadModel>,
    pub train_talkers: Vec<f64>,
    pub test_talkers: Vec<f64>,
    /// Listener held out for the known/unknown comparison.
    pub holdout_head: HeadModel,
    pub finetune_count: usize,
    pub finetune_epochs: usize,
    pub finetune_learning_rate: f64,
    /// Distances, sources, rendering and feature settings; its pools, count
    /// and seed are replaced per split.
    pub dataset: DatasetSpec,
    pub train: TrainConfig,
    pub arch: ArchPreset,
    pub facing: FacingRule,
}

fn head(radius_m: f64, ear_deg: f64, pinna: f64) -> HeadModel {
    HeadModel {
        near_field: NearFieldParams {
            head_radius_m: radius_m,
            ear_azimuth_deg: ear_deg,
            ..NearFieldParams::default()
        },
        pinna_shadow: pinna,
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            train_count: 20_000,
            test_count: 2_000,
            split: Split::SubjectDisjoint,
            train_heads: vec![
                head(0.085, 98.0, 0.65),
                head(0.090, 102.0, 0.75),
                head(0.095, 100.0, 0.7),
            ],
            test_heads: vec![head(0.0875, 100.0, 0.7), head(0.0925, 101.0, 0.7)],
            train_talkers: vec![0.85, 0.9, 0.95],
            test_talkers: vec![0.875, 0.925],
            holdout_head: head(0.08, 95.0, 0.6),
            finetune_count: 1_000,
            finetune_epochs: 5,
            finetune_learning_rate: 2e-4,
            dataset: DatasetSpec {
                features: FeatureConfig {
                    floor: Some(FloorConfig {
                        factor: 0.2,
                        mode: FloorMode::Global,
                    }),
                    ratio: RatioMode::EnergyRatio,
                    ..FeatureConfig::default()
                },
                ..DatasetSpec::default()
            },
            train: TrainConfig {
                learning_rate: 2e-3,
                dropout: 0.1,
                schedule: Schedule::Cosine { final_fraction: 0.02 },
                mirror: true,
                ..TrainConfig::default()
            },
            arch: ArchPreset::Desk,
            facing: FacingRule::default(),
        }
    }
}

/// Offsets keeping the sample streams of the sets apart.
const TEST_STREAM: u64 = 1 << 40;
const FINETUNE_STREAM: u64 = 2 << 40;
const HOLDOUT_TEST_STREAM: u64 = 3 << 40;

impl ExperimentConfig {
    fn spec(&self, heads: &[HeadModel], talkers: &[f64], count: usize, seed: u64, near_field: bool) -> DatasetSpec {
        DatasetSpec {
            count,
            seed,
            heads: heads.to_vec(),
            vdp_strengths: talkers.to_vec(),
            near_field,
            ..self.dataset.clone()
        }
    }

    pub fn train_spec(&self, near_field: bool) -> DatasetSpec {
        self.spec(&self.train_heads, &self.train_talkers, self.train_count, self.seed, near_field)
    }

    pub fn test_spec(&self, near_field: bool) -> DatasetSpec {
        let (h, t) = match self.split {
            Split::SubjectDisjoint => (&self.test_heads, &self.test_talkers),
            Split::Shared => (&self.train_heads, &self.train_talkers),
        };
        self.spec(h, t, self.test_count, self.seed ^ TEST_STREAM, near_field)
    }

    pub fn finetune_spec(&self) -> DatasetSpec {
        self.spec(
            &[self.holdout_head],
            &self.train_talkers,
            self.finetune_count,
            self.seed ^ FINETUNE_STREAM,
            true,
        )
    }

    pub fn holdout_test_spec(&self) -> DatasetSpec {
        let t = match self.split {
            Split::SubjectDisjoint => &self.test_talkers,
            Split::Shared => &self.train_talkers,
        };
        self.spec(&[self.holdout_head], t, self.test_count, self.seed ^ HOLDOUT_TEST_STREAM, true)
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            seed: self.seed,
            ..self.train.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.train_count == 0 || self.test_count == 0 {
            return invalid("train and test counts must be positive");
        }
        if self.train_heads.is_empty() || self.train_talkers.is_empty() {
            return invalid("training pools must be nonempty");
        }
        if self.split == Split::SubjectDisjoint && (self.test_heads.is_empty() || self.test_talkers.is_empty()) {
            return invalid("subject-disjoint split needs nonempty test pools");
        }
        self.train.validate()
    }
}

/// A trained model with its evaluation.
#[derive(Debug, Clone)]
pub struct Run {
    pub model: EstimatorModel,
    pub log: TrainLog,
    pub report: EvalReport,
    pub test: Dataset,
}

pub fn evaluate_model(model: &EstimatorModel, data: &Dataset, rule: FacingRule) -> Result<EvalReport> {
    let pred = model.predict_batch(&data.batch, 100)?;
    evaluate(&pred, &data.batch.labels, rule)
}

/// Generates a training set, rendered with or without the near-field
/// model, and trains on it.
pub fn train_model(cfg: &ExperimentConfig, near_field: bool) -> Result<(EstimatorModel, TrainLog)> {
    cfg.validate()?;
    let train_set = generate_dataset(&cfg.train_spec(near_field))?;
    let arch = cfg.arch.build(train_set.batch.len);
    debug_assert_eq!(arch.input_channels, CHANNELS);
    train(&train_set.batch, arch, &cfg.train_config())
}

/// Generates, trains and evaluates one configuration.
pub fn train_and_evaluate(cfg: &ExperimentConfig, near_field: bool) -> Result<Run> {
    let (model, log) = train_model(cfg, near_field)?;
    let test = generate_dataset(&cfg.test_spec(near_field))?;
    let report = evaluate_model(&model, &test, cfg.facing)?;
    Ok(Run {
        model,
        log,
        report,
        test,
    })
}

/// Near-field and far-field trained models scored on the same near-field
/// test set.
fn near_vs_far(cfg: &ExperimentConfig) -> Result<(Run, EvalReport, TrainLog)> {
    let near = train_and_evaluate(cfg, true)?;
    let (far_model, far_log) = train_model(cfg, false)?;
    let far = evaluate_model(&far_model, &near.test, cfg.facing)?;
    Ok((near, far, far_log))
}

/// Evaluates `model` on the held-out listener before and after
/// fine-tuning on that listener. Returns `(unknown, known)`.
pub fn known_vs_unknown(model: &EstimatorModel, cfg: &ExperimentConfig) -> Result<(EvalReport, EvalReport, TrainLog)> {
    let holdout = generate_dataset(&cfg.holdout_test_spec())?;
    let unknown = evaluate_model(model, &holdout, cfg.facing)?;
    let tune = generate_dataset(&cfg.finetune_spec())?;
    let mut tuned = model.clone();
    let tc = TrainConfig {
        epochs: cfg.finetune_epochs,
        learning_rate: cfg.finetune_learning_rate,
        ..cfg.train_config()
    };
    let log = fine_tune(&mut tuned, &tune.batch, &tc)?;
    let known = evaluate_model(&tuned, &holdout, cfg.facing)?;
    Ok((unknown, known, log))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentOutcome {
    pub name: ExperimentName,
    /// Labelled reports, e.g. `near` and `far`.
    pub reports: Vec<(String, EvalReport)>,
    pub train_logs: Vec<(String, TrainLog)>,
}

impl ExperimentOutcome {
    pub fn report(&self, label: &str) -> Option<&EvalReport> {
        self.reports.iter().find(|(l, _)| l == label).map(|(_, r)| r)
    }

    /// Writes every report with its CSV tables, prefixed by its label, and
    /// a `summary.json` of the percentile summaries and training losses.
    pub fn emit(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        for (label, r) in &self.reports {
            r.emit(dir, &format!("{label}_"))?;
        }
        let summary: Vec<_> = self
            .reports
            .iter()
            .map(|(l, r)| {
                serde_json::json!({
                    "label": l,
                    "theta_dir": r.theta_dir.summary,
                    "theta_ori": r.theta_ori.summary,
                    "facing_accuracy": r.facing.class_accuracy(),
                })
            })
            .collect();
        let doc = serde_json::json!({
            "experiment": self.name,
            "reports": summary,
            "train_logs": self.train_logs,
        });
        std::fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&doc)?)?;
        Ok(())
    }
}

pub fn run_experiment(name: ExperimentName, cfg: &ExperimentConfig, out_dir: Option<&Path>) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let outcome = match name {
        ExperimentName::Main => {
            let run = train_and_evaluate(cfg, cfg.dataset.near_field)?;
            ExperimentOutcome {
                name,
                reports: vec![("main".into(), run.report)],
                train_logs: vec![("main".into(), run.log)],
            }
        }
        ExperimentName::NearVsFar => {
            let (near, far, far_log) = near_vs_far(cfg)?;
            ExperimentOutcome {
                name,
                reports: vec![("near".into(), near.report), ("far".into(), far)],
                train_logs: vec![("near".into(), near.log), ("far".into(), far_log)],
            }
        }
        ExperimentName::KnownVsUnknownHrtf => {
            let (base, log) = train_model(cfg, true)?;
            let (unknown, known, tune_log) = known_vs_unknown(&base, cfg)?;
            ExperimentOutcome {
                name,
                reports: vec![("unknown".into(), unknown), ("known".into(), known)],
                train_logs: vec![("base".into(), log), ("fine-tune".into(), tune_log)],
            }
        }
        ExperimentName::All => {
            let (near, far, far_log) = near_vs_far(cfg)?;
            let (unknown, known, tune_log) = known_vs_unknown(&near.model, cfg)?;
            ExperimentOutcome {
                name,
                reports: vec![
                    ("near".into(), near.report),
                    ("far".into(), far),
                    ("unknown".into(), unknown),
                    ("known".into(), known),
                ],
                train_logs: vec![
                    ("near".into(), near.log),
                    ("far".into(), far_log),
                    ("fine-tune".into(), tune_log),
                ],
            }
        }
    };
    if let Some(dir) = out_dir {
        outcome.emit(dir)?;
    }
    Ok(outcome)
}
