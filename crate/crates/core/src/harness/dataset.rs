//! Seeded dataset generation: pick a listener head, a talker directivity, a
//! source and a random scene; render, preprocess and featurize.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::corpus::Corpus;
use super::speech::{synth_speech_with, SpeechOptions};
use crate::directivity::{synth_hrtf_model, synth_vdp_grid, DirectivityTable, HeadModel, NearFieldParams};
use crate::error::{invalid, Result};
use crate::features::{assemble, FeatureBatch, FeatureConfig, FeatureTensor, CHANNELS};
use crate::geometry::SceneGeometry;
use crate::preprocess::{preprocess, PreprocessConfig};
use crate::renderer::{render, render_far_field, BinauralRecording};
use crate::signal::{AudioBuffer, DEFAULT_SAMPLE_RATE};

/// Where source signals come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum SourceSpec {
    /// Fresh synthetic utterance per sample with f0 uniform in the range.
    Synthetic {
        f0_min_hz: f64,
        f0_max_hz: f64,
        #[serde(default)]
        options: SpeechOptions,
    },
    /// WAV files from a directory (see [`Corpus`]).
    Corpus { dir: PathBuf },
}

/// Angular resolution and size of the synthesized tables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableGrid {
    pub step_deg: f64,
    pub bins: usize,
}

impl Default for TableGrid {
    fn default() -> Self {
        Self {
            step_deg: 5.0,
            bins: 257,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetSpec {
    pub count: usize,
    pub seed: u64,
    pub r_min_m: f64,
    pub r_max_m: f64,
    /// Listener pool. Each head's width `2a` is the scene's `h`.
    pub heads: Vec<HeadModel>,
    /// Talker pool, as synthetic directivity strengths.
    pub vdp_strengths: Vec<f64>,
    pub sources: SourceSpec,
    pub duration_s: f64,
    pub sample_rate: u32,
    pub near_field: bool,
    pub grid: TableGrid,
    pub preprocess: PreprocessConfig,
    pub features: FeatureConfig,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        Self {
            count: 1000,
            seed: 0,
            r_min_m: 0.5,
            r_max_m: 1.5,
            heads: vec![HeadModel::sphere_only(NearFieldParams::default())],
            vdp_strengths: vec![0.8],
            sources: SourceSpec::Synthetic {
                f0_min_hz: 90.0,
                f0_max_hz: 250.0,
                options: SpeechOptions::default(),
            },
            duration_s: 1.0,
            sample_rate: DEFAULT_SAMPLE_RATE,
            near_field: true,
            grid: TableGrid::default(),
            preprocess: PreprocessConfig::default(),
            features: FeatureConfig::default(),
        }
    }
}

impl DatasetSpec {
    pub fn validate(&self) -> Result<()> {
        if self.heads.is_empty() || self.vdp_strengths.is_empty() {
            return invalid("head and directivity pools must be nonempty");
        }
        if !(self.r_min_m >= 0.2 && self.r_min_m <= self.r_max_m) {
            return invalid("bad distance range");
        }
        if !(self.duration_s > 0.0) || self.sample_rate == 0 {
            return invalid("bad duration or sample rate");
        }
        Ok(())
    }
}

/// One listener's tables.
#[derive(Debug, Clone)]
pub struct Listener {
    pub head: HeadModel,
    pub left: DirectivityTable,
    pub right: DirectivityTable,
}

/// Synthesized tables and loaded sources for a spec.
#[derive(Debug, Clone)]
pub struct World {
    pub listeners: Vec<Listener>,
    pub talkers: Vec<DirectivityTable>,
    corpus: Option<Corpus>,
    pub spec: DatasetSpec,
}

/// Everything needed to reproduce one sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub theta_dir_deg: f64,
    pub theta_ori_deg: f64,
    pub r_m: f64,
    pub head: usize,
    pub talker: usize,
    /// Synthetic f0 or corpus index.
    pub source: SourceChoice,
    pub source_seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceChoice {
    F0Hz(f64),
    CorpusIndex(usize),
}

impl World {
    pub fn build(spec: &DatasetSpec) -> Result<Self> {
        spec.validate()?;
        let bin_hz = spec.sample_rate as f64 / (2 * (spec.grid.bins - 1)) as f64;
        let listeners = spec
            .heads
            .par_iter()
            .map(|h| {
                let (left, right) = synth_hrtf_model(h, spec.grid.step_deg, spec.grid.bins, bin_hz)?;
                Ok(Listener { head: *h, left, right })
            })
            .collect::<Result<Vec<_>>>()?;
        let talkers = spec
            .vdp_strengths
            .iter()
            .map(|&s| synth_vdp_grid(s, spec.grid.step_deg, spec.grid.bins, bin_hz))
            .collect::<Result<Vec<_>>>()?;
        let corpus = match &spec.sources {
            SourceSpec::Corpus { dir } => Some(Corpus::load(dir, spec.sample_rate, spec.duration_s)?),
            SourceSpec::Synthetic { .. } => None,
        };
        Ok(Self {
            listeners,
            talkers,
            corpus,
            spec: spec.clone(),
        })
    }

    /// Scene `index` of the dataset, drawn from its own seeded stream.
    pub fn draw_scene(&self, index: usize) -> Scene {
        let seed = self.spec.seed ^ index as u64;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let theta_dir_deg = rng.gen_range(-180.0..180.0);
        let theta_ori_deg = rng.gen_range(-180.0..180.0);
        let r_m = if self.spec.r_max_m > self.spec.r_min_m {
            rng.gen_range(self.spec.r_min_m..self.spec.r_max_m)
        } else {
            self.spec.r_min_m
        };
        let head = rng.gen_range(0..self.listeners.len());
        let talker = rng.gen_range(0..self.talkers.len());
        let source = match (&self.spec.sources, &self.corpus) {
            (_, Some(c)) => SourceChoice::CorpusIndex(rng.gen_range(0..c.len())),
            (SourceSpec::Synthetic { f0_min_hz, f0_max_hz, .. }, None) => {
                SourceChoice::F0Hz(if f0_max_hz > f0_min_hz { rng.gen_range(*f0_min_hz..*f0_max_hz) } else { *f0_min_hz })
            }
            (SourceSpec::Corpus { .. }, None) => unreachable!("corpus loaded in build"),
        };
        Scene {
            theta_dir_deg,
            theta_ori_deg,
            r_m,
            head,
            talker,
            source,
            source_seed: rng.gen(),
        }
    }

    pub fn source(&self, scene: &Scene) -> Result<AudioBuffer> {
        match scene.source {
            SourceChoice::F0Hz(f0) => {
                let opts = match &self.spec.sources {
                    SourceSpec::Synthetic { options, .. } => SpeechOptions {
                        sample_rate: self.spec.sample_rate,
                        ..*options
                    },
                    SourceSpec::Corpus { .. } => return invalid("synthetic scene in a corpus world"),
                };
                synth_speech_with(self.spec.duration_s, f0, scene.source_seed, &opts)
            }
            SourceChoice::CorpusIndex(i) => match &self.corpus {
                Some(c) => c.get(i)?.normalized_rms(),
                None => invalid("corpus scene in a synthetic world"),
            },
        }
    }

    pub fn geometry(&self, scene: &Scene) -> Result<SceneGeometry> {
        let h = self.listeners[scene.head].head.near_field.head_width_m();
        SceneGeometry::new(scene.theta_dir_deg, scene.theta_ori_deg, scene.r_m, h)
    }

    pub fn render_scene(&self, scene: &Scene, source: &AudioBuffer) -> Result<BinauralRecording> {
        let geom = self.geometry(scene)?;
        let l = &self.listeners[scene.head];
        let v = &self.talkers[scene.talker];
        if self.spec.near_field {
            render(source, &geom, &l.left, &l.right, v, &l.head.near_field)
        } else {
            render_far_field(source, &geom, &l.left, &l.right, v)
        }
    }

    pub fn featurize(&self, rec: &BinauralRecording) -> Result<FeatureTensor> {
        assemble(&preprocess(rec, &self.spec.preprocess)?, &self.spec.features)
    }

    pub fn sample(&self, scene: &Scene) -> Result<FeatureTensor> {
        let src = self.source(scene)?;
        self.featurize(&self.render_scene(scene, &src)?)
    }

    pub fn scenes(&self) -> Vec<Scene> {
        (0..self.spec.count).map(|i| self.draw_scene(i)).collect()
    }

    /// Featurizes `scenes` in parallel; output order follows input order.
    pub fn batch(&self, scenes: &[Scene]) -> Result<FeatureBatch> {
        let tensors = scenes
            .par_iter()
            .map(|s| self.sample(s))
            .collect::<Result<Vec<_>>>()?;
        let mut b = FeatureBatch::new(self.spec.features.length, CHANNELS);
        for (t, s) in tensors.iter().zip(scenes) {
            b.push(t, (t_label(s.theta_dir_deg), t_label(s.theta_ori_deg)))?;
        }
        Ok(b)
    }
}

fn t_label(x: f64) -> f64 {
    crate::geometry::wrap_deg(x)
}

/// Generated batch plus the scenes behind it.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub batch: FeatureBatch,
    pub scenes: Vec<Scene>,
}

impl Dataset {
    /// Writes the batch to `path` and the scenes as JSON lines to
    /// `path` + `.scenes.jsonl`.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        self.batch.save(path)?;
        let mut lines = String::new();
        for s in &self.scenes {
            lines.push_str(&serde_json::to_string(s)?);
            lines.push('\n');
        }
        let mut p = path.as_os_str().to_owned();
        p.push(".scenes.jsonl");
        std::fs::write(PathBuf::from(p), lines)?;
        Ok(())
    }
}

pub fn generate_dataset(spec: &DatasetSpec) -> Result<Dataset> {
    let world = World::build(spec)?;
    let scenes = world.scenes();
    Ok(Dataset {
        batch: world.batch(&scenes)?,
        scenes,
    })
}
