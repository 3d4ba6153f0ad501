//! Exhaustive nearest-neighbour matching against a bank of rendered scenes.

use binaural_orient::directivity::{synth_hrtf, synth_vdp};
use binaural_orient::estimator::{template_match, TemplateBank};
use binaural_orient::features::{assemble, FeatureBatch, FeatureConfig, FeatureTensor, RatioMode};
use binaural_orient::harness::synth_speech;
use binaural_orient::preprocess::{preprocess, PreprocessConfig};
use binaural_orient::{render, AudioBuffer, DirectivityTable, NearFieldParams, SceneGeometry};

struct Scene<'a> {
    nf: NearFieldParams,
    tables: (DirectivityTable, DirectivityTable, DirectivityTable),
    source: &'a AudioBuffer,
    cfg: FeatureConfig,
}

impl Scene<'_> {
    fn features(&self, dir: f64, ori: f64) -> binaural_orient::Result<FeatureTensor> {
        let g = SceneGeometry::new(dir, ori, 1.0, self.nf.head_width_m())?;
        let (l, r, v) = &self.tables;
        let rec = render(self.source, &g, l, r, v, &self.nf)?;
        assemble(&preprocess(&rec, &PreprocessConfig::default())?, &self.cfg)
    }
}

fn main() -> binaural_orient::Result<()> {
    let nf = NearFieldParams::default();
    let (l, r) = synth_hrtf(&nf, 5.0, 257, 31.25)?;
    let source = synth_speech(1.0, 130.0, 5)?;
    let scene = Scene {
        nf,
        tables: (l, r, synth_vdp(0.9, 257, 31.25)?),
        source: &source,
        cfg: FeatureConfig {
            ratio: RatioMode::EnergyRatio,
            ..FeatureConfig::default()
        },
    };

    let grid: Vec<f64> = (0..12).map(|i| -180.0 + 30.0 * i as f64).collect();
    let mut tensors = Vec::new();
    let mut labels = Vec::new();
    for &d in &grid {
        for &o in &grid {
            tensors.push(scene.features(d, o)?);
            labels.push((d, o));
        }
    }
    let bank = TemplateBank::new(FeatureBatch::from_tensors(&tensors, labels)?)?;
    println!("bank of {} entries", bank.entries.count());

    for (d, o) in [(30.0, 60.0), (-90.0, 150.0), (37.0, -52.0), (-118.0, 14.0)] {
        let p = template_match(&scene.features(d, o)?, &bank)?;
        println!("true ({d:>6.1}, {o:>6.1})  matched ({:>6.1}, {:>6.1})", p.theta_dir_deg, p.theta_ori_deg);
    }
    Ok(())
}
