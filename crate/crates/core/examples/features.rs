//! Interaural feature channels for one rendered scene under both fifth
//! channel definitions.

use binaural_orient::directivity::{synth_hrtf, synth_vdp};
use binaural_orient::features::{aliasing_frequency, assemble, FeatureConfig, RatioMode};
use binaural_orient::harness::synth_speech;
use binaural_orient::preprocess::{preprocess, PreprocessConfig};
use binaural_orient::{render, NearFieldParams, SceneGeometry};

const NAMES: [&str; 5] = ["ild_low", "ild_high", "itd_low", "itd_high", "ratio"];

fn main() -> binaural_orient::Result<()> {
    let nf = NearFieldParams::default();
    let (hl, hr) = synth_hrtf(&nf, 5.0, 257, 31.25)?;
    let vdp = synth_vdp(0.8, 257, 31.25)?;
    let geom = SceneGeometry::new(-35.0, 120.0, 1.1, nf.head_width_m())?;
    let rec = render(&synth_speech(1.0, 180.0, 2)?, &geom, &hl, &hr, &vdp, &nf)?;
    let rec = preprocess(&rec, &PreprocessConfig::default())?;
    println!("aliasing frequency {:.1} Hz", aliasing_frequency(geom.h_m, nf.speed_of_sound_mps));

    for ratio in [RatioMode::InverseConvolution { epsilon_db: 0.5 }, RatioMode::EnergyRatio] {
        let t = assemble(&rec, &FeatureConfig { ratio, ..FeatureConfig::default() })?;
        println!("{ratio:?}: {} cells per channel, split after bin {}", t.len, t.split_bin);
        for (c, name) in NAMES.iter().enumerate() {
            let v = t.channel(c);
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            let (lo, hi) = v.iter().fold((f64::MAX, f64::MIN), |(a, b), &x| (a.min(x), b.max(x)));
            println!("  {name:<9} mean {mean:>11.3e}  range [{lo:.3e}, {hi:.3e}]");
        }
    }
    Ok(())
}
