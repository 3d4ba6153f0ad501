//! Render a talker 80 cm away and write the two-ear recording.

use binaural_orient::directivity::{synth_hrtf, synth_vdp};
use binaural_orient::harness::synth_speech;
use binaural_orient::signal::WavEncoding;
use binaural_orient::{render, render_far_field, NearFieldParams, SceneGeometry};

fn rms(x: &[f64]) -> f64 {
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

fn main() -> binaural_orient::Result<()> {
    let nf = NearFieldParams::default();
    let (hl, hr) = synth_hrtf(&nf, 5.0, 257, 31.25)?;
    let vdp = synth_vdp(0.8, 257, 31.25)?;
    let src = synth_speech(1.5, 110.0, 9)?;
    let geom = SceneGeometry::new(50.0, -30.0, 0.8, nf.head_width_m())?;

    let near = render(&src, &geom, &hl, &hr, &vdp, &nf)?;
    let far = render_far_field(&src, &geom, &hl, &hr, &vdp)?;
    for (name, rec) in [("near", &near), ("far", &far)] {
        let (l, r) = (rms(rec.left.samples()), rms(rec.right.samples()));
        println!("{name}: left rms {l:.3}, right rms {r:.3}, level difference {:.2} dB", 20.0 * (r / l).log10());
    }

    let out = std::env::args()
        .nth(1)
        .map(Into::into)
        .unwrap_or_else(|| std::env::temp_dir().join("talker.wav"));
    near.save(&out, WavEncoding::Float32)?;
    println!("wrote {}", out.display());
    Ok(())
}
