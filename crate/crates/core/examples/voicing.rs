//! Voiced-frame detection on a synthetic utterance with fricative-like
//! bursts, and the resulting time mask.

use binaural_orient::harness::{synth_speech_with, SpeechOptions};
use binaural_orient::preprocess::{detect_voicing, time_mask};

fn main() -> binaural_orient::Result<()> {
    let opts = SpeechOptions {
        unvoiced_segments: true,
        vibrato_depth: 0.05,
        ..SpeechOptions::default()
    };
    let x = synth_speech_with(1.0, 140.0, 4, &opts)?;
    let d = detect_voicing(&x)?;
    println!("{} frames, {:.0}% voiced", d.len(), 100.0 * d.voiced_fraction(0.5));
    for (i, (p, f0)) in d.probability.iter().zip(&d.pitch_hz).enumerate().step_by(6) {
        let f0 = f0.map_or("-".to_string(), |f| format!("{f:.0} Hz"));
        println!("frame {i:>3}  p {p:.2}  pitch {f0}");
    }
    let mask = time_mask(x.len(), x.sample_rate(), &d, 0.5)?;
    let kept = mask.iter().filter(|&&m| m > 0.0).count();
    println!("mask keeps {kept} of {} samples", mask.len());
    Ok(())
}
