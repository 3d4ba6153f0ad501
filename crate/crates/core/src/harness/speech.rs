//! Synthetic voiced speech standing in for a recorded corpus.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::signal::{AudioBuffer, DEFAULT_SAMPLE_RATE};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpeechOptions {
    pub sample_rate: u32,
    /// Insert noise bursts (fricative-like) at the start and end.
    pub unvoiced_segments: bool,
    /// Peak pitch deviation as a fraction of f0.
    pub vibrato_depth: f64,
}

impl Default for SpeechOptions {
    fn default() -> Self {
        Self {
            sample_rate: DEFAULT_SAMPLE_RATE,
            unvoiced_segments: false,
            vibrato_depth: 0.0,
        }
    }
}

/// Centre frequencies (Hz) of the three formant resonances, drawn per seed.
fn formants(rng: &mut ChaCha8Rng) -> [(f64, f64); 3] {
    [
        (rng.gen_range(300.0..850.0), 90.0),
        (rng.gen_range(900.0..2300.0), 120.0),
        (rng.gen_range(2300.0..3200.0), 180.0),
    ]
}

/// Magnitude of a sum of resonances plus a floor, at `f` Hz.
fn envelope(f: f64, formants: &[(f64, f64); 3]) -> f64 {
    let mut g = 0.05;
    for &(fc, bw) in formants {
        let x = (f - fc) / bw;
        g += 1.0 / (1.0 + x * x).sqrt();
    }
    g
}

pub fn synth_speech(duration_s: f64, f0_hz: f64, seed: u64) -> Result<AudioBuffer> {
    synth_speech_with(duration_s, f0_hz, seed, &SpeechOptions::default())
}

/// Harmonic glottal source shaped by three formants, with a syllable-rate
/// amplitude contour, normalized to unit RMS.
///
/// Harmonic `k` has amplitude `envelope(k f0) / k` (a glottal roll-off of
/// 6 dB per octave) and a seeded random starting phase.
pub fn synth_speech_with(duration_s: f64, f0_hz: f64, seed: u64, opts: &SpeechOptions) -> Result<AudioBuffer> {
    if !(duration_s > 0.0) {
        return invalid("duration must be positive");
    }
    if !(80.0..=300.0).contains(&f0_hz) {
        return invalid(format!("f0 {f0_hz} Hz outside [80, 300]"));
    }
    let fs = opts.sample_rate as f64;
    let n = (duration_s * fs).round() as usize;
    if n < 2 {
        return invalid("duration too short for the sample rate");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fm = formants(&mut rng);
    let harmonics = ((0.5 * fs / (f0_hz * (1.0 + opts.vibrato_depth))).floor() as usize).max(1);
    let contour_hz = rng.gen_range(2.0..5.0);
    let contour_phase = rng.gen_range(0.0..std::f64::consts::TAU);
    let vib_hz = 5.0;

    let mut x = vec![0.0; n];
    let amps: Vec<f64> = (1..=harmonics)
        .map(|k| envelope(k as f64 * f0_hz, &fm) / k as f64)
        .collect();
    let phases: Vec<f64> = (0..harmonics).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect();
    if opts.vibrato_depth == 0.0 {
        for (k, (&a, &p)) in amps.iter().zip(&phases).enumerate() {
            let w = std::f64::consts::TAU * (k + 1) as f64 * f0_hz / fs;
            // rotate a phasor instead of calling sin per sample
            let (s, c) = w.sin_cos();
            let (mut re, mut im) = (p.cos(), p.sin());
            for v in x.iter_mut() {
                *v += a * im;
                let nr = re * c - im * s;
                im = re * s + im * c;
                re = nr;
            }
        }
    } else {
        let mut theta = 0.0;
        for (t, v) in x.iter_mut().enumerate() {
            let f = f0_hz * (1.0 + opts.vibrato_depth * (std::f64::consts::TAU * vib_hz * t as f64 / fs).sin());
            theta += std::f64::consts::TAU * f / fs;
            *v = amps
                .iter()
                .zip(&phases)
                .enumerate()
                .map(|(k, (&a, &p))| a * ((k + 1) as f64 * theta + p).sin())
                .sum();
        }
    }
    for (t, v) in x.iter_mut().enumerate() {
        let s = (std::f64::consts::TAU * contour_hz * t as f64 / fs + contour_phase).sin();
        *v *= 0.6 + 0.4 * s;
    }
    if opts.unvoiced_segments {
        let burst = (0.12 * fs) as usize;
        let burst = burst.min(n / 4);
        let level = 0.3 * (x.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
        for t in (0..burst).chain(n - burst..n) {
            x[t] = rng.gen_range(-1.7..1.7) * level;
        }
    }
    AudioBuffer::mono(x, opts.sample_rate)?.normalized_rms()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preprocess::detect_voicing;
    use crate::signal::fft;

    #[test]
    fn voiced_by_the_detector() {
        for (f0, seed) in [(150.0, 1), (95.0, 2), (280.0, 3)] {
            let x = synth_speech(1.0, f0, seed).unwrap();
            assert!((x.rms() - 1.0).abs() < 1e-12);
            let d = detect_voicing(&x).unwrap();
            assert!(d.voiced_fraction(0.5) > 0.9, "f0 {f0}: {}", d.voiced_fraction(0.5));
        }
    }

    #[test]
    fn harmonic_peaks() {
        let x = synth_speech(1.0, 150.0, 7).unwrap();
        let s = fft(&x).unwrap();
        for k in 1..=10 {
            let target = (150.0 * k as f64 / s.bin_hz).round() as usize;
            let lo = target - 20;
            let peak = (lo..=target + 20)
                .max_by(|&a, &b| s.bins[a].norm().total_cmp(&s.bins[b].norm()))
                .unwrap();
            assert!(peak.abs_diff(target) <= 1, "harmonic {k}: bin {peak} vs {target}");
        }
    }

    #[test]
    fn seeded_and_validated() {
        assert_eq!(synth_speech(0.5, 120.0, 9).unwrap(), synth_speech(0.5, 120.0, 9).unwrap());
        assert_ne!(synth_speech(0.5, 120.0, 9).unwrap(), synth_speech(0.5, 120.0, 10).unwrap());
        assert!(synth_speech(0.5, 50.0, 1).is_err());
        assert!(synth_speech(0.0, 120.0, 1).is_err());
        let opts = SpeechOptions {
            unvoiced_segments: true,
            ..Default::default()
        };
        let x = synth_speech_with(1.0, 140.0, 4, &opts).unwrap();
        let d = detect_voicing(&x).unwrap();
        assert!(d.probability[1] < 0.5 && d.probability[30] > 0.9);
    }
}
