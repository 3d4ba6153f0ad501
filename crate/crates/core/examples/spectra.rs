//! Forward/inverse transforms and short-time analysis of a synthetic vowel.

use binaural_orient::harness::synth_speech;
use binaural_orient::signal::{fft, ifft, istft, stft, Window};

fn main() -> binaural_orient::Result<()> {
    let x = synth_speech(0.5, 120.0, 3)?;
    let spec = fft(&x)?;
    let peak = (1..spec.len())
        .max_by(|&a, &b| spec.bins[a].norm().total_cmp(&spec.bins[b].norm()))
        .unwrap();
    println!("{} samples, {} bins of {:.2} Hz", x.len(), spec.len(), spec.bin_hz);
    println!("strongest bin {peak} at {:.1} Hz", spec.freq(peak));

    let back = ifft(&spec)?;
    let err = x.samples().iter().zip(back.samples()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    println!("fft/ifft max error {err:.2e}");

    let s = stft(&x, 512, 256, Window::Hann)?;
    let y = istft(&s, Window::Hann)?;
    let inner = 512..y.len() - 512;
    let err = inner
        .clone()
        .map(|i| (x.samples()[i] - y.samples()[i]).abs())
        .fold(0.0, f64::max);
    println!("{} frames, stft/istft interior max error {err:.2e}", s.frames.len());
    Ok(())
}
