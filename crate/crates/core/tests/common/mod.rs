#![allow(dead_code)]

use std::f64::consts::PI;
use std::time::Instant;

use binaural_orient::directivity::{synth_hrtf, synth_hrtf_model, synth_vdp, HeadModel, Sphere};
use binaural_orient::estimator::{
    loss_and_grad, train, write_model, Architecture, ConvSpec, Network, TemplateBank, TrainConfig,
};
use binaural_orient::features::{aliasing_frequency, assemble, ild, itd, FeatureBatch, FeatureConfig, RatioMode};
use binaural_orient::harness::metrics::FacingRule;
use binaural_orient::harness::{angular_error, facing_classify, synth_speech};
use binaural_orient::preprocess::{preprocess, PreprocessConfig};
use binaural_orient::signal::{fft_slice, ifft_samples, istft, stft, Window};
use binaural_orient::{
    render, render_far_field, wrap_deg, AudioBuffer, BinauralRecording, DirectivityTable, NearFieldParams,
    SceneGeometry, Spectrum, TableKind,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FS: u32 = 16_000;
pub const BINS: usize = 257;
pub const BIN_HZ: f64 = 31.25;

/// Result of one acceptance check.
pub struct Outcome {
    pub pass: bool,
    pub detail: String,
}

impl Outcome {
    pub fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }

    /// Combines sub-checks; passes only if all of them pass.
    pub fn all(parts: Vec<(&str, Outcome)>) -> Self {
        let pass = parts.iter().all(|(_, o)| o.pass);
        let detail = parts
            .iter()
            .map(|(n, o)| format!("{n} {} [{}]", if o.pass { "ok" } else { "FAILED" }, o.detail))
            .collect::<Vec<_>>()
            .join("; ");
        Self { pass, detail }
    }

    pub fn assert(&self) {
        assert!(self.pass, "{}", self.detail);
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn noise(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

pub fn unit_rms(mut x: Vec<f64>) -> Vec<f64> {
    let rms = (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt();
    x.iter_mut().for_each(|v| *v /= rms);
    x
}

pub fn rms_rel(a: &[f64], reference: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(reference).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = reference.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

// ---------------------------------------------------------------- oracles

/// Direct evaluation of the one-sided DFT.
pub fn naive_dft(x: &[f64]) -> Vec<Complex64> {
    let n = x.len();
    (0..=n / 2)
        .map(|k| {
            x.iter()
                .enumerate()
                .map(|(t, &v)| {
                    let ang = -2.0 * PI * ((k * t) % n) as f64 / n as f64;
                    Complex64::from_polar(v, ang)
                })
                .sum()
        })
        .collect()
}

/// Real impulse response of a one-sided spectrum of an even-length
/// transform, by direct summation. Imaginary parts at DC and Nyquist are
/// dropped.
pub fn naive_irdft(bins: &[Complex64]) -> Vec<f64> {
    let l = 2 * (bins.len() - 1);
    let cos: Vec<f64> = (0..l).map(|i| (2.0 * PI * i as f64 / l as f64).cos()).collect();
    let sin: Vec<f64> = (0..l).map(|i| (2.0 * PI * i as f64 / l as f64).sin()).collect();
    (0..l)
        .map(|n| {
            let mut acc = bins[0].re + bins[l / 2].re * if n % 2 == 0 { 1.0 } else { -1.0 };
            for (k, b) in bins.iter().enumerate().take(l / 2).skip(1) {
                let i = (k * n) % l;
                acc += 2.0 * (b.re * cos[i] - b.im * sin[i]);
            }
            acc / l as f64
        })
        .collect()
}

/// Taps of a circular impulse response as `(time, value)`, the second half
/// being negative time.
pub fn centred_taps(h: &[f64]) -> Vec<(i64, f64)> {
    let l = h.len() as i64;
    h.iter()
        .enumerate()
        .map(|(i, &v)| {
            let i = i as i64;
            (if i < l / 2 { i } else { i - l }, v)
        })
        .collect()
}

/// Linear convolution of two tap lists.
pub fn convolve_taps(a: &[(i64, f64)], b: &[(i64, f64)]) -> Vec<(i64, f64)> {
    let lo = a.iter().map(|t| t.0).min().unwrap() + b.iter().map(|t| t.0).min().unwrap();
    let hi = a.iter().map(|t| t.0).max().unwrap() + b.iter().map(|t| t.0).max().unwrap();
    let mut out = vec![0.0; (hi - lo + 1) as usize];
    for &(ta, va) in a {
        for &(tb, vb) in b {
            out[(ta + tb - lo) as usize] += va * vb;
        }
    }
    out.into_iter().enumerate().map(|(i, v)| (lo + i as i64, v)).collect()
}

/// `y[n] = Σ g[τ] x[n - τ]` for `n` in `0..x.len()`, with `x` zero outside.
pub fn apply_taps(x: &[f64], g: &[(i64, f64)]) -> Vec<f64> {
    let n = x.len() as i64;
    (0..n)
        .map(|i| {
            g.iter()
                .filter_map(|&(t, v)| {
                    let j = i - t;
                    (0..n).contains(&j).then(|| v * x[j as usize])
                })
                .sum()
        })
        .collect()
}

fn signed_angle(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 * b.1 - a.1 * b.0).atan2(a.0 * b.0 + a.1 * b.1).to_degrees()
}

/// Pattern angles `(left, right)` seen by each ear, from explicit plane
/// geometry: the near ear by the angle the speaker sees between the listener
/// centre and that ear, the far ear by the angle to the tangent point of the
/// ray grazing the head.
pub fn parallax_oracle(theta_dir: f64, theta_ori: f64, r: f64, h: f64) -> (f64, f64) {
    let a = 0.5 * h;
    let t = theta_dir.to_radians();
    // x toward the listener's right, y toward the listener's front
    let s = (r * t.sin(), r * t.cos());
    let to_centre = (-s.0, -s.1);
    let right_near = wrap_deg(theta_dir) >= 0.0;
    let near_ear = if right_near { (a, 0.0) } else { (-a, 0.0) };
    let near = signed_angle(to_centre, (near_ear.0 - s.0, near_ear.1 - s.1));

    let phi_s = s.1.atan2(s.0);
    let phi = (a / r).acos();
    let tangent = (a * (phi_s + phi).cos(), a * (phi_s + phi).sin());
    let grazing = signed_angle(to_centre, (tangent.0 - s.0, tangent.1 - s.1)).abs();

    if right_near {
        (wrap_deg(theta_ori - grazing), wrap_deg(theta_ori + near))
    } else {
        (wrap_deg(theta_ori + near), wrap_deg(theta_ori + grazing))
    }
}

/// Spherical Hankel functions of the first kind `h_0..=h_n` at `x`, by
/// upward recurrence from their closed forms.
fn hankel(x: f64, n: usize) -> Vec<Complex64> {
    let i = Complex64::i();
    let e = (i * x).exp();
    let mut h = vec![-i * e / x, -e * (x + i) / (x * x)];
    for m in 1..n {
        let next = h[m] * ((2 * m + 1) as f64 / x) - h[m - 1];
        h.push(next);
    }
    h.truncate(n + 1);
    h
}

fn legendre(x: f64, n: usize) -> Vec<f64> {
    let mut p = vec![1.0, x];
    for m in 1..n {
        p.push(((2 * m + 1) as f64 * x * p[m] - m as f64 * p[m - 1]) / (m + 1) as f64);
    }
    p.truncate(n + 1);
    p
}

/// Rigid-sphere surface pressure relative to the free field at the centre,
/// for a point source at `rho = r / a` (plane wave when `None`).
pub fn sphere_oracle(mu: f64, rho: Option<f64>, gamma_deg: f64) -> Complex64 {
    let n = (2.0 * mu + 60.0) as usize;
    let hs = hankel(mu, n + 1);
    let hr = rho.map(|rho| hankel(mu * rho, n + 1));
    let p = legendre(gamma_deg.to_radians().cos(), n);
    let neg_i = Complex64::new(0.0, -1.0);
    let mut sum = Complex64::new(0.0, 0.0);
    for m in 0..=n {
        let dh = if m == 0 {
            -hs[1]
        } else {
            hs[m - 1] - hs[m] * ((m + 1) as f64 / mu)
        };
        let radial = match &hr {
            Some(hr) => hr[m],
            None => neg_i.powu(m as u32 + 1),
        };
        let term = radial / dh * ((2 * m + 1) as f64 * p[m]);
        if !term.re.is_finite() || !term.im.is_finite() {
            break;
        }
        sum += term;
    }
    match rho {
        Some(rho) => -(rho / mu) * (Complex64::new(0.0, -mu * rho)).exp() * sum,
        None => -sum / (mu * mu),
    }
}

pub fn mu(freq_hz: f64, radius_m: f64, c: f64) -> f64 {
    2.0 * PI * freq_hz * radius_m / c
}

// ---------------------------------------------------------------- fixtures

pub fn hrtf_pair(params: &NearFieldParams) -> (DirectivityTable, DirectivityTable) {
    synth_hrtf(params, 5.0, BINS, BIN_HZ).unwrap()
}

pub fn identity_table(kind: TableKind, reference_m: f64) -> DirectivityTable {
    let az: Vec<f64> = (0..72).map(|i| -180.0 + 5.0 * i as f64).collect();
    let rows = vec![vec![Complex64::new(1.0, 0.0); BINS]; az.len()];
    DirectivityTable::new(az, rows, BIN_HZ, kind, reference_m).unwrap()
}

pub fn random_geometry(rng: &mut impl Rng, h: f64) -> SceneGeometry {
    SceneGeometry::new(
        rng.gen_range(-180.0..180.0),
        rng.gen_range(-180.0..180.0),
        rng.gen_range(0.5..1.5),
        h,
    )
    .unwrap()
}

fn elapsed_ok(start: Instant, limit_s: f64) -> Outcome {
    let s = start.elapsed().as_secs_f64();
    Outcome::new(s < limit_s, format!("{s:.2} s, limit {limit_s} s"))
}

// ---------------------------------------------------------------- suites

pub fn signal_suite() -> Outcome {
    let start = Instant::now();
    let mut r = rng(1);

    let mut worst_parseval: f64 = 0.0;
    for n in [997, 1000, 1024, 4096, 65_536] {
        let x = unit_rms(noise(n, &mut r));
        let spec = fft_slice(&x, FS as f64).unwrap();
        let mut freq = spec.bins[0].norm_sqr();
        for k in 1..spec.bins.len() {
            let w = if n % 2 == 0 && k == n / 2 { 1.0 } else { 2.0 };
            freq += w * spec.bins[k].norm_sqr();
        }
        freq /= n as f64;
        let time: f64 = x.iter().map(|v| v * v).sum();
        worst_parseval = worst_parseval.max((freq - time).abs() / time);
    }

    let mut worst_dft: f64 = 0.0;
    for n in [243, 1000] {
        let x = noise(n, &mut r);
        let fast = fft_slice(&x, FS as f64).unwrap().bins;
        let slow = naive_dft(&x);
        let num: f64 = fast.iter().zip(&slow).map(|(a, b)| (a - b).norm_sqr()).sum();
        let den: f64 = slow.iter().map(|b| b.norm_sqr()).sum();
        worst_dft = worst_dft.max((num / den).sqrt());
    }

    let mut worst_round: f64 = 0.0;
    for _ in 0..40 {
        let n = r.gen_range(2..=65_536);
        let x = unit_rms(noise(n, &mut r));
        let y = ifft_samples(&fft_slice(&x, FS as f64).unwrap()).unwrap();
        worst_round = worst_round.max(max_abs_diff(&x, &y));
    }

    let x = noise(16_000, &mut r);
    let buf = AudioBuffer::mono(x.clone(), FS).unwrap();
    let s = stft(&buf, 512, 256, Window::Hann).unwrap();
    let y = istft(&s, Window::Hann).unwrap();
    let end = y.len() - 512;
    let stft_err = max_abs_diff(&x[512..end], &y.samples()[512..end]);

    Outcome::all(vec![
        ("parseval", Outcome::new(worst_parseval < 1e-9, format!("rel {worst_parseval:.2e}"))),
        ("naive dft", Outcome::new(worst_dft < 1e-9, format!("rel {worst_dft:.2e}"))),
        ("fft/ifft", Outcome::new(worst_round < 1e-9, format!("max {worst_round:.2e}"))),
        ("stft/istft", Outcome::new(stft_err < 1e-6, format!("interior max {stft_err:.2e}"))),
        ("runtime", elapsed_ok(start, 10.0)),
    ])
}

pub fn geometry_suite() -> Outcome {
    let mut r = rng(2);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let h = r.gen_range(0.12..0.22);
        let g = SceneGeometry::new(
            r.gen_range(-180.0..180.0),
            r.gen_range(-180.0..180.0),
            r.gen_range(0.3..3.0),
            h,
        )
        .unwrap();
        let (l, rr) = binaural_orient::directivity::parallax_adjust(&g);
        let (ol, or) = parallax_oracle(g.theta_dir_deg, g.theta_ori_deg, g.r_m, g.h_m);
        worst = worst.max(angular_error(l, ol)).max(angular_error(rr, or));
    }
    let mut far: f64 = 0.0;
    for _ in 0..1000 {
        let g = SceneGeometry::new(r.gen_range(-180.0..180.0), 0.0, 1e6, 0.18).unwrap();
        let beta = if g.right_ipsilateral() {
            g.beta_deg_at(g.theta_dir_deg)
        } else {
            g.beta_deg_at(-g.theta_dir_deg)
        };
        far = far.max(g.alpha_deg().abs()).max(beta.abs());
    }
    Outcome::all(vec![
        ("oracle", Outcome::new(worst < 1e-9, format!("max {worst:.2e} deg over 1000 scenes"))),
        ("far field", Outcome::new(far < 1e-3, format!("max offset {far:.2e} deg at 1e6 m"))),
    ])
}

fn swap_ears(rec: &BinauralRecording) -> BinauralRecording {
    BinauralRecording::new(rec.right.clone(), rec.left.clone(), rec.geometry.mirrored()).unwrap()
}

pub fn renderer_identity() -> Outcome {
    let mut r = rng(3);
    let x = noise(3000, &mut r);
    let src = AudioBuffer::mono(x.clone(), FS).unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let g = random_geometry(&mut r, 0.18);
        let nf = NearFieldParams::new(0.09, 343.0, g.r_m).unwrap();
        let l = identity_table(TableKind::HrtfLeft, g.r_m);
        let rt = identity_table(TableKind::HrtfRight, g.r_m);
        let v = identity_table(TableKind::Vdp, g.r_m);
        for rec in [render(&src, &g, &l, &rt, &v, &nf).unwrap(), render_far_field(&src, &g, &l, &rt, &v).unwrap()] {
            worst = worst
                .max(max_abs_diff(rec.left.samples(), &x))
                .max(max_abs_diff(rec.right.samples(), &x));
        }
    }
    Outcome::new(worst < 1e-9, format!("max {worst:.2e}"))
}

pub fn renderer_mirror() -> Outcome {
    let mut r = rng(4);
    let nf = NearFieldParams::default().with_ear_azimuth(100.0).unwrap();
    let (hl, hr) = hrtf_pair(&nf);
    let v = synth_vdp(0.8, BINS, BIN_HZ).unwrap();
    let src = AudioBuffer::mono(noise(4000, &mut r), FS).unwrap();
    let mut mismatches = 0;
    for _ in 0..20 {
        let g = random_geometry(&mut r, nf.head_width_m());
        let a = render(&src, &g, &hl, &hr, &v, &nf).unwrap();
        let b = render(&src, &g.mirrored(), &hl, &hr, &v, &nf).unwrap();
        if a.left.samples() != b.right.samples() || a.right.samples() != b.left.samples() {
            mismatches += 1;
        }
    }
    Outcome::new(mismatches == 0, format!("{mismatches} of 20 mirrored scenes differ"))
}

pub fn renderer_linearity() -> Outcome {
    let mut r = rng(5);
    let nf = NearFieldParams::default().with_ear_azimuth(100.0).unwrap();
    let (hl, hr) = hrtf_pair(&nf);
    let v = synth_vdp(0.8, BINS, BIN_HZ).unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let g = random_geometry(&mut r, nf.head_width_m());
        let x = noise(3000, &mut r);
        let y = noise(3000, &mut r);
        let (a, b) = (r.gen_range(-2.0..2.0), r.gen_range(-2.0..2.0));
        let mix: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
        let run = |s: Vec<f64>| render(&AudioBuffer::mono(s, FS).unwrap(), &g, &hl, &hr, &v, &nf).unwrap();
        let (rx, ry, rm) = (run(x), run(y), run(mix));
        for (ex, ey, em) in [
            (rx.left.samples(), ry.left.samples(), rm.left.samples()),
            (rx.right.samples(), ry.right.samples(), rm.right.samples()),
        ] {
            let want: Vec<f64> = ex.iter().zip(ey).map(|(p, q)| a * p + b * q).collect();
            worst = worst.max(rms_rel(em, &want));
        }
    }
    Outcome::new(worst < 1e-9, format!("rms rel {worst:.2e}"))
}

/// Renders `scenes` random scenes with the library and with time-domain
/// convolution of directly inverted table responses.
pub fn renderer_oracle(scenes: usize) -> Outcome {
    let mut r = rng(6);
    let nf = NearFieldParams::default().with_ear_azimuth(100.0).unwrap();
    let (hl, hr) = hrtf_pair(&nf);
    let v = synth_vdp(0.8, BINS, BIN_HZ).unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..scenes {
        let g = random_geometry(&mut r, nf.head_width_m());
        let x = noise(2000, &mut r);
        let rec = render(&AudioBuffer::mono(x.clone(), FS).unwrap(), &g, &hl, &hr, &v, &nf).unwrap();
        let (vl, vr) = parallax_oracle(g.theta_dir_deg, g.theta_ori_deg, g.r_m, g.h_m);
        for (table, pattern_deg, got) in [(&hl, vl, rec.left.samples()), (&hr, vr, rec.right.samples())] {
            let hrtf = table.lookup_near_field(g.theta_dir_deg, &nf, g.r_m).unwrap();
            let vdp = v.lookup(pattern_deg).bins;
            let taps = convolve_taps(
                &centred_taps(&naive_irdft(&hrtf)),
                &centred_taps(&naive_irdft(&vdp)),
            );
            worst = worst.max(rms_rel(got, &apply_taps(&x, &taps)));
        }
    }
    Outcome::new(worst < 1e-9, format!("rms rel {worst:.2e} over {scenes} scenes"))
}

pub fn renderer_suite() -> Outcome {
    Outcome::all(vec![
        ("identity", renderer_identity()),
        ("mirror", renderer_mirror()),
        ("linearity", renderer_linearity()),
        ("oracle", renderer_oracle(100)),
    ])
}

pub fn near_field_identity() -> Outcome {
    let mut r = rng(7);
    let nf = NearFieldParams::new(0.0875, 343.0, 1.0).unwrap().with_ear_azimuth(100.0).unwrap();
    let (hl, hr) = hrtf_pair(&nf);
    let mut diffs = 0;
    for _ in 0..50 {
        let az = r.gen_range(-180.0..180.0);
        for t in [&hl, &hr] {
            if t.lookup_near_field(az, &nf, 1.0).unwrap() != t.lookup(az).bins {
                diffs += 1;
            }
        }
    }
    for t in [&hl, &hr] {
        if t.near_field_correct(&nf, 1.0).unwrap().responses() != t.responses() {
            diffs += 1;
        }
    }
    let sphere = nf.sphere();
    for _ in 0..200 {
        let d = sphere.dvf(r.gen_range(0.0..8000.0), r.gen_range(0.0..180.0), 1.0, 1.0);
        if d != Complex64::new(1.0, 0.0) {
            diffs += 1;
        }
    }
    Outcome::new(diffs == 0, format!("{diffs} non-identical responses at the reference distance"))
}

/// Library distance variation against the ratio of independently summed
/// point-source and plane-wave series.
pub fn near_field_series() -> Outcome {
    let sphere = Sphere {
        radius_m: 0.0875,
        speed_of_sound_mps: 343.0,
    };
    let mut worst: f64 = 0.0;
    for f in [31.25, 250.0, 1000.0, 4000.0, 7968.75] {
        let m = mu(f, sphere.radius_m, sphere.speed_of_sound_mps);
        for gamma in [0.0, 45.0, 90.0, 135.0, 150.0, 170.0, 180.0] {
            for dist in [0.25, 0.5, 1.0, 1.5] {
                let want = sphere_oracle(m, Some(dist / sphere.radius_m), gamma) / sphere_oracle(m, None, gamma);
                let got = sphere.dvf(f, gamma, dist, f64::INFINITY);
                worst = worst.max((got - want).norm() / want.norm());
            }
        }
    }
    Outcome::new(worst < 1e-8, format!("rel {worst:.2e}"))
}

/// The ear facing away from a source 0.5 m away hears 4 kHz more weakly
/// than 250 Hz.
pub fn near_field_contralateral() -> Outcome {
    let nf = NearFieldParams::new(0.0875, 343.0, f64::INFINITY).unwrap().with_ear_azimuth(100.0).unwrap();
    let (hl, _) = hrtf_pair(&nf);
    let (k_low, k_high) = ((250.0 / BIN_HZ) as usize, (4000.0 / BIN_HZ) as usize);
    let mut parts = Vec::new();
    let mut pass = true;
    for theta in [40.0, 60.0] {
        let row = hl.lookup_near_field(theta, &nf, 0.5).unwrap();
        let gamma = wrap_deg(theta + 100.0).abs();
        let rho = Some(0.5 / nf.head_radius_m);
        let o_low = sphere_oracle(mu(250.0, 0.0875, 343.0), rho, gamma);
        let o_high = sphere_oracle(mu(4000.0, 0.0875, 343.0), rho, gamma);
        let agree = (row[k_low] - o_low).norm() / o_low.norm() < 1e-8 && (row[k_high] - o_high).norm() / o_high.norm() < 1e-8;
        let ordered = row[k_high].norm() < row[k_low].norm() && o_high.norm() < o_low.norm();
        pass &= agree && ordered;
        parts.push(format!(
            "θ {theta}: |H(4k)| {:.3} < |H(250)| {:.3}, oracle {:.3} < {:.3}",
            row[k_high].norm(),
            row[k_low].norm(),
            o_high.norm(),
            o_low.norm()
        ));
    }
    Outcome::new(pass, parts.join(", "))
}

pub fn near_field_suite() -> Outcome {
    Outcome::all(vec![
        ("identity", near_field_identity()),
        ("series", near_field_series()),
        ("contralateral", near_field_contralateral()),
    ])
}

fn random_spectrum(rng: &mut impl Rng) -> Spectrum {
    let bins = (0..BINS)
        .map(|_| {
            let mag = 10f64.powf(rng.gen_range(-4.0..1.0));
            Complex64::from_polar(mag, rng.gen_range(-PI..PI))
        })
        .collect();
    Spectrum::new(bins, BIN_HZ, 2 * (BINS - 1)).unwrap()
}

pub fn feature_antisymmetry() -> Outcome {
    let mut r = rng(8);
    let mut bad = 0;
    for _ in 0..2000 {
        let (a, b) = (random_spectrum(&mut r), random_spectrum(&mut r));
        let (i1, i2) = (ild(&a, &b).unwrap(), ild(&b, &a).unwrap());
        let (t1, t2) = (itd(&a, &b).unwrap(), itd(&b, &a).unwrap());
        let neg = |x: &[f64], y: &[f64]| x.iter().zip(y).all(|(p, q)| *p == -*q);
        if !neg(&i1.values, &i2.values) || !neg(&t1.values, &t2.values) || i1.valid != i2.valid || t1.valid != t2.valid {
            bad += 1;
        }
    }
    let nf = NearFieldParams::default().with_ear_azimuth(100.0).unwrap();
    let (hl, hr) = hrtf_pair(&nf);
    let v = synth_vdp(0.8, BINS, BIN_HZ).unwrap();
    let cfg = FeatureConfig::default();
    let mut bad_tensors = 0;
    for i in 0..5 {
        let src = synth_speech(0.5, 100.0 + 30.0 * i as f64, i).unwrap();
        let g = random_geometry(&mut r, nf.head_width_m());
        let rec = preprocess(&render(&src, &g, &hl, &hr, &v, &nf).unwrap(), &PreprocessConfig::default()).unwrap();
        let a = assemble(&rec, &cfg).unwrap();
        let b = assemble(&swap_ears(&rec), &cfg).unwrap();
        if (0..4).any(|c| a.channel(c).iter().zip(b.channel(c)).any(|(p, q)| *p != -*q)) {
            bad_tensors += 1;
        }
    }
    Outcome::new(
        bad == 0 && bad_tensors == 0,
        format!("{bad} of 2000 spectrum pairs and {bad_tensors} of 5 recordings break exact negation"),
    )
}

pub fn feature_mirror() -> Outcome {
    let mut r = rng(12);
    let nf = NearFieldParams::default().with_ear_azimuth(100.0).unwrap();
    let (hl, hr) = hrtf_pair(&nf);
    let v = synth_vdp(0.9, BINS, BIN_HZ).unwrap();
    let mut bad = 0;
    for (i, ratio) in [RatioMode::EnergyRatio, FeatureConfig::default().ratio].into_iter().enumerate() {
        let cfg = FeatureConfig { floor: None, ratio, ..FeatureConfig::default() };
        let src = synth_speech(0.5, 120.0 + 40.0 * i as f64, i as u64).unwrap();
        let g = random_geometry(&mut r, nf.head_width_m());
        let rec = preprocess(&render(&src, &g, &hl, &hr, &v, &nf).unwrap(), &PreprocessConfig::default()).unwrap();
        let swapped = swap_ears(&rec);
        let label = |g: &SceneGeometry| (g.theta_dir_deg, g.theta_ori_deg);
        let a = FeatureBatch::from_tensors(&[assemble(&rec, &cfg).unwrap()], vec![label(&rec.geometry)]).unwrap();
        let b = FeatureBatch::from_tensors(&[assemble(&swapped, &cfg).unwrap()], vec![label(&swapped.geometry)]).unwrap();
        if a.mirrored().unwrap() != b {
            bad += 1;
        }
    }
    Outcome::new(bad == 0, format!("{bad} of 2 mirrored batches differ from the swapped recordings"))
}

pub fn feature_itd_bound(count: usize) -> Outcome {
    let mut r = rng(9);
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        let (a, b) = (random_spectrum(&mut r), random_spectrum(&mut r));
        let t = itd(&a, &b).unwrap();
        for (k, (v, ok)) in t.values.iter().zip(&t.valid).enumerate() {
            if *ok {
                worst = worst.max(v.abs() * 2.0 * a.freq(k));
            }
        }
    }
    Outcome::new(worst <= 1.0 + 1e-12, format!("max |itd|·2f = {worst:.15} over {count} spectra"))
}

pub fn feature_aliasing() -> Outcome {
    let f = aliasing_frequency(0.18, 343.0);
    Outcome::new((f - 952.78).abs() < 1.0 && (f - 952.0).abs() < 1.0, format!("{f:.3} Hz"))
}

pub fn feature_suite() -> Outcome {
    Outcome::all(vec![
        ("antisymmetry", feature_antisymmetry()),
        ("itd bound", feature_itd_bound(10_000)),
        ("aliasing", feature_aliasing()),
    ])
}

pub fn toy_architecture() -> Architecture {
    Architecture {
        input_channels: 3,
        input_len: 16,
        conv: vec![
            ConvSpec {
                out_channels: 4,
                kernel: 5,
                stride: 2,
                padding: 2,
            },
            ConvSpec {
                out_channels: 6,
                kernel: 3,
                stride: 1,
                padding: 1,
            },
        ],
        dense: vec![4],
        dropout: 0.0,
    }
}

pub fn estimator_gradient() -> Outcome {
    let mut r = rng(10);
    let mut net = Network::<f64>::init(toy_architecture(), &mut r).unwrap();
    net.params.iter_mut().for_each(|p| *p += r.gen_range(-0.1..0.1));
    let batch = 4;
    let x: Vec<f64> = (0..batch * net.input_size()).map(|_| r.gen_range(-1.0..1.0)).collect();
    let t: Vec<f64> = (0..batch * 4).map(|_| r.gen_range(-1.0..1.0)).collect();
    let (_, grad) = loss_and_grad(&net, &x, &t, batch, None).unwrap();
    let loss = |net: &Network<f64>| loss_and_grad(net, &x, &t, batch, None).unwrap().0;
    let eps = 1e-6;
    let mut worst: f64 = 0.0;
    let count = net.params.len();
    for i in 0..count {
        let p = net.params[i];
        net.params[i] = p + eps;
        let up = loss(&net);
        net.params[i] = p - eps;
        let dn = loss(&net);
        net.params[i] = p;
        let fd = (up - dn) / (2.0 * eps);
        worst = worst.max((fd - grad[i]).abs() / fd.abs().max(grad[i].abs()).max(1e-7));
    }
    Outcome::new(count >= 200 && worst < 1e-4, format!("max rel {worst:.2e} over {count} parameters"))
}

fn random_batch(count: usize, len: usize, rng: &mut impl Rng, label: impl Fn(&mut dyn rand::RngCore) -> (f64, f64)) -> FeatureBatch {
    let mut b = FeatureBatch::new(len, 5);
    for _ in 0..count {
        b.data.extend((0..5 * len).map(|_| rng.gen_range(-1.0f32..1.0)));
        let l = label(&mut ChaCha8Rng::seed_from_u64(rng.gen()));
        b.labels.push(l);
    }
    b
}

pub fn estimator_determinism() -> Outcome {
    let mut r = rng(11);
    let data = random_batch(120, 64, &mut r, |g| (g.gen_range(-180.0..180.0), g.gen_range(-180.0..180.0)));
    let cfg = TrainConfig {
        epochs: 3,
        seed: 5,
        ..TrainConfig::default()
    };
    let bytes = || {
        let (model, _) = train(&data, Architecture::desk(64), &cfg).unwrap();
        let mut out = Vec::new();
        write_model(&model, &mut out).unwrap();
        out
    };
    let (a, b) = (bytes(), bytes());
    Outcome::new(a == b, format!("{} checkpoint bytes, identical: {}", a.len(), a == b))
}

pub fn estimator_constant_target() -> Outcome {
    let mut r = rng(12);
    let target = (30.0, -60.0);
    let data = random_batch(200, 64, &mut r, |_| target);
    let cfg = TrainConfig {
        epochs: 40,
        batch_size: 10,
        learning_rate: 1e-3,
        seed: 3,
        ..TrainConfig::default()
    };
    let (model, _) = train(&data, Architecture::desk(64), &cfg).unwrap();
    let preds = model.predict_batch(&data, 50).unwrap();
    let want = binaural_orient::estimator::encode_target(target.0, target.1);
    let loss = preds
        .iter()
        .map(|p| p.raw().iter().zip(&want).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / 4.0)
        .sum::<f64>()
        / preds.len() as f64;
    Outcome::new(loss < 1e-3, format!("loss {loss:.2e}"))
}

pub fn estimator_suite() -> Outcome {
    Outcome::all(vec![
        ("gradient", estimator_gradient()),
        ("determinism", estimator_determinism()),
        ("constant target", estimator_constant_target()),
    ])
}

/// Noiseless renders on a `step`-degree grid of both angles at 1 m.
pub struct GridWorld {
    pub head: HeadModel,
    pub left: DirectivityTable,
    pub right: DirectivityTable,
    pub vdp: DirectivityTable,
    pub source: AudioBuffer,
    pub features: FeatureConfig,
}

impl GridWorld {
    pub fn new() -> Self {
        let head = HeadModel {
            near_field: NearFieldParams::new(0.0875, 343.0, f64::INFINITY)
                .unwrap()
                .with_ear_azimuth(100.0)
                .unwrap(),
            pinna_shadow: 0.5,
        };
        let (left, right) = synth_hrtf_model(&head, 5.0, BINS, BIN_HZ).unwrap();
        Self {
            head,
            left,
            right,
            vdp: synth_vdp(0.9, BINS, BIN_HZ).unwrap(),
            source: synth_speech(1.0, 140.0, 17).unwrap(),
            features: FeatureConfig {
                ratio: RatioMode::EnergyRatio,
                ..FeatureConfig::default()
            },
        }
    }

    pub fn angles(step: f64) -> Vec<(f64, f64)> {
        let n = (360.0 / step).round() as usize;
        let grid: Vec<f64> = (0..n).map(|i| -180.0 + step * i as f64).collect();
        grid.iter().flat_map(|&d| grid.iter().map(move |&o| (d, o))).collect()
    }

    pub fn batch(&self, angles: &[(f64, f64)]) -> FeatureBatch {
        use rayon::prelude::*;
        let nf = &self.head.near_field;
        let tensors: Vec<_> = angles
            .par_iter()
            .map(|&(d, o)| {
                let g = SceneGeometry::new(d, o, 1.0, nf.head_width_m()).unwrap();
                let rec = render(&self.source, &g, &self.left, &self.right, &self.vdp, nf).unwrap();
                assemble(&preprocess(&rec, &PreprocessConfig::default()).unwrap(), &self.features).unwrap()
            })
            .collect();
        FeatureBatch::from_tensors(&tensors, angles.to_vec()).unwrap()
    }
}

/// Template matching of independently rendered grid queries against a bank
/// on the same grid; returns the outcome and the predictions.
pub fn template_oracle(step: f64) -> (Outcome, Vec<(f64, f64)>, Vec<(f64, f64)>) {
    let start = Instant::now();
    let world = GridWorld::new();
    let angles = GridWorld::angles(step);
    let bank = TemplateBank::new(world.batch(&angles)).unwrap();
    let queries = world.batch(&angles);
    let preds: Vec<(f64, f64)> = bank
        .match_batch(&queries)
        .unwrap()
        .iter()
        .map(|p| (p.theta_dir_deg, p.theta_ori_deg))
        .collect();
    let worst = preds
        .iter()
        .zip(&angles)
        .map(|(p, t)| angular_error(p.0, t.0).max(angular_error(p.1, t.1)))
        .fold(0.0, f64::max);
    let s = start.elapsed().as_secs_f64();
    let o = Outcome::new(
        worst == 0.0 && s < 120.0,
        format!("{} queries, max error {worst} deg, {s:.1} s", angles.len()),
    );
    (o, preds, angles)
}

/// 4-class facing accuracy of the template oracle on grid data.
pub fn template_facing(preds: &[(f64, f64)], truth: &[(f64, f64)]) -> Outcome {
    let report = facing_classify(preds, truth, FacingRule::default());
    let acc = report.class_accuracy();
    let pass = acc.iter().all(|a| *a == Some(1.0));
    Outcome::new(pass, format!("class accuracy {acc:?}"))
}
