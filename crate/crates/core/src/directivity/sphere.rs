//! Rigid-sphere head model.
//!
//! Surface pressure on a rigid sphere of radius `a` due to a point source at
//! distance `r` from its center, normalized by the free-field pressure the
//! same source would produce at the (absent) sphere center:
//!
//! ```text
//! H(ρ, μ, γ) = -(ρ/μ) e^{-iμρ} Σ_m (2m+1) P_m(cos γ) h_m(μρ) / h'_m(μ)
//! ```
//!
//! with `μ = k a`, `ρ = r / a`, `h_m` the outgoing spherical Hankel function
//! and `γ` the angle between the source and the observation point as seen
//! from the center. The plane-wave limit is
//! `-(1/μ²) Σ (2m+1) (-i)^{m+1} P_m(cos γ) / h'_m(μ)`.
//!
//! Hankel functions are never formed directly: the series is accumulated
//! from the ratios `h_m / h_{m-1}`, which stay bounded where the functions
//! themselves overflow.

use num_complex::Complex64;

const MAX_ORDER: usize = 600;
const MIN_ORDER: usize = 30;
const TAIL_TOL: f64 = 1e-15;

/// `R_m(x) = h_m(x) / h_{m-1}(x)` for `m = 1..=n`.
fn hankel_ratios(x: f64, n: usize) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(n);
    let mut r = Complex64::new(1.0 / x, -1.0);
    out.push(r);
    for m in 1..n {
        r = Complex64::new((2 * m + 1) as f64 / x, 0.0) - r.inv();
        out.push(r);
    }
    out
}

fn order_limit(mu: f64, rho: f64) -> usize {
    // enough terms for the ρ^{-m} tail to fall below machine precision
    let tail = if rho.is_finite() { 37.0 / rho.ln() } else { 0.0 };
    ((2.0 * mu + 40.0 + tail) as usize).clamp(MIN_ORDER + 20, MAX_ORDER)
}

/// Point-source response. `mu = k a > 0`, `rho = r / a > 1`.
pub fn point_source_response(mu: f64, rho: f64, cos_gamma: f64) -> Complex64 {
    series(mu, rho, &[cos_gamma])[0]
}

/// Plane-wave (infinitely distant source) response.
pub fn plane_wave_response(mu: f64, cos_gamma: f64) -> Complex64 {
    series(mu, f64::INFINITY, &[cos_gamma])[0]
}

/// Responses at several angles sharing `mu` and `rho`; an infinite `rho`
/// gives the plane-wave series.
pub fn series(mu: f64, rho: f64, cos_gammas: &[f64]) -> Vec<Complex64> {
    debug_assert!(mu > 0.0 && rho > 1.0);
    let n = order_limit(mu, rho);
    let plane = rho.is_infinite();
    let surf = hankel_ratios(mu, n);
    let near = if plane { Vec::new() } else { hankel_ratios(mu * rho, n) };
    let neg_i = Complex64::new(0.0, -1.0);

    // c_m is the angle-independent part of term m. For a point source it is
    // h_m(μρ)/h_0(μρ) · h_0(μ)/h_m(μ) / (h'_m(μ)/h_m(μ)); the h_0 factors are
    // folded into the prefactor. For a plane wave it is (-i)^{m+1} / h'_m(μ),
    // with 1/h_m(μ) accumulated as a running product to avoid overflow.
    let mut q = Complex64::new(1.0, 0.0);
    let mut phase = neg_i;
    let mut inv_h = if plane {
        (neg_i * Complex64::new(0.0, mu).exp() / mu).inv()
    } else {
        Complex64::new(1.0, 0.0)
    };
    // h'_0 = -h_1
    let c0 = if plane { phase * inv_h / (-surf[0]) } else { q / (-surf[0]) };
    let mut sums: Vec<Complex64> = cos_gammas.iter().map(|_| c0).collect();
    let mut p_prev = vec![1.0; cos_gammas.len()];
    let mut p_cur = cos_gammas.to_vec();
    for m in 1..n {
        let d = surf[m - 1].inv() - (m + 1) as f64 / mu;
        let c = if plane {
            inv_h /= surf[m - 1];
            phase *= neg_i;
            phase * inv_h / d
        } else {
            q *= near[m - 1] / surf[m - 1];
            q / d
        };
        let w = (2 * m + 1) as f64;
        for (s, p) in sums.iter_mut().zip(&p_cur) {
            *s += c * (w * p);
        }
        // |P_m| <= 1 bounds every angle's term
        let bound = c.norm() * w;
        if m > MIN_ORDER && m as f64 > mu && sums.iter().all(|s| bound < TAIL_TOL * s.norm()) {
            break;
        }
        for ((pp, pc), &x) in p_prev.iter_mut().zip(p_cur.iter_mut()).zip(cos_gammas) {
            let next = (w * x * *pc - m as f64 * *pp) / (m + 1) as f64;
            *pp = *pc;
            *pc = next;
        }
    }
    let pre = if plane {
        Complex64::new(-1.0 / (mu * mu), 0.0)
    } else {
        -(Complex64::new(0.0, -mu).exp() / mu)
    };
    sums.into_iter().map(|s| pre * s).collect()
}

/// Smallest frequency the series is evaluated at; DC uses this value.
const MIN_FREQ_HZ: f64 = 1e-3;

/// Parameters of a spherical head.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sphere {
    pub radius_m: f64,
    pub speed_of_sound_mps: f64,
}

impl Sphere {
    fn mu(&self, freq_hz: f64) -> f64 {
        2.0 * std::f64::consts::PI * freq_hz.max(MIN_FREQ_HZ) * self.radius_m
            / self.speed_of_sound_mps
    }

    /// Response at `incidence_deg` from a source `distance_m` from the center.
    /// An infinite distance gives the plane-wave response.
    pub fn response(&self, freq_hz: f64, incidence_deg: f64, distance_m: f64) -> Complex64 {
        let cos_g = incidence_deg.to_radians().cos();
        let mu = self.mu(freq_hz);
        if distance_m.is_infinite() {
            plane_wave_response(mu, cos_g)
        } else {
            point_source_response(mu, distance_m / self.radius_m, cos_g)
        }
    }

    /// Responses at several incidence angles.
    pub fn responses(&self, freq_hz: f64, incidence_deg: &[f64], distance_m: f64) -> Vec<Complex64> {
        let cos: Vec<f64> = incidence_deg.iter().map(|a| a.to_radians().cos()).collect();
        series(self.mu(freq_hz), distance_m / self.radius_m, &cos)
    }

    /// Distance variation function: the response at `target_m` relative to the
    /// response at `reference_m`. Exactly 1 when the two distances coincide.
    pub fn dvf(&self, freq_hz: f64, incidence_deg: f64, target_m: f64, reference_m: f64) -> Complex64 {
        if target_m == reference_m {
            return Complex64::new(1.0, 0.0);
        }
        self.response(freq_hz, incidence_deg, target_m)
            / self.response(freq_hz, incidence_deg, reference_m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const A: f64 = 0.09;
    const C: f64 = 343.0;

    fn sphere() -> Sphere {
        Sphere {
            radius_m: A,
            speed_of_sound_mps: C,
        }
    }

    #[test]
    fn low_frequency_limit_is_unity_in_far_field() {
        let h = plane_wave_response(1e-4, 0.3);
        assert!((h - Complex64::new(1.0, 0.0)).norm() < 1e-3);
    }

    #[test]
    fn low_frequency_near_field_matches_static_series() {
        // μ → 0: H → Σ (2m+1)/(m+1) P_m(cos γ) ρ^{-m}
        let rho: f64 = 4.0;
        let cg: f64 = 0.6;
        let mut expected = 0.0;
        let (mut p0, mut p1) = (1.0, cg);
        expected += 1.0;
        for m in 1..200 {
            expected += (2 * m + 1) as f64 / (m + 1) as f64 * p1 * rho.powi(-(m as i32));
            let p2 = ((2 * m + 1) as f64 * cg * p1 - m as f64 * p0) / (m + 1) as f64;
            p0 = p1;
            p1 = p2;
        }
        let h = point_source_response(1e-5, rho, cg);
        assert!((h.re - expected).abs() < 1e-4, "{h} vs {expected}");
        assert!(h.im.abs() < 1e-3);
    }

    #[test]
    fn distant_point_source_approaches_plane_wave() {
        for &f in &[200.0, 1000.0, 4000.0, 8000.0] {
            for &g in &[0.0, 60.0, 120.0, 180.0] {
                let ps = sphere().response(f, g, 1e4);
                let pw = sphere().response(f, g, f64::INFINITY);
                assert!((ps - pw).norm() < 2e-3 * pw.norm().max(1.0), "f={f} g={g}: {ps} vs {pw}");
            }
        }
    }

    #[test]
    fn ipsilateral_high_frequency_gain_near_six_db() {
        let h = sphere().response(8000.0, 0.0, f64::INFINITY);
        let db = 20.0 * h.norm().log10();
        assert!(db > 4.0 && db < 7.5, "{db} dB");
    }

    #[test]
    fn dvf_identity_at_reference() {
        let d = sphere().dvf(3000.0, 45.0, 1.5, 1.5);
        assert_eq!(d, Complex64::new(1.0, 0.0));
    }
}
