use crate::geometry::{wrap_deg, SceneGeometry};

/// Angles at which the speaker's directivity pattern is sampled for the left
/// and right ear, `(left, right)` in degrees.
///
/// With the right ear ipsilateral the left ear sees the pattern at
/// `θ_ori - α` and the right ear at `θ_ori + β`, where
/// `α = asin((h/2)/r)` and `β = atan((h cos θ_dir / 2) / (r - h sin θ_dir / 2))`.
/// Left-ipsilateral scenes are handled by mirroring through the median plane,
/// which swaps the roles of the two offsets.
pub fn parallax_adjust(geom: &SceneGeometry) -> (f64, f64) {
    let alpha = geom.alpha_deg();
    if geom.right_ipsilateral() {
        let beta = geom.beta_deg_at(geom.theta_dir_deg);
        (
            wrap_deg(geom.theta_ori_deg - alpha),
            wrap_deg(geom.theta_ori_deg + beta),
        )
    } else {
        let beta = geom.beta_deg_at(-geom.theta_dir_deg);
        (
            wrap_deg(geom.theta_ori_deg - beta),
            wrap_deg(geom.theta_ori_deg + alpha),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn far_field_limit() {
        let g = SceneGeometry::new(40.0, 0.0, 1e6, 0.18).unwrap();
        let (l, r) = parallax_adjust(&g);
        assert!(l.abs() < 1e-3 && r.abs() < 1e-3);
    }

    #[test]
    fn worked_example() {
        let g = SceneGeometry::new(0.0, 30.0, 0.9, 0.18).unwrap();
        let (l, r) = parallax_adjust(&g);
        // 30 - asin(0.1), 30 + atan(0.1), both in degrees
        assert!((l - 24.260_829_522_733_214).abs() < 1e-9, "{l}");
        assert!((r - 35.710_593_137_499_64).abs() < 1e-9, "{r}");
    }

    #[test]
    fn beta_vanishes_on_the_ear_axis() {
        let g = SceneGeometry::new(90.0, 0.0, 0.9, 0.18).unwrap();
        assert!(g.beta_deg_at(90.0).abs() < 1e-12);
        let (_, r) = parallax_adjust(&g);
        assert!(r.abs() < 1e-12);
    }

    #[test]
    fn mirrored_scene_mirrors_angles() {
        let g = SceneGeometry::new(37.0, -12.0, 0.7, 0.17).unwrap();
        let (l, r) = parallax_adjust(&g);
        let (ml, mr) = parallax_adjust(&g.mirrored());
        assert_eq!(ml, -r);
        assert_eq!(mr, -l);
    }
}
