mod common;

use binaural_orient::directivity::parallax_adjust;
use binaural_orient::harness::angular_error;
use binaural_orient::SceneGeometry;
use proptest::prelude::*;

#[test]
fn parallax_matches_plane_geometry() {
    common::geometry_suite().assert();
}

#[test]
fn frontal_speaker_at_ninety_centimetres() {
    let g = SceneGeometry::new(0.0, 30.0, 0.9, 0.18).unwrap();
    let (l, r) = parallax_adjust(&g);
    let (ol, or) = common::parallax_oracle(0.0, 30.0, 0.9, 0.18);
    assert!(angular_error(l, ol) < 1e-9 && angular_error(r, or) < 1e-9);
    assert!(l < 30.0 && r > 30.0);
}

proptest! {
    #[test]
    fn mirroring_swaps_and_negates(d in -180.0f64..180.0, o in -180.0f64..180.0, r in 0.3f64..3.0) {
        let g = SceneGeometry::new(d, o, r, 0.18).unwrap();
        let (l, rr) = parallax_adjust(&g);
        let (ml, mr) = parallax_adjust(&g.mirrored());
        // the mirror of θ_dir = 0 is itself, where the right ear stays ipsilateral
        prop_assume!(g.theta_dir_deg != 0.0 && g.theta_dir_deg != -180.0);
        prop_assert!(angular_error(l, -mr) < 1e-9);
        prop_assert!(angular_error(rr, -ml) < 1e-9);
    }

    #[test]
    fn offsets_shrink_with_distance(d in -180.0f64..180.0, r in 0.3f64..3.0) {
        let near = SceneGeometry::new(d, 0.0, r, 0.18).unwrap();
        let far = SceneGeometry::new(d, 0.0, 2.0 * r, 0.18).unwrap();
        prop_assert!(far.alpha_deg() < near.alpha_deg());
        let (nl, _) = parallax_adjust(&near);
        let (fl, _) = parallax_adjust(&far);
        prop_assert!(angular_error(fl, 0.0) <= angular_error(nl, 0.0) + 1e-12);
    }
}
