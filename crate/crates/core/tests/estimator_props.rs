mod common;

use binaural_orient::estimator::{decode_angle, encode_target, read_model, train, write_model, Architecture, TrainConfig};
use binaural_orient::harness::angular_error;
use proptest::prelude::*;

#[test]
fn backprop_matches_finite_differences() {
    common::estimator_gradient().assert();
}

#[test]
fn seeded_training_is_bit_identical() {
    common::estimator_determinism().assert();
}

#[test]
fn learns_a_constant_target() {
    common::estimator_constant_target().assert();
}

#[test]
fn checkpoint_round_trip_preserves_predictions() {
    let mut r = common::rng(20);
    let mut data = binaural_orient::features::FeatureBatch::new(32, 5);
    for i in 0..40 {
        data.data.extend(common::noise(160, &mut r).iter().map(|&v| v as f32));
        data.labels.push((i as f64 * 9.0 - 180.0, 90.0 - i as f64 * 4.0));
    }
    let cfg = TrainConfig { epochs: 2, ..TrainConfig::default() };
    let (model, _) = train(&data, Architecture::desk(32), &cfg).unwrap();
    let mut bytes = Vec::new();
    write_model(&model, &mut bytes).unwrap();
    let back = read_model(&mut bytes.as_slice()).unwrap();
    assert_eq!(model.predict_batch(&data, 7).unwrap(), back.predict_batch(&data, 7).unwrap());
}

proptest! {
    #[test]
    fn angle_encoding_round_trips(d in -180.0f64..180.0, o in -180.0f64..180.0) {
        let t = encode_target(d, o);
        prop_assert!(angular_error(decode_angle(t[0], t[1]), d) < 1e-9);
        prop_assert!(angular_error(decode_angle(t[2], t[3]), o) < 1e-9);
    }
}
