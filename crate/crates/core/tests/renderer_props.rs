mod common;

#[test]
fn identity_tables_pass_the_source_through() {
    common::renderer_identity().assert();
}

#[test]
fn mirrored_scene_swaps_ears_exactly() {
    common::renderer_mirror().assert();
}

#[test]
fn rendering_is_linear() {
    common::renderer_linearity().assert();
}

#[test]
fn matches_time_domain_convolution() {
    common::renderer_oracle(20).assert();
}
