mod common;

#[test]
fn coarse_grid_is_recovered_exactly() {
    let (o, preds, truth) = common::template_oracle(30.0);
    o.assert();
    common::template_facing(&preds, &truth).assert();
}
