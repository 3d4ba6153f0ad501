//! Error statistics and facing classes for a set of noisy predictions.

use binaural_orient::estimator::AnglePrediction;
use binaural_orient::harness::metrics::{FacingClass, FacingRule};
use binaural_orient::harness::evaluate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> binaural_orient::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut truth = Vec::new();
    let mut preds = Vec::new();
    for _ in 0..2000 {
        let (d, o) = (rng.gen_range(-180.0..180.0), rng.gen_range(-180.0..180.0));
        truth.push((d, o));
        preds.push(AnglePrediction::from_angles(
            d + rng.gen_range(-8.0..8.0),
            o + rng.gen_range(-30.0..30.0),
        ));
    }
    let report = evaluate(&preds, &truth, FacingRule::default())?;
    for (name, a) in [("theta_dir", &report.theta_dir), ("theta_ori", &report.theta_ori)] {
        let s = a.summary;
        println!("{name}: mean {:.2} p50 {:.2} p80 {:.2} p90 {:.2} max {:.2}", s.mean, s.p50, s.p80, s.p90, s.max);
    }
    for (c, acc) in FacingClass::ALL.iter().zip(report.facing.class_accuracy()) {
        println!("{:<26} {}", c.name(), acc.map_or("n/a".into(), |a| format!("{:.1}%", 100.0 * a)));
    }
    let dir = std::env::temp_dir().join("binaural-orient-metrics");
    report.emit(&dir, "demo_")?;
    println!("report and CSV tables in {}", dir.display());
    Ok(())
}
