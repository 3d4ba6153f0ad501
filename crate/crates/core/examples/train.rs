//! Generate a small dataset, train the estimator for a few epochs and
//! evaluate it on unseen scenes.

use binaural_orient::estimator::{load_model, save_model, train, Architecture, TrainConfig};
use binaural_orient::harness::metrics::FacingRule;
use binaural_orient::harness::{evaluate, generate_dataset, DatasetSpec};

fn main() -> binaural_orient::Result<()> {
    let count: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(600);
    let spec = DatasetSpec {
        count,
        seed: 1,
        ..DatasetSpec::default()
    };
    let data = generate_dataset(&spec)?;
    let test = generate_dataset(&DatasetSpec {
        count: 200,
        seed: 1 << 40,
        ..spec
    })?;
    println!("{} training and {} test samples", data.batch.count(), test.batch.count());

    let cfg = TrainConfig {
        epochs: 5,
        ..TrainConfig::default()
    };
    let (model, log) = train(&data.batch, Architecture::desk(data.batch.len), &cfg)?;
    for (i, l) in log.epoch_loss.iter().enumerate() {
        println!("epoch {:>2} loss {l:.4}", i + 1);
    }

    let path = std::env::temp_dir().join("binaural-orient-demo.bocn");
    save_model(&model, &path)?;
    let model = load_model(&path)?;
    let report = evaluate(&model.predict_batch(&test.batch, 100)?, &test.batch.labels, FacingRule::default())?;
    println!(
        "theta_dir p50 {:.1}  theta_ori p50 {:.1}",
        report.theta_dir.summary.p50, report.theta_ori.summary.p50
    );
    Ok(())
}
