use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use binaural_orient::directivity::{synth_hrtf_model, synth_vdp_grid, write_table, HeadModel, NearFieldParams};
use binaural_orient::error::Result;
use binaural_orient::estimator::{load_model, save_model, train, TrainConfig};
use binaural_orient::features::FeatureBatch;
use binaural_orient::harness::experiment::{run_experiment, ArchPreset, ExperimentConfig, ExperimentName};
use binaural_orient::harness::metrics::{evaluate, FacingRule};
use binaural_orient::harness::{correlation_diagnostic, generate_dataset, DatasetSpec};

#[derive(Parser)]
#[command(version, about = "Binaural speaker direction and head orientation estimation")]
struct Cli {
    /// Seed for every random choice; overrides seeds in config files.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write synthetic HRTF (left, right) and talker directivity tables.
    SynthTables {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.09)]
        head_radius: f64,
        #[arg(long, default_value_t = 90.0)]
        ear_azimuth: f64,
        #[arg(long, default_value_t = 0.0)]
        pinna_shadow: f64,
        #[arg(long, default_value_t = 0.8)]
        vdp_strength: f64,
        #[arg(long, default_value_t = 5.0)]
        step: f64,
        #[arg(long, default_value_t = 257)]
        bins: usize,
        #[arg(long, default_value_t = 16000)]
        sample_rate: u32,
    },
    /// Generate a feature batch from a dataset spec (JSON).
    Gen {
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        count: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a model on a feature batch.
    Train {
        #[arg(long)]
        data: PathBuf,
        /// Training configuration (JSON); defaults apply when absent.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Arch::Desk)]
        arch: Arch,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a model on a feature batch; writes a report and CSV tables.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 25.0)]
        facing_sector: f64,
        /// Treat the facing sector as a full width (half on each side).
        #[arg(long)]
        half_width: bool,
    },
    /// Run a named protocol: main, near-vs-far, known-vs-unknown-hrtf or all.
    Experiment {
        name: ExperimentName,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Correlation matrices of HRTF, talker and combined magnitude responses.
    DiagCorr {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 10.0)]
        step: f64,
        #[arg(long, default_value_t = 0.8)]
        vdp_strength: f64,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum Arch {
    Desk,
    EvenStride,
}

fn read_json<T: serde::de::DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        Some(p) => Ok(serde_json::from_str(&std::fs::read_to_string(p)?)?),
        None => Ok(T::default()),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::SynthTables {
            out,
            head_radius,
            ear_azimuth,
            pinna_shadow,
            vdp_strength,
            step,
            bins,
            sample_rate,
        } => {
            let head = HeadModel {
                near_field: NearFieldParams {
                    head_radius_m: head_radius,
                    ear_azimuth_deg: ear_azimuth,
                    ..NearFieldParams::default()
                },
                pinna_shadow,
            };
            let bin_hz = sample_rate as f64 / (2 * (bins.max(2) - 1)) as f64;
            let (l, r) = synth_hrtf_model(&head, step, bins, bin_hz)?;
            let v = synth_vdp_grid(vdp_strength, step, bins, bin_hz)?;
            std::fs::create_dir_all(&out)?;
            write_table(&l, out.join("hrtf_left.dirt"))?;
            write_table(&r, out.join("hrtf_right.dirt"))?;
            write_table(&v, out.join("vdp.dirt"))?;
        }
        Command::Gen { spec, count, out } => {
            let mut s: DatasetSpec = read_json(spec.as_deref())?;
            if let Some(seed) = cli.seed {
                s.seed = seed;
            }
            if let Some(c) = count {
                s.count = c;
            }
            generate_dataset(&s)?.save(&out)?;
        }
        Command::Train { data, config, arch, out } => {
            let batch = FeatureBatch::load(&data)?;
            let mut cfg: TrainConfig = read_json(config.as_deref())?;
            if let Some(seed) = cli.seed {
                cfg.seed = seed;
            }
            let preset = match arch {
                Arch::Desk => ArchPreset::Desk,
                Arch::EvenStride => ArchPreset::EvenStride,
            };
            let (model, log) = train(&batch, preset.build(batch.len), &cfg)?;
            for (i, l) in log.epoch_loss.iter().enumerate() {
                eprintln!("epoch {:>3}  loss {l:.6}", i + 1);
            }
            save_model(&model, &out)?;
        }
        Command::Eval {
            model,
            data,
            out,
            facing_sector,
            half_width,
        } => {
            let model = load_model(&model)?;
            let batch = FeatureBatch::load(&data)?;
            let pred = model.predict_batch(&batch, 100)?;
            let rule = FacingRule {
                sector_deg: facing_sector,
                half_width,
            };
            let report = evaluate(&pred, &batch.labels, rule)?;
            report.emit(&out, "")?;
            let (d, o) = (report.theta_dir.summary, report.theta_ori.summary);
            println!("theta_dir  p50 {:.2}  p80 {:.2}  p90 {:.2}", d.p50, d.p80, d.p90);
            println!("theta_ori  p50 {:.2}  p80 {:.2}  p90 {:.2}", o.p50, o.p80, o.p90);
        }
        Command::Experiment { name, config, out } => {
            let mut cfg: ExperimentConfig = read_json(config.as_deref())?;
            if let Some(seed) = cli.seed {
                cfg.seed = seed;
            }
            let outcome = run_experiment(name, &cfg, Some(&out))?;
            for (label, r) in &outcome.reports {
                let (d, o) = (r.theta_dir.summary, r.theta_ori.summary);
                println!(
                    "{label:<8} theta_dir p50 {:.2} p80 {:.2} p90 {:.2} | theta_ori p50 {:.2} p80 {:.2} p90 {:.2}",
                    d.p50, d.p80, d.p90, o.p50, o.p80, o.p90
                );
            }
        }
        Command::DiagCorr { out, step, vdp_strength } => {
            let bins = 257;
            let bin_hz = 16000.0 / 512.0;
            let (l, r) = synth_hrtf_model(&HeadModel::sphere_only(NearFieldParams::default()), 5.0, bins, bin_hz)?;
            let v = synth_vdp_grid(vdp_strength, 5.0, bins, bin_hz)?;
            correlation_diagnostic(&l, &r, &v, step)?.write_csv(&out)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
