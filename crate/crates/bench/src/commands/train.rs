//! `vde train`: fit the MLP field on a toy dataset and write a weight file.

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;

use vde_core::{train_flow_matching, Activation, TimeFeatures, ToyDataset, TrainConfig};

use crate::formats::write_weights;

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// two-moons, gaussian-ring, or checkerboard
    #[arg(long)]
    pub dataset: String,

    /// Output weight file (JSON)
    #[arg(long)]
    pub out: PathBuf,

    #[arg(long, default_value_t = 5000)]
    pub iterations: usize,

    #[arg(long, default_value_t = 256)]
    pub batch_size: usize,

    #[arg(long, default_value_t = 1e-3)]
    pub learning_rate: f64,

    /// Hidden layer widths, comma separated
    #[arg(long, default_value = "64,64")]
    pub hidden: String,

    /// tanh, gelu, or relu
    #[arg(long, default_value = "tanh")]
    pub activation: String,

    /// Fourier sin/cos pairs in the time embedding
    #[arg(long, default_value_t = 4)]
    pub fourier_pairs: usize,

    /// Drop the raw t entry from the time embedding
    #[arg(long)]
    pub no_raw_time: bool,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

fn parse_widths(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|part| {
            part.trim()
                .parse::<usize>()
                .map_err(|_| anyhow::anyhow!("invalid hidden width `{part}` in --hidden"))
        })
        .collect()
}

pub fn run(args: &TrainArgs) -> Result<()> {
    let dataset = ToyDataset::parse(&args.dataset)?;
    let config = TrainConfig {
        iterations: args.iterations,
        batch_size: args.batch_size,
        learning_rate: args.learning_rate,
        hidden: parse_widths(&args.hidden)?,
        activation: Activation::parse(&args.activation)?,
        time_features: TimeFeatures {
            fourier_pairs: args.fourier_pairs,
            include_raw: !args.no_raw_time,
        },
        seed: args.seed,
        ..TrainConfig::default()
    };

    let (field, report) = train_flow_matching(dataset, &config)?;
    if let Some(parent) = args.out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .with_context(|| format!("creating {}", parent.display()))?;
        }
    }
    write_weights(&args.out, &field)?;

    println!(
        "trained {} for {} iterations (seed {})",
        dataset.name(),
        report.iterations,
        args.seed
    );
    println!(
        "held-out loss: {:.6} -> {:.6} (zero predictor {:.6})",
        report.initial_loss, report.final_loss, report.zero_predictor_loss
    );
    println!("weights written to {}", args.out.display());
    Ok(())
}
