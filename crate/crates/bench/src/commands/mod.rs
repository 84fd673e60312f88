//! Subcommand implementations and the flag/env/file resolution shared by the
//! experiment-driven commands.

pub mod bench;
pub mod nfe;
pub mod sample;
pub mod trace;
pub mod train;

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;

use crate::config::{load_config, ExperimentConfig, ModeSpec};

/// Flags shared by `sample`, `bench`, and `trace`. Flags override the config
/// file, which overrides the defaults; `VDE_SEED` sits between file and
/// flags and replaces the base seed only.
#[derive(Debug, Args)]
pub struct RunArgs {
    /// Config file: a bare experiment config or a run.json from an earlier run
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Output directory (created if missing)
    #[arg(long)]
    pub out_dir: Option<String>,

    /// Total integration steps T
    #[arg(long)]
    pub t_steps: Option<usize>,

    /// Warm-up full passes W
    #[arg(long)]
    pub warmup: Option<usize>,

    /// Anchor interval n; repeat the flag for a sweep
    #[arg(long = "interval")]
    pub intervals: Vec<usize>,

    /// Naive reduced-step full baseline for `bench`; repeatable
    #[arg(long = "baseline-steps")]
    pub baseline_steps: Vec<usize>,

    /// NFE multiplier per full step (guidance-style accounting)
    #[arg(long)]
    pub calls_per_step: Option<usize>,

    /// Number of seeded trajectories
    #[arg(long)]
    pub seed_count: Option<usize>,

    /// Base seed; trajectory i uses base + i
    #[arg(long)]
    pub seed_base: Option<u64>,

    /// Warm-up handling: fixed or dynamic (stable-phase detection)
    #[arg(long, value_parser = parse_mode)]
    pub mode: Option<ModeSpec>,

    /// Worker threads for trajectory-level parallelism
    #[arg(long)]
    pub workers: Option<usize>,
}

fn parse_mode(s: &str) -> std::result::Result<ModeSpec, String> {
    match s {
        "fixed" => Ok(ModeSpec::Fixed),
        "dynamic" => Ok(ModeSpec::Dynamic),
        other => Err(format!(
            "unknown mode `{other}` (expected fixed or dynamic)"
        )),
    }
}

impl RunArgs {
    pub fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => load_config(path)?,
            None => ExperimentConfig::default(),
        };
        if let Ok(value) = std::env::var("VDE_SEED") {
            cfg.seeds.base = value
                .parse()
                .with_context(|| format!("VDE_SEED must be an unsigned integer, got `{value}`"))?;
        }
        if let Some(v) = &self.out_dir {
            cfg.out_dir = v.clone();
        }
        if let Some(v) = self.t_steps {
            cfg.t_steps = v;
            // An explicit grid from the file no longer matches a new T.
            if cfg.grid_points.as_ref().is_some_and(|p| p.len() != v) {
                cfg.grid_points = None;
            }
        }
        if let Some(v) = self.warmup {
            cfg.warmup = v;
        }
        if !self.intervals.is_empty() {
            cfg.intervals = self.intervals.clone();
        }
        if !self.baseline_steps.is_empty() {
            cfg.baseline_steps = self.baseline_steps.clone();
        }
        if let Some(v) = self.calls_per_step {
            cfg.calls_per_step = v;
        }
        if let Some(v) = self.seed_count {
            cfg.seeds.count = v;
        }
        if let Some(v) = self.seed_base {
            cfg.seeds.base = v;
        }
        if let Some(v) = self.mode {
            cfg.mode = v;
        }
        if let Some(v) = self.workers {
            cfg.workers = Some(v);
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
