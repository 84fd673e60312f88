//! `vde sample`: run the full baseline and the accelerated sampler for each
//! seed, dumping sample JSONs and per-step trace CSVs.

use std::path::Path;

use anyhow::{Context, Result};

use vde_core::{plan_schedule, sample_full, sample_vde};

use crate::commands::RunArgs;
use crate::config::write_run_file;
use crate::formats::{trace_csv, write_sample_json};

/// Returns the number of failed trajectories.
pub fn run(args: &RunArgs) -> Result<usize> {
    let cfg = args.resolve()?;
    let out_dir = Path::new(&cfg.out_dir);
    write_run_file(&cfg, out_dir)?;

    let field = cfg.build_field()?;
    let grid = cfg.time_grid()?;
    let mode = cfg.vde_mode();
    let mut failures = 0usize;

    for seed in cfg.seed_list() {
        let x0 = cfg.initial_latent(seed)?;

        match sample_full(field.as_ref(), &x0, &grid, cfg.calls_per_step) {
            Ok(result) => {
                write_sample_json(
                    &out_dir.join(format!("sample_full_seed{seed}.json")),
                    &result,
                )?;
                write_csv(
                    &out_dir.join(format!("trace_full_seed{seed}.csv")),
                    &trace_csv(&result.trace),
                )?;
                println!(
                    "seed {seed} full: NFE {} wall {:.6}s",
                    result.nfe, result.trace.wall_time_secs
                );
            }
            Err(e) => {
                eprintln!("seed {seed} full: FAILED ({e})");
                failures += 1;
            }
        }

        for &n in &cfg.intervals {
            let schedule = plan_schedule(cfg.t_steps, cfg.warmup, n, cfg.calls_per_step)?;
            match sample_vde(field.as_ref(), &x0, &grid, &schedule, mode) {
                Ok(result) => {
                    write_sample_json(
                        &out_dir.join(format!("sample_vde_n{n}_seed{seed}.json")),
                        &result,
                    )?;
                    write_csv(
                        &out_dir.join(format!("trace_vde_n{n}_seed{seed}.csv")),
                        &trace_csv(&result.trace),
                    )?;
                    println!(
                        "seed {seed} vde n={n}: NFE {} wall {:.6}s",
                        result.nfe, result.trace.wall_time_secs
                    );
                }
                Err(e) => {
                    eprintln!("seed {seed} vde n={n}: FAILED ({e})");
                    failures += 1;
                }
            }
        }
    }

    Ok(failures)
}

fn write_csv(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}
