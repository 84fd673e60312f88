//! `vde trace`: record per-step component dynamics of the full sampler and
//! the aggregate two-step extrapolation errors.

use std::path::Path;

use anyhow::{Context, Result};

use vde_core::record_component_dynamics;

use crate::commands::RunArgs;
use crate::config::write_run_file;
use crate::formats::dynamics_csv;

pub fn run(args: &RunArgs) -> Result<usize> {
    let cfg = args.resolve()?;
    let out_dir = Path::new(&cfg.out_dir);
    write_run_file(&cfg, out_dir)?;

    let field = cfg.build_field()?;
    let grid = cfg.time_grid()?;
    // Errors are aggregated after the warm-up, where estimation would run.
    let skip = cfg.warmup;
    let mut failures = 0usize;

    for seed in cfg.seed_list() {
        let x0 = cfg.initial_latent(seed)?;
        match record_component_dynamics(field.as_ref(), &x0, &grid) {
            Ok(dynamics) => {
                let aggregate = dynamics.aggregate(skip);
                let path = out_dir.join(format!("dynamics_seed{seed}.csv"));
                std::fs::write(&path, dynamics_csv(&dynamics, aggregate.as_ref(), skip))
                    .with_context(|| format!("writing {}", path.display()))?;
                match aggregate {
                    Some(agg) => println!(
                        "seed {seed}: alpha err {:.2}% beta err {:.2}% mean cos {:.6} (steps >= {skip})",
                        agg.alpha_err_pct, agg.beta_err_pct, agg.mean_u_cos
                    ),
                    None => println!("seed {seed}: no measurable steps past {skip}"),
                }
            }
            Err(e) => {
                eprintln!("seed {seed}: FAILED ({e})");
                failures += 1;
            }
        }
    }

    Ok(failures)
}
