//! `vde nfe`: print a schedule's plan string and cost without running it.

use anyhow::Result;
use clap::Args;
use serde_json::json;

use vde_core::plan_schedule;

#[derive(Debug, Args)]
pub struct NfeArgs {
    /// Total integration steps T
    #[arg(long, default_value_t = 50)]
    pub t_steps: usize,

    /// Warm-up full passes W
    #[arg(long, default_value_t = 7)]
    pub warmup: usize,

    /// Anchor interval n
    #[arg(long, default_value_t = 2)]
    pub interval: usize,

    /// NFE multiplier per full step
    #[arg(long, default_value_t = 1)]
    pub calls_per_step: usize,

    /// Emit JSON instead of the human-readable lines
    #[arg(long)]
    pub json: bool,
}

pub fn run(args: &NfeArgs) -> Result<()> {
    let schedule = plan_schedule(
        args.t_steps,
        args.warmup,
        args.interval,
        args.calls_per_step,
    )?;
    if args.json {
        let doc = json!({
            "t_steps": schedule.step_count,
            "warmup": schedule.warmup,
            "interval": schedule.interval,
            "calls_per_step": schedule.calls_per_step,
            "full_steps": schedule.full_count(),
            "nfe": schedule.nfe(),
            "plan": schedule.plan_string(),
        });
        println!("{}", serde_json::to_string_pretty(&doc)?);
    } else {
        println!("plan: {}", schedule.plan_string());
        println!(
            "full steps: {} of {}",
            schedule.full_count(),
            schedule.step_count
        );
        println!("NFE {}", schedule.nfe());
    }
    Ok(())
}
