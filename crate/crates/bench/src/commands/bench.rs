//! `vde bench`: sweep anchor intervals (and optional naive step-reduction
//! baselines) against same-seed full runs and aggregate retention metrics.

use std::path::Path;

use anyhow::{Context, Result};
use rayon::prelude::*;

use vde_core::{
    plan_schedule, retention_report, sample_full, sample_vde, Latent, SampleResult, TimeGrid,
};

use crate::commands::RunArgs;
use crate::config::{write_run_file, ExperimentConfig};
use crate::formats::{bench_csv, write_pretty_json, BenchRow};

pub fn run(args: &RunArgs) -> Result<usize> {
    let cfg = args.resolve()?;
    let out_dir = Path::new(&cfg.out_dir);
    write_run_file(&cfg, out_dir)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.worker_count())
        .build()
        .context("building worker pool")?;
    let (rows, means) = pool.install(|| run_sweep(&cfg))?;

    let failures = rows.iter().filter(|r| r.status != "ok").count();
    let all_rows: Vec<BenchRow> = rows
        .iter()
        .cloned()
        .chain(means.iter().map(|m| m.row.clone()))
        .collect();
    let csv = bench_csv(&all_rows);
    std::fs::write(out_dir.join("bench.csv"), &csv).context("writing bench.csv")?;
    write_pretty_json(
        &out_dir.join("bench.json"),
        &serde_json::json!({ "rows": rows, "means": means }),
    )?;

    for mean in &means {
        println!(
            "{}: mean rel_l2 {} nfe {} (ratio {}) over {} ok seeds",
            mean.method,
            mean.rel_l2.map(|v| format!("{v:.6}")).unwrap_or_default(),
            mean.nfe.map(|v| v.to_string()).unwrap_or_default(),
            mean.nfe_ratio
                .map(|v| format!("{v:.3}"))
                .unwrap_or_default(),
            mean.seed_count,
        );
    }
    if failures > 0 {
        eprintln!("{failures} trajectories failed; see bench.csv status column");
    }
    Ok(failures)
}

/// One mean row per method plus how many seeds contributed.
#[derive(Debug, Clone, serde::Serialize)]
pub struct MeanRow {
    #[serde(flatten)]
    pub row: BenchRow,
    pub seed_count: usize,
}

impl std::ops::Deref for MeanRow {
    type Target = BenchRow;
    fn deref(&self) -> &BenchRow {
        &self.row
    }
}

/// A benched method: estimation at interval `n`, or a plain full run at a
/// reduced step count.
#[derive(Debug, Clone, Copy)]
enum Method {
    Vde { interval: usize },
    Reduced { t_steps: usize },
}

impl Method {
    fn name(self) -> String {
        match self {
            Method::Vde { interval } => format!("vde_n{interval}"),
            Method::Reduced { t_steps } => format!("full_t{t_steps}"),
        }
    }

    /// Value for the CSV `n` column; reduced-step rows carry 0.
    fn n_column(self) -> usize {
        match self {
            Method::Vde { interval } => interval,
            Method::Reduced { .. } => 0,
        }
    }

    fn sample(
        self,
        cfg: &ExperimentConfig,
        field: &dyn vde_core::VelocityField,
        grid: &TimeGrid,
        x0: &Latent,
    ) -> Result<SampleResult, vde_core::Error> {
        match self {
            Method::Vde { interval } => {
                let schedule =
                    plan_schedule(cfg.t_steps, cfg.warmup, interval, cfg.calls_per_step)?;
                sample_vde(field, x0, grid, &schedule, cfg.vde_mode())
            }
            Method::Reduced { t_steps } => {
                let reduced = TimeGrid::uniform(t_steps)?;
                sample_full(field, x0, &reduced, cfg.calls_per_step)
            }
        }
    }
}

/// Runs the sweep inside the caller's rayon pool. Baselines are computed
/// once per seed and shared across methods; rows come back in
/// (method, seed) order regardless of scheduling.
fn run_sweep(cfg: &ExperimentConfig) -> Result<(Vec<BenchRow>, Vec<MeanRow>)> {
    let field = cfg.build_field()?;
    let grid = cfg.time_grid()?;
    let seeds = cfg.seed_list();

    let baselines: Vec<Result<SampleResult, vde_core::Error>> = seeds
        .par_iter()
        .map(|&seed| {
            let x0 = cfg.initial_latent(seed).expect("config validated");
            sample_full(field.as_ref(), &x0, &grid, cfg.calls_per_step)
        })
        .collect();

    let methods: Vec<Method> = cfg
        .intervals
        .iter()
        .map(|&interval| Method::Vde { interval })
        .chain(
            cfg.baseline_steps
                .iter()
                .map(|&t_steps| Method::Reduced { t_steps }),
        )
        .collect();
    let jobs: Vec<(Method, usize)> = methods
        .iter()
        .flat_map(|&m| (0..seeds.len()).map(move |si| (m, si)))
        .collect();

    let rows: Vec<BenchRow> = jobs
        .par_iter()
        .map(|&(method, si)| {
            let seed = seeds[si];
            let (name, n) = (method.name(), method.n_column());
            let baseline = match &baselines[si] {
                Ok(b) => b,
                Err(e) => return BenchRow::failed(&name, n, seed, &format!("baseline: {e}")),
            };
            let x0 = cfg.initial_latent(seed).expect("config validated");
            match method.sample(cfg, field.as_ref(), &grid, &x0) {
                Ok(result) => match retention_report(
                    &result.latent,
                    &baseline.latent,
                    result.nfe,
                    baseline.nfe,
                ) {
                    Ok(report) => BenchRow::ok(&name, n, seed, result.nfe, &report),
                    Err(e) => BenchRow::failed(&name, n, seed, &e.to_string()),
                },
                Err(e) => BenchRow::failed(&name, n, seed, &e.to_string()),
            }
        })
        .collect();

    let means = methods.iter().map(|&m| mean_row(m, &rows)).collect();
    Ok((rows, means))
}

fn mean_of(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for v in values.flatten() {
        sum += v;
        count += 1;
    }
    (count > 0).then(|| sum / count as f64)
}

fn mean_row(method: Method, rows: &[BenchRow]) -> MeanRow {
    let name = method.name();
    let ok: Vec<&BenchRow> = rows
        .iter()
        .filter(|r| r.method == name && r.status == "ok")
        .collect();
    let row = BenchRow {
        method: name,
        n: method.n_column(),
        seed: "mean".to_string(),
        status: if ok.is_empty() { "no data" } else { "ok" }.to_string(),
        mse: mean_of(ok.iter().map(|r| r.mse)),
        rel_l2: mean_of(ok.iter().map(|r| r.rel_l2)),
        cosine: mean_of(ok.iter().map(|r| r.cosine)),
        psnr: mean_of(ok.iter().map(|r| r.psnr)),
        ssim: mean_of(ok.iter().map(|r| r.ssim)),
        nfe: ok.first().and_then(|r| r.nfe),
        nfe_ratio: mean_of(ok.iter().map(|r| r.nfe_ratio)),
    };
    MeanRow {
        row,
        seed_count: ok.len(),
    }
}
