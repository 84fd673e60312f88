//! Experiment configuration: file schema, flag/env overrides, `run.json`.
//!
//! Resolution order (later wins): built-in defaults, config file, the
//! `VDE_SEED` environment variable (base seed only), command-line flags.
//! Every run writes a `run.json` echoing the fully resolved config plus the
//! artifact version; feeding that file back through `--config` reproduces
//! the run byte-for-byte.

use std::path::Path;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use vde_core::{
    ControlledField, GaussianAnalyticField, Latent, PiecewisePoly, Shape, StablePhaseConfig,
    TimeGrid, VdeMode, VelocityField,
};

/// A scalar that broadcasts, or an explicit per-axis vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VectorSpec {
    Fill(f64),
    Explicit(Vec<f64>),
}

impl VectorSpec {
    pub fn materialize(&self, dim: usize, what: &str) -> Result<Vec<f64>> {
        match self {
            VectorSpec::Fill(v) => Ok(vec![*v; dim]),
            VectorSpec::Explicit(v) => {
                if v.len() != dim {
                    bail!(
                        "{what} has {} entries but the latent dimension is {dim}",
                        v.len()
                    );
                }
                Ok(v.clone())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolySpec {
    #[serde(default)]
    pub breaks: Vec<f64>,
    pub pieces: Vec<Vec<f64>>,
}

impl PolySpec {
    pub fn build(&self) -> Result<PiecewisePoly> {
        PiecewisePoly::new(self.breaks.clone(), self.pieces.clone())
            .map_err(|e| anyhow::anyhow!("invalid piecewise polynomial: {e}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FieldSpec {
    Gaussian {
        mu1: VectorSpec,
        s1: f64,
    },
    Controlled {
        a: PolySpec,
        b: PolySpec,
        w: VectorSpec,
    },
    Mlp {
        path: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedSpec {
    pub count: usize,
    pub base: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeSpec {
    Fixed,
    Dynamic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StablePhaseSpec {
    pub epsilon: f64,
    pub delta: f64,
}

impl Default for StablePhaseSpec {
    fn default() -> Self {
        Self {
            epsilon: 0.02,
            delta: 0.99,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub field: FieldSpec,
    /// Total integration steps `T`.
    pub t_steps: usize,
    /// Warm-up full passes `W`.
    pub warmup: usize,
    /// Anchor intervals to run; one entry for `sample`, a sweep for `bench`.
    pub intervals: Vec<usize>,
    /// Naive step-reduction baselines for `bench`: full runs at these step
    /// counts, compared against the same-seed `t_steps` baseline.
    #[serde(default)]
    pub baseline_steps: Vec<usize>,
    pub calls_per_step: usize,
    pub seeds: SeedSpec,
    /// `[d]` for flat latents or `[h, w]` for grids.
    pub shape: Vec<usize>,
    pub mode: ModeSpec,
    #[serde(default)]
    pub stable_phase: StablePhaseSpec,
    pub out_dir: String,
    /// Worker threads for trajectory-level parallelism; default: all cores.
    #[serde(default)]
    pub workers: Option<usize>,
    /// Explicit grid times; default: uniform `t_i = i / T`.
    #[serde(default)]
    pub grid_points: Option<Vec<f64>>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            field: FieldSpec::Gaussian {
                mu1: VectorSpec::Fill(0.75),
                s1: 1.0,
            },
            t_steps: 50,
            warmup: 7,
            intervals: vec![2],
            baseline_steps: Vec::new(),
            calls_per_step: 1,
            seeds: SeedSpec {
                count: 10,
                base: 1000,
            },
            shape: vec![16],
            mode: ModeSpec::Fixed,
            stable_phase: StablePhaseSpec::default(),
            out_dir: "out".to_string(),
            workers: None,
            grid_points: None,
        }
    }
}

/// Wrapper written as `run.json`. A run file is accepted anywhere a config
/// file is, so `--config out/run.json` replays a run exactly.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunFile {
    pub version: String,
    pub config: ExperimentConfig,
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    if value.get("config").is_some() && value.get("version").is_some() {
        let run: RunFile = serde_json::from_value(value)
            .with_context(|| format!("parsing run file {}", path.display()))?;
        Ok(run.config)
    } else {
        serde_json::from_value(value).with_context(|| format!("parsing config {}", path.display()))
    }
}

pub fn write_run_file(config: &ExperimentConfig, out_dir: &Path) -> Result<()> {
    let run = RunFile {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
    };
    let mut text = serde_json::to_string_pretty(&run)?;
    text.push('\n');
    std::fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    std::fs::write(out_dir.join("run.json"), text).context("writing run.json")?;
    Ok(())
}

impl ExperimentConfig {
    pub fn latent_dim(&self) -> Result<usize> {
        match self.shape.as_slice() {
            [d] => Ok(*d),
            [h, w] => Ok(h * w),
            other => bail!(
                "config field `shape` must be [d] or [h, w], got {} entries",
                other.len()
            ),
        }
    }

    pub fn latent_shape(&self) -> Result<Shape> {
        match self.shape.as_slice() {
            [d] => Ok(Shape::Flat(*d)),
            [h, w] => Ok(Shape::Grid { rows: *h, cols: *w }),
            other => bail!(
                "config field `shape` must be [d] or [h, w], got {} entries",
                other.len()
            ),
        }
    }

    pub fn time_grid(&self) -> Result<TimeGrid> {
        match &self.grid_points {
            Some(points) => {
                if points.len() != self.t_steps {
                    bail!(
                        "config field `grid_points` has {} entries but `t_steps` is {}",
                        points.len(),
                        self.t_steps
                    );
                }
                TimeGrid::from_points(points.clone())
                    .map_err(|e| anyhow::anyhow!("config field `grid_points`: {e}"))
            }
            None => TimeGrid::uniform(self.t_steps)
                .map_err(|e| anyhow::anyhow!("config field `t_steps`: {e}")),
        }
    }

    pub fn vde_mode(&self) -> VdeMode {
        match self.mode {
            ModeSpec::Fixed => VdeMode::FixedWarmup,
            ModeSpec::Dynamic => VdeMode::Dynamic(StablePhaseConfig {
                epsilon: self.stable_phase.epsilon,
                delta: self.stable_phase.delta,
            }),
        }
    }

    pub fn build_field(&self) -> Result<Arc<dyn VelocityField>> {
        let dim = self.latent_dim()?;
        match &self.field {
            FieldSpec::Gaussian { mu1, s1 } => {
                let field = GaussianAnalyticField::new(mu1.materialize(dim, "field.mu1")?, *s1)
                    .map_err(|e| anyhow::anyhow!("config field `field`: {e}"))?;
                Ok(Arc::new(field))
            }
            FieldSpec::Controlled { a, b, w } => {
                let field = ControlledField::new(
                    a.build().context("config field `field.a`")?,
                    b.build().context("config field `field.b`")?,
                    w.materialize(dim, "field.w")?,
                )
                .map_err(|e| anyhow::anyhow!("config field `field`: {e}"))?;
                Ok(Arc::new(field))
            }
            FieldSpec::Mlp { path } => {
                let field = crate::formats::load_weights(Path::new(path))?;
                if field.dim() != dim {
                    bail!(
                        "weight file {} has dimension {} but config `shape` implies {}",
                        path,
                        field.dim(),
                        dim
                    );
                }
                Ok(Arc::new(field))
            }
        }
    }

    /// Semantic checks beyond what serde enforces; run before any work.
    pub fn validate(&self) -> Result<()> {
        self.latent_dim()?;
        self.time_grid()?;
        if self.intervals.is_empty() {
            bail!("config field `intervals` must list at least one interval");
        }
        for &n in &self.intervals {
            vde_core::plan_schedule(self.t_steps, self.warmup, n, self.calls_per_step)
                .map_err(|e| anyhow::anyhow!("config fields (t_steps, warmup, intervals): {e}"))?;
        }
        for &t in &self.baseline_steps {
            if t == 0 {
                bail!("config field `baseline_steps` entries must be at least 1");
            }
            if self.grid_points.is_some() {
                bail!("config field `baseline_steps` requires the uniform grid (no grid_points)");
            }
        }
        if self.seeds.count == 0 {
            bail!("config field `seeds.count` must be at least 1");
        }
        if let Some(0) = self.workers {
            bail!("config field `workers` must be at least 1");
        }
        StablePhaseConfig {
            epsilon: self.stable_phase.epsilon,
            delta: self.stable_phase.delta,
        }
        .validate()
        .map_err(|e| anyhow::anyhow!("config field `stable_phase`: {e}"))?;
        Ok(())
    }

    /// Trajectory seeds: `base, base+1, ...`.
    pub fn seed_list(&self) -> Vec<u64> {
        (0..self.seeds.count as u64)
            .map(|i| self.seeds.base.wrapping_add(i))
            .collect()
    }

    /// Draw the seeded initial latent for one trajectory.
    pub fn initial_latent(&self, seed: u64) -> Result<Latent> {
        use rand::SeedableRng;
        let shape = self.latent_shape()?;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let data = vde_core::dataset::standard_normal(&mut rng, shape.len());
        Latent::with_shape(data, shape).map_err(|e| anyhow::anyhow!("drawing x0: {e}"))
    }

    pub fn worker_count(&self) -> usize {
        self.workers.unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        })
    }
}
