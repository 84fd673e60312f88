//! On-disk formats: latent/sample/weight JSON and the CSV tables.
//!
//! Everything here is deterministic: struct field order fixes JSON key
//! order, floats print in shortest round-trip form, rows end with `\n`, and
//! CSV headers are mandatory. Two runs with the same resolved config produce
//! byte-identical files.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use vde_core::{
    Activation, ComponentDynamics, DynamicsAggregate, Latent, Layer, MlpField, RetentionReport,
    SampleResult, Shape, StepMode, TimeFeatures, TrajectoryTrace,
};

// ---------------------------------------------------------------------------
// Latent + sample JSON

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LatentJson {
    /// `[d]` for flat latents, `[h, w]` for grids.
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl LatentJson {
    pub fn from_latent(latent: &Latent) -> Self {
        let shape = match latent.shape() {
            Shape::Flat(d) => vec![d],
            Shape::Grid { rows, cols } => vec![rows, cols],
        };
        Self {
            shape,
            data: latent.data().to_vec(),
        }
    }

    pub fn into_latent(self) -> Result<Latent> {
        let shape = match self.shape.as_slice() {
            [d] => Shape::Flat(*d),
            [h, w] => Shape::Grid { rows: *h, cols: *w },
            other => bail!(
                "latent `shape` must be [d] or [h, w], got {} entries",
                other.len()
            ),
        };
        Latent::with_shape(self.data, shape).map_err(|e| anyhow::anyhow!("invalid latent: {e}"))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleJson {
    pub nfe: usize,
    pub latent: LatentJson,
}

pub fn write_sample_json(path: &Path, result: &SampleResult) -> Result<()> {
    let doc = SampleJson {
        nfe: result.nfe,
        latent: LatentJson::from_latent(&result.latent),
    };
    write_pretty_json(path, &doc)
}

pub fn read_sample_json(path: &Path) -> Result<(usize, Latent)> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let doc: SampleJson =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    Ok((doc.nfe, doc.latent.into_latent()?))
}

pub fn write_pretty_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

// ---------------------------------------------------------------------------
// Weight files

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeightsFile {
    pub layers: Vec<WeightsLayer>,
    /// `tanh`, `gelu`, or `relu`.
    pub activation: String,
    pub time_features: TimeFeaturesJson,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeightsLayer {
    #[serde(rename = "in")]
    pub in_dim: usize,
    #[serde(rename = "out")]
    pub out_dim: usize,
    /// Row-major `out x in`.
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TimeFeaturesJson {
    pub fourier_pairs: usize,
    pub include_raw: bool,
}

pub fn write_weights(path: &Path, field: &MlpField) -> Result<()> {
    let doc = WeightsFile {
        layers: field
            .layers()
            .iter()
            .map(|l| WeightsLayer {
                in_dim: l.in_dim,
                out_dim: l.out_dim,
                w: l.w.clone(),
                b: l.b.clone(),
            })
            .collect(),
        activation: field.activation().name().to_string(),
        time_features: TimeFeaturesJson {
            fourier_pairs: field.time_features().fourier_pairs,
            include_raw: field.time_features().include_raw,
        },
    };
    write_pretty_json(path, &doc)
}

pub fn load_weights(path: &Path) -> Result<MlpField> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading weights {}", path.display()))?;
    let doc: WeightsFile =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let layers = doc
        .layers
        .into_iter()
        .map(|l| Layer::new(l.in_dim, l.out_dim, l.w, l.b))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| anyhow::anyhow!("invalid layer in {}: {e}", path.display()))?;
    let activation = Activation::parse(&doc.activation)
        .map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
    MlpField::new(
        layers,
        activation,
        TimeFeatures {
            fourier_pairs: doc.time_features.fourier_pairs,
            include_raw: doc.time_features.include_raw,
        },
    )
    .map_err(|e| anyhow::anyhow!("invalid network in {}: {e}", path.display()))
}

// ---------------------------------------------------------------------------
// CSV helpers

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn mode_str(mode: StepMode) -> &'static str {
    match mode {
        StepMode::Full => "full",
        StepMode::Estimated => "estimated",
    }
}

/// Per-step trajectory trace.
pub fn trace_csv(trace: &TrajectoryTrace) -> String {
    let mut out = String::from("step,t,mode,alpha,beta,u_cos,x_norm,v_norm,nfe\n");
    for row in &trace.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            row.step,
            row.t,
            mode_str(row.mode),
            fmt_opt(row.alpha),
            fmt_opt(row.beta),
            fmt_opt(row.u_cos),
            row.x_norm,
            row.v_norm,
            row.nfe
        );
    }
    out
}

/// Component-dynamics trace with the aggregate footer.
pub fn dynamics_csv(
    dynamics: &ComponentDynamics,
    aggregate: Option<&DynamicsAggregate>,
    skip: usize,
) -> String {
    let mut out = String::from("step,t,alpha,beta,u_cos\n");
    for row in &dynamics.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            row.step,
            row.t,
            fmt_opt(row.alpha),
            fmt_opt(row.beta),
            fmt_opt(row.u_cos)
        );
    }
    match aggregate {
        Some(agg) => {
            let _ = writeln!(
                out,
                "# aggregate skip={} rows_used={} alpha_err_pct={} beta_err_pct={} mean_u_cos={}",
                skip, agg.rows_used, agg.alpha_err_pct, agg.beta_err_pct, agg.mean_u_cos
            );
        }
        None => {
            let _ = writeln!(out, "# aggregate skip={skip} rows_used=0");
        }
    }
    out
}

/// One `bench` table row: a retention report or a recorded failure.
#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub method: String,
    pub n: usize,
    /// Seed as a string so mean rows can carry `"mean"`.
    pub seed: String,
    pub status: String,
    pub mse: Option<f64>,
    pub rel_l2: Option<f64>,
    pub cosine: Option<f64>,
    pub psnr: Option<f64>,
    pub ssim: Option<f64>,
    pub nfe: Option<usize>,
    pub nfe_ratio: Option<f64>,
}

impl BenchRow {
    pub fn ok(method: &str, n: usize, seed: u64, nfe: usize, report: &RetentionReport) -> Self {
        Self {
            method: method.to_string(),
            n,
            seed: seed.to_string(),
            status: "ok".to_string(),
            mse: Some(report.mse),
            rel_l2: Some(report.rel_l2),
            cosine: Some(report.cosine),
            psnr: report.psnr,
            ssim: report.ssim,
            nfe: Some(nfe),
            nfe_ratio: Some(report.nfe_ratio),
        }
    }

    pub fn failed(method: &str, n: usize, seed: u64, reason: &str) -> Self {
        Self {
            method: method.to_string(),
            n,
            seed: seed.to_string(),
            status: format!("failed: {reason}"),
            mse: None,
            rel_l2: None,
            cosine: None,
            psnr: None,
            ssim: None,
            nfe: None,
            nfe_ratio: None,
        }
    }
}

pub const BENCH_CSV_HEADER: &str = "method,n,seed,status,mse,rel_l2,cosine,psnr,ssim,nfe,nfe_ratio";

pub fn bench_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from(BENCH_CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.method,
            r.n,
            r.seed,
            r.status,
            fmt_opt(r.mse),
            fmt_opt(r.rel_l2),
            fmt_opt(r.cosine),
            fmt_opt(r.psnr),
            fmt_opt(r.ssim),
            r.nfe.map(|v| v.to_string()).unwrap_or_default(),
            fmt_opt(r.nfe_ratio),
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn latent_json_round_trip() {
        let l = Latent::grid(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.5, -0.25]).unwrap();
        let doc = LatentJson::from_latent(&l);
        assert_eq!(doc.shape, vec![2, 3]);
        let back = doc.into_latent().unwrap();
        assert_eq!(back, l);
    }

    #[test]
    fn latent_json_shape_checked() {
        let doc = LatentJson {
            shape: vec![2, 2],
            data: vec![1.0, 2.0, 3.0],
        };
        assert!(doc.into_latent().is_err());
    }

    #[test]
    fn option_cells_are_empty() {
        assert_eq!(fmt_opt(None), "");
        assert_eq!(fmt_opt(Some(0.5)), "0.5");
    }
}
