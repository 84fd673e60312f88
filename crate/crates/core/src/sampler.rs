//! Euler integration of `dx/dt = v(x, t)`: the full baseline sampler, the
//! accelerated sampler, and per-step trace recording.
//!
//! Both samplers share the update `x_{i+1} = x_i + dt_i * v_i` on the same
//! grid; they differ only in where `v_i` comes from. Full steps call the
//! field and refresh the anchor history; estimated steps synthesize `v_i`
//! from the history and the *current* `x_i` — never from a cached latent.

use alloc::vec::Vec;

use crate::decompose::{decompose_with_fallback, Decomposition};
use crate::error::Error;
use crate::estimator::{
    extrapolate_coefficients, guarded_rel_err, stable_at, AnchorHistory, StablePhaseConfig,
};
use crate::field::VelocityField;
use crate::latent::{axpy, dot_slice, norm, Latent, TimeGrid, Velocity};
use crate::schedule::{SamplingSchedule, StepMode};
use crate::Result;

/// One record per integration step.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub step: usize,
    pub t: f64,
    pub mode: StepMode,
    /// True coefficient on full rows, extrapolated on estimated rows; absent
    /// when the decomposition was undefined (zero-norm latent).
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    /// Cosine between this step's orthogonal direction and the previous
    /// step's; absent on the first row or next to an undefined decomposition.
    pub u_cos: Option<f64>,
    pub x_norm: f64,
    pub v_norm: f64,
    /// Cumulative NFE (calls_per_step times full passes so far).
    pub nfe: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryTrace {
    pub rows: Vec<TraceRow>,
    /// Wall time of the sampling loop; 0 in `no_std` builds.
    pub wall_time_secs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleResult {
    /// State after the final step, i.e. the estimate of the data sample.
    pub latent: Latent,
    pub trace: TrajectoryTrace,
    pub nfe: usize,
}

/// How the accelerated sampler decides when estimation starts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VdeMode {
    /// Follow the schedule plan as laid out (fixed warm-up).
    FixedWarmup,
    /// Run full steps until the stable-phase criterion fires on the last
    /// three decompositions, then switch to the schedule's cycle rule.
    Dynamic(StablePhaseConfig),
}

struct Clock {
    #[cfg(feature = "std")]
    start: std::time::Instant,
}

impl Clock {
    fn start() -> Self {
        Self {
            #[cfg(feature = "std")]
            start: std::time::Instant::now(),
        }
    }

    fn elapsed_secs(&self) -> f64 {
        #[cfg(feature = "std")]
        {
            self.start.elapsed().as_secs_f64()
        }
        #[cfg(not(feature = "std"))]
        {
            0.0
        }
    }
}

fn euler_step(x: &Latent, v: &Velocity, dt: f64, step: usize) -> Result<Latent> {
    let next = axpy(dt, v, x)?;
    if !next.data().iter().all(|c| c.is_finite()) {
        return Err(Error::NonFiniteState { step });
    }
    Ok(next)
}

fn cos_or_none(prev: &Option<Vec<f64>>, cur: &Option<Vec<f64>>) -> Option<f64> {
    match (prev, cur) {
        (Some(p), Some(c)) if p.len() == c.len() => Some(dot_slice(p, c)),
        _ => None,
    }
}

/// Full-step baseline: one field call per step. Decompositions are recorded
/// at every step (they cost a few vector ops, nothing next to a model call)
/// so component-dynamics traces need no second pass. A transiently zero-norm
/// state leaves that row's decomposition fields empty rather than failing.
pub fn sample_full(
    field: &dyn VelocityField,
    x0: &Latent,
    grid: &TimeGrid,
    calls_per_step: usize,
) -> Result<SampleResult> {
    if calls_per_step < 1 {
        return Err(Error::InvalidSchedule("calls_per_step must be >= 1"));
    }
    let clock = Clock::start();
    let step_count = grid.len();
    let mut rows = Vec::with_capacity(step_count);
    let mut x = x0.clone();
    let mut prev_u: Option<Vec<f64>> = None;
    let mut full_passes = 0usize;

    for step in 0..step_count {
        let t = grid.time(step);
        let v = field.evaluate(&x, None, t)?;
        full_passes += 1;

        // Tracing is best-effort: a zero-norm state has no decomposition and
        // a norm overflowing to inf is about to abort at the Euler update.
        let decomp = match crate::decompose::decompose(&v, &x, t) {
            Ok(d) => Some(d),
            Err(Error::ZeroLatentNorm) | Err(Error::NonFiniteInput) => None,
            Err(e) => return Err(e),
        };
        let cur_u = decomp.as_ref().map(|d| d.u.clone());
        rows.push(TraceRow {
            step,
            t,
            mode: StepMode::Full,
            alpha: decomp.as_ref().map(|d| d.alpha),
            beta: decomp.as_ref().map(|d| d.beta),
            u_cos: cos_or_none(&prev_u, &cur_u),
            x_norm: norm(&x),
            v_norm: norm(&v),
            nfe: calls_per_step * full_passes,
        });
        prev_u = cur_u;

        x = euler_step(&x, &v, grid.dt(step), step)?;
    }

    Ok(SampleResult {
        latent: x,
        nfe: calls_per_step * full_passes,
        trace: TrajectoryTrace {
            rows,
            wall_time_secs: clock.elapsed_secs(),
        },
    })
}

/// Accelerated sampler: full steps anchor, estimated steps synthesize.
///
/// The schedule must cover the grid exactly. In [`VdeMode::FixedWarmup`] the
/// plan is followed as-is; in [`VdeMode::Dynamic`] every step runs full until
/// the stable-phase criterion fires on the three most recent decompositions,
/// after which the cycle rule (`interval` estimated steps per full pass,
/// final step forced full) takes over.
pub fn sample_vde(
    field: &dyn VelocityField,
    x0: &Latent,
    grid: &TimeGrid,
    schedule: &SamplingSchedule,
    mode: VdeMode,
) -> Result<SampleResult> {
    let step_count = grid.len();
    if schedule.step_count != step_count || schedule.plan.len() != step_count {
        return Err(Error::InvalidSchedule("schedule does not match the grid"));
    }
    if schedule.calls_per_step < 1 {
        return Err(Error::InvalidSchedule("calls_per_step must be >= 1"));
    }
    if let VdeMode::Dynamic(cfg) = &mode {
        cfg.validate()?;
    }

    let clock = Clock::start();
    let mut rows = Vec::with_capacity(step_count);
    let mut x = x0.clone();
    let mut history = AnchorHistory::new();
    let mut prev_u: Option<Vec<f64>> = None;
    let mut full_passes = 0usize;

    // Dynamic-mode state: all decompositions so far (consecutive full steps)
    // and the step after which estimation is allowed.
    let mut dynamic_trace: Vec<Decomposition> = Vec::new();
    let mut stable_after: Option<usize> = None;

    for step in 0..step_count {
        let t = grid.time(step);
        let step_mode = match &mode {
            VdeMode::FixedWarmup => schedule.plan[step],
            VdeMode::Dynamic(_) => match stable_after {
                None => StepMode::Full,
                Some(boundary) => {
                    if step == step_count - 1 {
                        StepMode::Full
                    } else {
                        // Cycle rule restarted right after the detection step.
                        let j = step - boundary - 1;
                        if (j + 1) % (schedule.interval + 1) == 0 {
                            StepMode::Full
                        } else {
                            StepMode::Estimated
                        }
                    }
                }
            },
        };

        let (v, alpha, beta, cur_u) = match step_mode {
            StepMode::Full => {
                let v = field.evaluate(&x, None, t)?;
                full_passes += 1;
                let fallback = history.latest().map(|a| a.decomposition.u.clone());
                let d = decompose_with_fallback(&v, &x, t, fallback.as_deref())?;
                history.push(step, d.clone());
                if let VdeMode::Dynamic(cfg) = &mode {
                    dynamic_trace.push(d.clone());
                    if stable_after.is_none() && dynamic_trace.len() >= 3 {
                        let k = dynamic_trace.len() - 1;
                        if stable_at(
                            &dynamic_trace[k - 2],
                            &dynamic_trace[k - 1],
                            &dynamic_trace[k],
                            cfg,
                        )? {
                            stable_after = Some(step);
                        }
                    }
                }
                (v, Some(d.alpha), Some(d.beta), Some(d.u))
            }
            StepMode::Estimated => {
                let (alpha_hat, beta_hat) = extrapolate_coefficients(&history, t)?;
                let v = crate::estimator::estimate_velocity(&x, t, &history)?;
                let u_hat = history
                    .latest()
                    .map(|a| a.decomposition.u.clone())
                    .ok_or(Error::InsufficientHistory)?;
                (v, Some(alpha_hat), Some(beta_hat), Some(u_hat))
            }
        };

        rows.push(TraceRow {
            step,
            t,
            mode: step_mode,
            alpha,
            beta,
            u_cos: cos_or_none(&prev_u, &cur_u),
            x_norm: norm(&x),
            v_norm: norm(&v),
            nfe: schedule.calls_per_step * full_passes,
        });
        prev_u = cur_u;

        x = euler_step(&x, &v, grid.dt(step), step)?;
    }

    Ok(SampleResult {
        latent: x,
        nfe: schedule.calls_per_step * full_passes,
        trace: TrajectoryTrace {
            rows,
            wall_time_secs: clock.elapsed_secs(),
        },
    })
}

/// Per-step component dynamics of a full run.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsRow {
    pub step: usize,
    pub t: f64,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub u_cos: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComponentDynamics {
    pub rows: Vec<DynamicsRow>,
}

/// Aggregate two-step extrapolation errors over part of a dynamics trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicsAggregate {
    /// Mean of `100 * |alpha_hat_i - alpha_i| / |alpha_i|` over measured steps.
    pub alpha_err_pct: f64,
    /// Same for beta.
    pub beta_err_pct: f64,
    /// Mean adjacent-direction cosine over the same step range.
    pub mean_u_cos: f64,
    /// Number of steps that contributed extrapolation errors.
    pub rows_used: usize,
}

impl ComponentDynamics {
    /// Aggregate starting at step `skip` (at least 2, since each error needs
    /// the two preceding steps). Rows with undefined decompositions are left
    /// out. Returns `None` when nothing is measurable.
    pub fn aggregate(&self, skip: usize) -> Option<DynamicsAggregate> {
        let start = skip.max(2);
        let mut alpha_sum = 0.0;
        let mut beta_sum = 0.0;
        let mut used = 0usize;
        for i in start..self.rows.len() {
            let (r0, r1, r2) = (&self.rows[i - 2], &self.rows[i - 1], &self.rows[i]);
            let (Some(a0), Some(a1), Some(a2)) = (r0.alpha, r1.alpha, r2.alpha) else {
                continue;
            };
            let (Some(b0), Some(b1), Some(b2)) = (r0.beta, r1.beta, r2.beta) else {
                continue;
            };
            let dt = r1.t - r0.t;
            if dt == 0.0 {
                continue;
            }
            let alpha_hat = a0 + (a1 - a0) / dt * (r2.t - r0.t);
            let beta_hat = b0 + (b1 - b0) / dt * (r2.t - r0.t);
            alpha_sum += guarded_rel_err(alpha_hat, a2);
            beta_sum += guarded_rel_err(beta_hat, b2);
            used += 1;
        }

        let mut cos_sum = 0.0;
        let mut cos_used = 0usize;
        for row in self.rows.iter().skip(skip.max(1)) {
            if let Some(c) = row.u_cos {
                cos_sum += c;
                cos_used += 1;
            }
        }

        if used == 0 || cos_used == 0 {
            return None;
        }
        Some(DynamicsAggregate {
            alpha_err_pct: 100.0 * alpha_sum / used as f64,
            beta_err_pct: 100.0 * beta_sum / used as f64,
            mean_u_cos: cos_sum / cos_used as f64,
            rows_used: used,
        })
    }
}

/// Run the full sampler and report how predictable its decomposition was:
/// per-step coefficients, adjacent-direction cosines, and (via
/// [`ComponentDynamics::aggregate`]) mean two-step extrapolation errors.
pub fn record_component_dynamics(
    field: &dyn VelocityField,
    x0: &Latent,
    grid: &TimeGrid,
) -> Result<ComponentDynamics> {
    let result = sample_full(field, x0, grid, 1)?;
    Ok(ComponentDynamics {
        rows: result
            .trace
            .rows
            .into_iter()
            .map(|r| DynamicsRow {
                step: r.step,
                t: r.t,
                alpha: r.alpha,
                beta: r.beta,
                u_cos: r.u_cos,
            })
            .collect(),
    })
}
