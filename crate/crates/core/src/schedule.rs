//! Full/estimated step planning and NFE accounting.
//!
//! A schedule over `T` steps runs a warm-up of `W` full passes, then repeats
//! cycles of `n` estimated steps followed by one full pass; a trailing
//! partial cycle stays estimated, and the final step is always a full pass.
//! With `calls_per_step` forward calls per full step (2 for guidance-style
//! models, accounted but never executed twice here), the cost is
//!
//! ```text
//! NFE = calls_per_step * (W + 1 + floor((T - 1 - W) / (n + 1)))
//! ```

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::Error;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepMode {
    /// Run the real velocity field and refresh the anchor history.
    Full,
    /// Synthesize the velocity from extrapolated coefficients and the reused
    /// anchor direction.
    Estimated,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplingSchedule {
    /// Total step count `T`.
    pub step_count: usize,
    /// Warm-up length `W`: steps `0..W` are full.
    pub warmup: usize,
    /// Anchor interval `n`: estimated steps per cycle.
    pub interval: usize,
    /// NFE multiplier per full step; accounting only.
    pub calls_per_step: usize,
    /// Per-step modes, length `T`.
    pub plan: Vec<StepMode>,
}

/// Build the fixed-warm-up schedule.
///
/// Requires `2 <= W <= T - 1` (two warm-up passes seed the anchor pair and
/// the final step must stay full) and `n >= 1`.
pub fn plan_schedule(
    step_count: usize,
    warmup: usize,
    interval: usize,
    calls_per_step: usize,
) -> Result<SamplingSchedule> {
    if calls_per_step < 1 {
        return Err(Error::InvalidSchedule("calls_per_step must be >= 1"));
    }
    if interval < 1 {
        return Err(Error::InvalidSchedule("interval must be >= 1"));
    }
    if warmup < 2 {
        return Err(Error::InvalidSchedule(
            "warm-up must be >= 2 to seed two anchors",
        ));
    }
    if warmup > step_count.saturating_sub(1) {
        return Err(Error::InvalidSchedule(
            "warm-up must leave room for the final full step",
        ));
    }

    let mut plan = vec![StepMode::Full; warmup];
    let interior = step_count - 1 - warmup;
    for j in 0..interior {
        if (j + 1) % (interval + 1) == 0 {
            plan.push(StepMode::Full);
        } else {
            plan.push(StepMode::Estimated);
        }
    }
    plan.push(StepMode::Full);

    Ok(SamplingSchedule {
        step_count,
        warmup,
        interval,
        calls_per_step,
        plan,
    })
}

impl SamplingSchedule {
    /// A degenerate schedule with every step full (the baseline plan).
    pub fn all_full(step_count: usize, calls_per_step: usize) -> Result<Self> {
        if calls_per_step < 1 {
            return Err(Error::InvalidSchedule("calls_per_step must be >= 1"));
        }
        if step_count < 1 {
            return Err(Error::InvalidSchedule("need at least one step"));
        }
        Ok(Self {
            step_count,
            warmup: step_count,
            interval: 1,
            calls_per_step,
            plan: vec![StepMode::Full; step_count],
        })
    }

    pub fn full_count(&self) -> usize {
        self.plan.iter().filter(|m| **m == StepMode::Full).count()
    }

    pub fn nfe(&self) -> usize {
        self.calls_per_step * self.full_count()
    }

    /// Compact plan string: warm-up block, one group per cycle, final full
    /// step. Example for `T=12, W=3, n=2`: `FFF EEF EEF EE F`.
    pub fn plan_string(&self) -> String {
        let mut out = String::with_capacity(self.step_count + self.step_count / 3 + 4);
        let warmup = self.warmup.min(self.step_count.saturating_sub(1));
        for (i, mode) in self.plan.iter().enumerate() {
            let boundary = i == warmup
                || i + 1 == self.step_count
                || (i > warmup && (i - warmup).is_multiple_of(self.interval + 1));
            if i > 0 && boundary && i >= warmup {
                out.push(' ');
            }
            out.push(match mode {
                StepMode::Full => 'F',
                StepMode::Estimated => 'E',
            });
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reference_nfe_values() {
        // (T, W, n, calls) -> NFE
        let cases = [
            (50, 7, 2, 1, 22),
            (50, 7, 3, 1, 18),
            (50, 7, 4, 1, 16),
            (50, 11, 2, 2, 48),
            (50, 11, 5, 2, 36),
            (50, 7, 1, 1, 29),
        ];
        for (t, w, n, calls, nfe) in cases {
            let s = plan_schedule(t, w, n, calls).unwrap();
            assert_eq!(s.nfe(), nfe, "T={t} W={w} n={n} calls={calls}");
        }
    }

    #[test]
    fn plan_structure() {
        let s = plan_schedule(12, 3, 2, 1).unwrap();
        use StepMode::{Estimated as E, Full as F};
        assert_eq!(s.plan, vec![F, F, F, E, E, F, E, E, F, E, E, F],);
        assert_eq!(s.plan_string(), "FFF EEF EEF EE F");

        // Trailing partial cycle stays estimated.
        let s = plan_schedule(10, 3, 4, 1).unwrap();
        assert_eq!(s.plan, vec![F, F, F, E, E, E, E, F, E, F],);
    }

    #[test]
    fn validation_errors() {
        assert!(matches!(
            plan_schedule(50, 1, 2, 1),
            Err(Error::InvalidSchedule(_))
        ));
        assert!(matches!(
            plan_schedule(50, 7, 0, 1),
            Err(Error::InvalidSchedule(_))
        ));
        assert!(matches!(
            plan_schedule(50, 50, 2, 1),
            Err(Error::InvalidSchedule(_))
        ));
        assert!(matches!(
            plan_schedule(50, 7, 2, 0),
            Err(Error::InvalidSchedule(_))
        ));
        assert!(plan_schedule(3, 2, 1, 1).is_ok());
    }

    #[test]
    fn all_full_is_all_full() {
        let s = SamplingSchedule::all_full(5, 2).unwrap();
        assert!(s.plan.iter().all(|m| *m == StepMode::Full));
        assert_eq!(s.nfe(), 10);
    }

    proptest! {
        // Closed-form full count: W + 1 + floor((T-1-W)/(n+1)).
        #[test]
        fn prop_full_count_formula(
            t in 3usize..200,
            w in 2usize..100,
            n in 1usize..8,
            calls in 1usize..3,
        ) {
            prop_assume!(w < t);
            let s = plan_schedule(t, w, n, calls).unwrap();
            let expected = w + 1 + (t - 1 - w) / (n + 1);
            prop_assert_eq!(s.full_count(), expected);
            prop_assert_eq!(s.nfe(), calls * expected);
            prop_assert_eq!(s.plan.len(), t);
            // Warm-up and final step are full.
            prop_assert!(s.plan[..w].iter().all(|m| *m == StepMode::Full));
            prop_assert_eq!(s.plan[t - 1], StepMode::Full);
        }
    }
}
