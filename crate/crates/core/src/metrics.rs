//! Fidelity metrics against a full-step baseline.
//!
//! Conventions, fixed here so alternate implementations can match
//! bit-for-bit:
//!
//! - `rel_l2(a, b) = ||a - b|| / ||b||` with `b` the baseline.
//! - SSIM uses a uniform 7x7 window (not Gaussian-weighted), population
//!   moments, and `C1 = (0.01 L)^2`, `C2 = (0.03 L)^2`.
//! - Before SSIM (and the report's PSNR), both grids are mapped by the affine
//!   transform that min-max normalizes the *baseline* to `[0, 1]`; `L = 1`.
//!   Anchoring the map to the baseline means a method cannot inflate its
//!   score by rescaling its own output.

use alloc::vec::Vec;

use crate::error::Error;
use crate::latent::{dot_slice, norm_slice, Latent, Shape};
use crate::math;
use crate::Result;

/// Capped sentinel returned by [`psnr`] for exactly matching inputs.
pub const PSNR_CAP_DB: f64 = 100.0;

fn check_dims(a: &Latent, b: &Latent) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: b.dim(),
            got: a.dim(),
        });
    }
    Ok(())
}

/// Mean squared difference.
pub fn mse(a: &Latent, b: &Latent) -> Result<f64> {
    check_dims(a, b)?;
    let sum: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    Ok(sum / a.dim() as f64)
}

/// Relative L2 error of `a` against the baseline `b`.
pub fn rel_l2(a: &Latent, baseline: &Latent) -> Result<f64> {
    check_dims(a, baseline)?;
    let base_norm = norm_slice(baseline.data());
    if base_norm == 0.0 {
        return Err(Error::ZeroBaselineNorm);
    }
    let diff: f64 = a
        .data()
        .iter()
        .zip(baseline.data())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    Ok(math::sqrt(diff) / base_norm)
}

/// Cosine similarity; undefined (error) when either vector is zero.
pub fn cosine(a: &Latent, b: &Latent) -> Result<f64> {
    check_dims(a, b)?;
    let na = norm_slice(a.data());
    let nb = norm_slice(b.data());
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroLatentNorm);
    }
    Ok(dot_slice(a.data(), b.data()) / (na * nb))
}

fn equal_grid_shape(a: &Latent, b: &Latent) -> Option<(usize, usize)> {
    match (a.shape(), b.shape()) {
        (Shape::Grid { rows, cols }, Shape::Grid { rows: r2, cols: c2 })
            if rows == r2 && cols == c2 =>
        {
            Some((rows, cols))
        }
        _ => None,
    }
}

/// `10 log10(peak^2 / mse)` in dB for equal grid shapes; identical inputs
/// return the [`PSNR_CAP_DB`] sentinel.
pub fn psnr(a: &Latent, b: &Latent, peak: f64) -> Result<f64> {
    if equal_grid_shape(a, b).is_none() {
        return Err(Error::ShapeMismatch);
    }
    if !(peak.is_finite() && peak > 0.0) {
        return Err(Error::InvalidParameter("peak must be positive"));
    }
    let err = mse(a, b)?;
    if err == 0.0 {
        return Ok(PSNR_CAP_DB);
    }
    Ok(10.0 * math::log10(peak * peak / err))
}

/// Mean local SSIM of `a` against the baseline `b` (see module docs for the
/// exact variant). Grids must share a shape with both sides >= 7.
pub fn ssim(a: &Latent, baseline: &Latent) -> Result<f64> {
    let Some((rows, cols)) = equal_grid_shape(a, baseline) else {
        return Err(Error::ShapeMismatch);
    };
    if rows < 7 || cols < 7 {
        return Err(Error::GridTooSmall);
    }
    let (na, nb) = normalize_pair(a.data(), baseline.data())?;
    Ok(mean_local_ssim(&na, &nb, rows, cols))
}

/// The baseline-anchored affine map applied to both inputs.
fn normalize_pair(a: &[f64], baseline: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in baseline {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let range = hi - lo;
    if range == 0.0 {
        return Err(Error::FlatBaseline);
    }
    let map = |v: f64| (v - lo) / range;
    Ok((
        a.iter().copied().map(map).collect(),
        baseline.iter().copied().map(map).collect(),
    ))
}

fn mean_local_ssim(a: &[f64], b: &[f64], rows: usize, cols: usize) -> f64 {
    const WIN: usize = 7;
    const N: f64 = (WIN * WIN) as f64;
    const C1: f64 = 0.01 * 0.01; // (0.01 * L)^2 with L = 1
    const C2: f64 = 0.03 * 0.03;

    let mut total = 0.0;
    let mut windows = 0usize;
    for r0 in 0..=rows - WIN {
        for c0 in 0..=cols - WIN {
            let mut sa = 0.0;
            let mut sb = 0.0;
            let mut saa = 0.0;
            let mut sbb = 0.0;
            let mut sab = 0.0;
            for r in r0..r0 + WIN {
                let row = r * cols;
                for c in c0..c0 + WIN {
                    let (x, y) = (a[row + c], b[row + c]);
                    sa += x;
                    sb += y;
                    saa += x * x;
                    sbb += y * y;
                    sab += x * y;
                }
            }
            let (mu_a, mu_b) = (sa / N, sb / N);
            let var_a = saa / N - mu_a * mu_a;
            let var_b = sbb / N - mu_b * mu_b;
            let cov = sab / N - mu_a * mu_b;
            total += ((2.0 * mu_a * mu_b + C1) * (2.0 * cov + C2))
                / ((mu_a * mu_a + mu_b * mu_b + C1) * (var_a + var_b + C2));
            windows += 1;
        }
    }
    total / windows as f64
}

/// Fidelity/efficiency summary of one accelerated output against its
/// same-seed full baseline. PSNR/SSIM appear only for matching grid shapes
/// and both use the baseline-anchored normalization (PSNR with `peak = 1`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetentionReport {
    pub mse: f64,
    pub rel_l2: f64,
    pub cosine: f64,
    pub psnr: Option<f64>,
    pub ssim: Option<f64>,
    /// Baseline NFE over method NFE; >= 1 whenever steps were estimated.
    pub nfe_ratio: f64,
}

pub fn retention_report(
    a: &Latent,
    baseline: &Latent,
    method_nfe: usize,
    baseline_nfe: usize,
) -> Result<RetentionReport> {
    if method_nfe == 0 || baseline_nfe == 0 {
        return Err(Error::InvalidParameter("NFE counts must be positive"));
    }
    let (psnr_db, ssim_val) = if let Some((rows, cols)) = equal_grid_shape(a, baseline) {
        let (na, nb) = normalize_pair(a.data(), baseline.data())?;
        let na = Latent::grid(rows, cols, na)?;
        let nb = Latent::grid(rows, cols, nb)?;
        let s = if rows >= 7 && cols >= 7 {
            Some(mean_local_ssim(na.data(), nb.data(), rows, cols))
        } else {
            None
        };
        (Some(psnr(&na, &nb, 1.0)?), s)
    } else {
        (None, None)
    };
    Ok(RetentionReport {
        mse: mse(a, baseline)?,
        rel_l2: rel_l2(a, baseline)?,
        cosine: cosine(a, baseline)?,
        psnr: psnr_db,
        ssim: ssim_val,
        nfe_ratio: baseline_nfe as f64 / method_nfe as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn flat(v: &[f64]) -> Latent {
        Latent::flat(v.to_vec()).unwrap()
    }

    #[test]
    fn identical_inputs() {
        let a = flat(&[0.4, -0.2, 1.0]);
        assert_eq!(mse(&a, &a).unwrap(), 0.0);
        assert_eq!(rel_l2(&a, &a).unwrap(), 0.0);
        assert!((cosine(&a, &a).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn opposite_inputs_have_cosine_minus_one() {
        let a = flat(&[0.3, -1.2, 0.7]);
        let b = flat(&[-0.3, 1.2, -0.7]);
        assert!((cosine(&a, &b).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn orthonormal_pair_hand_values() {
        let a = flat(&[1.0, 0.0]);
        let b = flat(&[0.0, 1.0]);
        assert_eq!(mse(&a, &b).unwrap(), 1.0);
        assert!((rel_l2(&a, &b).unwrap() - 2.0f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn zero_baseline_rejected() {
        let a = flat(&[1.0, 0.0]);
        let z = flat(&[0.0, 0.0]);
        assert!(matches!(rel_l2(&a, &z), Err(Error::ZeroBaselineNorm)));
        assert!(matches!(cosine(&a, &z), Err(Error::ZeroLatentNorm)));
    }

    fn grid_from(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> Latent {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Latent::grid(rows, cols, data).unwrap()
    }

    #[test]
    fn psnr_hand_values() {
        let b = grid_from(8, 8, |r, c| ((r * 8 + c) % 7) as f64 / 7.0);
        assert_eq!(psnr(&b, &b, 1.0).unwrap(), PSNR_CAP_DB);

        // Constant offset of 0.1: mse = 0.01, psnr = 20 dB at peak 1.
        let a = grid_from(8, 8, |r, c| ((r * 8 + c) % 7) as f64 / 7.0 + 0.1);
        assert!((psnr(&a, &b, 1.0).unwrap() - 20.0).abs() < 1e-12);

        // Doubling mse costs 10 log10(2) ~ 3.0103 dB.
        let a2 = grid_from(8, 8, |r, c| {
            ((r * 8 + c) % 7) as f64 / 7.0 + 0.1 * 2.0f64.sqrt()
        });
        let drop = psnr(&a, &b, 1.0).unwrap() - psnr(&a2, &b, 1.0).unwrap();
        assert!((drop - 3.010299956639812).abs() < 1e-6);
    }

    #[test]
    fn psnr_requires_grids() {
        let a = flat(&[1.0, 0.0]);
        assert!(matches!(psnr(&a, &a, 1.0), Err(Error::ShapeMismatch)));
        let g7 = grid_from(7, 7, |r, c| (r + c) as f64);
        let g8 = grid_from(8, 8, |r, c| (r + c) as f64);
        assert!(matches!(psnr(&g7, &g8, 1.0), Err(Error::ShapeMismatch)));
    }

    #[test]
    fn ssim_self_is_one() {
        let a = grid_from(9, 12, |r, c| {
            (r as f64 * 0.3).sin() + (c as f64 * 0.7).cos()
        });
        let val = ssim(&a, &a).unwrap();
        assert!((val - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ssim_guards() {
        let small = grid_from(6, 9, |r, c| (r + c) as f64);
        let other = grid_from(6, 9, |r, c| (r * c) as f64);
        assert!(matches!(ssim(&small, &other), Err(Error::GridTooSmall)));
        let a = grid_from(8, 8, |r, c| (r + c) as f64);
        let b = grid_from(8, 8, |_, _| 1.0);
        assert!(matches!(ssim(&a, &b), Err(Error::FlatBaseline)));
    }

    #[test]
    fn ssim_degrades_monotonically_with_noise() {
        let baseline = grid_from(16, 16, |r, c| ((r * 31 + c * 17) % 11) as f64 / 11.0);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let noise: Vec<f64> = (0..256).map(|_| rng.random::<f64>() - 0.5).collect();
        let with_noise = |scale: f64| {
            Latent::grid(
                16,
                16,
                baseline
                    .data()
                    .iter()
                    .zip(&noise)
                    .map(|(b, n)| b + scale * n)
                    .collect(),
            )
            .unwrap()
        };
        let small = ssim(&with_noise(0.05), &baseline).unwrap();
        let large = ssim(&with_noise(0.5), &baseline).unwrap();
        assert!(large < small, "{large} !< {small}");
    }

    #[test]
    fn inverted_checkerboard_is_anticorrelated() {
        let board = grid_from(8, 8, |r, c| ((r + c) % 2) as f64);
        let inverted = grid_from(8, 8, |r, c| 1.0 - ((r + c) % 2) as f64);
        let got = ssim(&inverted, &board).unwrap();

        // Independent derivation: binary complementary windows. With
        // p = mean of one window and q = 1 - p, population variances are
        // both p*q and the covariance is -p*q; every 7x7 window of the 8x8
        // board has {24, 25} ones, and the expression is symmetric in
        // (p, q), so all four windows share one value.
        let p = 25.0 / 49.0;
        let q = 1.0 - p;
        let c1 = 1e-4;
        let c2 = 9e-4;
        let expected =
            ((2.0 * p * q + c1) * (c2 - 2.0 * p * q)) / ((p * p + q * q + c1) * (2.0 * p * q + c2));
        assert!(got < 0.0, "ssim {got}");
        assert!((got - expected).abs() < 1e-12, "{got} vs {expected}");
    }

    #[test]
    fn report_fields_follow_shapes() {
        let a = grid_from(8, 8, |r, c| (r as f64 - c as f64) * 0.1);
        let b = grid_from(8, 8, |r, c| (r as f64 - c as f64) * 0.1 + 0.01);
        let report = retention_report(&a, &b, 22, 50).unwrap();
        assert!(report.psnr.is_some() && report.ssim.is_some());
        assert!((report.nfe_ratio - 50.0 / 22.0).abs() < 1e-15);
        assert!(report.mse > 0.0 && report.rel_l2 > 0.0);

        let fa = flat(&[1.0, 2.0, 3.0]);
        let fb = flat(&[1.0, 2.0, 3.1]);
        let report = retention_report(&fa, &fb, 10, 50).unwrap();
        assert!(report.psnr.is_none() && report.ssim.is_none());
    }

    proptest! {
        #![proptest_config(ProptestConfig { cases: 32, ..ProptestConfig::default() })]

        // With shared extremes the baseline-anchored map coincides for both
        // orders, and the local formula itself is symmetric.
        #[test]
        fn prop_ssim_symmetric_for_shared_range(seed in 0u64..500) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut da: Vec<f64> = (0..64).map(|_| rng.random::<f64>()).collect();
            let mut db: Vec<f64> = (0..64).map(|_| rng.random::<f64>()).collect();
            da[0] = 0.0; da[1] = 1.0;
            db[2] = 0.0; db[3] = 1.0;
            let a = Latent::grid(8, 8, da).unwrap();
            let b = Latent::grid(8, 8, db).unwrap();
            let ab = ssim(&a, &b).unwrap();
            let ba = ssim(&b, &a).unwrap();
            prop_assert!((ab - ba).abs() <= 1e-12);
        }

        // Strictly decreasing in mse at fixed peak.
        #[test]
        fn prop_psnr_monotone_in_mse(
            m1 in 1e-6f64..0.5,
            factor in 1.01f64..50.0,
        ) {
            let b = grid_from(7, 7, |r, c| (r * 7 + c) as f64 / 49.0);
            let shift = |m: f64| {
                Latent::grid(
                    7,
                    7,
                    b.data().iter().map(|v| v + m.sqrt()).collect(),
                )
                .unwrap()
            };
            let p1 = psnr(&shift(m1), &b, 1.0).unwrap();
            let p2 = psnr(&shift(m1 * factor), &b, 1.0).unwrap();
            prop_assert!(p2 < p1, "{p2} !< {p1}");
        }
    }
}
