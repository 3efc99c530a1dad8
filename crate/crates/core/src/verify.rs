//! Numerical checks of the asymptotic formula against exact counts.
//!
//! Logarithms are natural throughout. The implied constants of the error
//! terms are unknown, so growth checks are framed as trend tests whose
//! tolerances are recorded in each report.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::arith::{build_sieves, check_k};
use crate::counters::{
    count_pairs_kernel, count_pairs_naive, count_pairs_radical, u_weight_sum, w_weight_sum,
};
use crate::{Error, Result};

/// `ck * H^{2/k} * (ln H)^{k-1}`. `H` is real so that `H = e` gives a unit
/// log factor exactly.
pub fn asymptotic_main_term(h: f64, k: u32, ck: f64) -> f64 {
    ck * h.powf(2.0 / f64::from(k)) * h.ln().powi(k as i32 - 1)
}

/// Which `S_k` evaluator feeds a table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CounterChoice {
    Naive,
    Kernel,
    Radical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub k: u32,
    pub h: u64,
    pub exact: u128,
    pub main_term: f64,
    pub ratio: f64,
    /// `(exact - main_term) / (H^{2/k} (ln H)^{k-2})`.
    pub scaled_residual: f64,
}

impl ConvergenceRow {
    pub fn new(k: u32, h: u64, exact: u128, ck: f64) -> Result<Self> {
        if h < 3 {
            return Err(Error::Domain(format!(
                "convergence rows need H >= 3, got {h}"
            )));
        }
        let hf = h as f64;
        let main_term = asymptotic_main_term(hf, k, ck);
        let scale = hf.powf(2.0 / f64::from(k)) * hf.ln().powi(k as i32 - 2);
        let e = exact as f64;
        Ok(ConvergenceRow {
            k,
            h,
            exact,
            main_term,
            ratio: e / main_term,
            scaled_residual: (e - main_term) / scale,
        })
    }
}

/// Exact counts against the main term on a grid of `H`, in grid order.
pub fn convergence_table(
    k: u32,
    grid: &[u64],
    counter: CounterChoice,
    ck: f64,
    workers: usize,
) -> Result<Vec<ConvergenceRow>> {
    check_k(k)?;
    if let Some(&h) = grid.iter().find(|&&h| h < 3) {
        return Err(Error::Domain(format!(
            "convergence rows need H >= 3, got {h}"
        )));
    }
    let tables = match counter {
        CounterChoice::Kernel => Some(build_sieves(grid.iter().copied().max().unwrap_or(1), k)?),
        _ => None,
    };
    grid.iter()
        .map(|&h| {
            let exact = match counter {
                CounterChoice::Naive => count_pairs_naive(h, k, workers)?.value,
                CounterChoice::Kernel => {
                    count_pairs_kernel(h, k, tables.as_ref().expect("built above"), workers)?.value
                }
                CounterChoice::Radical => count_pairs_radical(h, k, workers)?.value,
            };
            ConvergenceRow::new(k, h, exact, ck)
        })
        .collect()
}

/// Least-squares fit of `U_k(H)` by a polynomial of degree `k-1` in `ln H`.
#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    pub k: u32,
    pub grid: Vec<u64>,
    /// `a_0 .. a_{k-1}` in the basis `1, ln H, ..., (ln H)^{k-1}`.
    pub coefficients: Vec<f64>,
    pub leading: f64,
    pub reference: f64,
    pub relative_deviation: f64,
}

/// Fits `samples = (H, U_k(H))` against `1, ln H, ..., (ln H)^{k-1}`.
///
/// The basis is centred and scaled to `[-1, 1]` before an SVD solve, then
/// mapped back to powers of `ln H`.
pub fn fit_leading_coefficient(k: u32, samples: &[(u64, f64)], ck: f64) -> Result<FitReport> {
    check_k(k)?;
    let deg = k as usize - 1;
    let n = samples.len();
    if n < 2 * k as usize {
        return Err(Error::Fit(format!(
            "need at least {} samples for k={k}, got {n}",
            2 * k
        )));
    }
    let mut hs: Vec<u64> = samples.iter().map(|s| s.0).collect();
    hs.sort_unstable();
    if hs.windows(2).any(|w| w[0] == w[1]) || hs[0] == 0 {
        return Err(Error::Fit(
            "sample H values must be positive and distinct".into(),
        ));
    }

    let logs: Vec<f64> = samples.iter().map(|s| (s.0 as f64).ln()).collect();
    let centre = logs.iter().sum::<f64>() / n as f64;
    let half_width = logs.iter().map(|l| (l - centre).abs()).fold(0.0, f64::max);
    if half_width == 0.0 {
        return Err(Error::Fit("all samples share one value of ln H".into()));
    }
    let design = DMatrix::from_fn(n, deg + 1, |i, j| {
        ((logs[i] - centre) / half_width).powi(j as i32)
    });
    let rhs = DVector::from_iterator(n, samples.iter().map(|s| s.1));
    let svd = design.svd(true, true);
    let sv = &svd.singular_values;
    let (smax, smin) = (sv.max(), sv.min());
    if smin.is_nan() || smin <= 1e-12 * smax {
        return Err(Error::Fit(format!(
            "rank-deficient design (singular values {smin:e} / {smax:e})"
        )));
    }
    let scaled = svd
        .solve(&rhs, 0.0)
        .map_err(|e| Error::Fit(e.to_string()))?;

    // a_i = sum_{j >= i} b_j w^{-j} C(j, i) (-c)^{j-i}
    let mut coefficients = vec![0.0; deg + 1];
    for j in 0..=deg {
        let bj = scaled[j] / half_width.powi(j as i32);
        let mut binom = 1.0;
        for (i, coef) in coefficients.iter_mut().enumerate().take(j + 1) {
            if i > 0 {
                binom = binom * (j + 1 - i) as f64 / i as f64;
            }
            *coef += bj * binom * (-centre).powi((j - i) as i32);
        }
    }
    let leading = coefficients[deg];
    Ok(FitReport {
        k,
        grid: samples.iter().map(|s| s.0).collect(),
        coefficients,
        leading,
        reference: ck,
        relative_deviation: (leading - ck).abs() / ck.abs(),
    })
}

/// Evaluates `U_k` on `grid` and fits its leading coefficient.
pub fn fit_u_over_grid(k: u32, grid: &[u64], ck: f64, workers: usize) -> Result<FitReport> {
    let samples = grid
        .iter()
        .map(|&h| Ok((h, u_weight_sum(h, k, workers)?.value)))
        .collect::<Result<Vec<_>>>()?;
    fit_leading_coefficient(k, &samples, ck)
}

/// Verdict of a no-growth trend test over the top decade of a grid.
#[derive(Debug, Clone, Serialize)]
pub struct TrendVerdict {
    /// Points `(H, value)` with `H >= H_max / 10`.
    pub top_decade: Vec<(u64, f64)>,
    /// Fitted exponent `b` in `value ~ H^b` over the top decade.
    pub slope: f64,
    /// Largest slope accepted as "no growth".
    pub slope_tolerance: f64,
    pub passed: bool,
}

/// Slope tolerance of [`no_growth_trend`]: any power-law growth `H^b`
/// with `b` above this fails.
pub const TREND_SLOPE_TOLERANCE: f64 = 0.05;

/// Fails when the values grow like a positive power of `H` across the top
/// decade; fewer than two points in the decade pass trivially.
pub fn no_growth_trend(points: &[(u64, f64)]) -> TrendVerdict {
    let h_max = points.iter().map(|p| p.0).max().unwrap_or(0);
    let top: Vec<(u64, f64)> = points
        .iter()
        .copied()
        .filter(|p| p.0 as f64 >= h_max as f64 / 10.0)
        .collect();
    let slope = if top.len() >= 2 {
        let xs: Vec<f64> = top.iter().map(|p| (p.0 as f64).ln()).collect();
        let ys: Vec<f64> = top
            .iter()
            .map(|p| p.1.abs().max(f64::MIN_POSITIVE).ln())
            .collect();
        let mx = xs.iter().sum::<f64>() / xs.len() as f64;
        let my = ys.iter().sum::<f64>() / ys.len() as f64;
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        sxy / sxx
    } else {
        0.0
    };
    TrendVerdict {
        top_decade: top,
        slope,
        slope_tolerance: TREND_SLOPE_TOLERANCE,
        passed: slope <= TREND_SLOPE_TOLERANCE,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowthReport {
    pub k: u32,
    /// `(H, W_k(H), W_k(H) / (H^{1/k} (ln H)^{k-2}))`.
    pub points: Vec<(u64, f64, f64)>,
    pub max_normalized: f64,
    pub trend: TrendVerdict,
}

/// `W_k(H) / (H^{1/k} (ln H)^{k-2})`, with the value at `H = 1` set to 1.
pub fn normalized_w(h: u64, k: u32, w: f64) -> f64 {
    if h == 1 {
        return 1.0;
    }
    let hf = h as f64;
    w / (hf.powf(1.0 / f64::from(k)) * hf.ln().powi(k as i32 - 2))
}

/// Evaluates normalized `W_k` over `grid` and applies [`no_growth_trend`].
pub fn w_growth_check(k: u32, grid: &[u64], workers: usize) -> Result<GrowthReport> {
    let points = grid
        .iter()
        .map(|&h| {
            let w = w_weight_sum(h, k, workers)?.value;
            Ok((h, w, normalized_w(h, k, w)))
        })
        .collect::<Result<Vec<_>>>()?;
    let max_normalized = points.iter().map(|p| p.2).fold(f64::NEG_INFINITY, f64::max);
    let trend = no_growth_trend(&points.iter().map(|p| (p.0, p.2)).collect::<Vec<_>>());
    Ok(GrowthReport {
        k,
        points,
        max_normalized,
        trend,
    })
}

/// Band test for `k = 2`: `(S_2(H) - c_2 H ln H) / H` must satisfy
/// `max |r| <= 2 |r(H_min)| + 1`.
#[derive(Debug, Clone, Serialize)]
pub struct ResidualBandReport {
    /// `(H, (S_2(H) - c_2 H ln H) / H)`.
    pub residuals: Vec<(u64, f64)>,
    pub band: f64,
    pub max_abs: f64,
    pub passed: bool,
}

pub const BAND_FACTOR: f64 = 2.0;
pub const BAND_SLACK: f64 = 1.0;

pub fn residual_band_check(rows: &[ConvergenceRow]) -> Result<ResidualBandReport> {
    if rows.is_empty() {
        return Err(Error::Domain("residual band needs at least one row".into()));
    }
    let residuals: Vec<(u64, f64)> = rows
        .iter()
        .map(|r| (r.h, (r.exact as f64 - r.main_term) / r.h as f64))
        .collect();
    let band = BAND_FACTOR * residuals[0].1.abs() + BAND_SLACK;
    let max_abs = residuals.iter().map(|r| r.1.abs()).fold(0.0, f64::max);
    Ok(ResidualBandReport {
        residuals,
        band,
        max_abs,
        passed: max_abs <= band,
    })
}

/// Probe set for cross-validation: every `H <= 200`, then every 50th, and
/// `h_max` itself.
pub fn probe_set(h_max: u64) -> Vec<u64> {
    let mut v: Vec<u64> = (1..=h_max.min(200)).collect();
    v.extend((250..=h_max).step_by(50));
    if v.last() != Some(&h_max) {
        v.push(h_max);
    }
    v
}

#[derive(Debug, Clone, Serialize)]
pub struct CrossValidation {
    pub h_max: u64,
    pub ks: Vec<u32>,
    pub probes: usize,
    pub passed: bool,
}

/// Checks naive = kernel = radical on [`probe_set`] for each `k`; the first
/// disagreement is returned as [`Error::Validation`].
pub fn oracle_cross_validate(h_max: u64, ks: &[u32], workers: usize) -> Result<CrossValidation> {
    let probes = probe_set(h_max);
    for &k in ks {
        let tables = build_sieves(h_max, k)?;
        for &h in &probes {
            let naive = count_pairs_naive(h, k, workers)?.value;
            let kernel = count_pairs_kernel(h, k, &tables, workers)?.value;
            let radical = count_pairs_radical(h, k, workers)?.value;
            if naive != kernel || kernel != radical {
                return Err(Error::Validation {
                    h,
                    k,
                    detail: format!("naive={naive} kernel={kernel} radical={radical}"),
                });
            }
        }
    }
    Ok(CrossValidation {
        h_max,
        ks: ks.to_vec(),
        probes: probes.len() * ks.len(),
        passed: true,
    })
}

/// `points` integers from `start` to `stop`, geometrically spaced, rounded
/// and strictly increasing.
pub fn geometric_grid(start: u64, stop: u64, points: usize) -> Result<Vec<u64>> {
    if start == 0 || stop < start || points == 0 {
        return Err(Error::Domain(format!(
            "bad geometric grid {start}:{stop}:{points}"
        )));
    }
    if points == 1 {
        return Ok(vec![start]);
    }
    let (a, b) = ((start as f64).ln(), (stop as f64).ln());
    let mut v: Vec<u64> = (0..points)
        .map(|i| {
            if i + 1 == points {
                stop
            } else {
                (a + (b - a) * i as f64 / (points - 1) as f64).exp().round() as u64
            }
        })
        .collect();
    v[0] = start;
    v.dedup();
    if v.len() != points {
        return Err(Error::Domain(format!(
            "geometric grid {start}:{stop}:{points} has repeated points"
        )));
    }
    Ok(v)
}
