//! Exact evaluators for the counting functions.
//!
//! * `S_k(H)`: pairs `x1, x2 <= H` with `x1 x2` a k-th power. Three
//!   independent routes: the quadratic scan [`count_pairs_naive`], the
//!   k-free scan [`count_pairs_kernel`], and the radical walk
//!   [`count_pairs_radical`].
//! * `S_k*(H)`: the coprime pairs, via Möbius inversion.
//! * `T_k(H) = sum_{n <= H^{2/k}} tau(n^k)`.
//! * `U_k(H)`, `W_k(H)`: the weighted sums over conjugate k-free pairs.
//!
//! Every `x <= H` is `y z^k` with `y` k-free, and `x1 x2` is a k-th power
//! iff `y1 y2` is. So
//!
//! ```text
//! S_k(H) = sum over conjugate pairs (y1, y2), y1, y2 <= H, of
//!          floor((H/y1)^{1/k}) * floor((H/y2)^{1/k})
//! ```
//!
//! which both fast counters evaluate exactly, one by scanning `y1`, the
//! other by walking radicals.

use std::time::{Duration, Instant};

use serde::{Serialize, Serializer};

use crate::arith::{check_k, root_floor, root_floor_u128, SieveTables};
use crate::decomp::{conjugate_bounded, RadicalEnumerator};
use crate::par;
use crate::sum::{CompensatedSum, UNIT_ROUNDOFF};
use crate::{Error, Result};

/// Default bound on `H` for the quadratic counter.
pub const NAIVE_GUARD: u64 = 10_000;

const NAIVE_BLOCK: u64 = 64;
const KERNEL_BLOCK: u64 = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CountKind {
    #[serde(rename = "S_k")]
    Pairs,
    #[serde(rename = "S_k_star")]
    CoprimePairs,
    #[serde(rename = "T_k")]
    TauPowers,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Naive,
    Kernel,
    Radical,
    Mobius,
    DivisorSum,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Naive => "naive",
            Algorithm::Kernel => "kernel",
            Algorithm::Radical => "radical",
            Algorithm::Mobius => "mobius",
            Algorithm::DivisorSum => "divisor_sum",
        }
    }
}

fn as_secs<S: Serializer>(d: &Duration, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64())
}

/// An exact count together with how it was obtained.
#[derive(Debug, Clone, Serialize)]
pub struct CountResult {
    pub k: u32,
    pub h: u64,
    pub kind: CountKind,
    pub value: u128,
    pub algorithm: Algorithm,
    #[serde(rename = "elapsed_secs", serialize_with = "as_secs")]
    pub elapsed: Duration,
    pub workers: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum WeightKind {
    #[serde(rename = "U_k")]
    U,
    #[serde(rename = "W_k")]
    W,
}

/// A floating sum with a bound on its accumulated rounding error.
#[derive(Debug, Clone, Serialize)]
pub struct WeightedSumResult {
    pub k: u32,
    pub h: u64,
    pub kind: WeightKind,
    pub value: f64,
    pub error_bound: f64,
    pub terms: u64,
}

fn check_h(h: u64) -> Result<()> {
    if h == 0 {
        Err(Error::Domain("H must be at least 1".into()))
    } else {
        Ok(())
    }
}

fn check_table(n: u64, tables: &SieveTables) -> Result<()> {
    if n > tables.limit() {
        Err(Error::Range {
            n,
            limit: tables.limit(),
        })
    } else {
        Ok(())
    }
}

fn result(
    k: u32,
    h: u64,
    kind: CountKind,
    value: u128,
    algorithm: Algorithm,
    start: Instant,
    workers: usize,
) -> CountResult {
    CountResult {
        k,
        h,
        kind,
        value,
        algorithm,
        elapsed: start.elapsed(),
        workers: par::effective_workers(workers),
    }
}

/// `S_k(H)` by testing every pair; the ground-truth oracle. Rejects
/// `H > NAIVE_GUARD`.
pub fn count_pairs_naive(h: u64, k: u32, workers: usize) -> Result<CountResult> {
    count_pairs_naive_guarded(h, k, NAIVE_GUARD, workers)
}

/// [`count_pairs_naive`] with an explicit guard on `H`.
pub fn count_pairs_naive_guarded(
    h: u64,
    k: u32,
    guard: u64,
    workers: usize,
) -> Result<CountResult> {
    check_k(k)?;
    check_h(h)?;
    if h > guard {
        return Err(Error::Resource(format!(
            "naive counter limited to H <= {guard}, got {h}"
        )));
    }
    let start = Instant::now();
    let narrow = h <= u64::from(u32::MAX);
    let partials = par::map_blocks(par::block_count(1, h, NAIVE_BLOCK), workers, |b| {
        let (lo, hi) = par::block_bounds(1, h, NAIVE_BLOCK, b);
        let mut c: u128 = 0;
        for x1 in lo..=hi {
            for x2 in 1..=h {
                let hit = if narrow {
                    crate::arith::is_kth_power(x1 * x2, k)
                } else {
                    crate::arith::is_kth_power_u128(u128::from(x1) * u128::from(x2), k)
                };
                c += u128::from(hit);
            }
        }
        c
    });
    let value = partials.into_iter().sum();
    Ok(result(
        k,
        h,
        CountKind::Pairs,
        value,
        Algorithm::Naive,
        start,
        workers,
    ))
}

/// `S_k(H)` by scanning k-free `y <= H` and pairing each with its
/// conjugate. Linear in `H`; needs tables up to `H`.
pub fn count_pairs_kernel(
    h: u64,
    k: u32,
    tables: &SieveTables,
    workers: usize,
) -> Result<CountResult> {
    check_k(k)?;
    check_h(h)?;
    check_table(h, tables)?;
    let start = Instant::now();
    let partials = par::map_blocks(par::block_count(1, h, KERNEL_BLOCK), workers, |b| {
        let (lo, hi) = par::block_bounds(1, h, KERNEL_BLOCK, b);
        let mut c: u128 = 0;
        for y in lo..=hi {
            if !tables.kfree_unchecked(y, k) {
                continue;
            }
            if let Some(y2) = conjugate_bounded(y, k, h, tables) {
                c += u128::from(root_floor(h / y, k)) * u128::from(root_floor(h / y2, k));
            }
        }
        c
    });
    let value = partials.into_iter().sum();
    Ok(result(
        k,
        h,
        CountKind::Pairs,
        value,
        Algorithm::Kernel,
        start,
        workers,
    ))
}

/// `S_k(H)` by walking squarefree radicals `r <= H^{2/k}`. Cost tracks the
/// number of conjugate pairs, roughly `H^{2/k}` up to logarithms.
pub fn count_pairs_radical(h: u64, k: u32, workers: usize) -> Result<CountResult> {
    let start = Instant::now();
    let walker = RadicalEnumerator::new(k, h)?;
    let partials = walker.fold_blocks(
        workers,
        || 0u128,
        |c, p| *c += u128::from(root_floor(h / p.y1, k)) * u128::from(root_floor(h / p.y2, k)),
    );
    let value = partials.into_iter().sum();
    Ok(result(
        k,
        h,
        CountKind::Pairs,
        value,
        Algorithm::Radical,
        start,
        workers,
    ))
}

/// Number of coprime pairs `(z1, z2)` in `[1, z]^2`:
/// `sum_{d <= z} mu(d) floor(z/d)^2`.
pub fn coprime_pairs_upto(z: u64, tables: &SieveTables) -> Result<u128> {
    if z == 0 {
        return Ok(0);
    }
    check_table(z, tables)?;
    let mut acc: i128 = 0;
    for d in 1..=z {
        let m = tables.mu(d);
        if m != 0 {
            let q = i128::from(z / d);
            acc += i128::from(m) * q * q;
        }
    }
    Ok(acc as u128)
}

/// `S_k*(H)`: coprime pairs `x1, x2 <= H` with `x1 x2` a k-th power.
///
/// Coprime factors multiply to a k-th power only if each is one, so this
/// counts coprime `(z1, z2)` with `z_i <= floor(H^{1/k})`.
pub fn count_coprime_pairs(h: u64, k: u32, tables: &SieveTables) -> Result<CountResult> {
    check_k(k)?;
    check_h(h)?;
    let start = Instant::now();
    let value = coprime_pairs_upto(root_floor(h, k), tables)?;
    Ok(result(
        k,
        h,
        CountKind::CoprimePairs,
        value,
        Algorithm::Mobius,
        start,
        1,
    ))
}

/// `sum_{n <= N} tau(n^k)`.
pub fn sum_tau_powers_upto(n: u64, k: u32, tables: &SieveTables) -> Result<u128> {
    check_k(k)?;
    if n == 0 {
        return Ok(0);
    }
    check_table(n, tables)?;
    let mut total: u128 = 0;
    for m in 1..=n {
        let mut t: u128 = 1;
        tables.for_each_prime_power(m, |_, e| t *= u128::from(k) * u128::from(e) + 1);
        total += t;
    }
    Ok(total)
}

/// `T_k(H)`, with the summation limit `floor(H^{2/k})` taken exactly.
pub fn sum_tau_powers(h: u64, k: u32, tables: &SieveTables) -> Result<CountResult> {
    check_k(k)?;
    check_h(h)?;
    let start = Instant::now();
    let n = root_floor_u128(u128::from(h) * u128::from(h), k);
    let n = u64::try_from(n).map_err(|_| Error::Range {
        n: u64::MAX,
        limit: tables.limit(),
    })?;
    let value = sum_tau_powers_upto(n, k, tables)?;
    Ok(result(
        k,
        h,
        CountKind::TauPowers,
        value,
        Algorithm::DivisorSum,
        start,
        1,
    ))
}

/// Both weighted sums over k-free `y <= H` whose conjugate is also `<= H`:
/// `U_k = sum 1/rad(y)` and `W_k = sum y^{1/k}/rad(y)`.
///
/// Per-block compensated partials are merged in block order, so the value
/// does not depend on the worker count. The error bound adds the
/// compensated-summation bound to the per-term evaluation error.
pub fn weighted_sums(
    h: u64,
    k: u32,
    workers: usize,
) -> Result<(WeightedSumResult, WeightedSumResult)> {
    let walker = RadicalEnumerator::new(k, h)?;
    let u = UNIT_ROUNDOFF;
    // pow(y, fl(1/k)) perturbs the exponent by u/k relative, i.e. a relative
    // error of up to ln(y) u / k on top of the rounding of pow itself
    let exponent = 1.0 / f64::from(k);
    let blocks = walker.fold_blocks(
        workers,
        || (CompensatedSum::new(), CompensatedSum::new(), 0.0f64),
        |(us, ws, wterm), p| {
            let r = p.r as f64;
            us.add(1.0 / r);
            let y = p.y1 as f64;
            let (root, root_err) = match k {
                2 => (y.sqrt(), u),
                3 => (y.cbrt(), 2.0 * u),
                _ => (y.powf(exponent), 2.0 * u + y.ln() * u / f64::from(k)),
            };
            let term = root / r;
            ws.add(term);
            *wterm += term * (root_err + u);
        },
    );
    let mut us = CompensatedSum::new();
    let mut ws = CompensatedSum::new();
    let mut w_term_err = 0.0;
    for (bu, bw, be) in &blocks {
        us.merge(bu);
        ws.merge(bw);
        w_term_err += be;
    }
    let slack = 1.0 + 4.0 * u;
    let u_res = WeightedSumResult {
        k,
        h,
        kind: WeightKind::U,
        value: us.value(),
        error_bound: (us.error_bound() + u * us.abs_sum()) * slack,
        terms: us.terms(),
    };
    let w_res = WeightedSumResult {
        k,
        h,
        kind: WeightKind::W,
        value: ws.value(),
        error_bound: (ws.error_bound() + w_term_err) * slack,
        terms: ws.terms(),
    };
    Ok((u_res, w_res))
}

/// `U_k(H) = sum 1/rad(y)` over k-free `y <= H` with `rad(y)^k <= H y`.
pub fn u_weight_sum(h: u64, k: u32, workers: usize) -> Result<WeightedSumResult> {
    weighted_sums(h, k, workers).map(|(u, _)| u)
}

/// `W_k(H) = sum y^{1/k}/rad(y)` over the same domain as [`u_weight_sum`].
pub fn w_weight_sum(h: u64, k: u32, workers: usize) -> Result<WeightedSumResult> {
    weighted_sums(h, k, workers).map(|(_, w)| w)
}

/// Both sides of `S_2(H) = sum_{d <= H} S_2*(H/d)`: the left from the
/// kernel counter, the right from the Möbius formula. Needs tables up to `H`.
pub fn s2_dirichlet_identity(h: u64, tables: &SieveTables, workers: usize) -> Result<(u128, u128)> {
    let lhs = count_pairs_kernel(h, 2, tables, workers)?.value;
    let mut rhs: u128 = 0;
    for d in 1..=h {
        // S_2*(X) for real X depends only on floor(sqrt(X)) = isqrt(floor(X))
        rhs += coprime_pairs_upto((h / d).isqrt(), tables)?;
    }
    Ok((lhs, rhs))
}
