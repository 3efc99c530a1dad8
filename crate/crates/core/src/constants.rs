//! The constants of the leading term.
//!
//! ```text
//! P_k = prod_p (1 - 1/p)^{k-1} (1 + (k-1)/p)
//! c_k = P_k / ((k-1)!)^2 * F_k
//! F_k = 1 + k^{-(k-2)} sum_{k/2 < m <= k-1} (-1)^{k-m} (2m-k)^{k-1} C(k-1, m) / (k-m)
//! ```
//!
//! `F_k` and the residue multipliers are exact rationals. `P_k` is computed
//! in double precision with a propagated error bound: primes up to
//! a cutoff `Q >= 2(k-1)` are multiplied in directly, and the remaining
//! primes enter through
//!
//! ```text
//! log prod_{p > Q} f(p) = sum_{n >= 2} a_n P_{>Q}(n),
//! a_n = (-(k-1) + (-1)^{n+1} (k-1)^n) / n,
//! ```
//!
//! where `P_{>Q}(n) = sum_{p > Q} p^{-n}` is a tail of the prime zeta
//! function. `a_1 = 0`, and `(k-1)/p < 1/2` past the cutoff, so the series
//! converges geometrically.

use std::sync::OnceLock;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::arith::{check_k, SieveTables};
use crate::sum::UNIT_ROUNDOFF;
use crate::{Error, Result};

/// Primes past the cutoff summed directly when that beats the zeta route.
const DIRECT_PRIME_LIMIT: u64 = 1_000_000;
/// Smallest cutoff for the direct product.
const MIN_CUTOFF: u64 = 16;
const MAX_SERIES_TERMS: u32 = 400;

fn primes() -> &'static [u32] {
    static PRIMES: OnceLock<Vec<u32>> = OnceLock::new();
    PRIMES.get_or_init(|| {
        SieveTables::build(DIRECT_PRIME_LIMIT, None, Default::default())
            .map(|t| t.primes().to_vec())
            .unwrap_or_default()
    })
}

/// Euler product `P_k` with its relative error bound.
#[derive(Debug, Clone, Serialize)]
pub struct PkEstimate {
    pub k: u32,
    pub value: f64,
    /// Bound on `|value - P_k| / P_k`.
    pub error_bound: f64,
    /// Primes `p <= cutoff` were multiplied directly.
    pub cutoff: u64,
    /// Number of terms `n = 2..` of the log series used.
    pub series_terms: u32,
}

/// `c_k` with its relative error bound.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CkEstimate {
    pub k: u32,
    pub value: f64,
    pub error_bound: f64,
}

fn ratio_str<S: Serializer>(r: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&fraction_string(r))
}

fn ratio_pairs<S: Serializer>(
    v: &[(u32, BigRational)],
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeMap;
    let mut m = s.serialize_map(Some(v.len()))?;
    for (idx, r) in v {
        m.serialize_entry(&idx.to_string(), &fraction_string(r))?;
    }
    m.end()
}

/// `"p/q"` in lowest terms (`"p/1"` for integers).
pub fn fraction_string(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Residue multipliers: each residue is the stored rational times `P_k`.
#[derive(Debug, Clone, Serialize)]
pub struct ResidueSet {
    pub k: u32,
    #[serde(serialize_with = "ratio_str")]
    pub l0: BigRational,
    /// `(m, L_m / P_k)` for `k/2 < m <= k-1`.
    #[serde(serialize_with = "ratio_pairs")]
    pub lm: Vec<(u32, BigRational)>,
}

/// Outcome of comparing the residue combination with `F_k / ((k-1)!)^2`.
#[derive(Debug, Clone, Serialize)]
pub struct ResidueCheck {
    pub k: u32,
    pub holds: bool,
    /// `L_0 + sum L_m / (m - k)`, as a multiple of `P_k`.
    #[serde(serialize_with = "ratio_str")]
    pub residue_sum: BigRational,
    /// `F_k / ((k-1)!)^2`.
    #[serde(serialize_with = "ratio_str")]
    pub closed_form: BigRational,
}

/// Everything known about the leading constant for one `k`.
#[derive(Debug, Clone, Serialize)]
pub struct ConstantBundle {
    pub k: u32,
    pub pk: PkEstimate,
    #[serde(serialize_with = "ratio_str")]
    pub factor: BigRational,
    pub ck: CkEstimate,
    pub residues: ResidueSet,
}

fn factorial(n: u32) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, i| acc * i)
}

fn binomial(n: u32, r: u32) -> BigInt {
    if r > n {
        return BigInt::zero();
    }
    factorial(n) / (factorial(r) * factorial(n - r))
}

fn int(v: impl Into<BigInt>) -> BigRational {
    BigRational::from_integer(v.into())
}

/// The `m` with `k/2 < m <= k-1`.
fn upper_half(k: u32) -> impl Iterator<Item = u32> {
    (k / 2 + 1..k).filter(move |&m| 2 * m > k)
}

/// `F_k`, the rational factor of `c_k` beside `P_k / ((k-1)!)^2`.
pub fn combinatorial_factor(k: u32) -> Result<BigRational> {
    check_k(k)?;
    let mut sum = BigRational::zero();
    for m in upper_half(k) {
        let sign = if (k - m).is_multiple_of(2) { 1 } else { -1 };
        let num = BigInt::from(sign) * BigInt::from(2 * m - k).pow(k - 1) * binomial(k - 1, m);
        sum += BigRational::new(num, BigInt::from(k - m));
    }
    Ok(BigRational::one() + sum / int(BigInt::from(k).pow(k - 2)))
}

/// `L_0 / P_k` and `L_m / P_k` for `k/2 < m <= k-1`.
pub fn residue_multipliers(k: u32) -> Result<ResidueSet> {
    check_k(k)?;
    let f2 = factorial(k - 1).pow(2u32);
    let l0 = BigRational::new(BigInt::one(), f2.clone());
    let denom = f2 * BigInt::from(k).pow(k - 2);
    let lm = upper_half(k)
        .map(|m| {
            let sign = if (k - m - 1).is_multiple_of(2) { 1 } else { -1 };
            let num = BigInt::from(sign) * BigInt::from(2 * m - k).pow(k - 1) * binomial(k - 1, m);
            (m, BigRational::new(num, denom.clone()))
        })
        .collect();
    Ok(ResidueSet { k, l0, lm })
}

/// Checks `L_0 + sum_{k/2<m<=k-1} L_m / (m - k) = F_k / ((k-1)!)^2` exactly,
/// on the multipliers of `P_k`.
pub fn residue_cross_check(k: u32) -> Result<ResidueCheck> {
    let res = residue_multipliers(k)?;
    let mut residue_sum = res.l0.clone();
    for (m, l) in &res.lm {
        residue_sum += l / int(i64::from(*m) - i64::from(k));
    }
    let closed_form = combinatorial_factor(k)? / int(factorial(k - 1).pow(2u32));
    Ok(ResidueCheck {
        k,
        holds: residue_sum == closed_form,
        residue_sum,
        closed_form,
    })
}

const BERNOULLI_2J: [f64; 8] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
];

/// `zeta(s) - 1` for real `s >= 2` by Euler–Maclaurin with 20 leading
/// terms; the truncation error is far below double precision.
pub fn zeta_minus_one(s: f64) -> f64 {
    const N: f64 = 20.0;
    let mut acc = 0.0;
    // small terms first
    for n in (2..20).rev() {
        acc += (n as f64).powf(-s);
    }
    let nps = N.powf(-s);
    let mut tail = N * nps / (s - 1.0) + 0.5 * nps;
    // rising factorial s (s+1) ... (s+2j-2) times N^{-s-2j+1} / (2j)!
    let mut coef = s * nps / N;
    let mut fact = 2.0;
    for (j, b) in BERNOULLI_2J.iter().enumerate() {
        tail += b / fact * coef;
        let j2 = 2.0 * (j as f64 + 1.0);
        coef *= (s + j2 - 1.0) * (s + j2) / (N * N);
        fact *= (j2 + 1.0) * (j2 + 2.0);
    }
    acc + tail
}

fn small_mobius(mut n: u32) -> i32 {
    let mut mu = 1;
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            n /= p;
            if n.is_multiple_of(p) {
                return 0;
            }
            mu = -mu;
        }
        p += 1;
    }
    if n > 1 {
        mu = -mu;
    }
    mu
}

/// `P(s) = sum_p p^{-s}` via `sum_j mu(j)/j log zeta(js)`, with a bound on
/// its absolute error. `s >= 2`.
fn prime_zeta(s: f64) -> (f64, f64) {
    let lead = zeta_minus_one(s).ln_1p();
    let mut acc = 0.0;
    let mut j = 1u32;
    loop {
        let lz = zeta_minus_one(s * f64::from(j)).ln_1p();
        if lz < lead * 1e-20 {
            break;
        }
        let mu = small_mobius(j);
        if mu != 0 {
            acc += f64::from(mu) * lz / f64::from(j);
        }
        j += 1;
    }
    (acc, 16.0 * UNIT_ROUNDOFF * lead)
}

/// `sum_{p > q} p^{-s}` with an absolute error bound; takes the better of
/// the zeta route and direct summation with an integral tail bound.
fn prime_zeta_tail(s: u32, q: u64) -> (f64, f64) {
    let s_f = f64::from(s);
    let ps = primes();

    let (total, total_err) = prime_zeta(s_f);
    let below = ps.partition_point(|&p| u64::from(p) <= q);
    let head: f64 = ps[..below]
        .iter()
        .rev()
        .map(|&p| f64::from(p).powi(-(s as i32)))
        .sum();
    let via_zeta = (total - head, total_err + 16.0 * UNIT_ROUNDOFF * head);

    let top = ps.last().map(|&p| u64::from(p)).unwrap_or(q).max(q);
    let direct: f64 = ps
        .iter()
        .rev()
        .take_while(|&&p| u64::from(p) > q)
        .map(|&p| f64::from(p).powi(-(s as i32)))
        .sum();
    // sum_{n > top} n^{-s} <= top^{1-s} / (s-1)
    let bound = (top as f64).powf(1.0 - s_f) / (s_f - 1.0);
    let via_direct = (
        direct + bound / 2.0,
        bound / 2.0 + 16.0 * UNIT_ROUNDOFF * direct,
    );

    if via_direct.1 < via_zeta.1 {
        via_direct
    } else {
        via_zeta
    }
}

/// `P_k` to relative accuracy `target_rel_error`.
pub fn euler_product_pk(k: u32, target_rel_error: f64) -> Result<PkEstimate> {
    check_k(k)?;
    if !(target_rel_error > 0.0 && target_rel_error < 1.0) {
        return Err(Error::Domain(format!(
            "target relative error must lie in (0, 1), got {target_rel_error}"
        )));
    }
    let u = UNIT_ROUNDOFF;
    let km1 = f64::from(k - 1);
    let cutoff = (2 * u64::from(k - 1)).max(MIN_CUTOFF);

    // direct part
    let mut log_p = 0.0;
    let mut err = 0.0;
    for &p in primes().iter().take_while(|&&p| u64::from(p) <= cutoff) {
        let x = 1.0 / f64::from(p);
        let a = km1 * (-x).ln_1p();
        let b = (km1 * x).ln_1p();
        log_p += a + b;
        err += 4.0 * u * (a.abs() + b.abs());
    }

    // series part: |a_n P_{>Q}(n)| <= 2 Q rho^n / (n (n-1)), rho = (k-1)/Q
    let q = cutoff as f64;
    let rho = km1 / q;
    let tail_after = |n: u32| {
        let nf = f64::from(n);
        2.0 * q * rho.powf(nf + 1.0) / ((nf + 1.0) * nf) / (1.0 - rho)
    };
    let mut series = 0.0;
    let mut series_abs = 0.0;
    let mut terms = 0;
    let mut n = 2u32;
    loop {
        let nf = f64::from(n);
        let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
        let a_n = (-km1 + sign * km1.powf(nf)) / nf;
        let (pz, pz_err) = prime_zeta_tail(n, cutoff);
        series += a_n * pz;
        series_abs += (a_n * pz).abs();
        err += a_n.abs() * pz_err;
        terms += 1;
        let tail = tail_after(n);
        if tail <= 0.01 * target_rel_error || n >= MAX_SERIES_TERMS {
            err += tail;
            break;
        }
        n += 1;
    }
    log_p += series;
    err += 4.0 * u * series_abs + 2.0 * u * log_p.abs();

    let value = log_p.exp();
    // exp maps an absolute log error e to relative error e^e - 1
    let error_bound = err.exp_m1() + 2.0 * u;
    if error_bound > target_rel_error {
        return Err(Error::Precision {
            target: target_rel_error,
            achieved: error_bound,
        });
    }
    Ok(PkEstimate {
        k,
        value,
        error_bound,
        cutoff,
        series_terms: terms,
    })
}

/// `c_k = P_k F_k / ((k-1)!)^2` to relative accuracy `target_rel_error`.
pub fn leading_constant_ck(k: u32, target_rel_error: f64) -> Result<CkEstimate> {
    let pk = euler_product_pk(k, target_rel_error)?;
    ck_from(&pk)
}

fn ck_from(pk: &PkEstimate) -> Result<CkEstimate> {
    let k = pk.k;
    let mult = combinatorial_factor(k)? / int(factorial(k - 1).pow(2u32));
    let m = mult
        .to_f64()
        .ok_or_else(|| Error::Domain(format!("c_{k} multiplier not representable")))?;
    Ok(CkEstimate {
        k,
        value: pk.value * m,
        // rational -> f64 and the product each round once
        error_bound: pk.error_bound + 2.5 * UNIT_ROUNDOFF,
    })
}

/// `P_k`, `F_k`, `c_k` and the residue multipliers for one `k`.
pub fn constant_bundle(k: u32, target_rel_error: f64) -> Result<ConstantBundle> {
    let pk = euler_product_pk(k, target_rel_error)?;
    let ck = ck_from(&pk)?;
    Ok(ConstantBundle {
        k,
        factor: combinatorial_factor(k)?,
        ck,
        residues: residue_multipliers(k)?,
        pk,
    })
}

/// Whether `F_k > 0`, i.e. the leading term is a genuine main term.
pub fn factor_is_positive(k: u32) -> Result<bool> {
    Ok(combinatorial_factor(k)?.is_positive())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn ratio(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn factor_examples() {
        assert_eq!(combinatorial_factor(2).unwrap(), ratio(1, 1));
        assert_eq!(combinatorial_factor(3).unwrap(), ratio(2, 3));
        assert_eq!(combinatorial_factor(4).unwrap(), ratio(1, 2));
        assert!(combinatorial_factor(1).is_err());
        assert_eq!(fraction_string(&ratio(2, 3)), "2/3");
    }

    #[test]
    fn residue_examples() {
        let c = residue_cross_check(3).unwrap();
        assert!(c.holds);
        assert_eq!(c.residue_sum, ratio(1, 6));
        let r = residue_multipliers(3).unwrap();
        assert_eq!(r.l0, ratio(1, 4));
        assert_eq!(r.lm, vec![(2, ratio(1, 12))]);

        let c = residue_cross_check(2).unwrap();
        assert!(c.holds);
        assert_eq!(c.residue_sum, ratio(1, 1));
        assert!(residue_multipliers(2).unwrap().lm.is_empty());

        assert!(residue_cross_check(12).unwrap().holds);
    }

    #[test]
    fn residue_identity_and_positivity_up_to_20() {
        for k in 2..=20 {
            assert!(residue_cross_check(k).unwrap().holds, "k={k}");
            assert!(factor_is_positive(k).unwrap(), "k={k}");
        }
    }

    #[test]
    fn zeta_values() {
        assert!((zeta_minus_one(2.0) - 0.644_934_066_848_226_4).abs() < 4e-17);
        assert!((zeta_minus_one(4.0) - 0.082_323_233_711_138_19).abs() < 4e-17);
        let z3 = 1.202_056_903_159_594_3;
        assert!((zeta_minus_one(3.0) - (z3 - 1.0)).abs() < 1e-16);
        // large s: dominated by 2^{-s}
        let s = 60.0;
        let expect = 2f64.powf(-s) + 3f64.powf(-s);
        assert!((zeta_minus_one(s) - expect).abs() < 1e-16 * expect);
    }

    #[test]
    fn prime_zeta_matches_known_value() {
        // P(2) = 0.452247420041065498506...
        let (v, e) = prime_zeta(2.0);
        assert!((v - 0.452_247_420_041_065_5).abs() < 1e-15);
        assert!(e < 1e-14);
    }

    #[test]
    fn p2_is_inverse_zeta2() {
        for eps in [1e-6, 1e-9, 1e-12] {
            let p = euler_product_pk(2, eps).unwrap();
            assert!((p.value - 6.0 / (PI * PI)).abs() <= eps, "eps={eps}");
            assert!(p.error_bound <= eps);
        }
    }

    #[test]
    fn p3_value() {
        let p = euler_product_pk(3, 1e-6).unwrap();
        assert!((p.value - 0.2867).abs() < 5e-5, "{}", p.value);
    }

    #[test]
    fn pk_within_unit_interval() {
        for k in 2..=20 {
            let p = euler_product_pk(k, 1e-10).unwrap();
            assert!(p.value * (1.0 - p.error_bound) > 0.0);
            assert!(p.value * (1.0 + p.error_bound) < 1.0, "k={k}");
        }
    }

    #[test]
    fn unreachable_precision_is_reported() {
        assert!(matches!(
            euler_product_pk(12, 1e-17),
            Err(Error::Precision { .. })
        ));
        assert!(matches!(euler_product_pk(2, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn ck_examples() {
        let c2 = leading_constant_ck(2, 1e-10).unwrap();
        assert!((c2.value - 6.0 / (PI * PI)).abs() < 1e-10);
        let p3 = euler_product_pk(3, 1e-12).unwrap();
        let c3 = leading_constant_ck(3, 1e-12).unwrap();
        assert!((c3.value - p3.value / 6.0).abs() < 1e-15);
        assert!((c3.value - 0.04779).abs() < 5e-5);
        let p4 = euler_product_pk(4, 1e-12).unwrap();
        let c4 = leading_constant_ck(4, 1e-12).unwrap();
        assert!((c4.value - p4.value / 72.0).abs() < 1e-15);
    }

    #[test]
    fn bundle_is_consistent() {
        let b = constant_bundle(5, 1e-10).unwrap();
        let mult = (b.factor.clone() / int(factorial(4).pow(2u32)))
            .to_f64()
            .unwrap();
        assert!((b.ck.value - b.pk.value * mult).abs() <= b.ck.error_bound * b.ck.value);
        assert_eq!(b.residues.lm.len(), 2);
    }
}
