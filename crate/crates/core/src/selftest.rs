//! Small-scale run of the library's invariants, for the `selftest`
//! subcommand and quick sanity checks after a build. The full-size versions
//! live in the test suites.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use crate::arith::{
    build_sieves, factorize, integer_kth_root, is_kfree, is_kth_power, tau_of_power, SieveTables,
};
use crate::constants::{euler_product_pk, factor_is_positive, residue_cross_check};
use crate::counters::{
    count_coprime_pairs, count_pairs_kernel, count_pairs_naive, count_pairs_radical,
    s2_dirichlet_identity, weighted_sums,
};
use crate::decomp::{conjugate_kfree, enumerate_radical_pairs, kfree_decompose, squarefree_tower};
use crate::verify::{fit_leading_coefficient, geometric_grid, probe_set};
use crate::Result;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, outcome: Result<std::result::Result<(), String>>) -> Check {
    match outcome {
        Ok(Ok(())) => Check {
            name,
            passed: true,
            detail: String::new(),
        },
        Ok(Err(detail)) => Check {
            name,
            passed: false,
            detail,
        },
        Err(e) => Check {
            name,
            passed: false,
            detail: e.to_string(),
        },
    }
}

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Ok(Err(format!($($fmt)+)));
        }
    };
}

type Outcome = Result<std::result::Result<(), String>>;

fn factorization_reconstructs(t: &SieveTables) -> Outcome {
    for n in 1..=t.limit() {
        let f = factorize(n, t)?;
        ensure!(
            f.product() == u128::from(n),
            "factorize({n}) = {:?}",
            f.factors
        );
    }
    Ok(Ok(()))
}

fn kfree_matches_trial_division(t: &SieveTables) -> Outcome {
    for k in 2..=6u32 {
        for n in 1..=10_000u64 {
            let trial = (2..)
                .map_while(|p: u64| p.checked_pow(k).filter(|&q| q <= n))
                .all(|q| n % q != 0);
            ensure!(is_kfree(n, k, t)? == trial, "is_kfree({n}, {k})");
        }
    }
    Ok(Ok(()))
}

fn roots_bracket() -> Outcome {
    for n in 0..=10_000u64 {
        for k in 1..=6u32 {
            let r = integer_kth_root(n, k)?;
            ensure!(r.pow(k) <= n && (r + 1).pow(k) > n, "root({n}, {k}) = {r}");
        }
    }
    Ok(Ok(()))
}

fn tau_matches_divisors(t: &SieveTables) -> Outcome {
    for n in 1..=300u64 {
        for k in [2u32, 3] {
            let m = u128::from(n).pow(k);
            let direct = (1..=m.isqrt())
                .filter(|d| m % d == 0)
                .map(|d| if d * d == m { 1 } else { 2 })
                .sum::<u64>();
            ensure!(tau_of_power(n, k, t)? == direct, "tau({n}^{k})");
        }
    }
    Ok(Ok(()))
}

fn mobius_matches_definition(t: &SieveTables) -> Outcome {
    for n in 1..=10_000u64 {
        let f = factorize(n, t)?;
        let expect = if f.factors.iter().any(|&(_, e)| e > 1) {
            0
        } else if f.factors.len() % 2 == 0 {
            1
        } else {
            -1
        };
        ensure!(t.mobius(n)? == expect, "mu({n})");
    }
    Ok(Ok(()))
}

fn decompositions(t: &SieveTables) -> Outcome {
    for k in 2..=5u32 {
        for x in 1..=10_000u64 {
            let d = kfree_decompose(x, k, t)?;
            ensure!(
                d.y * d.z.pow(k) == x && is_kfree(d.y, k, t)?,
                "decompose({x}, {k})"
            );
            if !is_kfree(x, k, t)? {
                continue;
            }
            let tower = squarefree_tower(x, k, t)?;
            ensure!(tower.reconstruct() == u128::from(x), "tower({x}, {k})");
            let c = conjugate_kfree(x, k, t)?;
            ensure!(
                crate::arith::is_kth_power_u128(u128::from(x) * c, k),
                "{x} * conj not a {k}-th power"
            );
            if c <= u128::from(t.limit()) {
                ensure!(
                    conjugate_kfree(c as u64, k, t)? == u128::from(x),
                    "involution at {x}"
                );
            }
        }
    }
    Ok(Ok(()))
}

fn enumeration_complete(t: &SieveTables) -> Outcome {
    let h = 300u64;
    for k in 2..=4u32 {
        let mut visited = Vec::new();
        enumerate_radical_pairs(k, h, |p| visited.push((p.y1, p.y2)))?;
        visited.sort_unstable();
        let mut brute = Vec::new();
        for a in 1..=h {
            for b in 1..=h {
                if is_kfree(a, k, t)? && is_kfree(b, k, t)? && is_kth_power(a * b, k) {
                    brute.push((a, b));
                }
            }
        }
        ensure!(visited == brute, "pair sets differ for k={k}");
    }
    Ok(Ok(()))
}

fn counters_agree() -> Outcome {
    let h_max = 300;
    for k in 2..=6u32 {
        let t = build_sieves(h_max, k)?;
        let mut prev = 0;
        for h in probe_set(h_max) {
            let naive = count_pairs_naive(h, k, 1)?.value;
            let kernel = count_pairs_kernel(h, k, &t, 2)?.value;
            let radical = count_pairs_radical(h, k, 2)?.value;
            ensure!(
                naive == kernel && kernel == radical,
                "H={h} k={k}: {naive} {kernel} {radical}"
            );
            let floor_sq = u128::from(integer_kth_root(h, k)?).pow(2);
            ensure!(
                naive >= prev && naive >= floor_sq,
                "monotonicity at H={h} k={k}"
            );
            prev = naive;
        }
    }
    Ok(Ok(()))
}

fn dirichlet(t: &SieveTables) -> Outcome {
    for h in 1..=500 {
        let (l, r) = s2_dirichlet_identity(h, t, 1)?;
        ensure!(l == r, "H={h}: {l} != {r}");
    }
    Ok(Ok(()))
}

fn coprime_formula(t: &SieveTables) -> Outcome {
    for k in [2u32, 3] {
        for h in [1u64, 7, 100, 1000, 9999, 40_000] {
            let z = integer_kth_root(h, k)?;
            let brute = (1..=z)
                .flat_map(|a| (1..=z).map(move |b| (a, b)))
                .filter(|&(a, b)| num_integer::gcd(a, b) == 1)
                .count() as u128;
            ensure!(count_coprime_pairs(h, k, t)?.value == brute, "S*({h}, {k})");
        }
    }
    Ok(Ok(()))
}

fn weighted_sums_exact() -> Outcome {
    for k in 2..=4u32 {
        let (u, _) = weighted_sums(1000, k, 2)?;
        let mut exact = BigRational::zero();
        enumerate_radical_pairs(k, 1000, |p| {
            exact += BigRational::new(BigInt::from(1), BigInt::from(p.r));
        })?;
        let e = exact.to_f64().unwrap_or(f64::NAN);
        ensure!(
            (u.value - e).abs() <= u.error_bound,
            "U_{k}(1000) off by {}",
            u.value - e
        );
    }
    Ok(Ok(()))
}

fn workers_agree() -> Outcome {
    let t = build_sieves(20_000, 3)?;
    let a = count_pairs_kernel(20_000, 3, &t, 1)?.value;
    let b = count_pairs_kernel(20_000, 3, &t, 3)?.value;
    let c = count_pairs_radical(20_000, 3, 2)?.value;
    ensure!(
        a == b && b == c,
        "kernel/radical across workers: {a} {b} {c}"
    );
    let (u1, w1) = weighted_sums(1_000_000, 3, 1)?;
    let (u2, w2) = weighted_sums(1_000_000, 3, 4)?;
    ensure!(
        u1.value.to_bits() == u2.value.to_bits() && w1.value.to_bits() == w2.value.to_bits(),
        "weighted sums differ across workers"
    );
    Ok(Ok(()))
}

fn constants() -> Outcome {
    for k in 2..=20 {
        ensure!(residue_cross_check(k)?.holds, "residue identity k={k}");
        ensure!(factor_is_positive(k)?, "factor sign k={k}");
    }
    let p2 = euler_product_pk(2, 1e-9)?;
    let six_over_pi2 = 6.0 / (std::f64::consts::PI * std::f64::consts::PI);
    ensure!(
        (p2.value - six_over_pi2).abs() <= 1e-9,
        "P_2 = {}",
        p2.value
    );
    for k in 2..=12 {
        let p = euler_product_pk(k, 1e-10)?;
        ensure!(
            p.value * (1.0 - p.error_bound) > 0.0 && p.value * (1.0 + p.error_bound) < 1.0,
            "P_{k} outside (0, 1)"
        );
    }
    Ok(Ok(()))
}

fn fit_recovery() -> Outcome {
    let q = [0.3, -0.2, 0.05, 0.01];
    let grid = geometric_grid(1000, 10_000_000, 12)?;
    let samples: Vec<(u64, f64)> = grid
        .iter()
        .map(|&h| {
            let l = (h as f64).ln();
            (h, q.iter().rev().fold(0.0, |acc, c| acc * l + c))
        })
        .collect();
    let rep = fit_leading_coefficient(4, &samples, q[3])?;
    for (a, b) in rep.coefficients.iter().zip(q) {
        ensure!(
            (a - b).abs() <= 1e-9 * b.abs().max(1.0),
            "fit coefficient {a} vs {b}"
        );
    }
    Ok(Ok(()))
}

/// Runs every check; never stops at the first failure.
pub fn run() -> Vec<Check> {
    let tables = match SieveTables::plain(100_000) {
        Ok(t) => t,
        Err(e) => {
            return vec![Check {
                name: "sieve",
                passed: false,
                detail: e.to_string(),
            }]
        }
    };
    vec![
        check(
            "factorization reconstructs n",
            factorization_reconstructs(&tables),
        ),
        check(
            "k-free flags match trial division",
            kfree_matches_trial_division(&tables),
        ),
        check("integer roots bracket n", roots_bracket()),
        check(
            "tau(n^k) matches divisor listing",
            tau_matches_divisors(&tables),
        ),
        check(
            "Möbius matches definition",
            mobius_matches_definition(&tables),
        ),
        check(
            "decompositions, towers, conjugates",
            decompositions(&tables),
        ),
        check(
            "radical enumeration is complete",
            enumeration_complete(&tables),
        ),
        check("naive = kernel = radical, monotone", counters_agree()),
        check("Dirichlet identity for k = 2", dirichlet(&tables)),
        check("coprime count matches gcd loop", coprime_formula(&tables)),
        check("U_k matches exact rational sum", weighted_sums_exact()),
        check("results independent of workers", workers_agree()),
        check("constants: residues, signs, P_k range", constants()),
        check("log-polynomial fit recovers model", fit_recovery()),
    ]
}

#[cfg(test)]
mod tests {
    #[test]
    fn all_checks_pass() {
        for c in super::run() {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }
}
