//! Integer primitives: a linear sieve for smallest prime factors and the
//! Möbius function, optional k-free flags, sieve-backed factorization, and
//! exact integer k-th roots.

use serde::Serialize;

use crate::{Error, Result};

/// Environment variable holding the sieve memory cap in bytes.
pub const SIEVE_MEM_ENV: &str = "KPAIRS_SIEVE_MEM_BYTES";

/// Default sieve memory cap (1 GiB), enough for `N = 10^8` with k-free flags.
pub const DEFAULT_SIEVE_MEM_BYTES: u64 = 1 << 30;

/// Memory cap applied when building sieve tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SieveBudget {
    pub max_bytes: u64,
}

impl Default for SieveBudget {
    fn default() -> Self {
        SieveBudget {
            max_bytes: DEFAULT_SIEVE_MEM_BYTES,
        }
    }
}

impl SieveBudget {
    /// Reads [`SIEVE_MEM_ENV`]; falls back to the default when unset or
    /// unparsable.
    pub fn from_env() -> Self {
        std::env::var(SIEVE_MEM_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<u64>().ok())
            .map(|max_bytes| SieveBudget { max_bytes })
            .unwrap_or_default()
    }

    /// Estimated bytes for tables up to `n`.
    pub fn estimate(n: u64, with_flags: bool) -> u64 {
        let per_entry = 4 + 1 + u64::from(with_flags);
        // prime list: pi(n) < 1.26 n / ln n
        let primes = if n < 17 {
            8
        } else {
            (1.26 * n as f64 / (n as f64).ln()) as u64 * 4
        };
        (n + 1) * per_entry + primes
    }

    pub fn check(&self, n: u64, with_flags: bool) -> Result<()> {
        let need = Self::estimate(n, with_flags);
        if need > self.max_bytes {
            return Err(Error::Resource(format!(
                "sieve up to {n} needs ~{need} bytes, cap is {} (set {SIEVE_MEM_ENV} to raise it)",
                self.max_bytes
            )));
        }
        Ok(())
    }
}

/// Prime factorization `n = prod p^e`, primes ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Factorization {
    pub n: u64,
    pub factors: Vec<(u64, u32)>,
}

impl Factorization {
    /// Recomputes `n` from the factors.
    pub fn product(&self) -> u128 {
        self.factors
            .iter()
            .map(|&(p, e)| u128::from(p).pow(e))
            .product()
    }
}

#[derive(Debug, Clone)]
struct KFreeFlags {
    k: u32,
    flags: Vec<bool>,
}

/// Smallest-prime-factor and Möbius tables for `1..=limit`, plus optional
/// k-free flags for a single `k`.
///
/// Tables are immutable once built and may be shared across threads.
#[derive(Debug, Clone)]
pub struct SieveTables {
    limit: u64,
    // indexed by n; spf[0] = spf[1] = 0
    spf: Vec<u32>,
    mobius: Vec<i8>,
    primes: Vec<u32>,
    kfree: Option<KFreeFlags>,
}

/// Builds tables up to `n` with k-free flags for `k`, under the budget
/// from the environment.
pub fn build_sieves(n: u64, k: u32) -> Result<SieveTables> {
    SieveTables::build(n, Some(k), SieveBudget::from_env())
}

impl SieveTables {
    /// Builds the tables up to `n`. `kfree_for` selects the exponent for
    /// which k-free flags are precomputed.
    pub fn build(n: u64, kfree_for: Option<u32>, budget: SieveBudget) -> Result<Self> {
        if n == 0 {
            return Err(Error::Resource("sieve limit must be at least 1".into()));
        }
        if let Some(k) = kfree_for {
            check_k(k)?;
        }
        if n > u64::from(u32::MAX) {
            return Err(Error::Resource(format!(
                "sieve limit {n} exceeds the 32-bit table range"
            )));
        }
        budget.check(n, kfree_for.is_some())?;

        let len = n as usize + 1;
        let mut spf = vec![0u32; len];
        let mut mobius = vec![0i8; len];
        let mut primes: Vec<u32> = Vec::new();
        mobius[1] = 1;
        for i in 2..len {
            if spf[i] == 0 {
                spf[i] = i as u32;
                mobius[i] = -1;
                primes.push(i as u32);
            }
            let si = spf[i];
            for &p in &primes {
                let m = i * p as usize;
                if p > si || m >= len {
                    break;
                }
                spf[m] = p;
                mobius[m] = if p == si { 0 } else { -mobius[i] };
            }
        }

        let kfree = kfree_for.map(|k| {
            let mut flags = vec![true; len];
            flags[0] = false;
            for &p in &primes {
                let Some(q) = u64::from(p).checked_pow(k).filter(|&q| q <= n) else {
                    break;
                };
                let q = q as usize;
                for m in (q..len).step_by(q) {
                    flags[m] = false;
                }
            }
            KFreeFlags { k, flags }
        });

        Ok(SieveTables {
            limit: n,
            spf,
            mobius,
            primes,
            kfree,
        })
    }

    /// Tables without k-free flags.
    pub fn plain(n: u64) -> Result<Self> {
        Self::build(n, None, SieveBudget::from_env())
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    /// The exponent the k-free flags were built for, if any.
    pub fn kfree_exponent(&self) -> Option<u32> {
        self.kfree.as_ref().map(|f| f.k)
    }

    /// Primes up to the limit, ascending.
    pub fn primes(&self) -> &[u32] {
        &self.primes
    }

    /// `mu(1), ..., mu(limit)`.
    pub fn mobius_values(&self) -> &[i8] {
        &self.mobius[1..]
    }

    /// Smallest prime factors of `2, ..., limit`.
    pub fn spf_values(&self) -> &[u32] {
        &self.spf[2.min(self.spf.len())..]
    }

    pub fn mobius(&self, n: u64) -> Result<i8> {
        self.check_range(n)?;
        Ok(self.mobius[n as usize])
    }

    /// Smallest prime factor of `n >= 2`.
    pub fn spf(&self, n: u64) -> Result<u64> {
        self.check_range(n)?;
        if n < 2 {
            return Err(Error::Domain("1 has no prime factor".into()));
        }
        Ok(u64::from(self.spf[n as usize]))
    }

    fn check_range(&self, n: u64) -> Result<()> {
        if n == 0 || n > self.limit {
            Err(Error::Range {
                n,
                limit: self.limit,
            })
        } else {
            Ok(())
        }
    }

    /// Calls `f(p, e)` for each prime power of `n`, primes ascending.
    /// `n` must lie in `1..=limit`.
    #[inline]
    pub(crate) fn for_each_prime_power(&self, mut n: u64, mut f: impl FnMut(u64, u32)) {
        debug_assert!(n >= 1 && n <= self.limit);
        while n > 1 {
            let p = self.spf[n as usize] as u64;
            let mut e = 0;
            while n.is_multiple_of(p) {
                n /= p;
                e += 1;
            }
            f(p, e);
        }
    }

    /// Unchecked Möbius lookup for hot loops.
    #[inline]
    pub(crate) fn mu(&self, n: u64) -> i8 {
        self.mobius[n as usize]
    }

    /// Unchecked k-free test for hot loops; uses the flag table when it was
    /// built for this `k`.
    #[inline]
    pub(crate) fn kfree_unchecked(&self, n: u64, k: u32) -> bool {
        match &self.kfree {
            Some(f) if f.k == k => f.flags[n as usize],
            _ => {
                let mut ok = true;
                self.for_each_prime_power(n, |_, e| ok &= e < k);
                ok
            }
        }
    }
}

pub(crate) fn check_k(k: u32) -> Result<()> {
    if k < 2 {
        Err(Error::Domain(format!("k must be at least 2, got {k}")))
    } else {
        Ok(())
    }
}

/// Factorization of `n` read off the smallest-prime-factor table.
pub fn factorize(n: u64, tables: &SieveTables) -> Result<Factorization> {
    tables.check_range(n)?;
    let mut factors = Vec::new();
    tables.for_each_prime_power(n, |p, e| factors.push((p, e)));
    Ok(Factorization { n, factors })
}

/// The radical: product of the distinct primes dividing `n`.
pub fn radical(n: u64, tables: &SieveTables) -> Result<u64> {
    tables.check_range(n)?;
    let mut r = 1;
    tables.for_each_prime_power(n, |p, _| r *= p);
    Ok(r)
}

/// Whether no prime `k`-th power divides `n`.
pub fn is_kfree(n: u64, k: u32, tables: &SieveTables) -> Result<bool> {
    check_k(k)?;
    tables.check_range(n)?;
    Ok(tables.kfree_unchecked(n, k))
}

/// Number of divisors of `n^k`, i.e. `prod (k e + 1)`, without forming `n^k`.
pub fn tau_of_power(n: u64, k: u32, tables: &SieveTables) -> Result<u64> {
    tables.check_range(n)?;
    let mut tau: Option<u64> = Some(1);
    tables.for_each_prime_power(n, |_, e| {
        tau = tau
            .and_then(|t| u64::from(k).checked_mul(u64::from(e)).map(|ke| (t, ke + 1)))
            .and_then(|(t, f)| t.checked_mul(f));
    });
    tau.ok_or_else(|| Error::Domain(format!("tau({n}^{k}) overflows 64 bits")))
}

/// `floor(n^(1/k))`, exact.
///
/// Starts from a floating-point estimate and corrects it with exact integer
/// comparisons until `r^k <= n < (r+1)^k`.
pub fn integer_kth_root(n: u64, k: u32) -> Result<u64> {
    if k == 0 {
        return Err(Error::Domain("0-th root is undefined".into()));
    }
    Ok(root_floor(n, k))
}

/// Whether `n` is a perfect `k`-th power (0 and 1 count).
pub fn is_kth_power(n: u64, k: u32) -> bool {
    if k == 0 {
        return n == 1;
    }
    let r = root_floor(n, k);
    r.checked_pow(k) == Some(n)
}

/// [`is_kth_power`] on 128-bit input, for products of two 64-bit values.
pub fn is_kth_power_u128(n: u128, k: u32) -> bool {
    if k == 0 {
        return n == 1;
    }
    let r = root_floor_u128(n, k);
    r.checked_pow(k) == Some(n)
}

/// `floor(n^(1/k))` for `k >= 1`.
///
/// The number of `m >= 1` with `m^k <= H / y` (real division) equals
/// `root_floor(H / y, k)` with integer division: for integers,
/// `m^k <= H/y  <=>  m^k y <= H  <=>  m^k <= floor(H/y)`.
#[inline]
pub fn root_floor(n: u64, k: u32) -> u64 {
    debug_assert!(k >= 1);
    if n < 2 || k == 1 {
        return n;
    }
    if k >= 64 {
        return 1;
    }
    if k == 2 {
        return n.isqrt();
    }
    let x = n as f64;
    let est = if k == 3 {
        x.cbrt()
    } else {
        x.powf(1.0 / f64::from(k))
    };
    let mut r = est as u64;
    while r > 1 && pow_exceeds(r, k, n) {
        r -= 1;
    }
    while !pow_exceeds(r + 1, k, n) {
        r += 1;
    }
    r
}

#[inline]
fn pow_exceeds(r: u64, k: u32, n: u64) -> bool {
    match r.checked_pow(k) {
        Some(v) => v > n,
        None => true,
    }
}

/// `floor(n^(1/k))` on 128-bit input.
pub fn root_floor_u128(n: u128, k: u32) -> u128 {
    debug_assert!(k >= 1);
    if n < 2 || k == 1 {
        return n;
    }
    if k >= 128 {
        return 1;
    }
    if k == 2 {
        return n.isqrt();
    }
    let mut r = (n as f64).powf(1.0 / f64::from(k)) as u128;
    let exceeds = |r: u128| r.checked_pow(k).is_none_or(|v| v > n);
    while r > 1 && exceeds(r) {
        r -= 1;
    }
    while !exceeds(r + 1) {
        r += 1;
    }
    r
}
