//! Structural decompositions of integers relative to k-th powers.
//!
//! Every `x` splits uniquely as `y * z^k` with `y` k-free; every k-free `y`
//! splits as `u_1 u_2^2 ... u_{k-1}^{k-1}` with squarefree, pairwise coprime
//! `u_j`; and two k-free numbers multiply to a k-th power exactly when they
//! share a radical `r` and their exponents at each prime of `r` sum to `k`.
//! The last fact drives [`RadicalEnumerator`], which lists every such pair
//! with both members at most `H` by walking squarefree `r <= H^{2/k}`.

use serde::Serialize;

use crate::arith::{check_k, root_floor_u128, SieveTables};
use crate::par;
use crate::{Error, Result};

/// `x = y * z^k` with `y` k-free.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct KFreeDecomposition {
    pub x: u64,
    pub k: u32,
    pub y: u64,
    pub z: u64,
}

/// `y = prod u_j^j`; `parts[j - 1] = u_j` for `j = 1..k-1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SquarefreeTower {
    pub k: u32,
    pub parts: Vec<u64>,
}

impl SquarefreeTower {
    pub fn reconstruct(&self) -> u128 {
        self.parts
            .iter()
            .zip(1u32..)
            .map(|(&u, j)| u128::from(u).pow(j))
            .product()
    }
}

/// A conjugate pair of k-free integers sharing the radical `r`.
///
/// `y1 = prod p^{e_p}`, `y2 = prod p^{k - e_p}` over the primes of `r`,
/// so `y1 * y2 = r^k`. Borrowed from the enumerator's scratch space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RadicalPair<'a> {
    pub k: u32,
    pub r: u64,
    pub primes: &'a [u64],
    pub exponents: &'a [u32],
    pub y1: u64,
    pub y2: u64,
}

fn domain_not_kfree(y: u64, k: u32) -> Error {
    Error::Domain(format!("{y} is not {k}-free"))
}

/// Splits `x` into its k-free part and k-th-power root.
pub fn kfree_decompose(x: u64, k: u32, tables: &SieveTables) -> Result<KFreeDecomposition> {
    check_k(k)?;
    let f = crate::arith::factorize(x, tables)?;
    let (mut y, mut z) = (1u64, 1u64);
    for (p, e) in f.factors {
        y *= p.pow(e % k);
        z *= p.pow(e / k);
    }
    Ok(KFreeDecomposition { x, k, y, z })
}

/// The squarefree tower of a k-free `y`: `u_j` collects the primes that
/// divide `y` exactly `j` times.
pub fn squarefree_tower(y: u64, k: u32, tables: &SieveTables) -> Result<SquarefreeTower> {
    check_k(k)?;
    let f = crate::arith::factorize(y, tables)?;
    let mut parts = vec![1u64; k as usize - 1];
    for (p, e) in f.factors {
        if e >= k {
            return Err(domain_not_kfree(y, k));
        }
        parts[e as usize - 1] *= p;
    }
    Ok(SquarefreeTower { k, parts })
}

/// The unique k-free `y2` with `y * y2 = rad(y)^k`.
///
/// `y2` can exceed `y` by a lot (`2 -> 2^{k-1}`), hence the wide result.
pub fn conjugate_kfree(y: u64, k: u32, tables: &SieveTables) -> Result<u128> {
    check_k(k)?;
    let f = crate::arith::factorize(y, tables)?;
    let mut y2: Option<u128> = Some(1);
    for (p, e) in f.factors {
        if e >= k {
            return Err(domain_not_kfree(y, k));
        }
        y2 = y2.and_then(|v| {
            u128::from(p)
                .checked_pow(k - e)
                .and_then(|q| v.checked_mul(q))
        });
    }
    y2.ok_or_else(|| Error::Domain(format!("conjugate of {y} for k={k} exceeds 128 bits")))
}

/// Conjugate of a k-free `y`, or `None` when it exceeds `bound`. Hot-loop
/// variant without range checks.
#[inline]
pub(crate) fn conjugate_bounded(y: u64, k: u32, bound: u64, tables: &SieveTables) -> Option<u64> {
    let mut y2: u64 = 1;
    let mut over = false;
    tables.for_each_prime_power(y, |p, e| {
        if over {
            return;
        }
        match p.checked_pow(k - e).and_then(|q| y2.checked_mul(q)) {
            Some(v) if v <= bound => y2 = v,
            _ => over = true,
        }
    });
    (!over).then_some(y2)
}

/// Squarefree radicals processed per block.
pub const RADICAL_BLOCK: u64 = 1 << 14;

/// Enumerates all conjugate k-free pairs `(y1, y2)` with `y1, y2 <= H`.
///
/// Radicals `r` run over squarefree integers up to `floor(H^{2/k})` (since
/// `r^k = y1 y2 <= H^2`), in ascending order, cut into fixed blocks of
/// [`RADICAL_BLOCK`]. Within each `r` the exponent vectors are expanded
/// depth first with both partial products pruned against `H`.
#[derive(Debug)]
pub struct RadicalEnumerator {
    k: u32,
    h: u64,
    r_max: u64,
    tables: SieveTables,
}

impl RadicalEnumerator {
    pub fn new(k: u32, h: u64) -> Result<Self> {
        check_k(k)?;
        if h == 0 {
            return Err(Error::Domain("H must be at least 1".into()));
        }
        let r_max = root_floor_u128(u128::from(h) * u128::from(h), k);
        let r_max = u64::try_from(r_max)
            .map_err(|_| Error::Resource(format!("radical bound {r_max} exceeds 64 bits")))?;
        let tables = SieveTables::plain(r_max.max(1))?;
        Ok(RadicalEnumerator {
            k,
            h,
            r_max,
            tables,
        })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn h(&self) -> u64 {
        self.h
    }

    /// Largest radical considered, `floor(H^{2/k})`.
    pub fn r_max(&self) -> u64 {
        self.r_max
    }

    pub fn block_count(&self) -> usize {
        par::block_count(1, self.r_max, RADICAL_BLOCK)
    }

    /// Visits the pairs whose radical lies in block `index`; returns how many.
    pub fn visit_block(&self, index: usize, visitor: &mut impl FnMut(&RadicalPair)) -> u64 {
        let (lo, hi) = par::block_bounds(1, self.r_max, RADICAL_BLOCK, index);
        let mut primes: Vec<u64> = Vec::with_capacity(16);
        let mut exps: Vec<u32> = Vec::with_capacity(16);
        let mut suffix: Vec<u128> = Vec::with_capacity(17);
        let mut visited = 0;
        for r in lo..=hi {
            if self.tables.mu(r) == 0 {
                continue;
            }
            primes.clear();
            self.tables.for_each_prime_power(r, |p, _| primes.push(p));
            // suffix[i] = product of primes[i..]; the least either side can still gain
            suffix.clear();
            suffix.resize(primes.len() + 1, 1);
            for i in (0..primes.len()).rev() {
                suffix[i] = suffix[i + 1] * u128::from(primes[i]);
            }
            if suffix[0] > u128::from(self.h) {
                continue;
            }
            exps.clear();
            exps.resize(primes.len(), 0);
            let mut walk = Walk {
                k: self.k,
                h: u128::from(self.h),
                r,
                primes: &primes,
                suffix: &suffix,
                exps: &mut exps,
                visited: 0,
            };
            walk.descend(0, 1, 1, visitor);
            visited += walk.visited;
        }
        visited
    }

    /// Visits every pair in deterministic order; returns the count.
    pub fn for_each(&self, mut visitor: impl FnMut(&RadicalPair)) -> u64 {
        (0..self.block_count())
            .map(|b| self.visit_block(b, &mut visitor))
            .sum()
    }

    /// Folds each block into its own accumulator, running blocks on up to
    /// `workers` threads. Accumulators come back in block order.
    pub fn fold_blocks<T, I, F>(&self, workers: usize, init: I, step: F) -> Vec<T>
    where
        T: Send,
        I: Fn() -> T + Sync + Send,
        F: Fn(&mut T, &RadicalPair) + Sync + Send,
    {
        par::map_blocks(self.block_count(), workers, |b| {
            let mut acc = init();
            self.visit_block(b, &mut |pair| step(&mut acc, pair));
            acc
        })
    }
}

struct Walk<'a> {
    k: u32,
    h: u128,
    r: u64,
    primes: &'a [u64],
    suffix: &'a [u128],
    exps: &'a mut Vec<u32>,
    visited: u64,
}

impl Walk<'_> {
    fn descend(&mut self, i: usize, y1: u128, y2: u128, visitor: &mut impl FnMut(&RadicalPair)) {
        if i == self.primes.len() {
            self.visited += 1;
            visitor(&RadicalPair {
                k: self.k,
                r: self.r,
                primes: self.primes,
                exponents: self.exps,
                y1: y1 as u64,
                y2: y2 as u64,
            });
            return;
        }
        let p = u128::from(self.primes[i]);
        let rest = self.suffix[i + 1];
        // y1 grows with e, y2 shrinks; walk e upward and stop once y1 is too big
        let mut pe = p;
        for e in 1..self.k {
            let Some(a) = y1.checked_mul(pe) else { break };
            if a.saturating_mul(rest) > self.h {
                break;
            }
            let b = p
                .checked_pow(self.k - e)
                .and_then(|q| y2.checked_mul(q))
                .filter(|b| b.saturating_mul(rest) <= self.h);
            if let Some(b) = b {
                self.exps[i] = e;
                self.descend(i + 1, a, b, visitor);
            }
            pe = match pe.checked_mul(p) {
                Some(v) => v,
                None => break,
            };
        }
    }
}

/// Visits every conjugate pair with `y1, y2 <= H`; returns the count.
pub fn enumerate_radical_pairs(k: u32, h: u64, visitor: impl FnMut(&RadicalPair)) -> Result<u64> {
    Ok(RadicalEnumerator::new(k, h)?.for_each(visitor))
}
