use kpairs_core::arith::SieveTables;
use kpairs_core::constants::*;

/// Plain product over `p <= 10^6` with a crude tail bound:
/// `|log f(p)| <= 2 (k-1)^2 / p^2` once `p >= 2(k-1)`, so the tail in
/// log is at most `2 (k-1)^2 / M`.
fn truncated_product(k: u32, primes: &[u32]) -> (f64, f64) {
    let km1 = f64::from(k - 1);
    let mut log = 0.0;
    for &p in primes {
        let x = 1.0 / f64::from(p);
        log += km1 * (-x).ln_1p() + (km1 * x).ln_1p();
    }
    let m = f64::from(*primes.last().unwrap());
    let tail = 2.0 * km1 * km1 / m;
    let rounding = primes.len() as f64 * 8.0 * f64::EPSILON;
    (log.exp(), (tail + rounding).exp_m1())
}

#[test]
fn accelerated_product_overlaps_truncated_product() {
    let t = SieveTables::plain(1_000_000).unwrap();
    for k in 2..=12 {
        let fast = euler_product_pk(k, 1e-11).unwrap();
        let (slow, slow_err) = truncated_product(k, t.primes());
        let gap = (fast.value - slow).abs() / fast.value;
        assert!(
            gap <= fast.error_bound + slow_err,
            "k={k}: gap {gap:e}, bounds {:e} {slow_err:e}",
            fast.error_bound
        );
        // the truncated product really is coarser
        assert!(slow_err > 100.0 * fast.error_bound);
    }
}

#[test]
fn p2_against_closed_form() {
    let exact = 6.0 / (std::f64::consts::PI * std::f64::consts::PI);
    for eps in [1e-6, 1e-9] {
        let p = euler_product_pk(2, eps).unwrap();
        assert!((p.value - exact).abs() <= eps);
    }
}

#[test]
fn p3_crosscheck_against_long_product() {
    // product to 10^5 plus its tail bound brackets the accelerated value
    let t = SieveTables::plain(100_000).unwrap();
    let (slow, slow_err) = truncated_product(3, t.primes());
    let fast = euler_product_pk(3, 1e-6).unwrap();
    assert!((fast.value - slow).abs() <= slow_err * slow + fast.error_bound);
    assert!((fast.value - 0.2867).abs() < 1e-4);
}

#[test]
fn ck_decomposes_into_parts() {
    for k in 2..=10 {
        let b = constant_bundle(k, 1e-12).unwrap();
        assert!(b.ck.value > 0.0);
        assert!(b.ck.error_bound <= 1e-12 + 1e-15);
        assert!(residue_cross_check(k).unwrap().holds);
    }
}

#[test]
fn residue_identity_for_larger_k() {
    for k in [21, 30, 40, 64] {
        assert!(residue_cross_check(k).unwrap().holds, "k={k}");
    }
}
