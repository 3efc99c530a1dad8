use kpairs_core::constants::leading_constant_ck;
use kpairs_core::verify::*;
use kpairs_core::Error;

#[test]
fn k2_table_stays_in_band() {
    let ck = leading_constant_ck(2, 1e-12).unwrap().value;
    let grid = geometric_grid(1000, 1_000_000, 7).unwrap();
    let rows = convergence_table(2, &grid, CounterChoice::Radical, ck, 1).unwrap();
    let kernel = convergence_table(2, &grid, CounterChoice::Kernel, ck, 1).unwrap();
    assert_eq!(rows, kernel);
    for r in &rows {
        assert!(
            (r.ratio - 1.0).abs() < 0.2,
            "ratio {} at H={}",
            r.ratio,
            r.h
        );
    }
    assert!(residual_band_check(&rows).unwrap().passed);
}

#[test]
fn u3_fit_improves_with_range() {
    let ck = leading_constant_ck(3, 1e-12).unwrap().value;
    let short = fit_u_over_grid(3, &geometric_grid(1000, 100_000, 7).unwrap(), ck, 1).unwrap();
    let long = fit_u_over_grid(3, &geometric_grid(1000, 1_000_000, 7).unwrap(), ck, 1).unwrap();
    assert!(long.relative_deviation < short.relative_deviation);
    assert!(long.relative_deviation < 0.3);
}

#[test]
fn w3_normalized_does_not_grow() {
    let rep = w_growth_check(3, &geometric_grid(1000, 300_000, 9).unwrap(), 1).unwrap();
    assert!(rep.trend.passed, "slope {}", rep.trend.slope);
    assert!(rep.max_normalized.is_finite());
}

#[test]
fn trend_test_flags_power_growth() {
    let grid = geometric_grid(1000, 1_000_000, 13).unwrap();
    let growing: Vec<_> = grid.iter().map(|&h| (h, (h as f64).powf(0.1))).collect();
    let flat: Vec<_> = grid
        .iter()
        .map(|&h| (h, 2.0 + 1.0 / (h as f64).ln()))
        .collect();
    let logish: Vec<_> = grid.iter().map(|&h| (h, (h as f64).ln().ln())).collect();
    assert!(!no_growth_trend(&growing).passed);
    assert!(no_growth_trend(&flat).passed);
    assert!(no_growth_trend(&logish).passed);
}

#[test]
fn cross_validation_reports_probes() {
    let cv = oracle_cross_validate(600, &[2, 3, 4, 5, 6], 1).unwrap();
    assert!(cv.passed);
    assert_eq!(cv.probes, probe_set(600).len() * 5);
}

#[test]
fn rejects_bad_inputs() {
    assert!(matches!(
        ConvergenceRow::new(2, 2, 3, 0.6),
        Err(Error::Domain(_))
    ));
    assert!(matches!(
        fit_leading_coefficient(3, &[(10, 1.0), (20, 1.1)], 0.05),
        Err(Error::Fit(_))
    ));
    // repeated H gives a rank-deficient design
    let same: Vec<_> = (0..8).map(|_| (1000u64, 1.0)).collect();
    assert!(matches!(
        fit_leading_coefficient(3, &same, 0.05),
        Err(Error::Fit(_))
    ));
    assert!(geometric_grid(0, 10, 3).is_err());
}
