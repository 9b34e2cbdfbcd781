use cascade_core::analysis::{
    coarse_exponents, default_h_grid, histogram, large_deviation_spectrum, oscillation, pointwise_holder,
    structure_exponents, Trace, EPS_SCHEDULE, HISTOGRAM_BIN,
};
use cascade_core::catalog;
use cascade_core::convergence::{phi_closed, ReferenceMeasure};
use cascade_core::simulate::build_paths_range;
use num_complex::Complex64;

fn canonical_trace(seed: u64, depth: u32) -> Trace {
    let m = catalog::canonical();
    let p = build_paths_range(&m, &ReferenceMeasure::Lebesgue, seed, depth, depth, 1).unwrap();
    Trace::from_path(&p, depth).unwrap()
}

#[test]
fn canonical_spectrum_is_multifractal() {
    let trace = canonical_trace(10, 14);
    let report = large_deviation_spectrum(&trace, 5..=10, &EPS_SCHEDULE, &default_h_grid(2.0, 0.01)).unwrap();
    let (lo, hi) = report.support().unwrap();
    assert!(hi - lo > 0.1, "{lo}..{hi}");
    // τ is strictly concave for a multifractal path: its chord slopes drop.
    let tau = structure_exponents(&trace, &[0.0, 1.0, 2.0], 6..=12).unwrap();
    let drop = (tau[1].tau - tau[0].tau) - (tau[2].tau - tau[1].tau);
    assert!(drop > 0.1, "{tau:?}");
}

#[test]
fn spectrum_values_are_bounded() {
    let trace = canonical_trace(11, 12);
    let report = large_deviation_spectrum(&trace, 4..=10, &EPS_SCHEDULE, &default_h_grid(2.0, 0.05)).unwrap();
    for row in &report.rows {
        for (n, per_h) in report.generations.iter().zip(&row.per_n) {
            for v in per_h.iter().flatten() {
                assert!(*v <= 1.0 + 2f64.log2() / *n as f64 + 1e-12);
            }
        }
    }
    for h in &report.histograms {
        assert_eq!(h.total(), 1usize << h.n);
    }
}

#[test]
fn structure_exponent_tracks_phi() {
    let phi2 = phi_closed(&catalog::canonical(), &ReferenceMeasure::Lebesgue, 2.0).unwrap().value;
    for seed in [1, 2] {
        let tau = structure_exponents(&canonical_trace(seed, 14), &[2.0], 6..=12).unwrap();
        assert!((tau[0].tau - phi2).abs() < 0.1, "seed {seed}: {} vs {phi2}", tau[0].tau);
    }
}

#[test]
fn weierstrass_reference_is_monofractal() {
    let trace = Trace::weierstrass(14, 40);
    let grid = default_h_grid(2.0, 0.01);
    let report = large_deviation_spectrum(&trace, 5..=10, &EPS_SCHEDULE, &grid).unwrap();
    let peak = grid
        .iter()
        .zip(&report.headline)
        .filter_map(|(h, v)| v.map(|v| (*h, v)))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    assert!((peak.0 - 0.5).abs() <= 0.1, "{peak:?}");
    let ex = coarse_exponents(&trace, 10).unwrap();
    let near = ex.iter().flatten().filter(|a| (**a - 0.5).abs() <= 0.1).count();
    assert!(near as f64 >= 0.9 * ex.len() as f64, "{near}/{}", ex.len());
    let h = pointwise_holder(&trace, 0.3, 4..=12).unwrap().unwrap();
    assert!((h - 0.5).abs() < 0.15, "{h}");
}

#[test]
fn monotone_path_has_zero_tau_at_one() {
    let trace = Trace::from_fn(2, 12, 1, |t| Complex64::new(t * t + t, 0.0));
    let tau = structure_exponents(&trace, &[1.0], 4..=12).unwrap();
    assert!(tau[0].tau.abs() < 1e-9, "{tau:?}");
}

#[test]
fn histogram_bins_of_identity() {
    let ex = coarse_exponents(&Trace::identity(2, 8), 6).unwrap();
    let h = histogram(&ex, 6, HISTOGRAM_BIN);
    assert_eq!(h.total(), 64);
    assert_eq!(h.bins.len(), 1);
    assert!((h.bins[0].0 - 1.0).abs() < HISTOGRAM_BIN);
}

#[test]
fn circle_diameter() {
    let trace = Trace::from_fn(2, 12, 1, |t| Complex64::from_polar(1.0, std::f64::consts::TAU * t));
    assert!((oscillation(&trace, 0.0, 1.0).unwrap() - 2.0).abs() < 1e-6);
    assert!((oscillation(&trace, 0.0, 0.5).unwrap() - 2.0).abs() < 1e-6);
}
