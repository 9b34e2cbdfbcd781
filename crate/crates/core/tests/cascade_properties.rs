use cascade_core::cascades::{
    eval_p_cpc, eval_p_logid, CascadeModel, CellLayer, ConeLayer, ConeRealization, Realization,
};
use cascade_core::catalog;
use cascade_core::convergence::ReferenceMeasure;
use cascade_core::numerics::{complex_estimate, estimate};
use cascade_core::rng::replica_seed;
use cascade_core::simulate::{build_paths, decorrelation_check, martingale_check, self_similarity_check};
use cascade_core::weights::WeightLaw;
use num_complex::Complex64;
use proptest::prelude::*;

const SEED: u64 = 0xC0FFEE;

fn families() -> Vec<(&'static str, CascadeModel)> {
    vec![
        ("canonical", catalog::canonical()),
        ("gaussian", catalog::gaussian_perturbed(0.5)),
        ("cpc", catalog::cpc_lognormal()),
        ("logid", catalog::logid_gaussian(0.5)),
    ]
}

#[test]
fn unit_expectation_of_q() {
    for (name, m) in families() {
        for n in [1, 3, 6] {
            let r = martingale_check(&m, &[0.0, 0.37, 0.9], n, 100_000, SEED + n as u64).unwrap();
            assert!(r.pass, "{name} n={n}: {:?}", r.points);
        }
    }
}

#[test]
fn cpc_layer_mean_is_one() {
    let CascadeModel::CompoundPoisson(m) = catalog::cpc_lognormal() else { unreachable!() };
    let zs: Vec<Complex64> =
        (0..100_000).map(|i| eval_p_cpc(&m, replica_seed(SEED, i), 0.3, 3).unwrap()).collect();
    assert!(complex_estimate(&zs).within(Complex64::new(1.0, 0.0), 4.0));
}

#[test]
fn logid_second_moment_identity() {
    let CascadeModel::LogInfDivisible(m) = catalog::logid_gaussian(0.5) else { unreachable!() };
    let (t, n) = (0.6, 4);
    let lambda = m.cell_geometry(n).approximate_cone_measure(t);
    let psi = m.exponent.moment_exponent(2.0).unwrap();
    assert!((psi - 0.5).abs() < 1e-15);
    let xs: Vec<f64> =
        (0..100_000).map(|i| eval_p_logid(&m, replica_seed(SEED, i), t, n).unwrap().norm_sqr()).collect();
    let e = estimate(&xs);
    assert!(e.within((lambda * psi).exp(), 4.0), "{e:?} vs {}", (lambda * psi).exp());
}

#[test]
fn distant_layers_are_uncorrelated() {
    for (name, m) in families() {
        for n in [2, 4] {
            let r = decorrelation_check(&m, 0.1, n, 20_000, SEED ^ n as u64).unwrap();
            assert!(r.pass, "{name} n={n}: {:?}", r.covariance);
        }
    }
}

#[test]
fn correlated_neighbours_are_detected() {
    // Same b-adic cell: P_n(t) and P_n(s) are the same variable.
    let m = catalog::canonical();
    let xs: Vec<f64> = (0..20_000)
        .map(|i| {
            let r = Realization::new(&m, replica_seed(SEED, i));
            ((r.p(0.26, 2).unwrap() - 1.0) * (r.p(0.3, 2).unwrap() - 1.0).conj()).re
        })
        .collect();
    assert!(!estimate(&xs).within(0.0, 4.0));
}

#[test]
fn rescaled_layers_match_moments() {
    for (name, m) in families() {
        let r = self_similarity_check(&m, 0.7, 3, 20_000, SEED).unwrap();
        assert!(r.pass, "{name}: {:?}", r.moments);
    }
}

#[test]
fn refinement_leaves_coarse_levels_untouched() {
    let CascadeModel::CompoundPoisson(m) = catalog::cpc_lognormal() else { unreachable!() };
    let shallow = ConeRealization::sample(&m, SEED, 4);
    let mut deep = shallow.clone();
    deep.extend_to(&m, 7);
    for (a, b) in shallow.layers.iter().zip(&deep.layers) {
        assert_eq!(a.points, b.points);
    }
    for (_, model) in families() {
        let r = Realization::new(&model, SEED);
        for t in [0.05, 0.5, 0.93] {
            let path = r.q_path(t, 9).unwrap();
            for n in 1..9 {
                assert_eq!(path[n - 1], r.q(t, n as u32).unwrap());
                assert_eq!(path[n], path[n - 1] * r.p(t, n as u32 + 1).unwrap());
            }
        }
    }
}

#[test]
fn badic_q_constant_on_cells() {
    let m = catalog::gaussian_perturbed(0.5);
    let r = Realization::new(&m, SEED);
    let n = 6;
    for w in 0..64u32 {
        let left = w as f64 / 64.0;
        let q0 = r.q(left, n).unwrap();
        for k in 1..8 {
            assert_eq!(r.q(left + k as f64 / 512.0, n).unwrap(), q0);
        }
    }
}

#[test]
fn cpc_layer_breaks_only_at_cone_edges() {
    let CascadeModel::CompoundPoisson(m) = catalog::cpc_lognormal() else { unreachable!() };
    let layer = ConeLayer::sample(&m, SEED, 3, (0.0, 1.0));
    let mut edges: Vec<f64> = layer
        .points
        .iter()
        .flat_map(|p| [p.t - 0.5 * m.beta * p.r, p.t + 0.5 * m.beta * p.r])
        .chain([0.0, 1.0])
        .filter(|e| (0.0..=1.0).contains(e))
        .collect();
    edges.sort_by(f64::total_cmp);
    for pair in edges.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if b - a < 1e-9 {
            continue;
        }
        let inner: Vec<f64> = (1..5).map(|k| a + (b - a) * k as f64 / 5.0).collect();
        let v0 = layer.value(inner[0]).unwrap();
        for t in &inner[1..] {
            assert_eq!(layer.value(*t).unwrap(), v0);
        }
    }
}

#[test]
fn logid_cells_refine_toward_cone_measure() {
    let CascadeModel::LogInfDivisible(mut m) = catalog::logid_gaussian(0.5) else { unreachable!() };
    let exact = 2f64.ln();
    let errs: Vec<f64> = [4, 32]
        .iter()
        .map(|&cells| {
            m.cells_per_interval = cells;
            m.scale_bands = cells;
            (0..50)
                .map(|i| (m.cell_geometry(5).approximate_cone_measure(i as f64 / 49.0) - exact).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    assert!(errs[1] < 0.25 * errs[0] && errs[1] < 0.01, "{errs:?}");
    let layer = CellLayer::sample(&m, SEED, 2, (0.0, 1.0));
    assert!(layer.value(1.0).is_ok());
}

#[test]
fn paths_independent_of_thread_count() {
    let build = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| {
                families()
                    .iter()
                    .map(|(_, m)| build_paths(m, &ReferenceMeasure::Lebesgue, SEED, 6, 4).unwrap().values)
                    .collect::<Vec<_>>()
            })
    };
    assert_eq!(build(1), build(3));
}

#[test]
fn misnormalized_weight_fails_martingale() {
    let m = catalog::badic(WeightLaw::atoms(&[(0.6, 0.5), (1.6, 0.5)]));
    assert!(m.check_unit_mean().is_err());
    let r = martingale_check(&m, &[0.3], 1, 10_000, SEED).unwrap();
    assert!(!r.pass);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn q_refines_bit_identically(seed in any::<u64>(), t in 0.0f64..1.0, n in 1u32..8, family in 0usize..4) {
        let (_, m) = &families()[family];
        let r = Realization::new(m, seed);
        let coarse = r.q(t, n).unwrap();
        let fine = r.q_path(t, n + 1).unwrap();
        prop_assert_eq!(fine[n as usize - 1], coarse);
        prop_assert_eq!(fine[n as usize], coarse * r.p(t, n + 1).unwrap());
    }

    #[test]
    fn windowed_layers_match_full_layers(seed in any::<u64>(), t in 0.0f64..1.0, n in 1u32..7, family in 0usize..4) {
        let (_, m) = &families()[family];
        let r = Realization::new(m, seed);
        let full = r.layer(n, (0.0, 1.0)).unwrap().value(t).unwrap();
        let point = r.p(t, n).unwrap();
        prop_assert!((full - point).norm() <= 1e-12 * full.norm().max(1.0));
    }
}
