use cascade_core::catalog;
use cascade_core::convergence::{holder_bound, phi_closed, ReferenceMeasure};
use cascade_core::numerics::pairwise_sum_complex;
use cascade_core::simulate::{
    build_paths, build_paths_range, cauchy_increment, cauchy_ratio, holder_quantile, path_moments,
    quadrature_change, sup_norm_trajectory,
};
use num_complex::Complex64;

const LEB: ReferenceMeasure = ReferenceMeasure::Lebesgue;

fn m_sub(model: &cascade_core::cascades::CascadeModel) -> usize {
    if model.is_badic() {
        1
    } else {
        8
    }
}

#[test]
fn paths_start_at_zero_and_add_up() {
    for (name, m) in catalog::convergent() {
        let p = build_paths(&m, &LEB, 21, 7, 4).unwrap();
        for n in p.generations() {
            let f = p.generation(n).unwrap();
            assert_eq!(f[0], Complex64::new(0.0, 0.0), "{name}");
            let total = pairwise_sum_complex(&p.increments(n, n).unwrap());
            let end = *f.last().unwrap();
            assert!((total - end).norm() <= 1e-10 * end.norm().max(1.0), "{name} n={n}");
        }
    }
}

#[test]
fn badic_generations_restrict_exactly() {
    let m = catalog::gaussian_perturbed(0.5);
    let deep = build_paths(&m, &LEB, 4, 10, 1).unwrap();
    for n in 1..=6 {
        let shallow = build_paths(&m, &LEB, 4, n, 1).unwrap();
        assert_eq!(deep.on_level(n, n).unwrap(), shallow.on_level(n, n).unwrap());
    }
}

#[test]
fn cone_generations_restrict_to_quadrature_tolerance() {
    for m in [catalog::cpc_lognormal(), catalog::logid_gaussian(0.5)] {
        let deep = build_paths(&m, &LEB, 4, 9, 8).unwrap();
        let shallow = build_paths(&m, &LEB, 4, 6, 8).unwrap();
        let scale = sup_norm_trajectory(&deep)[5];
        for (a, b) in deep.on_level(6, 6).unwrap().iter().zip(shallow.on_level(6, 6).unwrap()) {
            assert!((a - b).norm() < 2e-2 * scale, "{}: {a} vs {b}", m.family());
        }
    }
}

#[test]
fn quadrature_converges_under_doubling() {
    for (m, sub) in [(catalog::cpc_lognormal(), 8), (catalog::logid_gaussian(0.5), 16)] {
        for seed in [1, 2, 3] {
            for n in [4, 7] {
                let c = quadrature_change(&m, &LEB, seed, n, sub).unwrap();
                assert!(c < 1e-2, "{} seed={seed} n={n}: {c}", m.family());
            }
        }
    }
}

#[test]
fn mean_total_mass_is_one() {
    let mo = path_moments(&catalog::canonical(), &LEB, 6, 1, 2.0, 10_000, 9).unwrap();
    for e in &mo.total {
        assert!(e.within(Complex64::new(1.0, 0.0), 4.0), "{e:?}");
    }
}

#[test]
fn cauchy_ratio_is_bounded() {
    for (name, m) in catalog::convergent() {
        let r = cauchy_ratio(&m, &LEB, 8, m_sub(&m), 2.0, 2_000, 31).unwrap();
        assert_eq!(r.rows.len(), 7);
        assert!(r.spread <= 10.0, "{name}: {:?}", r.rows);
    }
}

#[test]
fn sup_norm_has_no_upward_trend() {
    for (name, m) in catalog::convergent() {
        let mo = path_moments(&m, &LEB, 8, m_sub(&m), 2.0, 2_000, 41).unwrap();
        let sup: Vec<f64> = mo.sup_norm.iter().map(|e| e.mean).collect();
        let earlier = sup[3..7].iter().cloned().fold(0.0, f64::max);
        assert!(sup[7] <= 1.2 * earlier, "{name}: {sup:?}");
    }
}

#[test]
fn holder_quantile_is_stable() {
    for (name, m) in catalog::convergent() {
        let gamma = 0.5 * holder_bound(&m, &LEB, 2.0).unwrap();
        let paths = build_paths(&m, &LEB, 17, 8, m_sub(&m)).unwrap();
        let q1 = holder_quantile(&paths, gamma, 8, 4, 2_000, 0.99, 5).unwrap();
        let q2 = holder_quantile(&paths, gamma, 8, 4, 4_000, 0.99, 5).unwrap();
        assert!(q1.is_finite() && q2.is_finite());
        assert!((q2 / q1 - 1.0).abs() < 0.5, "{name}: {q1} vs {q2}");
    }
}

#[test]
fn degenerate_cascade_dies_out() {
    let m = catalog::degenerate_atoms();
    assert!((phi_closed(&m, &LEB, 0.5).unwrap().value - 0.5).abs() < 1e-12);
    let p = build_paths_range(&m, &LEB, 3, 1, 12, 1).unwrap();
    for n in 2..=12 {
        assert!(cauchy_increment(&p, n).unwrap() >= 0.0);
    }
    let dead = (0..200u64)
        .filter(|&s| *sup_norm_trajectory(&build_paths(&m, &LEB, s, 12, 1).unwrap()).last().unwrap() == 0.0)
        .count();
    assert!(dead > 150, "{dead}");
}
