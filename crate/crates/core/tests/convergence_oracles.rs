use cascade_core::cascades::{BadicModel, CascadeModel, CompoundPoissonModel, Intensity, LevyExponent, LogIdModel};
use cascade_core::catalog;
use cascade_core::convergence::{
    beta_critical, holder_bound, phi_closed, phi_empirical, phi_roots, s_np_closed, s_np_mc, verdict,
    DistortionBound, ReferenceMeasure, Verdict,
};
use cascade_core::schedule::LevelSchedule;
use cascade_core::weights::{WeightLaw, WeightVectorLaw};
use proptest::prelude::*;

const LEB: ReferenceMeasure = ReferenceMeasure::Lebesgue;

fn closed_form_models() -> Vec<(&'static str, CascadeModel)> {
    let mut v = catalog::convergent();
    v.push(("atoms", catalog::degenerate_atoms()));
    v.push(("unit_cpc", catalog::unit("compound_poisson").unwrap()));
    v
}

#[test]
fn empirical_slope_brackets_closed_form() {
    for (name, m) in closed_form_models() {
        for p in [0.5, 1.5, 2.0] {
            let closed = phi_closed(&m, &LEB, p).unwrap().value;
            let e = phi_empirical(&m, &LEB, p, 2..=8, 10_000, 0xF1).unwrap();
            assert!(e.contains(closed), "{name} p={p}: {closed} vs {} ± {}", e.slope, e.band);
        }
    }
}

#[test]
fn empirical_examples() {
    let unit = catalog::unit("badic_independent").unwrap();
    let e = phi_empirical(&unit, &LEB, 2.0, 1..=6, 100, 1).unwrap();
    assert!((e.slope - 1.0).abs() < 1e-12);
    let e = phi_empirical(&catalog::canonical(), &LEB, 2.0, 2..=8, 10_000, 2).unwrap();
    assert!((e.slope - 0.678072).abs() < 0.05);
    let e = phi_empirical(&catalog::degenerate_atoms(), &LEB, 0.5, 2..=8, 10_000, 3).unwrap();
    assert!((e.slope - 0.5).abs() < 0.05);
}

#[test]
fn monte_carlo_s_matches_closed_form() {
    let m = catalog::canonical();
    let e = s_np_mc(&m, &LEB, 2, 2.0, 20_000, 5).unwrap();
    assert!(e.within(0.390625, 4.0), "{e:?}");
    assert_eq!(s_np_closed(&m, &LEB, 2, 2.0).unwrap(), 0.390625);
    for unit in catalog::unit_models() {
        let e = s_np_mc(&unit, &LEB, 4, 1.5, 100, 6).unwrap();
        assert!((e.mean - 2f64.powf(-2.0)).abs() < 1e-12 && e.std_error < 1e-12, "{}", unit.family());
    }
}

#[test]
fn bernoulli_measure_monte_carlo() {
    let measure = ReferenceMeasure::InhomogeneousBernoulli {
        vectors: LevelSchedule::Periodic(vec![vec![0.3, 0.7], vec![0.5, 0.5]]),
    };
    let m = catalog::gaussian_perturbed(0.4);
    for n in [1, 3] {
        let exact = s_np_closed(&m, &measure, n, 1.5).unwrap();
        let e = s_np_mc(&m, &measure, n, 1.5, 20_000, 8).unwrap();
        assert!(e.within(exact, 4.0), "n={n}: {e:?} vs {exact}");
    }
}

#[test]
fn shipped_verdicts() {
    for (name, m) in catalog::convergent() {
        let r = verdict(&m, &LEB).unwrap();
        match r.verdict {
            Verdict::ConvergesUniformly { p_star, gamma_star } => {
                assert!(p_star > 1.0 && p_star <= 2.0 && gamma_star > 0.0, "{name}");
                let bound = holder_bound(&m, &LEB, p_star).unwrap();
                assert_eq!(gamma_star, bound);
            }
            other => panic!("{name}: {other:?}"),
        }
    }
    let r = verdict(&catalog::degenerate_atoms(), &LEB).unwrap();
    assert!(matches!(
        r.verdict,
        Verdict::DegeneratesToZero { p_star, distortion: DistortionBound::Structural } if p_star == 0.5
    ));
}

#[test]
fn verdict_ignores_realizations() {
    // Closed forms only: repeated and cloned evaluations agree exactly.
    for (_, m) in closed_form_models() {
        let a = serde_json::to_string(&verdict(&m, &LEB).unwrap()).unwrap();
        let b = serde_json::to_string(&verdict(&m.clone(), &LEB).unwrap()).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn critical_exponents() {
    let hot = catalog::logid_gaussian(1.5);
    let roots = phi_roots(&hot, &LEB, 1.0, 2.0).unwrap();
    assert_eq!(roots.len(), 2);
    assert!((roots[0] - 1.0).abs() < 1e-9 && (roots[1] - 4.0 / 3.0).abs() < 1e-9, "{roots:?}");
    assert_eq!(beta_critical(&hot, &LEB).unwrap(), Some(1.0));
    assert_eq!(beta_critical(&catalog::canonical(), &LEB).unwrap(), Some(1.0));
    let g = holder_bound(&catalog::logid_gaussian(0.5), &LEB, 2.0).unwrap();
    assert!(g >= 0.25);
}

fn any_model() -> impl Strategy<Value = CascadeModel> {
    prop_oneof![
        (0.0f64..1.5).prop_map(catalog::gaussian_perturbed),
        (0.05f64..0.95, 0.05f64..0.95).prop_map(|(a, q)| {
            // two nonnegative atoms with unit mean
            let lo = a;
            let hi = (1.0 - q * lo) / (1.0 - q);
            catalog::badic(WeightLaw::atoms(&[(lo, q), (hi, 1.0 - q)]))
        }),
        (2u32..5, 0.0f64..0.8, 0.0f64..0.8, 0.2f64..3.0, 0.2f64..2.0).prop_map(|(b, s, t, beta, delta)| {
            CascadeModel::CompoundPoisson(CompoundPoissonModel {
                base: b,
                beta,
                intensity: Intensity::ScaleInvariant { delta },
                weight: WeightLaw::LogNormalPhase { sigma: s, tau: t },
            })
        }),
        (2u32..5, 0.0f64..2.0, -0.5f64..0.5, 0.0f64..1.0).prop_map(|(b, s2, rho, s2b)| {
            let off = rho * (s2 * s2b).sqrt();
            CascadeModel::LogInfDivisible(LogIdModel::new(
                b,
                LevyExponent { drift: [0.1, -0.2], gaussian: [[s2, off], [off, s2b]], jumps: vec![] },
            ))
        }),
        (2u32..4, 0.0f64..1.0).prop_map(|(b, s)| {
            CascadeModel::BadicIndependent(BadicModel {
                base: b,
                weights: LevelSchedule::Homogeneous(WeightVectorLaw::iid(WeightLaw::GaussianPerturbed {
                    sigma: s,
                })),
            })
        }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn phi_is_concave(m in any_model(), a in 0.0f64..2.0, b in 0.0f64..2.0, c in 0.0f64..2.0) {
        let mut ps = [a, b, c];
        ps.sort_by(f64::total_cmp);
        prop_assume!(ps[2] - ps[0] > 1e-6);
        let phi = |p: f64| phi_closed(&m, &LEB, p).unwrap().value;
        let w = (ps[1] - ps[0]) / (ps[2] - ps[0]);
        let chord = (1.0 - w) * phi(ps[0]) + w * phi(ps[2]);
        prop_assert!(phi(ps[1]) >= chord - 1e-9, "{:?}", ps);
        let mid = 0.5 * (ps[0] + ps[2]);
        prop_assert!(phi(mid) >= 0.5 * (phi(ps[0]) + phi(ps[2])) - 1e-9);
    }

    #[test]
    fn phi_nonpositive_at_zero_and_one(m in any_model()) {
        prop_assert!(phi_closed(&m, &LEB, 0.0).unwrap().value <= 1e-12);
        prop_assert!(phi_closed(&m, &LEB, 1.0).unwrap().value <= 1e-12);
    }

    #[test]
    fn s_is_log_additive(sigma in 0.0f64..1.5, n in 1u32..8, k in 1u32..8, p in 0.1f64..2.0, b in 2u32..4) {
        let m = CascadeModel::BadicIndependent(BadicModel::homogeneous(
            b,
            WeightVectorLaw::iid(WeightLaw::GaussianPerturbed { sigma }),
        ));
        let whole = s_np_closed(&m, &LEB, n + k, p).unwrap();
        let parts = s_np_closed(&m, &LEB, n, p).unwrap() * s_np_closed(&m, &LEB, k, p).unwrap();
        prop_assert!((whole - parts).abs() <= 1e-12 * whole.abs());
    }
}
