//! Named models used by the tests, the acceptance suite and the CLI examples.

use crate::cascades::{BadicModel, CascadeModel, CompoundPoissonModel, Intensity, LevyExponent, LogIdModel};
use crate::weights::{WeightLaw, WeightVectorLaw};

/// `W ≡ 1` in the given family, `b = 2`.
pub fn unit(family: &str) -> Option<CascadeModel> {
    Some(match family {
        "badic_independent" => badic(WeightLaw::one()),
        "compound_poisson" => cpc(WeightLaw::one()),
        "log_inf_divisible" => CascadeModel::LogInfDivisible(LogIdModel::new(
            2,
            LevyExponent { drift: [0.0; 2], gaussian: [[0.0; 2]; 2], jumps: vec![] },
        )),
        _ => return None,
    })
}

pub fn unit_models() -> Vec<CascadeModel> {
    ["badic_independent", "compound_poisson", "log_inf_divisible"]
        .iter()
        .filter_map(|f| unit(f))
        .collect()
}

/// Dyadic cascade with i.i.d. components of law `law`.
pub fn badic(law: WeightLaw) -> CascadeModel {
    CascadeModel::BadicIndependent(BadicModel::homogeneous(2, WeightVectorLaw::iid(law)))
}

/// Scale-invariant compound Poisson cascade, `b = 2`, `β = δ = 1`.
pub fn cpc(law: WeightLaw) -> CascadeModel {
    CascadeModel::CompoundPoisson(CompoundPoissonModel {
        base: 2,
        beta: 1.0,
        intensity: Intensity::ScaleInvariant { delta: 1.0 },
        weight: law,
    })
}

/// `W ∈ {1/2, 3/2}` equiprobable, `b = 2`.
pub fn canonical() -> CascadeModel {
    badic(WeightLaw::atoms(&[(0.5, 0.5), (1.5, 0.5)]))
}

/// `W = 1 + iσN`, `b = 2`.
pub fn gaussian_perturbed(sigma: f64) -> CascadeModel {
    badic(WeightLaw::GaussianPerturbed { sigma })
}

/// `W ∈ {0 w.p. 3/4, 4 w.p. 1/4}`: `φ(p) = 1 − p`.
pub fn degenerate_atoms() -> CascadeModel {
    badic(WeightLaw::atoms(&[(0.0, 0.75), (4.0, 0.25)]))
}

/// Compound Poisson cascade with complex lognormal marks.
pub fn cpc_lognormal() -> CascadeModel {
    cpc(WeightLaw::LogNormalPhase { sigma: 0.2, tau: 0.4 })
}

/// Log-normal cascade, `Q = diag(σ², 0)`, `a = (−σ²/2, 0)`.
pub fn logid_gaussian(sigma2: f64) -> CascadeModel {
    CascadeModel::LogInfDivisible(LogIdModel::new(2, LevyExponent::pure_gaussian(sigma2)))
}

/// The shipped models with `φ(2) > 0`.
pub fn convergent() -> Vec<(&'static str, CascadeModel)> {
    vec![
        ("canonical", canonical()),
        ("gaussian_perturbed", gaussian_perturbed(0.5)),
        ("cpc_lognormal", cpc_lognormal()),
        ("logid_gaussian", logid_gaussian(0.5)),
    ]
}
