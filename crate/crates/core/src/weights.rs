//! Complex unit-mean weight laws, their samplers and absolute-moment oracles.

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{CascadeError, Result};
use crate::numerics::{self, Estimate};
use crate::rng::Stream;

/// Tolerance on `E(W) = 1` and on atom probabilities summing to one.
pub const UNIT_MEAN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Atom {
    pub value: Complex64,
    pub prob: f64,
}

/// How [`WeightLaw::UnitMeanScaled`] moves the mean of its base law to one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeanCorrection {
    /// `W = B / E(B)`
    Multiplicative,
    /// `W = B - E(B) + 1`
    Additive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightLaw {
    Deterministic { value: Complex64 },
    FiniteAtomic { atoms: Vec<Atom> },
    /// `W = 1 + i·sigma·N`
    GaussianPerturbed { sigma: f64 },
    /// `W = exp(mu + sigma·N + i·tau·N')` with `mu = (tau² - sigma²)/2`.
    LogNormalPhase { sigma: f64, tau: f64 },
    UnitMeanScaled { base: Box<WeightLaw>, correction: MeanCorrection },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentMethod {
    ClosedForm,
    Quadrature,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentValue {
    pub value: f64,
    pub std_error: f64,
    pub method: MomentMethod,
}

impl MomentValue {
    fn closed(value: f64) -> Result<Self> {
        Self::checked(value, 0.0, MomentMethod::ClosedForm)
    }

    fn checked(value: f64, std_error: f64, method: MomentMethod) -> Result<Self> {
        if value.is_finite() {
            Ok(Self { value, std_error, method })
        } else {
            Err(CascadeError::InfiniteMoment { p: f64::NAN })
        }
    }
}

impl WeightLaw {
    pub fn one() -> Self {
        WeightLaw::Deterministic { value: Complex64::new(1.0, 0.0) }
    }

    pub fn atoms(pairs: &[(f64, f64)]) -> Self {
        WeightLaw::FiniteAtomic {
            atoms: pairs
                .iter()
                .map(|&(v, prob)| Atom { value: Complex64::new(v, 0.0), prob })
                .collect(),
        }
    }

    /// Structural validity (finite parameters, a probability vector).
    /// Does not require unit mean; see [`WeightLaw::check_unit_mean`].
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(CascadeError::InvalidLaw(msg));
        match self {
            WeightLaw::Deterministic { value } => {
                if !(value.re.is_finite() && value.im.is_finite()) {
                    return bad("deterministic value is not finite".into());
                }
            }
            WeightLaw::FiniteAtomic { atoms } => {
                if atoms.is_empty() {
                    return bad("finite_atomic needs at least one atom".into());
                }
                for a in atoms {
                    if !(a.prob >= 0.0 && a.prob.is_finite()) {
                        return bad(format!("atom probability {} is not in [0, 1]", a.prob));
                    }
                    if !(a.value.re.is_finite() && a.value.im.is_finite()) {
                        return bad("atom value is not finite".into());
                    }
                }
                let total: f64 = atoms.iter().map(|a| a.prob).sum();
                if (total - 1.0).abs() > UNIT_MEAN_TOL {
                    return bad(format!("atom probabilities sum to {total}, not 1"));
                }
            }
            WeightLaw::GaussianPerturbed { sigma } => {
                if !(*sigma >= 0.0 && sigma.is_finite()) {
                    return bad(format!("sigma = {sigma} must be finite and >= 0"));
                }
            }
            WeightLaw::LogNormalPhase { sigma, tau } => {
                if !(*sigma >= 0.0 && sigma.is_finite() && *tau >= 0.0 && tau.is_finite()) {
                    return bad("log_normal_phase needs finite sigma >= 0 and tau >= 0".into());
                }
            }
            WeightLaw::UnitMeanScaled { base, correction } => {
                base.validate()?;
                if *correction == MeanCorrection::Multiplicative && base.mean().norm() == 0.0 {
                    return bad("cannot rescale a base law with zero mean".into());
                }
            }
        }
        Ok(())
    }

    pub fn check_unit_mean(&self) -> Result<()> {
        let m = self.mean();
        if (m - Complex64::new(1.0, 0.0)).norm() > UNIT_MEAN_TOL {
            return Err(CascadeError::InvalidLaw(format!(
                "E(W) = {} + {}i, expected 1",
                m.re, m.im
            )));
        }
        Ok(())
    }

    /// `mu` of [`WeightLaw::LogNormalPhase`].
    pub fn log_normal_location(sigma: f64, tau: f64) -> f64 {
        0.5 * (tau * tau - sigma * sigma)
    }

    /// Exact expectation `E(W)`.
    pub fn mean(&self) -> Complex64 {
        match self {
            WeightLaw::Deterministic { value } => *value,
            WeightLaw::FiniteAtomic { atoms } => atoms.iter().map(|a| a.value * a.prob).sum(),
            WeightLaw::GaussianPerturbed { .. } | WeightLaw::LogNormalPhase { .. } => {
                Complex64::new(1.0, 0.0)
            }
            WeightLaw::UnitMeanScaled { .. } => Complex64::new(1.0, 0.0),
        }
    }

    /// `E(Re W)`.
    pub fn mean_real_part(&self) -> f64 {
        self.mean().re
    }

    /// An equivalent law without [`WeightLaw::UnitMeanScaled`] wrappers.
    /// Gaussian and log-normal laws already have unit mean, so wrapping them
    /// is the identity; atomic laws are transformed atom by atom.
    pub fn resolved(&self) -> WeightLaw {
        match self {
            WeightLaw::UnitMeanScaled { base, correction } => {
                let base = base.resolved();
                let m = base.mean();
                let map = |v: Complex64| match correction {
                    MeanCorrection::Multiplicative => v / m,
                    MeanCorrection::Additive => v - m + 1.0,
                };
                match base {
                    WeightLaw::Deterministic { value } => {
                        WeightLaw::Deterministic { value: map(value) }
                    }
                    WeightLaw::FiniteAtomic { atoms } => WeightLaw::FiniteAtomic {
                        atoms: atoms
                            .into_iter()
                            .map(|a| Atom { value: map(a.value), prob: a.prob })
                            .collect(),
                    },
                    other => other,
                }
            }
            other => other.clone(),
        }
    }

    /// One draw from the law.
    pub fn sample(&self, stream: &mut Stream) -> Complex64 {
        match self {
            WeightLaw::Deterministic { value } => *value,
            WeightLaw::FiniteAtomic { atoms } => {
                let u = stream.uniform();
                let mut cum = 0.0;
                for a in atoms {
                    cum += a.prob;
                    if u < cum {
                        return a.value;
                    }
                }
                atoms.iter().rev().find(|a| a.prob > 0.0).map_or(atoms[0].value, |a| a.value)
            }
            WeightLaw::GaussianPerturbed { sigma } => {
                let n: f64 = StandardNormal.sample(stream);
                Complex64::new(1.0, sigma * n)
            }
            WeightLaw::LogNormalPhase { sigma, tau } => {
                let n: f64 = StandardNormal.sample(stream);
                let n2: f64 = StandardNormal.sample(stream);
                let mu = Self::log_normal_location(*sigma, *tau);
                Complex64::from_polar((mu + sigma * n).exp(), tau * n2)
            }
            WeightLaw::UnitMeanScaled { base, correction } => {
                let m = base.mean();
                let v = base.sample(stream);
                match correction {
                    MeanCorrection::Multiplicative => v / m,
                    MeanCorrection::Additive => v - m + 1.0,
                }
            }
        }
    }

    /// `E|W|^p`, in closed form where one exists and by adaptive quadrature
    /// against the Gaussian density otherwise.
    pub fn abs_moment(&self, p: f64) -> Result<MomentValue> {
        if !(p >= 0.0 && p.is_finite()) {
            return Err(CascadeError::InvalidParameter(format!("moment order {p} must be >= 0")));
        }
        if p == 0.0 {
            return MomentValue::closed(1.0);
        }
        let tag = |r: Result<MomentValue>| r.map_err(|_| CascadeError::InfiniteMoment { p });
        match self.resolved() {
            WeightLaw::Deterministic { value } => tag(MomentValue::closed(value.norm().powf(p))),
            WeightLaw::FiniteAtomic { atoms } => tag(MomentValue::closed(
                atoms.iter().map(|a| a.prob * a.value.norm().powf(p)).sum(),
            )),
            WeightLaw::LogNormalPhase { sigma, tau } => {
                let mu = Self::log_normal_location(sigma, tau);
                tag(MomentValue::closed((p * mu + 0.5 * p * p * sigma * sigma).exp()))
            }
            WeightLaw::GaussianPerturbed { sigma } => {
                if sigma == 0.0 {
                    return MomentValue::closed(1.0);
                }
                if p == 2.0 {
                    return MomentValue::closed(1.0 + sigma * sigma);
                }
                let density = |x: f64| {
                    (1.0 + sigma * sigma * x * x).powf(0.5 * p) * (-0.5 * x * x).exp()
                };
                let half = numerics::integrate(density, 0.0, 40.0, 1e-14);
                let value = 2.0 * half / (2.0 * std::f64::consts::PI).sqrt();
                tag(MomentValue::checked(value, 0.0, MomentMethod::Quadrature))
            }
            WeightLaw::UnitMeanScaled { .. } => unreachable!("resolved() strips wrappers"),
        }
    }

    /// Monte Carlo estimate of `E|W|^p` from `samples` draws.
    pub fn abs_moment_mc(&self, p: f64, samples: usize, stream: &mut Stream) -> MomentValue {
        let xs: Vec<f64> = (0..samples).map(|_| self.sample(stream).norm().powf(p)).collect();
        let Estimate { mean, std_error } = numerics::estimate(&xs);
        MomentValue { value: mean, std_error, method: MomentMethod::MonteCarlo }
    }

    /// Standard deviation of `Re W` and `Im W`, used for CLT bands.
    pub fn component_std(&self) -> (f64, f64) {
        let m = self.mean();
        match self.resolved() {
            WeightLaw::Deterministic { .. } => (0.0, 0.0),
            WeightLaw::FiniteAtomic { atoms } => {
                let vr = atoms.iter().map(|a| a.prob * (a.value.re - m.re).powi(2)).sum::<f64>();
                let vi = atoms.iter().map(|a| a.prob * (a.value.im - m.im).powi(2)).sum::<f64>();
                (vr.sqrt(), vi.sqrt())
            }
            WeightLaw::GaussianPerturbed { sigma } => (0.0, sigma),
            WeightLaw::LogNormalPhase { sigma, tau } => {
                // E|W|^2 = e^{2mu + 2 sigma^2}; E W^2 = e^{2mu + 2sigma^2 - 2tau^2}
                let mu = Self::log_normal_location(sigma, tau);
                let m2 = (2.0 * mu + 2.0 * sigma * sigma).exp();
                let sq = (2.0 * mu + 2.0 * sigma * sigma - 2.0 * tau * tau).exp();
                let vr = 0.5 * (m2 + sq) - 1.0;
                let vi = 0.5 * (m2 - sq);
                (vr.max(0.0).sqrt(), vi.max(0.0).sqrt())
            }
            WeightLaw::UnitMeanScaled { .. } => unreachable!(),
        }
    }
}

/// The law of one weight vector `(W_0, …, W_{b-1})` with independent
/// components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightVectorLaw {
    /// All components i.i.d.
    Iid { law: WeightLaw },
    /// Independent components with individual laws, one per digit.
    Product { components: Vec<WeightLaw> },
}

impl WeightVectorLaw {
    pub fn iid(law: WeightLaw) -> Self {
        WeightVectorLaw::Iid { law }
    }

    pub fn component(&self, i: usize) -> &WeightLaw {
        match self {
            WeightVectorLaw::Iid { law } => law,
            WeightVectorLaw::Product { components } => &components[i],
        }
    }

    pub fn validate(&self, base: u32) -> Result<()> {
        match self {
            WeightVectorLaw::Iid { law } => law.validate(),
            WeightVectorLaw::Product { components } => {
                if components.len() != base as usize {
                    return Err(CascadeError::InvalidLaw(format!(
                        "weight vector has {} components, base is {base}",
                        components.len()
                    )));
                }
                components.iter().try_for_each(WeightLaw::validate)
            }
        }
    }

    pub fn check_unit_mean(&self, base: u32) -> Result<()> {
        (0..base as usize).try_for_each(|i| self.component(i).check_unit_mean())
    }

    /// Draw a full vector into `out` (length `b`), components in digit order.
    pub fn sample_into(&self, stream: &mut Stream, out: &mut [Complex64]) {
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = self.component(i).sample(stream);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::complex_estimate;

    fn gaussian(sigma: f64) -> WeightLaw {
        WeightLaw::GaussianPerturbed { sigma }
    }

    fn shipped_laws() -> Vec<WeightLaw> {
        vec![
            WeightLaw::one(),
            WeightLaw::atoms(&[(0.0, 0.75), (4.0, 0.25)]),
            WeightLaw::atoms(&[(0.5, 0.5), (1.5, 0.5)]),
            gaussian(0.5),
            WeightLaw::LogNormalPhase { sigma: 0.3, tau: 0.4 },
            WeightLaw::UnitMeanScaled {
                base: Box::new(WeightLaw::FiniteAtomic {
                    atoms: vec![
                        Atom { value: Complex64::new(1.0, 1.0), prob: 0.5 },
                        Atom { value: Complex64::new(2.0, -0.5), prob: 0.5 },
                    ],
                }),
                correction: MeanCorrection::Multiplicative,
            },
        ]
    }

    #[test]
    fn deterministic_sample() {
        let mut s = Stream::new(1);
        assert_eq!(WeightLaw::one().sample(&mut s), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn atomic_support() {
        let law = WeightLaw::atoms(&[(0.0, 0.75), (4.0, 0.25)]);
        let mut s = Stream::new(2);
        for _ in 0..1000 {
            let v = law.sample(&mut s);
            assert!(v == Complex64::new(0.0, 0.0) || v == Complex64::new(4.0, 0.0));
        }
    }

    #[test]
    fn gaussian_sample_mean() {
        let law = gaussian(0.5);
        let mut s = Stream::new(3);
        let zs: Vec<Complex64> = (0..1_000_000).map(|_| law.sample(&mut s)).collect();
        let est = complex_estimate(&zs);
        assert!(est.within(Complex64::new(1.0, 0.0), 3.0), "{est:?}");
    }

    #[test]
    fn closed_form_moments() {
        let atoms = WeightLaw::atoms(&[(0.0, 0.75), (4.0, 0.25)]);
        for p in [0.5, 1.0, 1.5, 2.0, 3.0] {
            let v = atoms.abs_moment(p).unwrap().value;
            assert!((v - 4f64.powf(p - 1.0)).abs() < 1e-12);
        }
        assert!((atoms.abs_moment(0.5).unwrap().value - 0.5).abs() < 1e-15);
        assert_eq!(gaussian(0.5).abs_moment(2.0).unwrap().value, 1.25);
        for p in [0.0, 0.3, 1.0, 7.5] {
            assert_eq!(WeightLaw::one().abs_moment(p).unwrap().value, 1.0);
        }
    }

    #[test]
    fn gaussian_quadrature_matches_even_moments() {
        // E(1 + s²N²)² = 1 + 2s² + 3s⁴
        let s2: f64 = 0.25;
        let v = gaussian(0.5).abs_moment(4.0).unwrap();
        assert_eq!(v.method, MomentMethod::Quadrature);
        assert!((v.value - (1.0 + 2.0 * s2 + 3.0 * s2 * s2)).abs() < 1e-10);
    }

    #[test]
    fn zeroth_moment_is_one() {
        for law in shipped_laws() {
            assert_eq!(law.abs_moment(0.0).unwrap().value, 1.0);
        }
    }

    #[test]
    fn mean_real_part_examples() {
        assert_eq!(WeightLaw::one().mean_real_part(), 1.0);
        assert_eq!(gaussian(0.7).mean_real_part(), 1.0);
        assert_eq!(WeightLaw::atoms(&[(0.5, 0.5), (1.5, 0.5)]).mean_real_part(), 1.0);
    }

    #[test]
    fn negative_order_rejected() {
        assert!(WeightLaw::one().abs_moment(-1.0).is_err());
    }

    #[test]
    fn infinite_moment_signalled() {
        let law = WeightLaw::LogNormalPhase { sigma: 3.0, tau: 0.0 };
        assert_eq!(law.abs_moment(40.0), Err(CascadeError::InfiniteMoment { p: 40.0 }));
    }

    #[test]
    fn validation() {
        assert!(WeightLaw::atoms(&[(0.0, 0.5), (2.0, 0.4)]).validate().is_err());
        assert!(WeightLaw::atoms(&[(0.0, -0.5), (2.0, 1.5)]).validate().is_err());
        assert!(gaussian(-1.0).validate().is_err());
        let off = WeightLaw::atoms(&[(0.6, 0.5), (1.6, 0.5)]);
        assert!(off.validate().is_ok());
        assert!(off.check_unit_mean().is_err());
        for law in shipped_laws() {
            law.validate().unwrap();
            law.check_unit_mean().unwrap();
        }
    }

    #[test]
    fn unit_mean_monte_carlo() {
        for (i, law) in shipped_laws().into_iter().enumerate() {
            let mut s = Stream::new(100 + i as u64);
            let zs: Vec<Complex64> = (0..1_000_000).map(|_| law.sample(&mut s)).collect();
            let est = complex_estimate(&zs);
            assert!(est.within(Complex64::new(1.0, 0.0), 4.0), "{law:?}: {est:?}");
        }
    }

    #[test]
    fn moment_consistency_monte_carlo() {
        for (i, law) in shipped_laws().into_iter().enumerate() {
            for p in [0.5, 1.0, 1.5, 2.0] {
                let exact = law.abs_moment(p).unwrap().value;
                let mut s = Stream::new(1000 + i as u64);
                let mc = law.abs_moment_mc(p, 400_000, &mut s);
                assert!(
                    (mc.value - exact).abs() <= 4.0 * mc.std_error + 1e-12,
                    "{law:?} p={p}: mc {mc:?} exact {exact}"
                );
            }
        }
    }

    #[test]
    fn additive_correction_resolves_atoms() {
        let law = WeightLaw::UnitMeanScaled {
            base: Box::new(WeightLaw::atoms(&[(0.0, 0.5), (1.0, 0.5)])),
            correction: MeanCorrection::Additive,
        };
        assert_eq!(law.resolved(), WeightLaw::atoms(&[(0.5, 0.5), (1.5, 0.5)]));
        assert!((law.abs_moment(2.0).unwrap().value - 1.25).abs() < 1e-15);
    }

    #[test]
    fn component_std_matches_samples() {
        let law = WeightLaw::LogNormalPhase { sigma: 0.3, tau: 0.4 };
        let (sr, si) = law.component_std();
        let mut s = Stream::new(9);
        let zs: Vec<Complex64> = (0..400_000).map(|_| law.sample(&mut s)).collect();
        let est = complex_estimate(&zs);
        let n = (zs.len() as f64).sqrt();
        assert!((est.re.std_error * n - sr).abs() < 0.01);
        assert!((est.im.std_error * n - si).abs() < 0.01);
    }
}
