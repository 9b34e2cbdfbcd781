//! The moment functional `S(n,p)`, its decay rate `φ(p)`, and what they say
//! about the convergence of `F_n`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::badic::cell_count;
use crate::cascades::{BadicLayer, BadicModel, CascadeModel, Intensity, Realization};
use crate::error::{CascadeError, Result};
use crate::numerics::{self, estimate, fit_line, Estimate};
use crate::rng::replica_seed;
use crate::schedule::{lcm, LevelSchedule};

/// Number of `t` points per replica used by the Monte Carlo `S(n,p)` of cone
/// families.
pub const MC_POINTS: usize = 8;

/// Levels used for the finite-horizon `φ` of non scale-invariant intensities.
pub const PHI_HORIZON: u32 = 40;

const DEFAULT_GRID: usize = 64;
const ROOT_F_TOL: f64 = 1e-10;
const ROOT_X_TOL: f64 = 1e-12;
const DISTORTION_SEED: u64 = 0x5EED_D157_0271_0000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ReferenceMeasure {
    #[default]
    Lebesgue,
    /// `λ(I_w) = ∏_k λ^{(k)}_{w_{k+1}}`
    InhomogeneousBernoulli { vectors: LevelSchedule<Vec<f64>> },
}

impl ReferenceMeasure {
    pub fn is_lebesgue(&self) -> bool {
        matches!(self, ReferenceMeasure::Lebesgue)
    }

    pub fn validate(&self, base: u32) -> Result<()> {
        let ReferenceMeasure::InhomogeneousBernoulli { vectors } = self else {
            return Ok(());
        };
        vectors.validate_nonempty()?;
        for v in vectors.entries() {
            if v.len() != base as usize {
                return Err(CascadeError::InvalidParameter(format!(
                    "probability vector has {} entries, base is {base}",
                    v.len()
                )));
            }
            if v.iter().any(|x| !(*x >= 0.0 && x.is_finite())) {
                return Err(CascadeError::InvalidParameter(
                    "probability vector entries must be >= 0".into(),
                ));
            }
            let s: f64 = v.iter().sum();
            if (s - 1.0).abs() > 1e-12 {
                return Err(CascadeError::InvalidParameter(format!(
                    "probability vector sums to {s}, not 1"
                )));
            }
        }
        Ok(())
    }

    /// `λ^{(k)}_i`
    pub fn digit_mass(&self, base: u32, k: usize, i: usize) -> f64 {
        match self {
            ReferenceMeasure::Lebesgue => 1.0 / base as f64,
            ReferenceMeasure::InhomogeneousBernoulli { vectors } => vectors.at(k)[i],
        }
    }

    pub fn period(&self) -> usize {
        match self {
            ReferenceMeasure::Lebesgue => 1,
            ReferenceMeasure::InhomogeneousBernoulli { vectors } => vectors.period(),
        }
    }
}

/// Rejects measure and model combinations without a defined `F_n`.
pub fn check_support(model: &CascadeModel, measure: &ReferenceMeasure) -> Result<()> {
    model.validate()?;
    measure.validate(model.base())?;
    if !measure.is_lebesgue() && !model.is_badic() {
        return Err(CascadeError::Unsupported(format!(
            "a non-Lebesgue reference measure with a {} cascade",
            model.family()
        )));
    }
    Ok(())
}

/// `Σ_i (λ^{(k)}_i)^p E|W^{(k)}_i|^p`, the level-`k` factor of `S(n,p)`.
fn badic_level_factor(m: &BadicModel, measure: &ReferenceMeasure, k: usize, p: f64) -> Result<f64> {
    let law = m.weights.at(k);
    let mut acc = 0.0;
    for i in 0..m.base as usize {
        let lam = measure.digit_mass(m.base, k, i);
        if lam > 0.0 {
            acc += lam.powf(p) * law.component(i).abs_moment(p)?.value;
        }
    }
    Ok(acc)
}

/// `S(n,p)` for a b-adic cascade, exact.
pub fn s_np_closed(model: &CascadeModel, measure: &ReferenceMeasure, n: u32, p: f64) -> Result<f64> {
    let CascadeModel::BadicIndependent(m) = model else {
        return Err(CascadeError::Unsupported(format!(
            "closed-form S(n,p) for a {} cascade",
            model.family()
        )));
    };
    check_support(model, measure)?;
    let mut s = 1.0;
    for k in 0..n as usize {
        s *= badic_level_factor(m, measure, k, p)?;
    }
    Ok(s)
}

/// One replica's samples of `S(n,p)` for `n = 1..=n_max`; for Lebesgue `λ`
/// the factor `b^{-n(p-1)}` is left to the caller.
fn s_np_samples(
    model: &CascadeModel,
    measure: &ReferenceMeasure,
    n_max: u32,
    p: f64,
    seed: u64,
) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(n_max as usize);
    match model {
        CascadeModel::BadicIndependent(m) => {
            let b = m.base as usize;
            // running Q_n and λ(I_w) over the tree, level by level
            let mut q = vec![num_complex::Complex64::new(1.0, 0.0)];
            let mut lam = vec![1.0f64];
            for level in 1..=n_max {
                let layer = BadicLayer::sample_nodes(m, seed, level, 0, q.len() as u64)?;
                let mut nq = Vec::with_capacity(q.len() * b);
                let mut nl = Vec::with_capacity(q.len() * b);
                for (node, (qv, lv)) in q.iter().zip(&lam).enumerate() {
                    for i in 0..b {
                        nq.push(qv * layer.values[node * b + i]);
                        nl.push(lv * measure.digit_mass(m.base, level as usize - 1, i));
                    }
                }
                q = nq;
                lam = nl;
                out.push(if measure.is_lebesgue() {
                    let terms: Vec<f64> = q.iter().map(|z| z.norm().powf(p)).collect();
                    numerics::pairwise_sum(&terms) / terms.len() as f64
                } else {
                    let terms: Vec<f64> = q
                        .iter()
                        .zip(&lam)
                        .map(|(z, l)| if *l > 0.0 { l.powf(p) * z.norm().powf(p) } else { 0.0 })
                        .collect();
                    numerics::pairwise_sum(&terms)
                });
            }
        }
        _ => {
            let r = Realization::new(model, seed);
            let paths = (0..MC_POINTS)
                .map(|j| r.q_path((j as f64 + 0.5) / MC_POINTS as f64, n_max))
                .collect::<Result<Vec<_>>>()?;
            for k in 0..n_max as usize {
                let terms: Vec<f64> = paths.iter().map(|q| q[k].norm().powf(p)).collect();
                out.push(numerics::pairwise_sum(&terms) / MC_POINTS as f64);
            }
        }
    }
    Ok(out)
}

/// Monte Carlo `S(n,p)` with its standard error. Replica `i` uses the
/// realization seeded by `replica_seed(seed, i)`.
pub fn s_np_mc(
    model: &CascadeModel,
    measure: &ReferenceMeasure,
    n: u32,
    p: f64,
    replicas: usize,
    seed: u64,
) -> Result<Estimate> {
    Ok(s_np_mc_levels(model, measure, n, p, replicas, seed)?[n as usize - 1])
}

/// [`s_np_mc`] for every `n = 1..=n_max`, on one shared set of replicas.
pub fn s_np_mc_levels(
    model: &CascadeModel,
    measure: &ReferenceMeasure,
    n_max: u32,
    p: f64,
    replicas: usize,
    seed: u64,
) -> Result<Vec<Estimate>> {
    check_support(model, measure)?;
    if replicas < 2 || n_max < 1 {
        return Err(CascadeError::InvalidParameter("need n >= 1 and at least 2 replicas".into()));
    }
    if model.is_badic() {
        cell_count(model.base(), n_max)?;
    }
    let ys = (0..replicas as u64)
        .into_par_iter()
        .map(|i| s_np_samples(model, measure, n_max, p, replica_seed(seed, i)))
        .collect::<Result<Vec<Vec<f64>>>>()?;
    Ok((1..=n_max)
        .map(|n| {
            let col: Vec<f64> = ys.iter().map(|y| y[n as usize - 1]).collect();
            let e = estimate(&col);
            // Lebesgue: S(n,p) = b^{-n(p-1)} ∫ E|Q_n|^p dt
            let factor = if measure.is_lebesgue() {
                (model.base() as f64).powf(-(n as f64) * (p - 1.0))
            } else {
                1.0
            };
            Estimate { mean: e.mean * factor, std_error: e.std_error * factor }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhiMethod {
    ClosedForm,
    /// Liminf replaced by the minimum over the second half of a finite
    /// horizon of levels.
    FiniteHorizon,
    EmpiricalSlope,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiValue {
    pub value: f64,
    pub method: PhiMethod,
}

/// `φ(p)` from the model's moment formulas.
pub fn phi_closed(model: &CascadeModel, measure: &ReferenceMeasure, p: f64) -> Result<PhiValue> {
    check_support(model, measure)?;
    if !(p >= 0.0 && p.is_finite()) {
        return Err(CascadeError::InvalidParameter(format!("p = {p} must be >= 0")));
    }
    let closed = |value| Ok(PhiValue { value, method: PhiMethod::ClosedForm });
    match model {
        CascadeModel::BadicIndependent(m) => {
            let period = lcm(m.weights.period(), measure.period());
            let ln_b = (m.base as f64).ln();
            let mut acc = 0.0;
            for k in 0..period {
                acc += badic_level_factor(m, measure, k, p)?.ln() / ln_b;
            }
            closed(-acc / period as f64)
        }
        CascadeModel::CompoundPoisson(m) => {
            let bracket = p * (m.weight.mean_real_part() - 1.0) - (m.weight.abs_moment(p)?.value - 1.0);
            if let Intensity::ScaleInvariant { delta } = m.intensity {
                return closed(p - 1.0 + m.beta * delta * bracket);
            }
            let ln_b = (m.base as f64).ln();
            let mut cumulative = 0.0;
            let mut worst = f64::INFINITY;
            for n in 1..=PHI_HORIZON {
                cumulative += m.cone_measure(n);
                if n >= PHI_HORIZON / 2 {
                    worst = worst.min(p - 1.0 + cumulative / (n as f64 * ln_b) * bracket);
                }
            }
            Ok(PhiValue { value: worst, method: PhiMethod::FiniteHorizon })
        }
        CascadeModel::LogInfDivisible(m) => closed(p - 1.0 - m.exponent.moment_exponent(p)?),
    }
}

/// Least-squares slope of `-log_b S(n,p)` against `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiEstimate {
    pub slope: f64,
    pub std_error: f64,
    /// Half-width of the reported band, four standard errors.
    pub band: f64,
}

impl PhiEstimate {
    pub fn contains(&self, value: f64) -> bool {
        (self.slope - value).abs() <= self.band + 1e-9
    }
}

pub fn phi_empirical(
    model: &CascadeModel,
    measure: &ReferenceMeasure,
    p: f64,
    n_range: std::ops::RangeInclusive<u32>,
    replicas: usize,
    seed: u64,
) -> Result<PhiEstimate> {
    let ns: Vec<u32> = n_range.collect();
    if ns.len() < 4 || ns[0] < 1 {
        return Err(CascadeError::InvalidParameter("need a range of at least 4 generations".into()));
    }
    let ln_b = (model.base() as f64).ln();
    let all = s_np_mc_levels(model, measure, *ns.last().unwrap(), p, replicas, seed)?;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut errs = Vec::new();
    for &n in &ns {
        let s = all[n as usize - 1];
        if !(s.mean > 0.0) {
            return Err(CascadeError::Degenerate(format!("S({n},{p}) estimate is zero")));
        }
        xs.push(n as f64);
        ys.push(-s.mean.ln() / ln_b);
        errs.push(s.std_error / (s.mean * ln_b));
    }
    let fit = fit_line(&xs, &ys, Some(&errs));
    Ok(PhiEstimate { slope: fit.slope, std_error: fit.slope_std_error, band: 4.0 * fit.slope_std_error })
}

/// `γ* = max_{q ∈ (1,p]} φ(q)/q`
pub fn holder_bound(model: &CascadeModel, measure: &ReferenceMeasure, p: f64) -> Result<f64> {
    if !(p > 1.0) {
        return Err(CascadeError::InvalidParameter(format!("Hölder bound needs p > 1, got {p}")));
    }
    phi_closed(model, measure, p)?;
    let f = |q: f64| phi_closed(model, measure, q).map_or(f64::NEG_INFINITY, |v| v.value / q);
    Ok(numerics::maximize(f, 1.0, p, 64).1)
}

/// All zeros of `φ` in `[lo, hi)`, in increasing order: grid points where
/// `|φ| < 1e-10` and bisected sign changes between grid points.
pub fn phi_roots(model: &CascadeModel, measure: &ReferenceMeasure, lo: f64, hi: f64) -> Result<Vec<f64>> {
    let f = |p: f64| phi_closed(model, measure, p).map(|v| v.value);
    let steps = 256;
    let xs: Vec<f64> = (0..=steps).map(|i| lo + (hi - lo) * i as f64 / steps as f64).collect();
    let ys = xs.iter().map(|&x| f(x)).collect::<Result<Vec<f64>>>()?;
    let mut roots = Vec::new();
    for i in 0..steps {
        let (x0, y0, y1) = (xs[i], ys[i], ys[i + 1]);
        if y0.abs() < ROOT_F_TOL {
            roots.push(x0);
        } else if y1.abs() >= ROOT_F_TOL && (y0 < 0.0) != (y1 < 0.0) {
            let g = |p: f64| f(p).unwrap_or(f64::NAN);
            roots.push(numerics::bisect(g, x0, xs[i + 1], ROOT_F_TOL, ROOT_X_TOL));
        }
    }
    Ok(roots)
}

/// `β = min{p ∈ [1,2) : φ(p) = 0}`, `None` when `φ` has no zero there.
pub fn beta_critical(model: &CascadeModel, measure: &ReferenceMeasure) -> Result<Option<f64>> {
    Ok(phi_roots(model, measure, 1.0, 2.0)?.first().copied())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistortionBound {
    /// `Q_n` is constant on every `I_w`, so `ψ ≡ 0`.
    Structural,
    /// Estimated growth rate of `log(E sup_{I_w} |Q_n|^p / E|Q_n(t)|^p)` per
    /// level, found below half of `φ(p) ln b`. Not a proof.
    NumericallySupported { growth_per_level: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Verdict {
    ConvergesUniformly { p_star: f64, gamma_star: f64 },
    DegeneratesToZero { p_star: f64, distortion: DistortionBound },
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiPoint {
    pub p: f64,
    /// `None` where a required moment is infinite or `(-ip, 0)` leaves the
    /// domain of the Lévy exponent.
    pub phi: Option<f64>,
    pub method: PhiMethod,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiReport {
    pub family: String,
    pub base: u32,
    pub closed: Vec<PhiPoint>,
    pub empirical: Vec<PhiPoint>,
    pub verdict: Verdict,
    pub beta_critical: Option<f64>,
}

impl PhiReport {
    /// Closed-form `φ` at a grid point, if present.
    pub fn phi_at(&self, p: f64) -> Option<f64> {
        self.closed.iter().find(|x| (x.p - p).abs() < 1e-12).and_then(|x| x.phi)
    }
}

/// The default grid: 64 equally spaced points on `(0, 2]`.
pub fn default_p_grid() -> Vec<f64> {
    (1..=DEFAULT_GRID).map(|i| 2.0 * i as f64 / DEFAULT_GRID as f64).collect()
}

/// Convergence verdict from closed forms on `grid` (refined with the zeros
/// of `φ`). Cone families only reach `DegeneratesToZero` through a fixed-seed
/// Monte Carlo distortion check.
pub fn verdict_on_grid(
    model: &CascadeModel,
    measure: &ReferenceMeasure,
    grid: &[f64],
) -> Result<PhiReport> {
    check_support(model, measure)?;
    let mut ps: Vec<f64> = grid.iter().copied().filter(|p| *p > 0.0 && *p <= 2.0).collect();
    if let Ok(roots) = phi_roots(model, measure, ps.first().copied().unwrap_or(0.03125), 2.0) {
        ps.extend(roots);
    }
    ps.sort_by(f64::total_cmp);
    ps.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let closed: Vec<PhiPoint> = ps
        .iter()
        .map(|&p| match phi_closed(model, measure, p) {
            Ok(v) => PhiPoint { p, phi: Some(v.value), method: v.method, std_error: 0.0 },
            Err(_) => PhiPoint { p, phi: None, method: PhiMethod::ClosedForm, std_error: 0.0 },
        })
        .collect();
    let positive = |x: &&PhiPoint| x.phi.is_some_and(|v| v > 0.0);
    let upper = closed.iter().filter(|x| x.p > 1.0).filter(positive).map(|x| x.p).next_back();
    let verdict = if let Some(p_star) = upper {
        Verdict::ConvergesUniformly { p_star, gamma_star: holder_bound(model, measure, p_star)? }
    } else {
        let lower = closed
            .iter()
            .filter(|x| x.p < 1.0)
            .filter(positive)
            .min_by(|a, b| (a.p - 0.5).abs().total_cmp(&(b.p - 0.5).abs()))
            .map(|x| (x.p, x.phi.unwrap()));
        match lower {
            None => Verdict::Inconclusive,
            Some((p_star, _)) if model.is_badic() => {
                Verdict::DegeneratesToZero { p_star, distortion: DistortionBound::Structural }
            }
            Some((p_star, phi)) => {
                let growth = distortion_growth(model, p_star, 2..=6, 400, DISTORTION_SEED)?;
                if growth < 0.5 * phi * (model.base() as f64).ln() {
                    Verdict::DegeneratesToZero {
                        p_star,
                        distortion: DistortionBound::NumericallySupported { growth_per_level: growth },
                    }
                } else {
                    Verdict::Inconclusive
                }
            }
        }
    };
    Ok(PhiReport {
        family: model.family().to_string(),
        base: model.base(),
        closed,
        empirical: Vec::new(),
        verdict,
        beta_critical: beta_critical(model, measure)?,
    })
}

pub fn verdict(model: &CascadeModel, measure: &ReferenceMeasure) -> Result<PhiReport> {
    verdict_on_grid(model, measure, &default_p_grid())
}

/// Slope in `n` of `ln(E sup_{t∈I_w} |Q_n(t)|^p / E|Q_n(t_w)|^p)` for the
/// interval `I_w` containing `1/2`, the sup taken over 16 points of `I_w`.
pub fn distortion_growth(
    model: &CascadeModel,
    p: f64,
    n_range: std::ops::RangeInclusive<u32>,
    replicas: usize,
    seed: u64,
) -> Result<f64> {
    let b = model.base() as f64;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for n in n_range {
        let width = b.powi(-(n as i32));
        let left = (0.5 / width).floor() * width;
        let pairs = (0..replicas as u64)
            .into_par_iter()
            .map(|i| {
                let r = Realization::new(model, replica_seed(seed, i));
                let mut sup = 0.0f64;
                let mut at_left = 0.0;
                for j in 0..16 {
                    let v = r.q(left + width * j as f64 / 16.0, n)?.norm().powf(p);
                    if j == 0 {
                        at_left = v;
                    }
                    sup = sup.max(v);
                }
                Ok((sup, at_left))
            })
            .collect::<Result<Vec<(f64, f64)>>>()?;
        let sups: Vec<f64> = pairs.iter().map(|x| x.0).collect();
        let points: Vec<f64> = pairs.iter().map(|x| x.1).collect();
        let (s, q) = (estimate(&sups).mean, estimate(&points).mean);
        if !(s > 0.0 && q > 0.0) {
            return Err(CascadeError::Degenerate("zero moment in distortion check".into()));
        }
        xs.push(n as f64);
        ys.push((s / q).ln());
    }
    Ok(fit_line(&xs, &ys, None).slope)
}
