//! The three cascade families and their layer kernels `P_n`, `Q_n`.
//!
//! A [`Realization`] is a `(model, seed)` pair. All randomness is drawn from
//! counter-based streams keyed by level and position, so layers can be built
//! for any window of `[0, 1]` at any level, in any order, and always agree.

pub mod badic;
pub mod cone;
pub mod cpc;
pub mod logid;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CascadeError, Result};

pub use self::badic::{BadicLayer, BadicModel};
pub use self::cone::{cone, Cone, Intensity, ScaleAtom};
pub use self::cpc::{CompoundPoissonModel, ConeLayer, ConePoint, ConeRealization};
pub use self::logid::{CellLayer, JumpAtom, LevyExponent, LogIdModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum CascadeModel {
    BadicIndependent(BadicModel),
    CompoundPoisson(CompoundPoissonModel),
    LogInfDivisible(LogIdModel),
}

impl CascadeModel {
    pub fn base(&self) -> u32 {
        match self {
            CascadeModel::BadicIndependent(m) => m.base,
            CascadeModel::CompoundPoisson(m) => m.base,
            CascadeModel::LogInfDivisible(m) => m.base,
        }
    }

    pub fn family(&self) -> &'static str {
        match self {
            CascadeModel::BadicIndependent(_) => "badic_independent",
            CascadeModel::CompoundPoisson(_) => "compound_poisson",
            CascadeModel::LogInfDivisible(_) => "log_inf_divisible",
        }
    }

    pub fn is_badic(&self) -> bool {
        matches!(self, CascadeModel::BadicIndependent(_))
    }

    /// Structural validation; does not insist on unit-mean weights.
    pub fn validate(&self) -> Result<()> {
        match self {
            CascadeModel::BadicIndependent(m) => m.validate(),
            CascadeModel::CompoundPoisson(m) => m.validate(),
            CascadeModel::LogInfDivisible(m) => m.validate(),
        }
    }

    /// `E(W) = 1` for every weight. Log-ID models are normalized by
    /// construction.
    pub fn check_unit_mean(&self) -> Result<()> {
        match self {
            CascadeModel::BadicIndependent(m) => m.check_unit_mean(),
            CascadeModel::CompoundPoisson(m) => m.weight.check_unit_mean(),
            CascadeModel::LogInfDivisible(_) => Ok(()),
        }
    }

    /// Independence distance `N` of layer values, in units of `b^{-n}`.
    pub fn decorrelation_distance(&self) -> u64 {
        match self {
            CascadeModel::BadicIndependent(_) => 1,
            CascadeModel::CompoundPoisson(m) => (m.beta * m.base as f64).ceil() as u64 + 1,
            CascadeModel::LogInfDivisible(m) => m.base as u64 + 1,
        }
    }
}

/// `Λ(ΔC_n(t))` for cone families.
pub fn cone_measure(model: &CascadeModel, _t: f64, n: u32) -> Result<f64> {
    match model {
        CascadeModel::CompoundPoisson(m) => Ok(m.cone_measure(n)),
        CascadeModel::LogInfDivisible(m) => Ok((m.base as f64).ln()),
        CascadeModel::BadicIndependent(_) => {
            Err(CascadeError::Unsupported("cone measure of a b-adic cascade".into()))
        }
    }
}

/// One level of a realization, covering a window of `t`.
#[derive(Debug, Clone)]
pub enum Layer {
    Badic(BadicLayer),
    Cone(ConeLayer),
    Cells(CellLayer),
}

impl Layer {
    pub fn value(&self, t: f64) -> Result<Complex64> {
        match self {
            Layer::Badic(l) => l.value(t),
            Layer::Cone(l) => l.value(t),
            Layer::Cells(l) => l.value(t),
        }
    }

    /// Values on an ascending grid; identical to pointwise evaluation.
    pub fn values_sorted(&self, ts: &[f64]) -> Result<Vec<Complex64>> {
        match self {
            Layer::Cone(l) => l.values_sorted(ts),
            Layer::Cells(l) => l.values_sorted(ts),
            Layer::Badic(_) => ts.iter().map(|&t| self.value(t)).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Realization<'m> {
    pub model: &'m CascadeModel,
    pub seed: u64,
}

impl<'m> Realization<'m> {
    pub fn new(model: &'m CascadeModel, seed: u64) -> Self {
        Self { model, seed }
    }

    /// Layer `level` restricted to the points `t ∈ [lo, hi]`.
    pub fn layer(&self, level: u32, window: (f64, f64)) -> Result<Layer> {
        if level < 1 {
            return Err(CascadeError::InvalidParameter("levels start at 1".into()));
        }
        Ok(match self.model {
            CascadeModel::BadicIndependent(m) => {
                Layer::Badic(BadicLayer::sample(m, self.seed, level, window)?)
            }
            CascadeModel::CompoundPoisson(m) => {
                Layer::Cone(ConeLayer::sample(m, self.seed, level, window))
            }
            CascadeModel::LogInfDivisible(m) => {
                Layer::Cells(CellLayer::sample(m, self.seed, level, window))
            }
        })
    }

    fn check_t(&self, t: f64) -> Result<()> {
        let ok = if self.model.is_badic() { (0.0..1.0).contains(&t) } else { (0.0..=1.0).contains(&t) };
        if ok {
            Ok(())
        } else {
            Err(CascadeError::OutOfRange(t))
        }
    }

    /// `P_n(t)`
    pub fn p(&self, t: f64, n: u32) -> Result<Complex64> {
        self.check_t(t)?;
        self.layer(n, (t, t))?.value(t)
    }

    /// `Q_n(t) = P_1(t) ⋯ P_n(t)`, multiplied in increasing level order.
    pub fn q(&self, t: f64, n: u32) -> Result<Complex64> {
        self.check_t(t)?;
        let mut acc = Complex64::new(1.0, 0.0);
        for k in 1..=n {
            acc *= self.layer(k, (t, t))?.value(t)?;
        }
        Ok(acc)
    }

    /// `(Q_1(t), …, Q_n(t))`
    pub fn q_path(&self, t: f64, n: u32) -> Result<Vec<Complex64>> {
        self.check_t(t)?;
        let mut acc = Complex64::new(1.0, 0.0);
        let mut out = Vec::with_capacity(n as usize);
        for k in 1..=n {
            acc *= self.layer(k, (t, t))?.value(t)?;
            out.push(acc);
        }
        Ok(out)
    }
}

pub fn eval_p_badic(model: &BadicModel, seed: u64, t: f64, n: u32) -> Result<Complex64> {
    BadicLayer::sample(model, seed, n, (t, t))?.value(t)
}

pub fn eval_p_cpc(model: &CompoundPoissonModel, seed: u64, t: f64, n: u32) -> Result<Complex64> {
    ConeLayer::sample(model, seed, n, (t, t)).value(t)
}

pub fn eval_p_logid(model: &LogIdModel, seed: u64, t: f64, n: u32) -> Result<Complex64> {
    CellLayer::sample(model, seed, n, (t, t)).value(t)
}

pub fn eval_q(model: &CascadeModel, seed: u64, t: f64, n: u32) -> Result<Complex64> {
    Realization::new(model, seed).q(t, n)
}
