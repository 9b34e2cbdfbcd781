//! Compound Poisson cascades: marked Poisson points in the strip
//! `[-β/2, 1+β/2] × (0, 1]`, sampled bin by bin so that any window of any
//! level can be regenerated on its own.

use num_complex::Complex64;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::cone::{scale_band, Cone, Intensity};
use super::logid::partition_point;
use crate::error::{CascadeError, Result};
use crate::rng::{domain, Stream};
use crate::weights::WeightLaw;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompoundPoissonModel {
    pub base: u32,
    pub beta: f64,
    pub intensity: Intensity,
    pub weight: WeightLaw,
}

impl CompoundPoissonModel {
    pub fn validate(&self) -> Result<()> {
        if self.base < 2 {
            return Err(CascadeError::InvalidBase(self.base));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(CascadeError::InvalidParameter(format!(
                "cone aperture beta = {} must be > 0",
                self.beta
            )));
        }
        self.intensity.validate()?;
        self.weight.validate()
    }

    pub fn cone_measure(&self, level: u32) -> f64 {
        self.intensity.cone_measure(self.beta, self.base, level)
    }

    /// `exp(-Λ(ΔC_k)(E(W) - 1))`
    pub fn normalizer(&self, level: u32) -> Complex64 {
        (-(self.weight.mean() - 1.0) * self.cone_measure(level)).exp()
    }

    fn bin_width(&self, level: u32) -> f64 {
        scale_band(self.base, level).1
    }

    fn origin(&self) -> f64 {
        -0.5 * self.beta
    }

    fn bin_count(&self, level: u32) -> usize {
        ((1.0 + self.beta) / self.bin_width(level)).ceil() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConePoint {
    pub t: f64,
    pub r: f64,
    pub mark: Complex64,
}

/// The Poisson points of one scale band, over a range of strip bins.
#[derive(Debug, Clone)]
pub struct ConeLayer {
    pub level: u32,
    pub base: u32,
    pub beta: f64,
    pub normalizer: Complex64,
    /// Ordered by bin, then by generation order within the bin.
    pub points: Vec<ConePoint>,
    window: (f64, f64),
}

impl ConeLayer {
    pub fn sample(model: &CompoundPoissonModel, seed: u64, level: u32, window: (f64, f64)) -> Self {
        let h = model.bin_width(level);
        let x0 = model.origin();
        let reach = 0.5 * model.beta * h;
        let bins = model.bin_count(level);
        let first = ((window.0 - reach - x0) / h).floor().max(0.0) as usize;
        let last = (((window.1 + reach - x0) / h).floor() as usize + 1).min(bins);
        let mean = h * model.intensity.band_mass(model.base, level);
        let poisson = (mean > 0.0).then(|| Poisson::new(mean).expect("positive mean"));
        let level_stream = Stream::new(seed).derive(domain::POISSON).derive(level as u64);
        let mut points = Vec::new();
        for j in first..last {
            let Some(pois) = &poisson else { break };
            let mut s = level_stream.derive(j as u64);
            let count: f64 = pois.sample(&mut s);
            for _ in 0..count as u64 {
                let t = x0 + (j as f64 + s.uniform()) * h;
                let r = model.intensity.sample_scale(model.base, level, &mut s);
                let mark = model.weight.sample(&mut s);
                points.push(ConePoint { t, r, mark });
            }
        }
        Self {
            level,
            base: model.base,
            beta: model.beta,
            normalizer: model.normalizer(level),
            points,
            window,
        }
    }

    pub fn cone(&self, t: f64) -> Cone {
        Cone { t, level: self.level, beta: self.beta, base: self.base }
    }

    pub fn points_in_cone(&self, t: f64) -> Result<impl Iterator<Item = &ConePoint>> {
        if t < self.window.0 || t > self.window.1 {
            return Err(CascadeError::NotCovered { level: self.level, t });
        }
        let cone = self.cone(t);
        Ok(self.points.iter().filter(move |p| cone.contains_in_band(p.t, p.r)))
    }

    /// `P_level(t)`: normalizer times the product of marks in the cone.
    pub fn value(&self, t: f64) -> Result<Complex64> {
        let mut acc = Complex64::new(1.0, 0.0);
        for p in self.points_in_cone(t)? {
            acc *= p.mark;
        }
        Ok(acc * self.normalizer)
    }

    /// `P_level` at every point of an ascending grid inside the window.
    /// Bit-identical to calling [`ConeLayer::value`] point by point.
    pub fn values_sorted(&self, ts: &[f64]) -> Result<Vec<Complex64>> {
        if let (Some(&a), Some(&b)) = (ts.first(), ts.last()) {
            if a < self.window.0 || b > self.window.1 {
                let t = if a < self.window.0 { a } else { b };
                return Err(CascadeError::NotCovered { level: self.level, t });
            }
        }
        let mut out = vec![Complex64::new(1.0, 0.0); ts.len()];
        for p in &self.points {
            let half = 0.5 * self.beta * p.r;
            // cone(t) ∋ p  ⇔  t - half <= p.t  and  p.t < t + half
            let lo = partition_point(0, ts.len(), |i| !(p.t < ts[i] + half));
            let hi = partition_point(lo, ts.len(), |i| ts[i] - half <= p.t);
            for v in &mut out[lo..hi] {
                *v *= p.mark;
            }
        }
        for v in &mut out {
            *v *= self.normalizer;
        }
        Ok(out)
    }
}

/// All cone layers of a compound Poisson realization over the full strip,
/// levels `1..=depth`. Extending to a deeper level leaves existing layers
/// untouched.
#[derive(Debug, Clone)]
pub struct ConeRealization {
    pub seed: u64,
    pub layers: Vec<ConeLayer>,
}

impl ConeRealization {
    pub fn sample(model: &CompoundPoissonModel, seed: u64, depth: u32) -> Self {
        let mut r = Self { seed, layers: Vec::new() };
        r.extend_to(model, depth);
        r
    }

    pub fn depth(&self) -> u32 {
        self.layers.len() as u32
    }

    pub fn extend_to(&mut self, model: &CompoundPoissonModel, depth: u32) {
        for level in self.depth() + 1..=depth {
            self.layers.push(ConeLayer::sample(model, self.seed, level, (0.0, 1.0)));
        }
    }

    /// Number of sampled points inside `ΔC_n(t)`.
    pub fn count_in_cone(&self, t: f64, n: u32) -> Result<usize> {
        let layer = self
            .layers
            .get(n as usize - 1)
            .ok_or(CascadeError::NotCovered { level: n, t })?;
        Ok(layer.points_in_cone(t)?.count())
    }
}
