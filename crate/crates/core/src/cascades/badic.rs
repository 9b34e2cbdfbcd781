//! Homogeneous or periodically inhomogeneous b-adic independent cascades.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::badic::{cell_count, locate_index};
use crate::error::{CascadeError, Result};
use crate::rng::{domain, Stream};
use crate::schedule::LevelSchedule;
use crate::weights::WeightVectorLaw;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BadicModel {
    pub base: u32,
    /// Law of `W^{(k)}` for `k = 0, 1, …`.
    pub weights: LevelSchedule<WeightVectorLaw>,
}

impl BadicModel {
    pub fn homogeneous(base: u32, law: WeightVectorLaw) -> Self {
        Self { base, weights: LevelSchedule::Homogeneous(law) }
    }

    pub fn validate(&self) -> Result<()> {
        if self.base < 2 {
            return Err(CascadeError::InvalidBase(self.base));
        }
        self.weights.validate_nonempty()?;
        self.weights.entries().into_iter().try_for_each(|w| w.validate(self.base))
    }

    pub fn check_unit_mean(&self) -> Result<()> {
        self.weights.entries().into_iter().try_for_each(|w| w.check_unit_mean(self.base))
    }

    /// The weight vector `W^{(depth)}(w)` attached to node `w` (|w| = depth,
    /// `index` its position), drawn from its own stream.
    pub fn node_vector(&self, seed: u64, depth: u32, index: u64, out: &mut [Complex64]) {
        let mut s = Stream::new(seed).derive(domain::BADIC).derive(depth as u64).derive(index);
        self.weights.at(depth as usize).sample_into(&mut s, out);
    }
}

/// Weight vectors of generation `level - 1` over a range of nodes, i.e. the
/// values of `P_level` on the corresponding intervals of generation `level`.
#[derive(Debug, Clone)]
pub struct BadicLayer {
    pub level: u32,
    pub base: u32,
    pub first_node: u64,
    /// `values[(node - first_node) * b + digit]`
    pub values: Vec<Complex64>,
}

impl BadicLayer {
    pub fn sample(model: &BadicModel, seed: u64, level: u32, window: (f64, f64)) -> Result<Self> {
        let nodes = cell_count(model.base, level - 1)? as u64;
        if nodes > 1 << 53 {
            return Err(CascadeError::DepthTooLarge { depth: level, base: model.base });
        }
        let clamp = |t: f64| t.clamp(0.0, 1.0f64.next_down());
        let first = locate_index(clamp(window.0), nodes);
        let last = locate_index(clamp(window.1), nodes);
        Self::sample_nodes(model, seed, level, first, last + 1)
    }

    /// Layer over nodes `[first, end)` of generation `level - 1`.
    pub fn sample_nodes(
        model: &BadicModel,
        seed: u64,
        level: u32,
        first: u64,
        end: u64,
    ) -> Result<Self> {
        if level < 1 {
            return Err(CascadeError::InvalidParameter("levels start at 1".into()));
        }
        let b = model.base as usize;
        let mut values = vec![Complex64::new(0.0, 0.0); (end - first) as usize * b];
        for (i, chunk) in values.chunks_mut(b).enumerate() {
            model.node_vector(seed, level - 1, first + i as u64, chunk);
        }
        Ok(Self { level, base: model.base, first_node: first, values })
    }

    /// Value on interval `index` of generation `level`.
    pub fn on_interval(&self, index: u64) -> Result<Complex64> {
        let b = self.base as u64;
        let node = index / b;
        if node < self.first_node || node >= self.first_node + (self.values.len() as u64) / b {
            return Err(CascadeError::NotCovered { level: self.level, t: f64::NAN });
        }
        Ok(self.values[((node - self.first_node) * b + index % b) as usize])
    }

    /// `P_level(t) = W^{(level-1)}_{t_level}(t | level-1)`.
    pub fn value(&self, t: f64) -> Result<Complex64> {
        if !(0.0..1.0).contains(&t) {
            return Err(CascadeError::OutOfRange(t));
        }
        let count = cell_count(self.base, self.level)? as u64;
        self.on_interval(locate_index(t, count))
            .map_err(|_| CascadeError::NotCovered { level: self.level, t })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::WeightLaw;

    #[test]
    fn deterministic_one_everywhere() {
        let m = BadicModel::homogeneous(3, WeightVectorLaw::iid(WeightLaw::one()));
        let layer = BadicLayer::sample(&m, 1, 4, (0.0, 1.0)).unwrap();
        assert!(layer.values.iter().all(|v| *v == Complex64::new(1.0, 0.0)));
    }

    #[test]
    fn first_level_unrolled() {
        let law = WeightLaw::GaussianPerturbed { sigma: 1.0 };
        let m = BadicModel::homogeneous(2, WeightVectorLaw::iid(law));
        let mut w = [Complex64::new(0.0, 0.0); 2];
        m.node_vector(11, 0, 0, &mut w);
        let layer = BadicLayer::sample(&m, 11, 1, (0.0, 1.0)).unwrap();
        assert_eq!(layer.value(0.2).unwrap(), w[0]);
        assert_eq!(layer.value(0.49).unwrap(), w[0]);
        assert_eq!(layer.value(0.5).unwrap(), w[1]);
        assert_eq!(layer.value(0.99).unwrap(), w[1]);
        assert!(layer.value(1.0).is_err());
    }

    #[test]
    fn constant_on_intervals() {
        let law = WeightLaw::GaussianPerturbed { sigma: 1.0 };
        let m = BadicModel::homogeneous(3, WeightVectorLaw::iid(law));
        let layer = BadicLayer::sample(&m, 2, 3, (0.0, 1.0)).unwrap();
        for k in 0..27u32 {
            let a = k as f64 / 27.0;
            let v = layer.value(a).unwrap();
            assert_eq!(v, layer.value(a + 0.3 / 27.0).unwrap());
            assert_eq!(v, layer.value(a + 0.99 / 27.0).unwrap());
        }
    }

    #[test]
    fn window_matches_full() {
        let law = WeightLaw::LogNormalPhase { sigma: 0.2, tau: 0.7 };
        let m = BadicModel::homogeneous(2, WeightVectorLaw::iid(law));
        let full = BadicLayer::sample(&m, 8, 6, (0.0, 1.0)).unwrap();
        let part = BadicLayer::sample(&m, 8, 6, (0.3, 0.31)).unwrap();
        assert_eq!(full.value(0.305).unwrap(), part.value(0.305).unwrap());
        assert!(part.value(0.9).is_err());
    }
}
