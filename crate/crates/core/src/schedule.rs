use serde::{Deserialize, Serialize};

use crate::error::{CascadeError, Result};

/// A per-level parameter: either the same value at every level, or a finite
/// list repeated periodically (level `k` uses entry `k mod len`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LevelSchedule<T> {
    Homogeneous(T),
    Periodic(Vec<T>),
}

impl<T> LevelSchedule<T> {
    /// Entry used at level `k` (levels counted from 0).
    pub fn at(&self, k: usize) -> &T {
        match self {
            LevelSchedule::Homogeneous(v) => v,
            LevelSchedule::Periodic(vs) => &vs[k % vs.len()],
        }
    }

    pub fn period(&self) -> usize {
        match self {
            LevelSchedule::Homogeneous(_) => 1,
            LevelSchedule::Periodic(vs) => vs.len(),
        }
    }

    pub fn is_homogeneous(&self) -> bool {
        self.period() == 1
    }

    pub fn entries(&self) -> Vec<&T> {
        match self {
            LevelSchedule::Homogeneous(v) => vec![v],
            LevelSchedule::Periodic(vs) => vs.iter().collect(),
        }
    }

    pub fn validate_nonempty(&self) -> Result<()> {
        if self.period() == 0 {
            return Err(CascadeError::InvalidParameter("periodic schedule is empty".into()));
        }
        Ok(())
    }
}

pub(crate) fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub(crate) fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}
