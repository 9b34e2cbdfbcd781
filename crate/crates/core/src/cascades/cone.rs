//! Truncated cones in the time-scale half-plane and the intensity measure
//! `Λ = Leb ⊗ ν` that counts Poisson points inside them.

use serde::{Deserialize, Serialize};

use crate::error::{CascadeError, Result};
use crate::numerics;
use crate::rng::Stream;

/// `ΔC_n(t) = {(t', r) : b^{-n} < r <= b^{1-n}, t - βr/2 <= t' < t + βr/2}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cone {
    pub t: f64,
    pub level: u32,
    pub beta: f64,
    pub base: u32,
}

impl Cone {
    /// Scale band `(b^{-n}, b^{1-n}]`.
    pub fn scale_band(&self) -> (f64, f64) {
        scale_band(self.base, self.level)
    }

    pub fn contains(&self, t_prime: f64, r: f64) -> bool {
        let (lo, hi) = self.scale_band();
        r > lo && r <= hi && self.contains_in_band(t_prime, r)
    }

    /// Membership in the time direction only, for points already known to
    /// lie in the scale band.
    #[inline]
    pub fn contains_in_band(&self, t_prime: f64, r: f64) -> bool {
        let half = 0.5 * self.beta * r;
        self.t - half <= t_prime && t_prime < self.t + half
    }

    /// Horizontal extent of the cone: `[t - β b^{1-n}/2, t + β b^{1-n}/2)`.
    pub fn time_extent(&self) -> (f64, f64) {
        let half = 0.5 * self.beta * self.scale_band().1;
        (self.t - half, self.t + half)
    }
}

pub fn cone(t: f64, n: u32, beta: f64, base: u32) -> Result<Cone> {
    if !(0.0..=1.0).contains(&t) {
        return Err(CascadeError::OutOfRange(t));
    }
    if n < 1 {
        return Err(CascadeError::InvalidParameter("cone level must be >= 1".into()));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(CascadeError::InvalidParameter(format!("cone aperture {beta} must be > 0")));
    }
    if base < 2 {
        return Err(CascadeError::InvalidBase(base));
    }
    Ok(Cone { t, level: n, beta, base })
}

pub fn scale_band(base: u32, level: u32) -> (f64, f64) {
    let b = base as f64;
    (b.powi(-(level as i32)), b.powi(1 - level as i32))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaleAtom {
    pub r: f64,
    pub mass: f64,
}

/// The scale intensity `ν` on `(0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Intensity {
    /// `ν(dr) = δ dr / r²`
    ScaleInvariant { delta: f64 },
    /// `ν(dr) = c · r^{-exponent} dr`
    PowerLaw { coefficient: f64, exponent: f64 },
    /// Finitely many point masses.
    Atoms { atoms: Vec<ScaleAtom> },
}

impl Intensity {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(CascadeError::InvalidParameter(m.into()));
        match self {
            Intensity::ScaleInvariant { delta } => {
                if !(*delta > 0.0 && delta.is_finite()) {
                    return bad("scale-invariant intensity needs delta > 0");
                }
            }
            Intensity::PowerLaw { coefficient, exponent } => {
                if !(*coefficient > 0.0 && coefficient.is_finite() && exponent.is_finite()) {
                    return bad("power-law intensity needs coefficient > 0 and a finite exponent");
                }
            }
            Intensity::Atoms { atoms } => {
                if atoms.is_empty() {
                    return bad("atomic intensity needs at least one atom");
                }
                for a in atoms {
                    if !(a.r > 0.0 && a.r <= 1.0 && a.mass > 0.0 && a.mass.is_finite()) {
                        return bad("intensity atoms need r in (0, 1] and mass > 0");
                    }
                }
            }
        }
        Ok(())
    }

    pub fn is_scale_invariant(&self) -> bool {
        matches!(self, Intensity::ScaleInvariant { .. })
    }

    /// `ν((b^{-k}, b^{1-k}])`
    pub fn band_mass(&self, base: u32, level: u32) -> f64 {
        let (lo, hi) = scale_band(base, level);
        match self {
            Intensity::ScaleInvariant { delta } => delta * (1.0 / lo - 1.0 / hi),
            Intensity::PowerLaw { coefficient, exponent } => {
                coefficient * power_integral(lo, hi, *exponent)
            }
            Intensity::Atoms { atoms } => {
                atoms.iter().filter(|a| a.r > lo && a.r <= hi).map(|a| a.mass).sum()
            }
        }
    }

    /// `Λ(ΔC_k(t)) = ∫_{band} β r ν(dr)`; independent of `t` because the
    /// time direction carries Lebesgue measure.
    pub fn cone_measure(&self, beta: f64, base: u32, level: u32) -> f64 {
        let (lo, hi) = scale_band(base, level);
        match self {
            Intensity::ScaleInvariant { delta } => beta * delta * (base as f64).ln(),
            Intensity::PowerLaw { coefficient, exponent } => {
                let f = |r: f64| beta * r * coefficient * r.powf(-exponent);
                numerics::integrate(f, lo, hi, 1e-13 * (hi - lo))
            }
            Intensity::Atoms { atoms } => atoms
                .iter()
                .filter(|a| a.r > lo && a.r <= hi)
                .map(|a| beta * a.r * a.mass)
                .sum(),
        }
    }

    /// Scale of one Poisson point in band `level`, drawn from `ν` restricted
    /// to the band.
    pub fn sample_scale(&self, base: u32, level: u32, stream: &mut Stream) -> f64 {
        let (lo, hi) = scale_band(base, level);
        let u = stream.uniform_open0();
        match self {
            Intensity::ScaleInvariant { .. } => {
                // 1/r is uniform on [b^{k-1}, b^k)
                let (a, b) = (1.0 / hi, 1.0 / lo);
                let r = 1.0 / (a + (1.0 - u) * (b - a));
                r.clamp(lo.next_up(), hi)
            }
            Intensity::PowerLaw { exponent, .. } => {
                let e = *exponent;
                let r = if (e - 1.0).abs() < 1e-12 {
                    lo * (hi / lo).powf(u)
                } else {
                    let (a, b) = (lo.powf(1.0 - e), hi.powf(1.0 - e));
                    (a + u * (b - a)).powf(1.0 / (1.0 - e))
                };
                r.clamp(lo.next_up(), hi)
            }
            Intensity::Atoms { atoms } => {
                let inside: Vec<&ScaleAtom> =
                    atoms.iter().filter(|a| a.r > lo && a.r <= hi).collect();
                let total: f64 = inside.iter().map(|a| a.mass).sum();
                let mut cum = 0.0;
                for a in &inside {
                    cum += a.mass / total;
                    if u <= cum {
                        return a.r;
                    }
                }
                inside.last().map_or(hi, |a| a.r)
            }
        }
    }

    /// `β̃`: exponential growth rate, in base `b`, of `exp Λ(∪_{k<=n} ΔC_k)`.
    /// Exact (`βδ`) for the scale-invariant intensity; otherwise the finite
    /// horizon surrogate `max_{n ∈ [h/2, h]} Σ_{k<=n} Λ_k / (n ln b)`, flagged
    /// by the returned boolean being `false`.
    pub fn beta_tilde(&self, beta: f64, base: u32, horizon: u32) -> (f64, bool) {
        if let Intensity::ScaleInvariant { delta } = self {
            return (beta * delta, true);
        }
        let horizon = horizon.max(2);
        let ln_b = (base as f64).ln();
        let mut cumulative = 0.0;
        let mut best = f64::NEG_INFINITY;
        for n in 1..=horizon {
            cumulative += self.cone_measure(beta, base, n);
            if n >= horizon.div_ceil(2) {
                best = best.max(cumulative / (n as f64 * ln_b));
            }
        }
        (best, false)
    }
}

fn power_integral(lo: f64, hi: f64, e: f64) -> f64 {
    if (e - 1.0).abs() < 1e-12 {
        (hi / lo).ln()
    } else {
        (hi.powf(1.0 - e) - lo.powf(1.0 - e)) / (1.0 - e)
    }
}
