//! Fine analysis of sampled paths: oscillations, coarse Hölder exponents,
//! the large deviation spectrum and structure-function exponents.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CascadeError, Result};
use crate::numerics::fit_line;
use crate::simulate::PathSample;

/// Default `ε` schedule of the spectrum, coarsest first.
pub const EPS_SCHEDULE: [f64; 3] = [0.2, 0.1, 0.05];

/// Width of the coarse-exponent histogram bins.
pub const HISTOGRAM_BIN: f64 = 0.05;

/// A complex path sampled on the grid `j / M`, `M = m_sub·b^depth`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub base: u32,
    pub depth: u32,
    pub m_sub: usize,
    pub values: Vec<Complex64>,
}

impl Trace {
    pub fn new(base: u32, depth: u32, m_sub: usize, values: Vec<Complex64>) -> Result<Self> {
        let expected = m_sub * (base as usize).pow(depth) + 1;
        if values.len() != expected {
            return Err(CascadeError::InvalidParameter(format!(
                "trace has {} values, the grid needs {expected}",
                values.len()
            )));
        }
        Ok(Self { base, depth, m_sub, values })
    }

    pub fn from_path(path: &PathSample, n: u32) -> Result<Self> {
        Self::new(path.base, path.n_max, path.m_sub, path.generation(n)?.to_vec())
    }

    pub fn from_fn(base: u32, depth: u32, m_sub: usize, f: impl Fn(f64) -> Complex64) -> Self {
        let m = m_sub * (base as usize).pow(depth);
        let values = (0..=m).map(|j| f(j as f64 / m as f64)).collect();
        Self { base, depth, m_sub, values }
    }

    /// `F(t) = t`
    pub fn identity(base: u32, depth: u32) -> Self {
        Self::from_fn(base, depth, 1, |t| Complex64::new(t, 0.0))
    }

    pub fn zero(base: u32, depth: u32) -> Self {
        Self::from_fn(base, depth, 1, |_| Complex64::new(0.0, 0.0))
    }

    /// `F(t) = Σ_{k<terms} 2^{-k/2} e^{2πi 2^k t}` divided by its diameter, Hölder
    /// exponent `1/2` at every point, on the dyadic grid.
    pub fn weierstrass(depth: u32, terms: u32) -> Self {
        let mut trace = Self::from_fn(2, depth, 1, |t| {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..terms {
                let freq = (1u64 << k) as f64;
                // reduce the phase exactly on the dyadic grid
                let phase = (freq * t).fract();
                acc += Complex64::from_polar(2f64.powf(-0.5 * k as f64), 2.0 * PI * phase);
            }
            acc
        });
        // unit oscillation on [0, 1], so coarse exponents carry no log C / n offset
        let d = diameter(&trace.values);
        trace.values.iter_mut().for_each(|v| *v /= d);
        trace
    }

    pub fn resolution(&self) -> usize {
        self.values.len() - 1
    }

    /// Grid indices `[a, b]` covering the closure of `I_w`, `w` the `k`-th
    /// word of length `n`.
    fn cell(&self, n: u32, k: usize) -> (usize, usize) {
        let stride = self.m_sub * (self.base as usize).pow(self.depth - n);
        (k * stride, (k + 1) * stride)
    }

    fn check_level(&self, n: u32) -> Result<()> {
        if n > self.depth {
            return Err(CascadeError::InvalidParameter(format!(
                "generation {n} is finer than the trace depth {}",
                self.depth
            )));
        }
        Ok(())
    }
}

fn cross(o: Complex64, a: Complex64, b: Complex64) -> f64 {
    (a.re - o.re) * (b.im - o.im) - (a.im - o.im) * (b.re - o.re)
}

/// Convex hull, counter-clockwise, without collinear points.
fn convex_hull(points: &[Complex64]) -> Vec<Complex64> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<Complex64> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Complex64>> =
            if pass == 0 { Box::new(pts.iter()) } else { Box::new(pts.iter().rev()) };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

/// Diameter `max |z_i − z_j|` of a planar point set.
pub fn diameter(points: &[Complex64]) -> f64 {
    if points.len() <= 16 {
        let mut best = 0.0f64;
        for (i, a) in points.iter().enumerate() {
            for b in &points[i + 1..] {
                best = best.max((a - b).norm());
            }
        }
        return best;
    }
    let hull = convex_hull(points);
    let h = hull.len();
    if h < 3 {
        return if h == 2 { (hull[0] - hull[1]).norm() } else { 0.0 };
    }
    // rotating calipers over antipodal pairs
    let mut best = 0.0f64;
    let mut j = 1;
    for i in 0..h {
        let a = hull[i];
        let b = hull[(i + 1) % h];
        while cross(a, b, hull[(j + 1) % h]).abs() > cross(a, b, hull[j]).abs() {
            j = (j + 1) % h;
        }
        best = best.max((a - hull[j]).norm()).max((b - hull[j]).norm());
    }
    best
}

/// `Osc_F(J) = sup_{s,t ∈ J} |F(t) − F(s)|` over the grid points in
/// `J = [lo, hi]`.
pub fn oscillation(trace: &Trace, lo: f64, hi: f64) -> Result<f64> {
    let m = trace.resolution() as f64;
    let a = (lo * m - 1e-9).ceil().max(0.0) as usize;
    let b = ((hi * m + 1e-9).floor() as usize).min(trace.resolution());
    if hi < lo || b < a + 1 {
        return Err(CascadeError::InvalidParameter(format!(
            "[{lo}, {hi}] holds fewer than two grid points"
        )));
    }
    Ok(diameter(&trace.values[a..=b]))
}

/// `Osc_F(I_w)` for every `w ∈ 𝒜^n`.
pub fn oscillations(trace: &Trace, n: u32) -> Result<Vec<f64>> {
    trace.check_level(n)?;
    let count = (trace.base as usize).pow(n);
    Ok((0..count)
        .into_par_iter()
        .map(|k| {
            let (a, b) = trace.cell(n, k);
            diameter(&trace.values[a..=b])
        })
        .collect())
}

/// `α_w = log_b Osc_F(I_w) / (−n)`; `None` where the oscillation vanishes.
pub fn coarse_exponents(trace: &Trace, n: u32) -> Result<Vec<Option<f64>>> {
    if n == 0 {
        return Err(CascadeError::InvalidParameter("coarse exponents need n >= 1".into()));
    }
    let ln_b = (trace.base as f64).ln();
    Ok(oscillations(trace, n)?
        .into_iter()
        .map(|o| (o > 0.0).then(|| -(o.ln() / ln_b) / n as f64))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentHistogram {
    pub n: u32,
    pub bin_width: f64,
    /// `(left edge, count)`, ascending.
    pub bins: Vec<(f64, usize)>,
    /// Intervals with zero oscillation.
    pub infinite: usize,
}

impl ExponentHistogram {
    pub fn total(&self) -> usize {
        self.bins.iter().map(|b| b.1).sum::<usize>() + self.infinite
    }
}

pub fn histogram(exponents: &[Option<f64>], n: u32, bin_width: f64) -> ExponentHistogram {
    let mut bins: BTreeMap<i64, usize> = BTreeMap::new();
    let mut infinite = 0;
    for a in exponents {
        match a {
            Some(h) => *bins.entry((h / bin_width).floor() as i64).or_default() += 1,
            None => infinite += 1,
        }
    }
    ExponentHistogram {
        n,
        bin_width,
        bins: bins.into_iter().map(|(k, c)| (k as f64 * bin_width, c)).collect(),
        infinite,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub eps: f64,
    /// `per_n[i][k]`: `log_b #{w: |α_w − h_k| <= ε} / n_i`, `None` for an
    /// empty count.
    pub per_n: Vec<Vec<Option<f64>>>,
    /// Max over the top half of the generations.
    pub estimate: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub base: u32,
    pub h_grid: Vec<f64>,
    pub generations: Vec<u32>,
    /// Generations entering the limsup surrogate.
    pub top_generations: Vec<u32>,
    pub rows: Vec<SpectrumRow>,
    /// The row with the smallest `ε`.
    pub headline: Vec<Option<f64>>,
    pub histograms: Vec<ExponentHistogram>,
    /// `min_w α_w`, minimized over the top half of the generations.
    pub gamma_regularity: Option<f64>,
}

impl SpectrumReport {
    /// `(min h, max h)` over grid points with a finite headline value.
    pub fn support(&self) -> Option<(f64, f64)> {
        let hs: Vec<f64> =
            self.h_grid.iter().zip(&self.headline).filter(|(_, v)| v.is_some()).map(|(h, _)| *h).collect();
        Some((*hs.first()?, *hs.last()?))
    }
}

/// `h` values `0, step, …, h_max`.
pub fn default_h_grid(h_max: f64, step: f64) -> Vec<f64> {
    let k = (h_max / step).round() as usize;
    (0..=k).map(|i| i as f64 * step).collect()
}

pub fn large_deviation_spectrum(
    trace: &Trace,
    n_range: std::ops::RangeInclusive<u32>,
    eps_schedule: &[f64],
    h_grid: &[f64],
) -> Result<SpectrumReport> {
    let generations: Vec<u32> = n_range.collect();
    if generations.is_empty() || eps_schedule.is_empty() {
        return Err(CascadeError::InvalidParameter("empty generation range or ε schedule".into()));
    }
    let ln_b = (trace.base as f64).ln();
    let exps = generations
        .iter()
        .map(|&n| coarse_exponents(trace, n))
        .collect::<Result<Vec<_>>>()?;
    let first_top = generations.len() / 2;
    let top_generations = generations[first_top..].to_vec();
    let mut eps_sorted = eps_schedule.to_vec();
    eps_sorted.sort_by(|a, b| b.total_cmp(a));
    let rows: Vec<SpectrumRow> = eps_sorted
        .iter()
        .map(|&eps| {
            let per_n: Vec<Vec<Option<f64>>> = generations
                .iter()
                .zip(&exps)
                .map(|(&n, ex)| {
                    h_grid
                        .iter()
                        .map(|&h| {
                            let count = ex.iter().flatten().filter(|a| (**a - h).abs() <= eps + 1e-12).count();
                            (count > 0).then(|| (count as f64).ln() / ln_b / n as f64)
                        })
                        .collect()
                })
                .collect();
            let estimate = (0..h_grid.len())
                .map(|k| {
                    per_n[first_top..].iter().filter_map(|row| row[k]).fold(None, |m: Option<f64>, v| {
                        Some(m.map_or(v, |m| m.max(v)))
                    })
                })
                .collect();
            SpectrumRow { eps, per_n, estimate }
        })
        .collect();
    let headline = rows.last().map(|r| r.estimate.clone()).unwrap_or_default();
    let histograms =
        generations.iter().zip(&exps).map(|(&n, ex)| histogram(ex, n, HISTOGRAM_BIN)).collect();
    let gamma_regularity = exps[first_top..]
        .iter()
        .flat_map(|ex| ex.iter().flatten().copied())
        .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.min(v))));
    Ok(SpectrumReport {
        base: trace.base,
        h_grid: h_grid.to_vec(),
        generations,
        top_generations,
        rows,
        headline,
        histograms,
        gamma_regularity,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StructureExponent {
    pub q: f64,
    pub tau: f64,
    pub std_error: f64,
}

/// `τ(q)`: least-squares slope of `log_b Σ_w Osc_F(I_w)^q` against `−n`,
/// intervals with zero oscillation left out.
pub fn structure_exponents(
    trace: &Trace,
    q_list: &[f64],
    n_range: std::ops::RangeInclusive<u32>,
) -> Result<Vec<StructureExponent>> {
    let ln_b = (trace.base as f64).ln();
    let generations: Vec<u32> = n_range.collect();
    if generations.len() < 2 {
        return Err(CascadeError::InvalidParameter("need at least two generations".into()));
    }
    let oscs = generations.iter().map(|&n| oscillations(trace, n)).collect::<Result<Vec<_>>>()?;
    q_list
        .iter()
        .map(|&q| {
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for (&n, os) in generations.iter().zip(&oscs) {
                let sum: f64 = os.iter().filter(|o| **o > 0.0).map(|o| o.powf(q)).sum();
                if sum > 0.0 {
                    xs.push(-(n as f64));
                    ys.push(sum.ln() / ln_b);
                }
            }
            if xs.len() < 2 {
                return Err(CascadeError::Degenerate("all oscillations vanish".into()));
            }
            let fit = fit_line(&xs, &ys, None);
            Ok(StructureExponent { q, tau: fit.slope, std_error: fit.slope_std_error })
        })
        .collect()
}

/// Coarse exponent of `I_n(t)` minimized over the top half of `n_range`:
/// a surrogate for the dyadic `h_F(t)`. `None` when every oscillation along
/// `t`'s digit path vanishes.
pub fn pointwise_holder(trace: &Trace, t: f64, n_range: std::ops::RangeInclusive<u32>) -> Result<Option<f64>> {
    if !(0.0..1.0).contains(&t) {
        return Err(CascadeError::OutOfRange(t));
    }
    let generations: Vec<u32> = n_range.collect();
    let ln_b = (trace.base as f64).ln();
    let mut best: Option<f64> = None;
    for &n in &generations[generations.len() / 2..] {
        trace.check_level(n)?;
        let count = (trace.base as usize).pow(n);
        let k = ((t * count as f64).floor() as usize).min(count - 1);
        let (a, b) = trace.cell(n, k);
        let o = diameter(&trace.values[a..=b]);
        if o > 0.0 {
            let h = -(o.ln() / ln_b) / n as f64;
            best = Some(best.map_or(h, |m: f64| m.min(h)));
        }
    }
    Ok(best)
}
