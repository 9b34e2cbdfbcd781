//! Coupled sample paths `F_n(t) = ∫_0^t Q_n dλ` and the Monte Carlo checks
//! built on them.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::badic::cell_count;
use crate::cascades::{BadicLayer, BadicModel, CascadeModel, Intensity, Layer, Realization};
use crate::convergence::{check_support, s_np_closed, s_np_mc_levels, ReferenceMeasure};
use crate::error::{CascadeError, Result};
use crate::numerics::{
    complex_estimate, estimate, fit_line, CompensatedComplexSum, CompensatedSum, ComplexEstimate,
    Estimate,
};
use crate::rng::{domain, replica_seed, Stream};

/// Grid points evaluated per parallel task.
const CHUNK: usize = 4096;

/// `F_n` for `n ∈ [n_min, n_max]` on the grid `j / M`, `M = m_sub·b^{n_max}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSample {
    pub family: String,
    pub base: u32,
    pub seed: u64,
    pub n_min: u32,
    pub n_max: u32,
    pub m_sub: usize,
    pub measure: ReferenceMeasure,
    /// `values[n - n_min][j] = F_n(j / M)`, `j = 0..=M`.
    pub values: Vec<Vec<Complex64>>,
}

impl PathSample {
    /// `M`, the number of grid cells.
    pub fn resolution(&self) -> usize {
        self.m_sub * (self.base as usize).pow(self.n_max)
    }

    pub fn t(&self, j: usize) -> f64 {
        j as f64 / self.resolution() as f64
    }

    pub fn grid(&self) -> Vec<f64> {
        (0..=self.resolution()).map(|j| self.t(j)).collect()
    }

    pub fn generations(&self) -> std::ops::RangeInclusive<u32> {
        self.n_min..=self.n_max
    }

    pub fn generation(&self, n: u32) -> Result<&[Complex64]> {
        if n < self.n_min || n > self.n_max {
            return Err(CascadeError::InvalidParameter(format!(
                "generation {n} outside [{}, {}]",
                self.n_min, self.n_max
            )));
        }
        Ok(&self.values[(n - self.n_min) as usize])
    }

    /// Grid stride between consecutive points of `T_level`.
    pub fn stride(&self, level: u32) -> Result<usize> {
        if level > self.n_max {
            return Err(CascadeError::InvalidParameter(format!(
                "level {level} is finer than the path resolution {}",
                self.n_max
            )));
        }
        Ok(self.m_sub * (self.base as usize).pow(self.n_max - level))
    }

    /// `F_n` at the points of `T_level` (including `1`).
    pub fn on_level(&self, n: u32, level: u32) -> Result<Vec<Complex64>> {
        let stride = self.stride(level)?;
        Ok(self.generation(n)?.iter().step_by(stride).copied().collect())
    }

    /// `ΔF_n(I_w)` for `w ∈ 𝒜^level`, in lexicographic order.
    pub fn increments(&self, n: u32, level: u32) -> Result<Vec<Complex64>> {
        let pts = self.on_level(n, level)?;
        Ok(pts.windows(2).map(|w| w[1] - w[0]).collect())
    }
}

/// Build `F_n`, `1 <= n <= n_max`, on one realization.
pub fn build_paths(
    model: &CascadeModel,
    measure: &ReferenceMeasure,
    seed: u64,
    n_max: u32,
    m_sub: usize,
) -> Result<PathSample> {
    build_paths_range(model, measure, seed, 1, n_max, m_sub)
}

pub fn build_paths_range(
    model: &CascadeModel,
    measure: &ReferenceMeasure,
    seed: u64,
    n_min: u32,
    n_max: u32,
    m_sub: usize,
) -> Result<PathSample> {
    check_support(model, measure)?;
    if n_min < 1 || n_max < n_min {
        return Err(CascadeError::InvalidParameter(format!(
            "generations [{n_min}, {n_max}] must satisfy 1 <= n_min <= n_max"
        )));
    }
    if m_sub < 1 {
        return Err(CascadeError::InvalidParameter("m_sub must be >= 1".into()));
    }
    let b = model.base();
    let top = cell_count(b, n_max)?;
    let resolution = top
        .checked_mul(m_sub)
        .filter(|m| *m <= 1 << 28)
        .ok_or(CascadeError::DepthTooLarge { depth: n_max, base: b })?;
    let values = match model {
        CascadeModel::BadicIndependent(m) => {
            badic_paths(m, measure, seed, n_min, n_max, m_sub, resolution)?
        }
        _ => cone_paths(model, seed, n_min, n_max, resolution)?,
    };
    Ok(PathSample {
        family: model.family().to_string(),
        base: b,
        seed,
        n_min,
        n_max,
        m_sub,
        measure: measure.clone(),
        values,
    })
}

/// Cumulative `λ([0, j/M])` on the grid.
fn measure_cdf(measure: &ReferenceMeasure, base: u32, resolution: usize) -> Result<Vec<f64>> {
    if measure.is_lebesgue() {
        return Ok((0..=resolution).map(|j| j as f64 / resolution as f64).collect());
    }
    let b = base as usize;
    let mut depth = 0u32;
    let mut cells = 1usize;
    while cells < resolution {
        cells *= b;
        depth += 1;
    }
    if cells != resolution {
        return Err(CascadeError::Unsupported(
            "a non-Lebesgue measure needs m_sub to be a power of the base".into(),
        ));
    }
    let mut mass = vec![1.0];
    for k in 0..depth as usize {
        mass = mass
            .iter()
            .flat_map(|m| (0..b).map(move |i| (*m, i)))
            .map(|(m, i)| m * measure.digit_mass(base, k, i))
            .collect();
    }
    let mut acc = CompensatedSum::default();
    let mut cdf = Vec::with_capacity(resolution + 1);
    cdf.push(0.0);
    for m in mass {
        acc.add(m);
        cdf.push(acc.value());
    }
    Ok(cdf)
}

fn badic_paths(
    m: &BadicModel,
    measure: &ReferenceMeasure,
    seed: u64,
    n_min: u32,
    n_max: u32,
    m_sub: usize,
    resolution: usize,
) -> Result<Vec<Vec<Complex64>>> {
    let b = m.base as usize;
    let cdf = measure_cdf(measure, m.base, resolution)?;
    let mut q = vec![Complex64::new(1.0, 0.0)];
    let mut lam = vec![1.0f64];
    let mut out = Vec::new();
    for n in 1..=n_max {
        let layer = BadicLayer::sample_nodes(m, seed, n, 0, q.len() as u64)?;
        let mut nq = Vec::with_capacity(q.len() * b);
        let mut nl = Vec::with_capacity(q.len() * b);
        for (node, (qv, lv)) in q.iter().zip(&lam).enumerate() {
            for i in 0..b {
                nq.push(qv * layer.values[node * b + i]);
                nl.push(lv * measure.digit_mass(m.base, n as usize - 1, i));
            }
        }
        q = nq;
        lam = nl;
        if n < n_min {
            continue;
        }
        // exact increments λ(I_w)·Q_n(w), summed at the points of T_n
        let stride = m_sub * b.pow(n_max - n);
        let mut path = vec![Complex64::new(0.0, 0.0); resolution + 1];
        let mut acc = CompensatedComplexSum::default();
        for (w, (qv, lv)) in q.iter().zip(&lam).enumerate() {
            let j0 = w * stride;
            let start = acc.value();
            for j in j0 + 1..j0 + stride {
                path[j] = start + qv * (cdf[j] - cdf[j0]);
            }
            acc.add(qv * lv);
            path[j0 + stride] = acc.value();
        }
        out.push(path);
    }
    Ok(out)
}

fn cone_paths(
    model: &CascadeModel,
    seed: u64,
    n_min: u32,
    n_max: u32,
    resolution: usize,
) -> Result<Vec<Vec<Complex64>>> {
    let real = Realization::new(model, seed);
    let h = 1.0 / resolution as f64;
    let left: Vec<f64> = (0..resolution).map(|j| j as f64 * h).collect();
    let mut q = vec![Complex64::new(1.0, 0.0); resolution];
    let mut out = Vec::new();
    for n in 1..=n_max {
        let layer: Layer = real.layer(n, (0.0, 1.0))?;
        q.par_chunks_mut(CHUNK)
            .zip(left.par_chunks(CHUNK))
            .try_for_each(|(qs, ts)| -> Result<()> {
                for (qv, p) in qs.iter_mut().zip(layer.values_sorted(ts)?) {
                    *qv *= p;
                }
                Ok(())
            })?;
        if n < n_min {
            continue;
        }
        let mut path = Vec::with_capacity(resolution + 1);
        let mut acc = CompensatedComplexSum::default();
        path.push(Complex64::new(0.0, 0.0));
        for qv in &q {
            acc.add(qv * h);
            path.push(acc.value());
        }
        out.push(path);
    }
    Ok(out)
}

/// `max_{t ∈ T_n} |F_n(t) − F_{n−1}(t)|`
pub fn cauchy_increment(paths: &PathSample, n: u32) -> Result<f64> {
    if n < 2 {
        return Err(CascadeError::InvalidParameter("cauchy increment needs n >= 2".into()));
    }
    let a = paths.on_level(n, n)?;
    let b = paths.on_level(n - 1, n)?;
    Ok(a.iter().zip(&b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max))
}

/// `Σ_j |F(t_{j+1}) − F(t_j)|` over consecutive grid values.
pub fn total_variation(values: &[Complex64]) -> f64 {
    values.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
}

/// `‖F_n‖_∞` over the grid, one entry per stored generation.
pub fn sup_norm_trajectory(paths: &PathSample) -> Vec<f64> {
    paths.values.iter().map(|v| v.iter().map(|z| z.norm()).fold(0.0, f64::max)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MartingalePoint {
    pub t: f64,
    pub estimate: ComplexEstimate,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MartingaleReport {
    pub n: u32,
    pub replicas: usize,
    pub points: Vec<MartingalePoint>,
    pub pass: bool,
}

/// `E Q_n(t)` per `t`; a point fails when either component is more than
/// four standard errors from `1 + 0i`.
pub fn martingale_check(
    model: &CascadeModel,
    t_list: &[f64],
    n: u32,
    replicas: usize,
    seed: u64,
) -> Result<MartingaleReport> {
    model.validate()?;
    let samples = (0..replicas as u64)
        .into_par_iter()
        .map(|i| {
            let r = Realization::new(model, replica_seed(seed, i));
            t_list.iter().map(|&t| r.q(t, n)).collect::<Result<Vec<Complex64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let points: Vec<MartingalePoint> = t_list
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let zs: Vec<Complex64> = samples.iter().map(|s| s[k]).collect();
            let estimate = complex_estimate(&zs);
            let pass = estimate.within(Complex64::new(1.0, 0.0), 4.0);
            MartingalePoint { t, estimate, pass }
        })
        .collect();
    let pass = points.iter().all(|p| p.pass);
    Ok(MartingaleReport { n, replicas, points, pass })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecorrelationReport {
    pub n: u32,
    pub t: f64,
    pub s: f64,
    /// Estimate of `E[(P_n(t) − 1)·conj(P_n(s) − 1)]`.
    pub covariance: ComplexEstimate,
    pub pass: bool,
}

/// `P_n(t)` and `P_n(s)` uncorrelated at `|t − s| = N·b^{-n}`.
pub fn decorrelation_check(
    model: &CascadeModel,
    t: f64,
    n: u32,
    replicas: usize,
    seed: u64,
) -> Result<DecorrelationReport> {
    model.validate()?;
    let dist = model.decorrelation_distance() as f64 * (model.base() as f64).powi(-(n as i32));
    let s = t + dist;
    if !(0.0..1.0).contains(&t) || s >= 1.0 {
        return Err(CascadeError::OutOfRange(s));
    }
    let zs = (0..replicas as u64)
        .into_par_iter()
        .map(|i| {
            let r = Realization::new(model, replica_seed(seed, i));
            let layer = r.layer(n, (t, s))?;
            let (x, y) = (layer.value(t)?, layer.value(s)?);
            Ok((x - 1.0) * (y - 1.0).conj())
        })
        .collect::<Result<Vec<Complex64>>>()?;
    let covariance = complex_estimate(&zs);
    let pass = covariance.within(Complex64::new(0.0, 0.0), 4.0);
    Ok(DecorrelationReport { n, t, s, covariance, pass })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentComparison {
    pub order: f64,
    pub scaled: Estimate,
    pub reference: Estimate,
    pub z: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfSimilarityReport {
    pub n: u32,
    pub t: f64,
    pub moments: Vec<MomentComparison>,
    pub pass: bool,
}

/// Self-similarity through moments: `E|P_{n+1}(t/b)|^q` against `E|P_n(t)|^q`,
/// `q ∈ {1, 2}`, on independent replica sets.
pub fn self_similarity_check(
    model: &CascadeModel,
    t: f64,
    n: u32,
    replicas: usize,
    seed: u64,
) -> Result<SelfSimilarityReport> {
    model.validate()?;
    let supported = match model {
        CascadeModel::BadicIndependent(m) => m.weights.is_homogeneous(),
        CascadeModel::CompoundPoisson(m) => matches!(m.intensity, Intensity::ScaleInvariant { .. }),
        CascadeModel::LogInfDivisible(_) => true,
    };
    if !supported {
        return Err(CascadeError::Unsupported(
            "self-similarity needs a homogeneous or scale-invariant model".into(),
        ));
    }
    let b = model.base() as f64;
    let sample = |level: u32, point: f64, salt: u64| {
        (0..replicas as u64)
            .into_par_iter()
            .map(|i| {
                let r = Realization::new(model, replica_seed(seed ^ salt, i));
                r.p(point, level).map(|z| z.norm())
            })
            .collect::<Result<Vec<f64>>>()
    };
    let scaled = sample(n + 1, t / b, 0)?;
    let reference = sample(n, t, 0x9E37_79B9)?;
    let moments = [1.0, 2.0]
        .iter()
        .map(|&q| {
            let a = estimate(&scaled.iter().map(|x| x.powf(q)).collect::<Vec<_>>());
            let r = estimate(&reference.iter().map(|x| x.powf(q)).collect::<Vec<_>>());
            let se = a.std_error.hypot(r.std_error);
            let d = a.mean - r.mean;
            let z = if se > 0.0 { d / se } else if d.abs() < 1e-12 { 0.0 } else { f64::INFINITY };
            MomentComparison { order: q, scaled: a, reference: r, z, pass: z.abs() <= 4.0 }
        })
        .collect::<Vec<_>>();
    let pass = moments.iter().all(|m| m.pass);
    Ok(SelfSimilarityReport { n, t, moments, pass })
}

/// Per-generation ensemble moments of one batch of paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathMoments {
    pub p: f64,
    pub generations: Vec<u32>,
    /// `E ‖F_n‖_∞^p`
    pub sup_norm: Vec<Estimate>,
    /// `E max_{T_n} |F_n − F_{n−1}|^p`, `None` for the first generation.
    pub cauchy: Vec<Option<Estimate>>,
    /// `E F_n(1)`
    pub total: Vec<ComplexEstimate>,
}

pub fn path_moments(
    model: &CascadeModel,
    measure: &ReferenceMeasure,
    n_max: u32,
    m_sub: usize,
    p: f64,
    replicas: usize,
    seed: u64,
) -> Result<PathMoments> {
    check_support(model, measure)?;
    if replicas < 2 {
        return Err(CascadeError::InvalidParameter("need at least 2 replicas".into()));
    }
    let per_replica = (0..replicas as u64)
        .into_par_iter()
        .map(|i| {
            let paths = build_paths(model, measure, replica_seed(seed, i), n_max, m_sub)?;
            let sups: Vec<f64> = sup_norm_trajectory(&paths).iter().map(|s| s.powf(p)).collect();
            let cauchy = (1..=n_max)
                .map(|n| if n >= 2 { cauchy_increment(&paths, n).map(|c| c.powf(p)) } else { Ok(0.0) })
                .collect::<Result<Vec<f64>>>()?;
            let totals: Vec<Complex64> = paths.values.iter().map(|v| v[v.len() - 1]).collect();
            Ok((sups, cauchy, totals))
        })
        .collect::<Result<Vec<_>>>()?;
    let gens: Vec<u32> = (1..=n_max).collect();
    let column = |f: &dyn Fn(&(Vec<f64>, Vec<f64>, Vec<Complex64>)) -> f64| {
        estimate(&per_replica.iter().map(f).collect::<Vec<_>>())
    };
    let mut sup_norm = Vec::new();
    let mut cauchy = Vec::new();
    let mut total = Vec::new();
    for k in 0..gens.len() {
        sup_norm.push(column(&|r| r.0[k]));
        cauchy.push((k > 0).then(|| column(&|r| r.1[k])));
        let zs: Vec<Complex64> = per_replica.iter().map(|r| r.2[k]).collect();
        total.push(complex_estimate(&zs));
    }
    Ok(PathMoments { p, generations: gens, sup_norm, cauchy, total })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub n: u32,
    pub moment: Estimate,
    pub s_np: Estimate,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CauchyRatioReport {
    pub p: f64,
    pub rows: Vec<RatioRow>,
    /// `max / min` of the ratios; 1 when every ratio is zero.
    pub spread: f64,
}

/// `E(max_{T_n} |F_n − F_{n−1}|^p) / S(n,p)` for `n ∈ [2, n_max]`; `S` is
/// exact for b-adic models and Monte Carlo otherwise.
pub fn cauchy_ratio(
    model: &CascadeModel,
    measure: &ReferenceMeasure,
    n_max: u32,
    m_sub: usize,
    p: f64,
    replicas: usize,
    seed: u64,
) -> Result<CauchyRatioReport> {
    let moments = path_moments(model, measure, n_max, m_sub, p, replicas, seed)?;
    cauchy_ratio_from(model, measure, &moments, replicas, seed)
}

pub fn cauchy_ratio_from(
    model: &CascadeModel,
    measure: &ReferenceMeasure,
    moments: &PathMoments,
    replicas: usize,
    seed: u64,
) -> Result<CauchyRatioReport> {
    let p = moments.p;
    let n_max = *moments.generations.last().unwrap_or(&1);
    let mc = if model.is_badic() {
        None
    } else {
        Some(s_np_mc_levels(model, measure, n_max, p, replicas, seed ^ 0x5A5A)?)
    };
    let mut rows = Vec::new();
    for (k, &n) in moments.generations.iter().enumerate() {
        let Some(moment) = moments.cauchy[k] else { continue };
        let s_np = match &mc {
            None => Estimate::exact(s_np_closed(model, measure, n, p)?),
            Some(v) => v[n as usize - 1],
        };
        rows.push(RatioRow { n, moment, s_np, ratio: moment.mean / s_np.mean });
    }
    let max = rows.iter().map(|r| r.ratio).fold(f64::MIN, f64::max);
    let min = rows.iter().map(|r| r.ratio).fold(f64::MAX, f64::min);
    // identically vanishing increments (W ≡ 1) count as a constant ratio
    let spread = if max == 0.0 { 1.0 } else { max / min };
    Ok(CauchyRatioReport { p, rows, spread })
}

/// Relative change of `‖F_n‖_∞` when `m_sub` doubles.
pub fn quadrature_change(
    model: &CascadeModel,
    measure: &ReferenceMeasure,
    seed: u64,
    n: u32,
    m_sub: usize,
) -> Result<f64> {
    let a = build_paths_range(model, measure, seed, n, n, m_sub)?;
    let b = build_paths_range(model, measure, seed, n, n, 2 * m_sub)?;
    let (sa, sb) = (sup_norm_trajectory(&a)[0], sup_norm_trajectory(&b)[0]);
    Ok((sa - sb).abs() / sb.max(f64::MIN_POSITIVE))
}

/// Empirical `quantile` of `sup_{n} |F_n(t) − F_n(s)| / |t − s|^γ` over
/// `pairs` random pairs of grid points of `T_level` with
/// `0 < |t − s| <= b^{-gap_level}`.
pub fn holder_quantile(
    paths: &PathSample,
    gamma: f64,
    level: u32,
    gap_level: u32,
    pairs: usize,
    quantile: f64,
    seed: u64,
) -> Result<f64> {
    let stride = paths.stride(level)?;
    let points = (paths.base as usize).pow(level);
    let max_gap = (paths.base as usize).pow(level - gap_level.min(level));
    let mut s = Stream::new(seed).derive(domain::WORKER);
    let mut ratios = Vec::with_capacity(pairs);
    for _ in 0..pairs {
        let gap = 1 + (s.uniform() * max_gap as f64) as usize;
        let gap = gap.min(max_gap);
        let i = (s.uniform() * (points + 1 - gap) as f64) as usize;
        let (a, b) = (i * stride, (i + gap) * stride);
        let dt = (b - a) as f64 / paths.resolution() as f64;
        let worst = paths
            .values
            .iter()
            .map(|v| (v[b] - v[a]).norm() / dt.powf(gamma))
            .fold(0.0, f64::max);
        ratios.push(worst);
    }
    ratios.sort_by(f64::total_cmp);
    let k = ((quantile * pairs as f64).ceil() as usize).clamp(1, pairs) - 1;
    Ok(ratios[k])
}

/// Least-squares slope of `log_b E‖F_n‖^p_∞` against `n`.
pub fn sup_norm_decay(moments: &PathMoments, n_range: std::ops::RangeInclusive<u32>, base: u32) -> f64 {
    let ln_b = (base as f64).ln();
    let (xs, ys): (Vec<f64>, Vec<f64>) = moments
        .generations
        .iter()
        .zip(&moments.sup_norm)
        .filter(|(n, _)| n_range.contains(n))
        .map(|(n, e)| (*n as f64, e.mean.ln() / ln_b))
        .unzip();
    fit_line(&xs, &ys, None).slope
}
