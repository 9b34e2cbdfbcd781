//! Log-infinitely divisible cascades.
//!
//! The ℝ²-valued random measure `ρ` is realized on a partition of the strip
//! band of each level into cells: `cells_per_interval` columns per b-adic
//! interval of the level, times `scale_bands` sub-bands of equal `ν`-mass.
//! A cone's `ρ`-measure is the sum over cells whose centre lies in the cone,
//! where the centre of a sub-band is its `ν`-barycentre so that the summed
//! control measure is unbiased in the scale direction.

use num_complex::Complex64;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{CascadeError, Result};
use crate::rng::{domain, Stream};

/// `ξ₀ = (-i, 1)`
pub const XI0: [Complex64; 2] = [Complex64::new(0.0, -1.0), Complex64::new(1.0, 0.0)];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JumpAtom {
    pub x: [f64; 2],
    pub mass: f64,
}

/// Lévy–Khintchine triplet `(a, Q, π)` with a finite atomic jump measure.
///
/// `ψ(ξ) = i⟨ξ|a⟩ − ξᵀQξ/2 + Σ m (e^{i⟨ξ|x⟩} − 1 − i⟨ξ|x⟩ 1_{|x|<=1})`,
/// continued analytically (bilinear pairing, no conjugation) to complex `ξ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevyExponent {
    pub drift: [f64; 2],
    pub gaussian: [[f64; 2]; 2],
    #[serde(default)]
    pub jumps: Vec<JumpAtom>,
}

fn pair(xi: &[Complex64; 2], x: &[f64; 2]) -> Complex64 {
    xi[0] * x[0] + xi[1] * x[1]
}

impl LevyExponent {
    pub fn pure_gaussian(sigma2: f64) -> Self {
        LevyExponent {
            drift: [-0.5 * sigma2, 0.0],
            gaussian: [[sigma2, 0.0], [0.0, 0.0]],
            jumps: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CascadeError::InvalidParameter(m));
        let q = &self.gaussian;
        let finite = self.drift.iter().chain(q.iter().flatten()).all(|v| v.is_finite());
        if !finite {
            return bad("Levy triplet has non-finite entries".into());
        }
        if q[0][1] != q[1][0] {
            return bad("Gaussian form must be symmetric".into());
        }
        if q[0][0] < 0.0 || q[1][1] < 0.0 || q[0][0] * q[1][1] - q[0][1] * q[0][1] < -1e-12 {
            return bad("Gaussian form must be positive semidefinite".into());
        }
        for j in &self.jumps {
            if !(j.mass > 0.0 && j.mass.is_finite()) || !(j.x[0].is_finite() && j.x[1].is_finite())
            {
                return bad("jump atoms need finite positions and positive mass".into());
            }
            if j.x == [0.0, 0.0] {
                return bad("jump measure must not charge the origin".into());
            }
        }
        // ξ₀ must lie in the extension domain: ∫_{|x|>=1} e^{x₁} π(dx) < ∞.
        let tail: f64 = self
            .jumps
            .iter()
            .filter(|j| j.x[0].hypot(j.x[1]) >= 1.0)
            .map(|j| j.mass * j.x[0].exp())
            .sum();
        if !tail.is_finite() {
            return Err(CascadeError::OutsideDomain { re: 0.0, im: -1.0 });
        }
        Ok(())
    }

    pub fn jump_rate(&self) -> f64 {
        self.jumps.iter().map(|j| j.mass).sum()
    }

    /// `Σ_{|x|<=1} m x`
    pub fn compensator(&self) -> [f64; 2] {
        let mut c = [0.0; 2];
        for j in self.jumps.iter().filter(|j| j.x[0].hypot(j.x[1]) <= 1.0) {
            c[0] += j.mass * j.x[0];
            c[1] += j.mass * j.x[1];
        }
        c
    }

    /// Unnormalized `ψ̃(ξ)`.
    pub fn raw(&self, xi: [Complex64; 2]) -> Complex64 {
        let i = Complex64::i();
        let q = &self.gaussian;
        let quad = xi[0] * xi[0] * q[0][0] + xi[0] * xi[1] * (2.0 * q[0][1]) + xi[1] * xi[1] * q[1][1];
        let mut value = i * pair(&xi, &self.drift) - quad * 0.5;
        for j in &self.jumps {
            let s = pair(&xi, &j.x);
            let small = if j.x[0].hypot(j.x[1]) <= 1.0 { i * s } else { Complex64::new(0.0, 0.0) };
            value += ((i * s).exp() - 1.0 - small) * j.mass;
        }
        value
    }

    /// Drift `d` added to `ρ` per unit of control measure so that the
    /// normalized exponent vanishes at `ξ₀`: `i⟨ξ₀|d⟩ = d₁ + i d₂ = −ψ̃(ξ₀)`.
    pub fn normalizing_drift(&self) -> [f64; 2] {
        let c = self.raw(XI0);
        [-c.re, -c.im]
    }

    /// Normalized `ψ̃(ξ) = ψ̃_raw(ξ) + i⟨ξ|d⟩`.
    pub fn normalized(&self, xi: [Complex64; 2]) -> Result<Complex64> {
        let d = self.normalizing_drift();
        let v = self.raw(xi) + Complex64::i() * pair(&xi, &d);
        if v.re.is_finite() && v.im.is_finite() {
            Ok(v)
        } else {
            Err(CascadeError::OutsideDomain { re: xi[0].re, im: xi[0].im })
        }
    }

    /// `ψ̃(−ip, 0)`, real: the log-moment `ln E e^{pρ₁(B)} / Λ(B)`.
    pub fn moment_exponent(&self, p: f64) -> Result<f64> {
        let xi = [Complex64::new(0.0, -p), Complex64::new(0.0, 0.0)];
        self.normalized(xi).map(|v| v.re)
    }

    /// Deterministic part of `ρ(B) / Λ(B)`: `a + d − compensator`.
    pub fn cell_drift(&self) -> [f64; 2] {
        let d = self.normalizing_drift();
        let c = self.compensator();
        [self.drift[0] + d[0] - c[0], self.drift[1] + d[1] - c[1]]
    }

    fn cholesky(&self) -> [[f64; 2]; 2] {
        let q = &self.gaussian;
        let l11 = q[0][0].max(0.0).sqrt();
        let l21 = if l11 > 0.0 { q[0][1] / l11 } else { 0.0 };
        let l22 = (q[1][1] - l21 * l21).max(0.0).sqrt();
        [[l11, 0.0], [l21, l22]]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogIdModel {
    pub base: u32,
    pub exponent: LevyExponent,
    #[serde(default = "default_cells")]
    pub cells_per_interval: usize,
    #[serde(default = "default_cells")]
    pub scale_bands: usize,
}

fn default_cells() -> usize {
    8
}

impl LogIdModel {
    pub fn new(base: u32, exponent: LevyExponent) -> Self {
        Self { base, exponent, cells_per_interval: 8, scale_bands: 8 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.base < 2 {
            return Err(CascadeError::InvalidBase(self.base));
        }
        if self.cells_per_interval == 0 || self.scale_bands == 0 {
            return Err(CascadeError::InvalidParameter("cell counts must be >= 1".into()));
        }
        self.exponent.validate()
    }

    pub fn cell_geometry(&self, level: u32) -> CellGeometry {
        CellGeometry::new(self.base, level, self.cells_per_interval, self.scale_bands)
    }
}

/// Cell layout of one level. Aperture and intensity are fixed to
/// `β = δ = 1`, `ν(dr) = dr/r²`.
#[derive(Debug, Clone, PartialEq)]
pub struct CellGeometry {
    pub level: u32,
    pub origin: f64,
    pub width: f64,
    pub columns: usize,
    /// `ν`-barycentre of each scale sub-band.
    pub band_centres: Vec<f64>,
    /// Control measure of one cell (identical for all cells of all levels).
    pub cell_mass: f64,
}

impl CellGeometry {
    fn new(base: u32, level: u32, per_interval: usize, bands: usize) -> Self {
        let b = base as f64;
        let width = b.powi(-(level as i32)) / per_interval as f64;
        let origin = -0.5;
        let columns = (2.0 / width).ceil() as usize;
        let (u_lo, u_hi) = (b.powi(level as i32 - 1), b.powi(level as i32));
        let du = (u_hi - u_lo) / bands as f64;
        let band_centres = (0..bands)
            .map(|s| {
                let (a, c) = (u_lo + du * s as f64, u_lo + du * (s + 1) as f64);
                // ∫ r dr/r² / ∫ dr/r² over r ∈ (1/c, 1/a]
                (c / a).ln() / (c - a)
            })
            .collect();
        Self { level, origin, width, columns, band_centres, cell_mass: width * du }
    }

    pub fn column_centre(&self, j: usize) -> f64 {
        self.origin + (j as f64 + 0.5) * self.width
    }

    /// Columns `[lo, hi)` of sub-band `s` whose centres lie in the cone at `t`.
    pub fn cone_columns(&self, t: f64, s: usize) -> (usize, usize) {
        let half = 0.5 * self.band_centres[s];
        let lo = partition_point(0, self.columns, |j| self.column_centre(j) < t - half);
        let hi = partition_point(lo, self.columns, |j| self.column_centre(j) < t + half);
        (lo, hi)
    }

    /// Control measure of the cell approximation of `ΔC_level(t)`.
    pub fn approximate_cone_measure(&self, t: f64) -> f64 {
        (0..self.band_centres.len())
            .map(|s| {
                let (lo, hi) = self.cone_columns(t, s);
                (hi - lo) as f64 * self.cell_mass
            })
            .sum()
    }

    /// Columns touched by any cone with `t ∈ [lo, hi]`.
    pub fn window_columns(&self, lo: f64, hi: f64) -> (usize, usize) {
        let reach = 0.5 * self.band_centres.iter().cloned().fold(0.0, f64::max);
        let first = ((lo - reach - self.origin) / self.width).floor() - 1.0;
        let last = ((hi + reach - self.origin) / self.width).ceil() + 1.0;
        (first.max(0.0) as usize, (last.max(0.0) as usize).min(self.columns))
    }
}

/// Sampled increments `ρ(cell)` of one level over a range of columns.
#[derive(Debug, Clone)]
pub struct CellLayer {
    pub geometry: CellGeometry,
    pub first_column: usize,
    /// `rho[(j - first_column) * bands + s]`
    pub rho: Vec<[f64; 2]>,
    /// Per-band running sums, `prefix[s * (cols + 1) + k]`.
    prefix: Vec<[f64; 2]>,
    window: (f64, f64),
}

impl CellLayer {
    pub fn sample(model: &LogIdModel, seed: u64, level: u32, window: (f64, f64)) -> Self {
        let geometry = model.cell_geometry(level);
        let (c0, c1) = geometry.window_columns(window.0, window.1);
        let bands = geometry.band_centres.len();
        let ex = &model.exponent;
        let lam = geometry.cell_mass;
        let drift = ex.cell_drift();
        let l = ex.cholesky();
        let sd = lam.sqrt();
        let rate = ex.jump_rate() * lam;
        let poisson = (rate > 0.0).then(|| Poisson::new(rate).expect("positive rate"));
        let level_stream = Stream::new(seed).derive(domain::CELLS).derive(level as u64);
        let mut rho = Vec::with_capacity((c1 - c0) * bands);
        for j in c0..c1 {
            let mut s = level_stream.derive(j as u64);
            for _ in 0..bands {
                let z1: f64 = StandardNormal.sample(&mut s);
                let z2: f64 = StandardNormal.sample(&mut s);
                let mut v = [
                    drift[0] * lam + sd * l[0][0] * z1,
                    drift[1] * lam + sd * (l[1][0] * z1 + l[1][1] * z2),
                ];
                if let Some(pois) = &poisson {
                    let count: f64 = pois.sample(&mut s);
                    for _ in 0..count as u64 {
                        let x = pick_jump(&ex.jumps, s.uniform());
                        v[0] += x[0];
                        v[1] += x[1];
                    }
                }
                rho.push(v);
            }
        }
        let cols = c1 - c0;
        let mut prefix = vec![[0.0; 2]; bands * (cols + 1)];
        for b in 0..bands {
            let row = &mut prefix[b * (cols + 1)..(b + 1) * (cols + 1)];
            for k in 0..cols {
                let v = rho[k * bands + b];
                row[k + 1] = [row[k][0] + v[0], row[k][1] + v[1]];
            }
        }
        Self { geometry, first_column: c0, rho, prefix, window }
    }

    fn columns(&self) -> usize {
        self.rho.len() / self.geometry.band_centres.len()
    }

    fn band_sum(&self, s: usize, lo: usize, hi: usize) -> Result<[f64; 2]> {
        let cols = self.columns();
        if lo == hi {
            return Ok([0.0; 2]);
        }
        if lo < self.first_column || hi > self.first_column + cols {
            return Err(CascadeError::NotCovered { level: self.geometry.level, t: f64::NAN });
        }
        let row = &self.prefix[s * (cols + 1)..];
        let (a, b) = (row[lo - self.first_column], row[hi - self.first_column]);
        Ok([b[0] - a[0], b[1] - a[1]])
    }

    /// `ρ(ΔC_level(t))` approximated on the cells.
    pub fn cone_rho(&self, t: f64) -> Result<[f64; 2]> {
        if t < self.window.0 || t > self.window.1 {
            return Err(CascadeError::NotCovered { level: self.geometry.level, t });
        }
        let mut acc = [0.0; 2];
        for s in 0..self.geometry.band_centres.len() {
            let (lo, hi) = self.geometry.cone_columns(t, s);
            let v = self
                .band_sum(s, lo, hi)
                .map_err(|_| CascadeError::NotCovered { level: self.geometry.level, t })?;
            acc[0] += v[0];
            acc[1] += v[1];
        }
        Ok(acc)
    }

    /// Values on an ascending grid, sweeping the cone edges instead of
    /// searching for them; agrees with [`CellLayer::value`].
    pub fn values_sorted(&self, ts: &[f64]) -> Result<Vec<Complex64>> {
        let g = &self.geometry;
        let bands = g.band_centres.len();
        let mut lo = vec![0usize; bands];
        let mut hi = vec![0usize; bands];
        let mut out = Vec::with_capacity(ts.len());
        for &t in ts {
            if t < self.window.0 || t > self.window.1 {
                return Err(CascadeError::NotCovered { level: g.level, t });
            }
            let mut acc = [0.0; 2];
            for s in 0..bands {
                let half = 0.5 * g.band_centres[s];
                while lo[s] < g.columns && g.column_centre(lo[s]) < t - half {
                    lo[s] += 1;
                }
                hi[s] = hi[s].max(lo[s]);
                while hi[s] < g.columns && g.column_centre(hi[s]) < t + half {
                    hi[s] += 1;
                }
                let v = self
                    .band_sum(s, lo[s], hi[s])
                    .map_err(|_| CascadeError::NotCovered { level: g.level, t })?;
                acc[0] += v[0];
                acc[1] += v[1];
            }
            out.push(Complex64::from_polar(acc[0].exp(), acc[1]));
        }
        Ok(out)
    }

    /// `P_level(t) = exp(ρ₁ + iρ₂)` of the cone.
    pub fn value(&self, t: f64) -> Result<Complex64> {
        let r = self.cone_rho(t)?;
        Ok(Complex64::from_polar(r[0].exp(), r[1]))
    }
}

/// First index in `[lo, hi)` where the monotone predicate turns false.
pub(crate) fn partition_point(mut lo: usize, mut hi: usize, pred: impl Fn(usize) -> bool) -> usize {
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if pred(mid) {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    lo
}

fn pick_jump(jumps: &[JumpAtom], u: f64) -> [f64; 2] {
    let total: f64 = jumps.iter().map(|j| j.mass).sum();
    let mut cum = 0.0;
    for j in jumps {
        cum += j.mass / total;
        if u < cum {
            return j.x;
        }
    }
    jumps.last().expect("nonempty jump measure").x
}
