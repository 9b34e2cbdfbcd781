//! Run configuration: one JSON document per run, unknown keys rejected.

use std::path::{Path, PathBuf};

use cascade_core::analysis::EPS_SCHEDULE;
use cascade_core::badic::cell_count;
use cascade_core::cascades::CascadeModel;
use cascade_core::convergence::{check_support, ReferenceMeasure};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

/// Upper bound on grid points of one path.
pub const MAX_RESOLUTION: usize = 1 << 28;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: CascadeModel,
    #[serde(default)]
    pub measure: ReferenceMeasure,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_n_max")]
    pub n_max: u32,
    /// Grid points per generation-`n_max` interval.
    #[serde(default = "default_m_sub")]
    pub m_sub: usize,
    #[serde(default = "default_replicas")]
    pub replicas: usize,
    /// `p` values for the closed-form `φ` table; 64 points on `(0, 2]` if absent.
    #[serde(default)]
    pub p_grid: Option<Vec<f64>>,
    /// Skip the `E(W) = 1` check (to exercise failing verifications).
    #[serde(default)]
    pub allow_unnormalized: bool,
    #[serde(default)]
    pub simulate: SimulateOptions,
    #[serde(default)]
    pub phi: PhiOptions,
    #[serde(default)]
    pub spectrum: SpectrumOptions,
    #[serde(default)]
    pub verify: VerifyOptions,
    /// Output directory; `--out` takes precedence.
    #[serde(default)]
    pub out: Option<PathBuf>,
}

fn default_n_max() -> u32 {
    8
}

fn default_m_sub() -> usize {
    8
}

fn default_replicas() -> usize {
    10_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SimulateOptions {
    /// Generations written as CSV; `[n_max]` if empty.
    #[serde(default)]
    pub generations: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhiOptions {
    /// `p` values for empirical slopes; empty disables them.
    #[serde(default = "default_empirical_p")]
    pub empirical_p: Vec<f64>,
    #[serde(default = "default_phi_range")]
    pub n_range: [u32; 2],
    /// Falls back to the top-level `replicas`.
    #[serde(default)]
    pub replicas: Option<usize>,
}

fn default_empirical_p() -> Vec<f64> {
    vec![0.5, 1.5, 2.0]
}

fn default_phi_range() -> [u32; 2] {
    [2, 8]
}

impl Default for PhiOptions {
    fn default() -> Self {
        Self { empirical_p: default_empirical_p(), n_range: default_phi_range(), replicas: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TraceSource {
    /// `F_{n_max}` of the configured cascade.
    #[default]
    Cascade,
    Identity,
    Zero,
    /// Lacunary Weierstrass sum with exponent `1/2` (base 2).
    Weierstrass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumOptions {
    #[serde(default)]
    pub source: TraceSource,
    /// Generations of the coarse exponents; `[max(1, hi/2), n_max − 4]` if absent.
    #[serde(default)]
    pub n_range: Option<[u32; 2]>,
    #[serde(default = "default_eps")]
    pub eps: Vec<f64>,
    #[serde(default = "default_h_max")]
    pub h_max: f64,
    #[serde(default = "default_h_step")]
    pub h_step: f64,
    #[serde(default = "default_q_list")]
    pub q_list: Vec<f64>,
    #[serde(default = "default_terms")]
    pub weierstrass_terms: u32,
}

fn default_eps() -> Vec<f64> {
    EPS_SCHEDULE.to_vec()
}

fn default_h_max() -> f64 {
    2.0
}

fn default_h_step() -> f64 {
    0.01
}

fn default_q_list() -> Vec<f64> {
    vec![0.0, 0.5, 1.0, 1.5, 2.0]
}

fn default_terms() -> u32 {
    40
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self {
            source: TraceSource::default(),
            n_range: None,
            eps: default_eps(),
            h_max: default_h_max(),
            h_step: default_h_step(),
            q_list: default_q_list(),
            weierstrass_terms: default_terms(),
        }
    }
}

impl SpectrumOptions {
    pub fn generations(&self, n_max: u32) -> [u32; 2] {
        self.n_range.unwrap_or_else(|| {
            let hi = n_max.saturating_sub(4).max(2).min(n_max);
            [(hi / 2).max(1), hi]
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyOptions {
    #[serde(default = "default_t_list")]
    pub t_list: Vec<f64>,
    /// Generations for the martingale and decorrelation checks.
    #[serde(default = "default_levels")]
    pub levels: Vec<u32>,
    #[serde(default = "default_similarity_level")]
    pub similarity_level: u32,
    /// Replicas for the path-based checks; `min(replicas, 2000)` if absent.
    #[serde(default)]
    pub path_replicas: Option<usize>,
    #[serde(default = "default_ratio_max")]
    pub ratio_max: f64,
    #[serde(default = "default_trend_factor")]
    pub trend_factor: f64,
    #[serde(default = "default_quadrature_tol")]
    pub quadrature_tol: f64,
}

fn default_t_list() -> Vec<f64> {
    vec![0.1, 1.0 / 3.0, 0.7]
}

fn default_levels() -> Vec<u32> {
    vec![2, 4]
}

fn default_similarity_level() -> u32 {
    3
}

fn default_ratio_max() -> f64 {
    10.0
}

fn default_trend_factor() -> f64 {
    1.2
}

fn default_quadrature_tol() -> f64 {
    1e-2
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            t_list: default_t_list(),
            levels: default_levels(),
            similarity_level: default_similarity_level(),
            path_replicas: None,
            ratio_max: default_ratio_max(),
            trend_factor: default_trend_factor(),
            quadrature_tol: default_quadrature_tol(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str, path: &Path) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| {
            let full = e.to_string();
            let message = full.rfind(" at line ").map_or(full.as_str(), |k| &full[..k]).to_string();
            let (line, column) = unknown_key_position(text, &message, e.line(), e.column())
                .unwrap_or((e.line(), e.column()));
            CliError::Syntax { path: path.to_path_buf(), line, column, message }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text, path)
    }

    /// Every check that can be made before sampling.
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if !self.allow_unnormalized {
            self.model.check_unit_mean()?;
        }
        let base = self.model.base();
        self.measure.validate(base)?;
        check_support(&self.model, &self.measure)?;
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.n_max < 1 {
            return bad("n_max must be >= 1".into());
        }
        if self.m_sub < 1 {
            return bad("m_sub must be >= 1".into());
        }
        if self.replicas < 2 {
            return bad("replicas must be >= 2".into());
        }
        let cells = cell_count(base, self.n_max)?;
        if cells.saturating_mul(self.m_sub) > MAX_RESOLUTION {
            return bad(format!("m_sub * b^n_max exceeds {MAX_RESOLUTION} grid points"));
        }
        if let Some(grid) = &self.p_grid {
            if grid.is_empty() || grid.iter().any(|p| !(p.is_finite() && *p > 0.0 && *p <= 2.0)) {
                return bad("p_grid entries must lie in (0, 2]".into());
            }
        }
        for &n in &self.simulate.generations {
            if n < 1 || n > self.n_max {
                return bad(format!("simulate.generations: {n} outside [1, {}]", self.n_max));
            }
        }
        let [lo, hi] = self.phi.n_range;
        if lo < 1 || hi < lo + 3 {
            return bad("phi.n_range needs at least 4 generations starting at 1 or later".into());
        }
        if self.phi.empirical_p.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return bad("phi.empirical_p entries must be finite and >= 0".into());
        }
        let s = &self.spectrum;
        let [lo, hi] = s.generations(self.n_max);
        if lo < 1 || hi < lo || hi > self.n_max {
            return bad(format!("spectrum.n_range [{lo}, {hi}] outside [1, {}]", self.n_max));
        }
        if s.eps.is_empty() || s.eps.iter().any(|e| !(*e > 0.0)) {
            return bad("spectrum.eps entries must be positive".into());
        }
        if !(s.h_step > 0.0 && s.h_max > 0.0) {
            return bad("spectrum.h_step and h_max must be positive".into());
        }
        if s.q_list.iter().any(|q| !(0.0..=2.0).contains(q)) {
            return bad("spectrum.q_list entries must lie in [0, 2]".into());
        }
        if s.source == TraceSource::Weierstrass && base != 2 {
            return bad("the weierstrass source is dyadic; set base 2".into());
        }
        let v = &self.verify;
        if v.t_list.is_empty() || v.t_list.iter().any(|t| !(0.0..1.0).contains(t)) {
            return bad("verify.t_list entries must lie in [0, 1)".into());
        }
        if v.levels.iter().any(|n| *n < 1) || v.similarity_level < 1 {
            return bad("verify levels must be >= 1".into());
        }
        if v.path_replicas.is_some_and(|r| r < 2) {
            return bad("verify.path_replicas must be >= 2".into());
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON of the config, excluding `seed` and `out`.
    pub fn hash(&self) -> String {
        let mut value = serde_json::to_value(self).expect("config serializes");
        if let Value::Object(map) = &mut value {
            map.remove("seed");
            map.remove("out");
        }
        let mut text = String::new();
        canonical_json(&value, &mut text);
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}

/// Tagged model enums are buffered before decoding, so serde reports an
/// unknown key at the end of its object; point at the last occurrence of the
/// key before that position instead.
fn unknown_key_position(text: &str, message: &str, line: usize, column: usize) -> Option<(usize, usize)> {
    let key = message.strip_prefix("unknown field `")?.split('`').next()?;
    let end: usize = text.split_inclusive('\n').take(line.saturating_sub(1)).map(str::len).sum::<usize>() + column;
    let offset = text[..end.min(text.len())].rfind(&format!("\"{key}\""))?;
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let column = offset - before.rfind('\n').map_or(0, |k| k + 1) + 1;
    Some((line, column))
}

/// Compact JSON with object keys sorted, independent of map ordering.
pub fn canonical_json(value: &Value, out: &mut String) {
    match value {
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, k) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&Value::String(k.clone()).to_string());
                out.push(':');
                canonical_json(&map[k], out);
            }
            out.push('}');
        }
        Value::Array(items) => {
            out.push('[');
            for (i, v) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                canonical_json(v, out);
            }
            out.push(']');
        }
        other => out.push_str(&other.to_string()),
    }
}
