//! The four subcommands. Each writes its files plus `manifest.json` into
//! one output directory.

use std::path::{Path, PathBuf};

use cascade_core::analysis::{default_h_grid, large_deviation_spectrum, structure_exponents, Trace};
use cascade_core::convergence::{default_p_grid, phi_empirical, verdict_on_grid, PhiMethod, PhiPoint};
use cascade_core::rng::replica_seed;
use cascade_core::simulate::{
    build_paths_range, cauchy_ratio_from, decorrelation_check, martingale_check, path_moments,
    quadrature_change, self_similarity_check, sup_norm_trajectory, total_variation,
};
use cascade_core::CascadeError;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{RunConfig, TraceSource};
use crate::error::Result;
use crate::output::{histogram_csv, path_csv, report_json, OutputDir, Stamp};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Phi,
    Spectrum,
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Phi => "phi",
            Command::Spectrum => "spectrum",
            Command::Verify => "verify",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    /// False only when a verification check failed.
    pub pass: bool,
    pub dir: PathBuf,
    pub manifest: PathBuf,
}

/// Independent seed for one task of a run.
fn task_seed(seed: u64, task: u64) -> u64 {
    replica_seed(seed, u64::MAX - task)
}

pub fn run(command: Command, config: &RunConfig, seed: u64, out: &Path) -> Result<Outcome> {
    config.validate()?;
    let stamp = Stamp { config_hash: config.hash(), seed };
    let mut dir = OutputDir::create(out)?;
    let pass = match command {
        Command::Simulate => simulate(config, &stamp, &mut dir)?,
        Command::Phi => phi(config, &stamp, &mut dir)?,
        Command::Spectrum => spectrum(config, &stamp, &mut dir)?,
        Command::Verify => verify(config, &stamp, &mut dir)?,
    };
    let path = dir.path().to_path_buf();
    let manifest = dir.finish(command.name(), &stamp)?;
    Ok(Outcome { pass, dir: path, manifest })
}

#[derive(Debug, Serialize)]
struct GenerationSummary {
    n: u32,
    file: String,
    sup_norm: f64,
    total_variation: f64,
    /// `F_n(1)` as `[re, im]`.
    end: [f64; 2],
}

#[derive(Debug, Serialize)]
struct SimulateReport {
    family: String,
    base: u32,
    n_max: u32,
    m_sub: usize,
    resolution: usize,
    generations: Vec<GenerationSummary>,
}

fn simulate(config: &RunConfig, stamp: &Stamp, dir: &mut OutputDir) -> Result<bool> {
    let mut gens = config.simulate.generations.clone();
    if gens.is_empty() {
        gens.push(config.n_max);
    }
    gens.sort_unstable();
    gens.dedup();
    let paths = build_paths_range(&config.model, &config.measure, stamp.seed, gens[0], config.n_max, config.m_sub)?;
    let ts = paths.grid();
    let sups = sup_norm_trajectory(&paths);
    let mut summaries = Vec::new();
    for &n in &gens {
        let values = paths.generation(n)?;
        let file = format!("path_n{n}.csv");
        dir.write(&file, &path_csv(stamp, n, &ts, values))?;
        let end = values[values.len() - 1];
        summaries.push(GenerationSummary {
            n,
            file,
            sup_norm: sups[(n - paths.n_min) as usize],
            total_variation: total_variation(values),
            end: [end.re, end.im],
        });
    }
    let report = SimulateReport {
        family: paths.family.clone(),
        base: paths.base,
        n_max: config.n_max,
        m_sub: config.m_sub,
        resolution: paths.resolution(),
        generations: summaries,
    };
    dir.write("simulate.json", &report_json("simulate", stamp, &report)?)?;
    Ok(true)
}

fn phi(config: &RunConfig, stamp: &Stamp, dir: &mut OutputDir) -> Result<bool> {
    let grid = config.p_grid.clone().unwrap_or_else(default_p_grid);
    let mut report = verdict_on_grid(&config.model, &config.measure, &grid)?;
    let [lo, hi] = config.phi.n_range;
    let replicas = config.phi.replicas.unwrap_or(config.replicas);
    for &p in &config.phi.empirical_p {
        let point = match phi_empirical(&config.model, &config.measure, p, lo..=hi, replicas, task_seed(stamp.seed, 1)) {
            Ok(e) => PhiPoint { p, phi: Some(e.slope), method: PhiMethod::EmpiricalSlope, std_error: e.std_error },
            // every replica died out: no slope to fit
            Err(CascadeError::Degenerate(_)) => {
                PhiPoint { p, phi: None, method: PhiMethod::EmpiricalSlope, std_error: 0.0 }
            }
            Err(e) => return Err(e.into()),
        };
        report.empirical.push(point);
    }
    dir.write("phi.json", &report_json("phi", stamp, &report)?)?;
    Ok(true)
}

fn trace_for(config: &RunConfig, seed: u64) -> Result<Trace> {
    let base = config.model.base();
    let n = config.n_max;
    Ok(match config.spectrum.source {
        TraceSource::Cascade => {
            let paths = build_paths_range(&config.model, &config.measure, seed, n, n, config.m_sub)?;
            Trace::from_path(&paths, n)?
        }
        TraceSource::Identity => Trace::identity(base, n),
        TraceSource::Zero => Trace::zero(base, n),
        TraceSource::Weierstrass => Trace::weierstrass(n, config.spectrum.weierstrass_terms),
    })
}

fn spectrum(config: &RunConfig, stamp: &Stamp, dir: &mut OutputDir) -> Result<bool> {
    let s = &config.spectrum;
    let trace = trace_for(config, stamp.seed)?;
    let [lo, hi] = s.generations(config.n_max);
    let report = large_deviation_spectrum(&trace, lo..=hi, &s.eps, &default_h_grid(s.h_max, s.h_step))?;
    let structure = match structure_exponents(&trace, &s.q_list, lo..=hi) {
        Ok(v) => Some(v),
        Err(CascadeError::Degenerate(_) | CascadeError::InvalidParameter(_)) => None,
        Err(e) => return Err(e.into()),
    };
    for h in &report.histograms {
        dir.write(&format!("histogram_n{}.csv", h.n), &histogram_csv(stamp, h))?;
    }
    let body = json!({
        "source": s.source,
        "support": report.support(),
        "spectrum": report,
        "structure_exponents": structure,
    });
    dir.write("spectrum.json", &report_json("spectrum", stamp, &body)?)?;
    Ok(true)
}

#[derive(Debug, Serialize)]
struct Check {
    name: String,
    pass: bool,
    /// Why the check did not apply, if it was skipped.
    #[serde(skip_serializing_if = "Option::is_none")]
    skipped: Option<String>,
    detail: Value,
}

impl Check {
    fn new(name: impl Into<String>, pass: bool, detail: impl Serialize) -> Result<Self> {
        Ok(Self { name: name.into(), pass, skipped: None, detail: serde_json::to_value(detail)? })
    }

    fn skipped(name: impl Into<String>, reason: String) -> Self {
        Self { name: name.into(), pass: true, skipped: Some(reason), detail: Value::Null }
    }
}

#[derive(Debug, Serialize)]
struct VerifyReport {
    pass: bool,
    checks: Vec<Check>,
}

fn verify(config: &RunConfig, stamp: &Stamp, dir: &mut OutputDir) -> Result<bool> {
    let v = &config.verify;
    let (model, measure) = (&config.model, &config.measure);
    let seed = stamp.seed;
    let mut checks = Vec::new();
    for &n in &v.levels {
        let r = martingale_check(model, &v.t_list, n, config.replicas, task_seed(seed, 10 + n as u64))?;
        checks.push(Check::new(format!("martingale_n{n}"), r.pass, &r)?);
    }
    for &n in &v.levels {
        let name = format!("decorrelation_n{n}");
        match decorrelation_check(model, v.t_list[0], n, config.replicas, task_seed(seed, 100 + n as u64)) {
            Ok(r) => checks.push(Check::new(name, r.pass, &r)?),
            Err(CascadeError::OutOfRange(s)) => {
                checks.push(Check::skipped(name, format!("partner point {s} falls outside [0, 1)")))
            }
            Err(e) => return Err(e.into()),
        }
    }
    let t_sim = *v.t_list.last().expect("validated non-empty");
    match self_similarity_check(model, t_sim, v.similarity_level, config.replicas, task_seed(seed, 200)) {
        Ok(r) => checks.push(Check::new("self_similarity", r.pass, &r)?),
        Err(CascadeError::Unsupported(reason)) => checks.push(Check::skipped("self_similarity", reason)),
        Err(e) => return Err(e.into()),
    }
    let path_replicas = v.path_replicas.unwrap_or(config.replicas.min(2000));
    let moments = path_moments(model, measure, config.n_max, config.m_sub, 2.0, path_replicas, task_seed(seed, 300))?;
    if config.n_max >= 2 {
        let ratio = cauchy_ratio_from(model, measure, &moments, path_replicas, task_seed(seed, 301))?;
        let pass = ratio.spread.is_finite() && ratio.spread <= v.ratio_max;
        checks.push(Check::new("cauchy_ratio", pass, &ratio)?);
    } else {
        checks.push(Check::skipped("cauchy_ratio", "needs n_max >= 2".into()));
    }
    let sups: Vec<f64> = moments.sup_norm.iter().map(|e| e.mean).collect();
    let first = config.n_max.saturating_sub(4).max(1) as usize - 1;
    let last = sups[sups.len() - 1];
    let earlier = sups[first..sups.len() - 1].iter().copied().fold(f64::NAN, f64::max);
    if earlier.is_nan() {
        checks.push(Check::skipped("sup_norm_trend", "needs at least two generations".into()));
    } else {
        let pass = last <= v.trend_factor * earlier;
        let detail = json!({ "generations": moments.generations, "second_moment": sups, "factor": v.trend_factor });
        checks.push(Check::new("sup_norm_trend", pass, detail)?);
    }
    if model.is_badic() {
        checks.push(Check::skipped("quadrature", "b-adic paths are exact on the grid".into()));
    } else {
        let change = quadrature_change(model, measure, task_seed(seed, 400), config.n_max, config.m_sub)?;
        let detail = json!({ "n": config.n_max, "m_sub": config.m_sub, "relative_change": change });
        checks.push(Check::new("quadrature", change <= v.quadrature_tol, detail)?);
    }
    let report = VerifyReport { pass: checks.iter().all(|c| c.pass), checks };
    dir.write("verify.json", &report_json("verify", stamp, &report)?)?;
    Ok(report.pass)
}
