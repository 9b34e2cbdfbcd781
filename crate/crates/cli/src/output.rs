//! File formats. Every file carries the config hash and the master seed;
//! floats use Rust's shortest round-trip formatting.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use cascade_core::analysis::ExponentHistogram;
use num_complex::Complex64;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

pub const PATH_HEADER: &str = "t,re_F,im_F,n";
pub const HISTOGRAM_HEADER: &str = "n,h_bin,count";
pub const MANIFEST: &str = "manifest.json";

/// Identity of a run, stamped on every output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Stamp {
    pub config_hash: String,
    pub seed: u64,
}

impl Stamp {
    fn comment(&self) -> String {
        format!("# config_hash={} seed={}\n", self.config_hash, self.seed)
    }
}

/// Path CSV body for one generation.
pub fn path_csv(stamp: &Stamp, n: u32, ts: &[f64], values: &[Complex64]) -> String {
    let mut s = stamp.comment();
    s.push_str(PATH_HEADER);
    s.push('\n');
    for (t, z) in ts.iter().zip(values) {
        writeln!(s, "{},{},{},{}", t, z.re, z.im, n).expect("string write");
    }
    s
}

/// Histogram CSV; the zero-oscillation bucket is written as `h_bin = inf`.
pub fn histogram_csv(stamp: &Stamp, h: &ExponentHistogram) -> String {
    let mut s = stamp.comment();
    s.push_str(HISTOGRAM_HEADER);
    s.push('\n');
    for (bin, count) in &h.bins {
        writeln!(s, "{},{},{}", h.n, bin, count).expect("string write");
    }
    if h.infinite > 0 {
        writeln!(s, "{},inf,{}", h.n, h.infinite).expect("string write");
    }
    s
}

#[derive(Debug, Clone, Serialize)]
pub struct Envelope<'a, T: Serialize> {
    pub command: &'a str,
    pub version: &'a str,
    pub config_hash: &'a str,
    pub seed: u64,
    pub report: &'a T,
}

pub fn report_json<T: Serialize>(command: &str, stamp: &Stamp, report: &T) -> Result<String> {
    let env = Envelope {
        command,
        version: env!("CARGO_PKG_VERSION"),
        config_hash: &stamp.config_hash,
        seed: stamp.seed,
        report,
    };
    let mut s = serde_json::to_string_pretty(&env)?;
    s.push('\n');
    Ok(s)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FileEntry {
    pub name: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub command: String,
    pub versions: Versions,
    pub config_hash: String,
    pub seed: u64,
    pub files: Vec<FileEntry>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Versions {
    pub cascade_cli: &'static str,
    pub cascade_core: &'static str,
}

/// Writes files into one output directory and records them for the manifest.
pub struct OutputDir {
    dir: PathBuf,
    files: Vec<FileEntry>,
}

impl OutputDir {
    pub fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self { dir: dir.to_path_buf(), files: Vec::new() })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<PathBuf> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
        self.files.push(FileEntry { name: name.to_string(), sha256: hex::encode(Sha256::digest(contents)) });
        Ok(path)
    }

    pub fn finish(mut self, command: &str, stamp: &Stamp) -> Result<PathBuf> {
        let manifest = Manifest {
            tool: "cascade",
            command: command.to_string(),
            versions: Versions { cascade_cli: env!("CARGO_PKG_VERSION"), cascade_core: cascade_core::VERSION },
            config_hash: stamp.config_hash.clone(),
            seed: stamp.seed,
            files: std::mem::take(&mut self.files),
        };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        let path = self.dir.join(MANIFEST);
        std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stamp() -> Stamp {
        Stamp { config_hash: "ab".repeat(32), seed: 3 }
    }

    #[test]
    fn path_rows_round_trip() {
        let z = Complex64::new(0.1 + 0.2, -1e-300);
        let csv = path_csv(&stamp(), 2, &[0.25], &[z]);
        let mut lines = csv.lines();
        assert!(lines.next().unwrap().starts_with("# config_hash=abab"));
        assert_eq!(lines.next().unwrap(), PATH_HEADER);
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row[1].parse::<f64>().unwrap(), z.re);
        assert_eq!(row[2].parse::<f64>().unwrap(), z.im);
        assert_eq!(row[3], "2");
    }

    #[test]
    fn histogram_infinite_bucket() {
        let h = ExponentHistogram { n: 3, bin_width: 0.05, bins: vec![], infinite: 8 };
        let csv = histogram_csv(&stamp(), &h);
        assert_eq!(csv.lines().nth(2).unwrap(), "3,inf,8");
    }
}
