//! Rendering of run artifacts: CSV tables, JSON reports and the manifest.

use calderon::dnmap::DnSample;
use calderon::{FieldVector, Grid};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::Path;

/// Seventeen significant digits: enough to read every `f64` back exactly.
pub fn real(v: f64) -> String {
    format!("{v:.16e}")
}

/// `x,u` for every node.
pub fn field_csv(grid: &Grid<f64>, u: &FieldVector<f64>) -> String {
    let mut out = String::from("x,u\n");
    for (i, v) in u.iter().enumerate() {
        out.push_str(&format!("{},{}\n", real(grid.x(i)), real(*v)));
    }
    out
}

/// `x,input_id,epsilon,flux` with one row per `w2` node and sample.
pub fn flux_csv<'a>(grid: &Grid<f64>, samples: impl IntoIterator<Item = &'a DnSample<f64>>) -> String {
    let mut out = String::from("x,input_id,epsilon,flux\n");
    for sample in samples {
        for (j, i) in grid.w2().iter().enumerate() {
            out.push_str(&format!("{},{},{},{}\n", real(grid.x(i)), sample.input_id, real(sample.epsilon), real(sample.flux[j])));
        }
    }
    out
}

pub fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub subcommand: String,
    /// SHA-256 of the configuration bytes exactly as read.
    pub config_sha256: String,
    pub versions: BTreeMap<String, String>,
    /// Wall-clock milliseconds per stage; the only nondeterministic content.
    pub timings_ms: BTreeMap<String, f64>,
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn new(subcommand: &str, config_bytes: &[u8]) -> Self {
        let versions = BTreeMap::from([
            ("calderon-cli".to_string(), env!("CARGO_PKG_VERSION").to_string()),
            ("calderon-core".to_string(), calderon::VERSION.to_string()),
        ]);
        Self {
            subcommand: subcommand.to_string(),
            config_sha256: sha256_hex(config_bytes),
            versions,
            timings_ms: BTreeMap::new(),
            outputs: Vec::new(),
        }
    }
}

/// Named file contents produced by one run; `manifest.json` is added on write.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub manifest: Manifest,
    pub files: BTreeMap<String, String>,
}

impl RunArtifacts {
    pub fn new(manifest: Manifest) -> Self {
        Self { manifest, files: BTreeMap::new() }
    }

    pub fn add(&mut self, name: &str, contents: String) {
        self.manifest.outputs.push(name.to_string());
        self.files.insert(name.to_string(), contents);
    }

    pub fn write_to(&self, dir: &Path) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        for (name, contents) in &self.files {
            fs::write(dir.join(name), contents)?;
        }
        fs::write(dir.join("manifest.json"), json(&self.manifest))
    }
}
