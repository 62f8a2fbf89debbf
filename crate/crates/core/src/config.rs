//! JSON description of a replacement system.
//!
//! ```json
//! { "m": 2, "s": 5, "ell": 5, "t": 20, "outer": "complete", "inner": "aghp", "f": "balanced" }
//! ```
//!
//! `outer` and `inner` are either the built-in names or paths to graph
//! files, relative to the config file. `f` is `balanced`, `zero`,
//! `parity:HEX` or a path to a JSON array of 0/1 values.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::amplify::SignedFn;
use crate::error::{Error, Result};
use crate::graphs::{self, CayleyGraph};
use crate::walks::{ReplacementSystem, WalkParams};

fn default_outer() -> String {
    "complete".into()
}

fn default_inner() -> String {
    "aghp".into()
}

fn default_f() -> String {
    "balanced".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub m: u32,
    pub s: u32,
    pub ell: u32,
    pub t: usize,
    #[serde(default = "default_outer")]
    pub outer: String,
    #[serde(default = "default_inner")]
    pub inner: String,
    #[serde(default = "default_f")]
    pub f: String,
}

/// A config together with the directory its relative paths resolve against.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: SystemConfig,
    pub base_dir: PathBuf,
}

impl SystemConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<LoadedConfig> {
        let config = Self::from_json(&std::fs::read_to_string(path)?)?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(LoadedConfig { config, base_dir })
    }

    pub fn params(&self) -> Result<WalkParams> {
        WalkParams::new(self.m, self.s, self.ell, self.t)
    }

    pub fn build(&self, base_dir: &Path) -> Result<ReplacementSystem> {
        let params = self.params()?;
        let outer = match self.outer.as_str() {
            "complete" => graphs::build_complete_selfloop(self.m)?,
            path => load_graph(&base_dir.join(path))?,
        };
        let inner = match self.inner.as_str() {
            "aghp" => graphs::build_aghp(params.r(), self.ell)?,
            path => load_graph(&base_dir.join(path))?,
        };
        ReplacementSystem::new(outer, inner, params)
    }

    pub fn assignment(&self, base_dir: &Path, n: usize) -> Result<SignedFn> {
        parse_assignment(&self.f, base_dir, n)
    }
}

pub fn load_graph(path: &Path) -> Result<CayleyGraph> {
    CayleyGraph::from_json(&std::fs::read_to_string(path)?)
}

pub fn parse_assignment(spec: &str, base_dir: &Path, n: usize) -> Result<SignedFn> {
    match spec {
        "balanced" => SignedFn::balanced(n),
        "zero" => SignedFn::zero(n),
        _ => {
            if let Some(hex) = spec.strip_prefix("parity:") {
                let mask = u64::from_str_radix(hex, 16).map_err(|_| Error::Parse(format!("bad parity mask {hex:?}")))?;
                return SignedFn::parity(n, mask);
            }
            let values: Vec<u8> = serde_json::from_str(&std::fs::read_to_string(base_dir.join(spec))?)?;
            if values.len() != n || values.iter().any(|&v| v > 1) {
                return Err(Error::Parse(format!("assignment needs {n} entries in {{0, 1}}")));
            }
            SignedFn::from_bits(values.into_iter().map(|v| v == 1).collect())
        }
    }
}
