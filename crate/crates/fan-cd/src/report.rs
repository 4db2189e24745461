//! Run configuration and JSON reports.

use crate::flag::{CdPolynomial, CdTerm, FlagVector};
use crate::lefschetz::{Certificate, RunParams};
use crate::poset::DEFAULT_DIM_CAP;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunConfig {
    pub seed: u64,
    pub retries: usize,
    pub entry_bound: i64,
    pub mode: String,
    pub dim_cap: usize,
    pub output: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let p = RunParams::default();
        RunConfig { seed: p.seed, retries: p.retries, entry_bound: p.entry_bound, mode: p.mode, dim_cap: DEFAULT_DIM_CAP, output: None }
    }
}

impl RunConfig {
    pub fn params(&self) -> RunParams {
        RunParams { seed: self.seed, retries: self.retries, entry_bound: self.entry_bound, mode: self.mode.clone() }
    }
}

#[derive(Serialize)]
struct Envelope<'a, T> {
    version: &'static str,
    config: &'a RunConfig,
    #[serde(flatten)]
    body: &'a T,
}

/// Pretty JSON with the configuration echo and library version.
pub fn render<T: Serialize>(config: &RunConfig, body: &T) -> String {
    let mut s = serde_json::to_string_pretty(&Envelope { version: VERSION, config, body }).expect("serializable report");
    s.push('\n');
    s
}

/// Writes to `path`, or to stdout when absent.
pub fn emit_report(text: &str, path: Option<&Path>) -> std::io::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CdIndexReport {
    pub poset: String,
    pub rank: usize,
    pub method: String,
    pub flag_h: BTreeMap<String, i64>,
    pub cd_index: Vec<CdTerm>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lefschetz_cd_index: Option<Vec<CdTerm>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub agree: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<Certificate>,
}

impl CdIndexReport {
    pub fn new(poset: &str, rank: usize, method: &str, h: &FlagVector, cd: &CdPolynomial) -> Self {
        CdIndexReport {
            poset: poset.into(),
            rank,
            method: method.into(),
            flag_h: h.labelled(),
            cd_index: cd.json_terms(),
            lefschetz_cd_index: None,
            agree: None,
            certificate: None,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LefschetzReport {
    pub poset: String,
    #[serde(flatten)]
    pub certificate: Certificate,
}

/// Tab-separated `word coeff` lines.
pub fn cd_tsv(cd: &CdPolynomial) -> String {
    cd.terms.iter().map(|(w, c)| format!("{w}\t{c}\n")).collect()
}
