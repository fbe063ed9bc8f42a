use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Everything a run depends on. Written into the manifest so that `rerun` reproduces it.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct RunConfig {
    pub command: String,
    /// "builtin" or a JSON potential file
    pub potential: String,
    /// symmetry-breaking potential; builtin when absent
    pub w_potential: Option<String>,
    pub eps: f64,
    pub delta: f64,
    pub edge: [i64; 2],
    /// None means K·𝔳₁
    pub kpar: Option<f64>,
    /// Fourier cutoff: bulk M, or M1 along the edge
    pub m: Option<usize>,
    /// grid size, slice points or supercell cells depending on the command
    pub n: Option<usize>,
    pub threads: Option<usize>,
    pub seed: u64,
    pub out: PathBuf,

    pub n_bands: usize,
    pub kinf: f64,
    pub width: f64,
    pub m2: usize,
    pub transverse: String,
    pub points_per_cell: usize,
    pub stencil: usize,
    pub n_eigs: usize,
    pub deltas: Vec<f64>,
    pub kpar_count: usize,
    /// None means the twist that samples K; kpar-sweep uses 0
    pub twist: Option<f64>,
    pub dump_states: bool,

    pub a_param: f64,
    pub nu: f64,

    pub discretization: String,
    pub points: Option<usize>,

    pub structure: String,
    pub bump: String,
    pub bump_width: f64,
    pub a_min: f64,
    pub a_max: f64,
    pub a_count: usize,
    pub quad_points: usize,

    pub only: Vec<u8>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: String::new(),
            potential: "builtin".into(),
            w_potential: None,
            eps: 10.0,
            delta: 0.1,
            edge: [1, 0],
            kpar: None,
            m: None,
            n: None,
            threads: None,
            seed: 0,
            out: PathBuf::from("out"),
            n_bands: 4,
            kinf: 50.0,
            width: 1.0,
            m2: 4,
            transverse: "grid".into(),
            points_per_cell: 16,
            stencil: 8,
            n_eigs: 8,
            deltas: vec![0.05, 0.075, 0.1, 0.15, 0.2, 0.3],
            kpar_count: 48,
            twist: None,
            dump_states: false,
            a_param: 1e-4,
            nu: 0.5,
            discretization: "spectral".into(),
            points: None,
            structure: "honeycomb".into(),
            bump: "dog".into(),
            bump_width: 0.2,
            a_min: 0.4,
            a_max: 3.0,
            a_count: 27,
            quad_points: 96,
            only: vec![],
        }
    }
}

/// Marks errors that come from the inputs rather than the numerics.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

pub fn config_error(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

/// "zigzag", "armchair" or "a1,b1".
pub fn parse_edge(s: &str) -> anyhow::Result<[i64; 2]> {
    match s.trim() {
        "zigzag" => return Ok([1, 0]),
        "armchair" => return Ok([1, 1]),
        _ => {}
    }
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        bail!(ConfigError(format!("edge must be zigzag, armchair or a1,b1; got {s:?}")));
    }
    let a = parts[0].parse().map_err(|_| config_error(format!("bad edge component {:?}", parts[0])))?;
    let b = parts[1].parse().map_err(|_| config_error(format!("bad edge component {:?}", parts[1])))?;
    Ok([a, b])
}

/// Reads a config file; a manifest is accepted too (its "config" member is used).
pub fn load(path: &Path) -> anyhow::Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| config_error(format!("cannot read {}: {e}", path.display())))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| config_error(format!("{}: {e}", path.display())))?;
    let inner = value.get("config").cloned().unwrap_or(value);
    serde_json::from_value(inner)
        .map_err(|e| config_error(format!("{}: {e}", path.display())))
        .context("loading run config")
}

/// Thread count: flag, then HONEYLAT_THREADS, then rayon's default.
pub fn thread_count(cfg: &RunConfig) -> anyhow::Result<Option<usize>> {
    if let Some(t) = cfg.threads {
        return Ok(Some(t));
    }
    match std::env::var("HONEYLAT_THREADS") {
        Ok(s) if !s.trim().is_empty() => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| config_error(format!("HONEYLAT_THREADS={s:?} is not a count"))),
        _ => Ok(None),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edges() {
        assert_eq!(parse_edge("zigzag").unwrap(), [1, 0]);
        assert_eq!(parse_edge("2, 1").unwrap(), [2, 1]);
        assert!(parse_edge("1").is_err());
    }

    #[test]
    fn partial_config_fills_defaults() {
        let c: RunConfig = serde_json::from_str(r#"{"command": "dirac", "eps": -10}"#).unwrap();
        assert_eq!(c.eps, -10.0);
        assert_eq!(c.potential, "builtin");
        let back: RunConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }
}
