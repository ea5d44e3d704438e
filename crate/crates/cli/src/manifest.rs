use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use crate::commands::{self, EstimateArgs, FitArgs, LatticeArgs, LowerBoundArgs, RouteArgs};

/// Sidecar written next to every output.
#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub config: serde_json::Value,
    pub seed: u64,
    pub version: String,
    pub timestamp: String,
    pub outputs: Vec<PathBuf>,
}

pub fn write(out_dir: &Path, subcommand: &str, config: &impl Serialize, seed: u64, outputs: &[PathBuf]) -> Result<()> {
    let m = RunManifest {
        subcommand: subcommand.to_string(),
        config: serde_json::to_value(config)?,
        seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
        timestamp: chrono::Utc::now().to_rfc3339(),
        outputs: outputs.iter().map(|p| p.file_name().map(PathBuf::from).unwrap_or_default()).collect(),
    };
    let path = out_dir.join(format!("{subcommand}.manifest.json"));
    fs::write(&path, serde_json::to_string_pretty(&m)? + "\n").with_context(|| format!("writing {}", path.display()))
}

fn config<T: serde::de::DeserializeOwned>(m: &RunManifest) -> Result<T> {
    serde_json::from_value(m.config.clone()).with_context(|| format!("manifest config does not match `{}`", m.subcommand))
}

pub fn replay(path: &Path, out: Option<PathBuf>) -> Result<()> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let m: RunManifest = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    match m.subcommand.as_str() {
        "route" => {
            let mut a: RouteArgs = config(&m)?;
            a.common.out = out.or(a.common.out);
            commands::route(&a)
        }
        "estimate" => {
            let mut a: EstimateArgs = config(&m)?;
            a.common.out = out.or(a.common.out);
            commands::estimate(&a)
        }
        "fit" => {
            let mut a: FitArgs = config(&m)?;
            a.common.out = out.or(a.common.out);
            commands::fit(&a)
        }
        "lattice" => {
            let mut a: LatticeArgs = config(&m)?;
            a.common.out = out.or(a.common.out);
            commands::lattice(&a)
        }
        "lower-bound" => {
            let mut a: LowerBoundArgs = config(&m)?;
            a.common.out = out.or(a.common.out);
            commands::lower_bound(&a)
        }
        other => bail!("unknown subcommand `{other}` in manifest"),
    }
}
