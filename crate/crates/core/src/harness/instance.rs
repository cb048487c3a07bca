use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, CONFIG_VERSION};
use super::derive_seed;
use crate::densityops::{divergence_report, random_low_rank_state, DensityOperator, DivergenceReport};
use crate::error::{LabError, Result};

/// Built-in instance pairs.
pub const FIXTURES: [&str; 3] = ["identical-pure", "orthogonal-pure", "diag"];

const RHO_FILE: &str = "rho.txt";
const SIGMA_FILE: &str = "sigma.txt";
const MANIFEST_FILE: &str = "manifest.json";

/// Substreams of the master seed reserved for instance generation.
const RHO_STREAM: u64 = u64::MAX;
const SIGMA_STREAM: u64 = u64::MAX - 1;

#[derive(Clone, Debug)]
pub struct Instance {
    pub name: String,
    pub rho: DensityOperator,
    pub sigma: DensityOperator,
}

impl Instance {
    pub fn fixture(name: &str) -> Result<Self> {
        let (rho, sigma) = match name {
            "identical-pure" => (DensityOperator::basis(2, 0)?, DensityOperator::basis(2, 0)?),
            "orthogonal-pure" => (DensityOperator::basis(2, 0)?, DensityOperator::basis(2, 1)?),
            "diag" => (
                DensityOperator::diagonal(&[0.75, 0.25])?,
                DensityOperator::maximally_mixed(2)?,
            ),
            other => {
                return Err(LabError::InvalidArgument(format!(
                    "unknown fixture '{other}' (expected one of {})",
                    FIXTURES.join(", ")
                )))
            }
        };
        Ok(Instance { name: name.to_string(), rho, sigma })
    }

    /// Random pair of rank-`rank` states derived from the master seed.
    pub fn generate(dim: usize, rank: usize, seed: u64) -> Result<Self> {
        Ok(Instance {
            name: format!("random-d{dim}-r{rank}-s{seed}"),
            rho: random_low_rank_state(dim, rank, derive_seed(seed, RHO_STREAM))?,
            sigma: random_low_rank_state(dim, rank, derive_seed(seed, SIGMA_STREAM))?,
        })
    }

    pub fn load_dir(dir: &Path) -> Result<Self> {
        let read = |f: &str| -> Result<DensityOperator> {
            DensityOperator::from_instance_str(&std::fs::read_to_string(dir.join(f))?)
        };
        Ok(Instance {
            name: dir.display().to_string(),
            rho: read(RHO_FILE)?,
            sigma: read(SIGMA_FILE)?,
        })
    }

    pub fn dim(&self) -> usize {
        self.rho.dim()
    }
}

/// Instance named by the config, or a fresh random pair.
pub fn resolve_instance(config: &ExperimentConfig) -> Result<Instance> {
    match config.instance.as_deref() {
        Some(name) if FIXTURES.contains(&name) => Instance::fixture(name),
        Some(path) => Instance::load_dir(Path::new(path)),
        None => Instance::generate(config.dim, config.rank, config.seed),
    }
}

/// Description written next to a generated instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub seed: u64,
    pub dim: usize,
    pub rank: usize,
    pub rho_file: String,
    pub sigma_file: String,
    pub oracle: DivergenceReport,
}

impl Manifest {
    pub fn load(dir: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(dir.join(MANIFEST_FILE))?;
        serde_json::from_str(&text).map_err(|e| LabError::Parse(format!("manifest: {e}")))
    }
}

/// Writes `rho.txt`, `sigma.txt` and `manifest.json` into `out_dir`.
pub fn cmd_gen(config: &ExperimentConfig, out_dir: &Path) -> Result<Manifest> {
    config.validate()?;
    let inst = Instance::generate(config.dim, config.rank, config.seed)?;
    std::fs::create_dir_all(out_dir)?;
    std::fs::write(out_dir.join(RHO_FILE), inst.rho.to_instance_string())?;
    std::fs::write(out_dir.join(SIGMA_FILE), inst.sigma.to_instance_string())?;
    let manifest = Manifest {
        version: CONFIG_VERSION,
        seed: config.seed,
        dim: config.dim,
        rank: config.rank,
        rho_file: RHO_FILE.into(),
        sigma_file: SIGMA_FILE.into(),
        oracle: divergence_report(&inst.rho, &inst.sigma, config.alpha)?,
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(out_dir.join(MANIFEST_FILE), text + "\n")?;
    Ok(manifest)
}

/// Exact divergences of the configured instance.
pub fn cmd_oracle(config: &ExperimentConfig) -> Result<DivergenceReport> {
    config.validate()?;
    let inst = resolve_instance(config)?;
    divergence_report(&inst.rho, &inst.sigma, config.alpha)
}

/// Path of the manifest inside an instance directory.
pub fn manifest_path(dir: &Path) -> PathBuf {
    dir.join(MANIFEST_FILE)
}
