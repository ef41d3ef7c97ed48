use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{HarnessError, Result};
use crate::rl::{AgentConfig, Preset};
use crate::thermal::EnvConfig;

pub const CONFIG_VERSION: u32 = 1;

/// When set, replaces the configured output directory's parent.
pub const OUTPUT_ROOT_ENV: &str = "JETDQN_OUTPUT_ROOT";

/// Values enumerated by `sweep`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub seeds: Vec<u64>,
    /// Probe offsets from the plate, in millimetres.
    pub layouts_mm: Vec<f64>,
    pub episodes: Vec<usize>,
    pub variants: Vec<Preset>,
    /// Run cells on the rayon thread pool; each cell stays single-threaded.
    pub parallel: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            seeds: vec![0, 1, 2],
            layouts_mm: vec![1.0, 5.0, 10.0],
            episodes: vec![50, 100, 150],
            variants: Preset::ALL.to_vec(),
            parallel: false,
        }
    }
}

/// Everything needed to reproduce a run. Stored as TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub format_version: u32,
    pub name: String,
    pub seed: u64,
    /// Overrides `agent.variant` and `agent.target_update` when set.
    pub preset: Option<Preset>,
    pub n_episodes: usize,
    /// Length of greedy evaluation and baseline rollouts, in seconds.
    pub eval_duration: f64,
    pub output_dir: PathBuf,
    pub env: EnvConfig,
    pub agent: AgentConfig,
    pub sweep: SweepConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            format_version: CONFIG_VERSION,
            name: "run".into(),
            seed: 0,
            preset: Some(Preset::DoubleSoft),
            n_episodes: 100,
            eval_duration: 100.0,
            output_dir: PathBuf::from("runs"),
            env: EnvConfig::default(),
            agent: AgentConfig::default(),
            sweep: SweepConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.format_version != CONFIG_VERSION {
            return Err(HarnessError::Config(format!(
                "config format_version {} is not supported (expected {CONFIG_VERSION})",
                self.format_version
            )));
        }
        if !(self.eval_duration > 0.0 && self.eval_duration.is_finite()) {
            return Err(HarnessError::Config("eval_duration must be positive".into()));
        }
        if self.sweep.seeds.is_empty() {
            return Err(HarnessError::Config("sweep needs at least one seed".into()));
        }
        if self.sweep.layouts_mm.iter().any(|l| !(*l > 0.0)) {
            return Err(HarnessError::Config("probe offsets must be positive".into()));
        }
        self.env.validate()?;
        self.effective_agent().validate()?;
        Ok(())
    }

    /// Agent configuration with the preset applied.
    pub fn effective_agent(&self) -> AgentConfig {
        let mut a = self.agent.clone();
        if let Some(p) = self.preset {
            p.apply(&mut a);
        }
        a
    }

    /// Output directory for this run, honouring the root override.
    pub fn run_dir(&self) -> PathBuf {
        let base = match std::env::var_os(OUTPUT_ROOT_ENV) {
            Some(root) => PathBuf::from(root),
            None => self.output_dir.clone(),
        };
        base.join(&self.name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rl::{TargetUpdate, Variant};

    #[test]
    fn toml_roundtrip() {
        let cfg = RunConfig::default();
        let text = cfg.to_toml_string();
        assert_eq!(RunConfig::from_toml_str(&text).unwrap(), cfg);
    }

    #[test]
    fn partial_file_uses_defaults() {
        let cfg = RunConfig::from_toml_str("name = \"x\"\nseed = 4\npreset = \"duel\"\n[env]\nnx = 32\n").unwrap();
        assert_eq!(cfg.seed, 4);
        assert_eq!(cfg.env.nx, 32);
        assert_eq!(cfg.env.ny, 48);
        let agent = cfg.effective_agent();
        assert_eq!(agent.variant, Variant::Duel);
        assert_eq!(agent.target_update, TargetUpdate::Soft { tau: 0.001 });
    }

    #[test]
    fn rejects_bad_files() {
        assert!(RunConfig::from_toml_str("format_version = 2").is_err());
        assert!(RunConfig::from_toml_str("seeed = 1").is_err());
        assert!(RunConfig::from_toml_str("eval_duration = 0.0").is_err());
        assert!(RunConfig::from_toml_str("[agent]\ngamma = 0.0\n").is_err());
        assert!(RunConfig::from_toml_str("[env]\nnx = 0\n").is_err());
    }
}
