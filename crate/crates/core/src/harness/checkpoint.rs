use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{HarnessError, Result};
use crate::rl::{AgentState, DqnAgent};

pub const CHECKPOINT_VERSION: u32 = 1;
const MAGIC: &str = "jetdqn-checkpoint";

/// Serialized agent: configuration, online and target parameters, optimizer
/// moments, counters and the random generator state. The replay buffer is
/// not saved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub agent: AgentState,
}

impl Checkpoint {
    pub fn from_agent(agent: &DqnAgent) -> Self {
        Self {
            format: MAGIC.into(),
            version: CHECKPOINT_VERSION,
            agent: agent.state().clone(),
        }
    }

    pub fn into_agent(self) -> Result<DqnAgent> {
        Ok(DqnAgent::from_state(self.agent)?)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(self).expect("checkpoint serializes");
        out.push(b'\n');
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        // check the header first so that version errors are not masked by
        // schema differences
        let raw: serde_json::Value =
            serde_json::from_slice(bytes).map_err(|e| HarnessError::Format(format!("unreadable checkpoint: {e}")))?;
        if raw.get("format").and_then(|f| f.as_str()) != Some(MAGIC) {
            return Err(HarnessError::Format("not a checkpoint file".into()));
        }
        match raw.get("version").and_then(|v| v.as_u64()) {
            Some(v) if v == u64::from(CHECKPOINT_VERSION) => {}
            other => {
                return Err(HarnessError::Format(format!(
                    "checkpoint version {other:?} is not supported (expected {CHECKPOINT_VERSION})"
                )))
            }
        }
        let ckpt: Checkpoint =
            serde_json::from_value(raw).map_err(|e| HarnessError::Format(format!("bad checkpoint: {e}")))?;
        DqnAgent::from_state(ckpt.agent.clone()).map_err(|e| HarnessError::Format(e.to_string()))?;
        Ok(ckpt)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| HarnessError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rl::{AgentConfig, ObsScaler, Preset};

    fn agent(preset: Preset) -> DqnAgent {
        let mut cfg = AgentConfig {
            hidden: vec![8, 8],
            stream_hidden: 4,
            batch_size: 4,
            learn_start: 8,
            ..AgentConfig::default()
        };
        preset.apply(&mut cfg);
        let mut a = DqnAgent::new(cfg, ObsScaler::identity(3), 4, 100, 11).unwrap();
        for k in 0..20 {
            let obs = [k as f64 * 0.1, 0.5, -0.2];
            let act = a.act(&obs).unwrap();
            a.remember(&obs, act, 0.3, &[0.1, 0.2, 0.3], false, false).unwrap();
            a.learn().unwrap();
        }
        a
    }

    #[test]
    fn save_load_save_is_byte_identical() {
        for p in Preset::ALL {
            let c = Checkpoint::from_agent(&agent(p));
            let bytes = c.to_bytes();
            let back = Checkpoint::from_bytes(&bytes).unwrap();
            assert_eq!(back, c);
            assert_eq!(back.to_bytes(), bytes);
        }
    }

    #[test]
    fn truncated_and_foreign_files_are_format_errors() {
        let bytes = Checkpoint::from_agent(&agent(Preset::Duel)).to_bytes();
        for cut in [0, 1, bytes.len() / 2, bytes.len() - 3] {
            assert!(matches!(Checkpoint::from_bytes(&bytes[..cut]), Err(HarnessError::Format(_))));
        }
        assert!(matches!(Checkpoint::from_bytes(b"{\"a\":1}"), Err(HarnessError::Format(_))));
    }

    #[test]
    fn version_mismatch_is_rejected() {
        let mut c = Checkpoint::from_agent(&agent(Preset::Vanilla));
        c.version = CHECKPOINT_VERSION + 1;
        match Checkpoint::from_bytes(&c.to_bytes()) {
            Err(HarnessError::Format(m)) => assert!(m.contains("version")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("agent.json");
        let c = Checkpoint::from_agent(&agent(Preset::DoubleHard));
        c.save(&path).unwrap();
        assert_eq!(Checkpoint::load(&path).unwrap(), c);
        assert!(Checkpoint::load(&dir.path().join("missing.json")).is_err());
    }
}
