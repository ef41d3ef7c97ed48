//! Environment abstraction and a JSON-lines protocol that lets another
//! process (or machine) serve the environment.
//!
//! Every request line gets exactly one response line. A session opens with
//! `hello` and its `spec` reply, then alternates `reset`/`step` requests until
//! `bye` or disconnect.

mod remote;
mod server;
mod wire;

pub use remote::{RemoteEnv, RemoteOptions};
pub use server::{serve_listener, serve_session, serve_stdio};
pub use wire::{decode, encode, WireMessage};

use serde::{Deserialize, Serialize};

use crate::thermal::{ThermalEnv, ThermalError};

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvSpec {
    pub obs_dim: usize,
    pub n_actions: usize,
    pub max_decisions_per_episode: usize,
    pub protocol_version: u32,
    /// Optional per-entry normalization hints, `(x - shift) / scale`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub obs_shift: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub obs_scale: Option<Vec<f64>>,
}

impl EnvSpec {
    pub fn validate(&self) -> Result<()> {
        if self.obs_dim == 0 || self.n_actions == 0 || self.max_decisions_per_episode == 0 {
            return Err(BridgeError::Protocol("spec sizes must be positive".into()));
        }
        for hint in [&self.obs_shift, &self.obs_scale].into_iter().flatten() {
            if hint.len() != self.obs_dim {
                return Err(BridgeError::Protocol("normalization hint has the wrong length".into()));
            }
        }
        Ok(())
    }
}

/// Diagnostics that travel with a step result.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepInfo {
    /// Plate surface temperature, K.
    pub t_surf: f64,
    /// Jet velocity applied during the step, m/s.
    pub v_jet: f64,
    /// Simulated time at the end of the step, s.
    pub time: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub obs: Vec<f64>,
    pub reward: f64,
    pub done: bool,
    pub info: Option<StepInfo>,
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum BridgeError {
    #[error("codec error at byte {offset}: {message}")]
    Codec { offset: usize, message: String },
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("connection error: {0}")]
    Connection(String),
    #[error("no response within {0:?}")]
    Timeout(std::time::Duration),
    /// Error reported by the environment, locally or across the wire.
    #[error("environment error [{code}]: {message}")]
    Env { code: String, message: String },
}

pub type Result<T, E = BridgeError> = std::result::Result<T, E>;

/// The reset/step contract shared by local and remote environments.
pub trait Environment {
    fn spec(&self) -> EnvSpec;
    fn reset(&mut self) -> Result<Vec<f64>>;
    fn step(&mut self, action: usize) -> Result<StepOutcome>;
}

impl From<ThermalError> for BridgeError {
    fn from(e: ThermalError) -> Self {
        let code = match e {
            ThermalError::Input(_) => "bad_action",
            ThermalError::State(_) => "bad_state",
            ThermalError::Stability(_) => "unstable",
            ThermalError::Config(_) | ThermalError::NoConvergence(_) => "env_error",
        };
        BridgeError::Env {
            code: code.into(),
            message: e.to_string(),
        }
    }
}

impl Environment for ThermalEnv {
    fn spec(&self) -> EnvSpec {
        let (shift, scale) = self.obs_scaling_hint();
        EnvSpec {
            obs_dim: self.obs_dim(),
            n_actions: self.n_actions(),
            max_decisions_per_episode: self.max_decisions(),
            protocol_version: PROTOCOL_VERSION,
            obs_shift: Some(shift),
            obs_scale: Some(scale),
        }
    }

    fn reset(&mut self) -> Result<Vec<f64>> {
        Ok(ThermalEnv::reset(self))
    }

    fn step(&mut self, action: usize) -> Result<StepOutcome> {
        let s = ThermalEnv::step(self, action)?;
        Ok(StepOutcome {
            obs: s.obs,
            reward: s.reward,
            done: s.done,
            info: Some(StepInfo {
                t_surf: s.t_surf,
                v_jet: s.v_jet,
                time: s.time,
            }),
        })
    }
}

impl<E: Environment + ?Sized> Environment for Box<E> {
    fn spec(&self) -> EnvSpec {
        (**self).spec()
    }

    fn reset(&mut self) -> Result<Vec<f64>> {
        (**self).reset()
    }

    fn step(&mut self, action: usize) -> Result<StepOutcome> {
        (**self).step(action)
    }
}
