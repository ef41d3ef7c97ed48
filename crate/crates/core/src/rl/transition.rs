use serde::{Deserialize, Serialize};

use super::{Result, RlError};

/// One step of experience. `gamma_next` is the discount applied to the
/// bootstrap term and is zero exactly when the step ended the episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub s: Vec<f64>,
    pub a: usize,
    pub r: f64,
    pub gamma_next: f64,
    pub s_next: Vec<f64>,
    pub done: bool,
}

impl Transition {
    pub fn new(s: Vec<f64>, a: usize, r: f64, s_next: Vec<f64>, done: bool, gamma: f64) -> Self {
        Self {
            s,
            a,
            r,
            gamma_next: if done { 0.0 } else { gamma },
            s_next,
            done,
        }
    }

    pub fn validate(&self, n_actions: Option<usize>) -> Result<()> {
        if self.done != (self.gamma_next == 0.0) {
            return Err(RlError::Input(format!(
                "done = {} is inconsistent with gamma_next = {}",
                self.done, self.gamma_next
            )));
        }
        if !(0.0..=1.0).contains(&self.gamma_next) {
            return Err(RlError::Input(format!("gamma_next {} outside [0, 1]", self.gamma_next)));
        }
        if self.s.len() != self.s_next.len() {
            return Err(RlError::Input("s and s_next differ in length".into()));
        }
        if let Some(n) = n_actions {
            if self.a >= n {
                return Err(RlError::Input(format!("action {} outside [0, {n})", self.a)));
            }
        }
        if !self.r.is_finite() {
            return Err(RlError::Input("reward is not finite".into()));
        }
        Ok(())
    }
}

/// A mini-batch laid out column-wise for batched network passes.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub obs_dim: usize,
    pub states: Vec<f64>,
    pub actions: Vec<usize>,
    pub rewards: Vec<f64>,
    pub gammas: Vec<f64>,
    pub next_states: Vec<f64>,
    pub dones: Vec<bool>,
}

impl Batch {
    pub fn with_capacity(obs_dim: usize, n: usize) -> Self {
        Self {
            obs_dim,
            states: Vec::with_capacity(n * obs_dim),
            actions: Vec::with_capacity(n),
            rewards: Vec::with_capacity(n),
            gammas: Vec::with_capacity(n),
            next_states: Vec::with_capacity(n * obs_dim),
            dones: Vec::with_capacity(n),
        }
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub(crate) fn push(&mut self, t: &Transition) {
        self.states.extend_from_slice(&t.s);
        self.actions.push(t.a);
        self.rewards.push(t.r);
        self.gammas.push(t.gamma_next);
        self.next_states.extend_from_slice(&t.s_next);
        self.dones.push(t.done);
    }

    /// Validates every transition and packs them.
    pub fn from_transitions(ts: &[Transition]) -> Result<Self> {
        let obs_dim = ts.first().map(|t| t.s.len()).unwrap_or(0);
        let mut b = Self::with_capacity(obs_dim, ts.len());
        for t in ts {
            t.validate(None)?;
            if t.s.len() != obs_dim {
                return Err(RlError::Input("transitions differ in observation length".into()));
            }
            b.push(t);
        }
        Ok(b)
    }

    pub(crate) fn check_against(&self, input_dim: usize, n_actions: usize) -> Result<()> {
        if !self.is_empty() && self.obs_dim != input_dim {
            return Err(RlError::Input(format!(
                "observations have length {} but the network expects {input_dim}",
                self.obs_dim
            )));
        }
        if let Some(&a) = self.actions.iter().find(|&&a| a >= n_actions) {
            return Err(RlError::Input(format!("action {a} outside [0, {n_actions})")));
        }
        for (&g, &d) in self.gammas.iter().zip(&self.dones) {
            if d != (g == 0.0) {
                return Err(RlError::Input(format!(
                    "done = {d} is inconsistent with gamma_next = {g}"
                )));
            }
        }
        Ok(())
    }
}
