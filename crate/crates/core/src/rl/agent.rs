use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::nn::{adam_step, init_network, mlp_layers, AdamConfig, AdamState, DuelingHead, DuelingSpec, QNet};

use super::{
    argmax, hard_update, q_loss_and_grad, select_action, soft_update, td_target_double,
    td_target_vanilla, EpsilonSchedule, ReplayBuffer, Result, RlError, Transition,
};

/// Network architecture and bootstrap rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Vanilla,
    Double,
    Duel,
    DoubleDuel,
}

impl Variant {
    pub fn double_target(self) -> bool {
        matches!(self, Variant::Double | Variant::DoubleDuel)
    }

    pub fn dueling(self) -> bool {
        matches!(self, Variant::Duel | Variant::DoubleDuel)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TargetUpdate {
    /// Copy every `interval` learner steps.
    Hard { interval: u64 },
    /// Polyak average after every learner step.
    Soft { tau: f64 },
}

/// The four named agents compared in the variant sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Preset {
    #[serde(rename = "vanilla")]
    Vanilla,
    #[serde(rename = "double-soft")]
    DoubleSoft,
    #[serde(rename = "double-hard")]
    DoubleHard,
    #[serde(rename = "duel")]
    Duel,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::Vanilla, Preset::DoubleSoft, Preset::DoubleHard, Preset::Duel];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Vanilla => "vanilla",
            Preset::DoubleSoft => "double-soft",
            Preset::DoubleHard => "double-hard",
            Preset::Duel => "duel",
        }
    }

    pub fn variant(self) -> Variant {
        match self {
            Preset::Vanilla => Variant::Vanilla,
            Preset::DoubleSoft | Preset::DoubleHard => Variant::Double,
            Preset::Duel => Variant::Duel,
        }
    }

    pub fn target_update(self) -> TargetUpdate {
        match self {
            Preset::Vanilla | Preset::DoubleHard => TargetUpdate::Hard { interval: 1000 },
            Preset::DoubleSoft | Preset::Duel => TargetUpdate::Soft { tau: 0.001 },
        }
    }

    /// Overwrites the variant and target rule of `cfg`.
    pub fn apply(self, cfg: &mut AgentConfig) {
        cfg.variant = self.variant();
        cfg.target_update = self.target_update();
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = RlError;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| RlError::Config(format!("unknown preset {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentConfig {
    pub gamma: f64,
    pub variant: Variant,
    pub target_update: TargetUpdate,
    pub batch_size: usize,
    pub learn_start: usize,
    pub replay_capacity: usize,
    pub hidden: Vec<usize>,
    /// Width of the single hidden layer in each dueling stream.
    pub stream_hidden: usize,
    pub adam: AdamConfig,
    pub grad_clip: f64,
    pub eps_start: f64,
    pub eps_end: f64,
    /// Share of the planned decision steps over which epsilon decays.
    pub eps_decay_fraction: f64,
    /// Treat the episode time limit as a true terminal for bootstrapping.
    pub time_limit_terminal: bool,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            variant: Preset::DoubleSoft.variant(),
            target_update: Preset::DoubleSoft.target_update(),
            batch_size: 64,
            learn_start: 1000,
            replay_capacity: 50_000,
            hidden: vec![64, 64],
            stream_hidden: 32,
            adam: AdamConfig::default(),
            grad_clip: 10.0,
            eps_start: 1.0,
            eps_end: 0.05,
            eps_decay_fraction: 0.3,
            time_limit_terminal: false,
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(RlError::Config(m));
        // gamma = 0 would make every non-terminal transition look terminal
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad(format!("gamma {} outside (0, 1]", self.gamma));
        }
        match self.target_update {
            TargetUpdate::Hard { interval: 0 } => {
                return bad("hard update interval must be at least 1".into())
            }
            TargetUpdate::Soft { tau } if !(tau > 0.0 && tau <= 1.0) => {
                return bad(format!("tau {tau} outside (0, 1]"))
            }
            _ => {}
        }
        if self.batch_size == 0 || self.replay_capacity == 0 {
            return bad("batch_size and replay_capacity must be positive".into());
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return bad("hidden layers must be non-empty and positive".into());
        }
        if self.variant.dueling() && self.stream_hidden == 0 {
            return bad("stream_hidden must be positive".into());
        }
        if !(self.grad_clip > 0.0) {
            return bad("grad_clip must be positive".into());
        }
        if !(self.adam.lr > 0.0) {
            return bad("learning rate must be positive".into());
        }
        for e in [self.eps_start, self.eps_end] {
            if !(0.0..=1.0).contains(&e) {
                return bad(format!("epsilon {e} outside [0, 1]"));
            }
        }
        if !(self.eps_decay_fraction > 0.0 && self.eps_decay_fraction <= 1.0) {
            return bad("eps_decay_fraction must lie in (0, 1]".into());
        }
        Ok(())
    }

    pub fn build_net(&self, obs_dim: usize, n_actions: usize, seed: u64) -> Result<QNet> {
        Ok(if self.variant.dueling() {
            QNet::Dueling(DuelingHead::new(
                &DuelingSpec {
                    input: obs_dim,
                    trunk_hidden: self.hidden.clone(),
                    stream_hidden: self.stream_hidden,
                    n_actions,
                },
                seed,
            )?)
        } else {
            QNet::Dense(init_network(&mlp_layers(obs_dim, &self.hidden, n_actions), seed)?)
        })
    }
}

/// Affine observation normalization `(x - shift) / scale`, applied before
/// every network pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObsScaler {
    pub shift: Vec<f64>,
    pub scale: Vec<f64>,
}

impl ObsScaler {
    pub fn identity(dim: usize) -> Self {
        Self {
            shift: vec![0.0; dim],
            scale: vec![1.0; dim],
        }
    }

    pub fn new(shift: Vec<f64>, scale: Vec<f64>) -> Result<Self> {
        if shift.len() != scale.len() {
            return Err(RlError::Config("shift and scale differ in length".into()));
        }
        if scale.iter().any(|s| !(s.is_finite() && *s != 0.0)) || shift.iter().any(|s| !s.is_finite()) {
            return Err(RlError::Config("scaler entries must be finite with nonzero scale".into()));
        }
        Ok(Self { shift, scale })
    }

    pub fn dim(&self) -> usize {
        self.shift.len()
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(RlError::Input(format!(
                "observation has length {}, expected {}",
                x.len(),
                self.dim()
            )));
        }
        Ok(x.iter()
            .zip(self.shift.iter().zip(&self.scale))
            .map(|(v, (m, s))| (v - m) / s)
            .collect())
    }
}

/// What one call to [`DqnAgent::learn`] did.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LearnOutcome {
    /// Not enough transitions stored yet.
    Waiting,
    Updated { loss: f64 },
    /// The loss or gradient was non-finite; parameters were left alone.
    Skipped,
}

/// Serializable agent state: everything except the replay contents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub config: AgentConfig,
    pub scaler: ObsScaler,
    pub n_actions: usize,
    pub schedule: EpsilonSchedule,
    pub online: QNet,
    pub target: QNet,
    pub adam: AdamState,
    pub rng: ChaCha8Rng,
    pub decisions: u64,
    pub learn_steps: u64,
    pub skipped_updates: u64,
    pub nonfinite_streak: u64,
}

/// DQN agent with experience replay and a target network.
#[derive(Debug, Clone)]
pub struct DqnAgent {
    state: AgentState,
    replay: ReplayBuffer,
}

impl DqnAgent {
    /// `planned_decisions` sets the length of the epsilon decay.
    pub fn new(
        config: AgentConfig,
        scaler: ObsScaler,
        n_actions: usize,
        planned_decisions: u64,
        seed: u64,
    ) -> Result<Self> {
        config.validate()?;
        if n_actions == 0 || scaler.dim() == 0 {
            return Err(RlError::Config("observation and action spaces must be non-empty".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let online = config.build_net(scaler.dim(), n_actions, rng.gen())?;
        let target = online.clone();
        let decay = ((planned_decisions as f64 * config.eps_decay_fraction).round() as u64).max(1);
        let schedule = EpsilonSchedule::new(config.eps_start, config.eps_end, decay)?;
        let adam = AdamState::new(online.params().len(), config.adam);
        let replay = ReplayBuffer::new(config.replay_capacity)?;
        Ok(Self {
            state: AgentState {
                config,
                scaler,
                n_actions,
                schedule,
                online,
                target,
                adam,
                rng,
                decisions: 0,
                learn_steps: 0,
                skipped_updates: 0,
                nonfinite_streak: 0,
            },
            replay,
        })
    }

    /// Restores an agent with an empty replay buffer.
    pub fn from_state(state: AgentState) -> Result<Self> {
        state.config.validate()?;
        let st = &state;
        if st.online.input_dim() != st.scaler.dim()
            || st.online.n_actions() != st.n_actions
            || !st.online.same_shape(&st.target)
            || st.adam.m.len() != st.online.params().len()
        {
            return Err(RlError::Config("agent state is internally inconsistent".into()));
        }
        let replay = ReplayBuffer::new(state.config.replay_capacity)?;
        Ok(Self { state, replay })
    }

    pub fn state(&self) -> &AgentState {
        &self.state
    }

    pub fn into_state(self) -> AgentState {
        self.state
    }

    pub fn config(&self) -> &AgentConfig {
        &self.state.config
    }

    pub fn online(&self) -> &QNet {
        &self.state.online
    }

    pub fn target(&self) -> &QNet {
        &self.state.target
    }

    pub fn replay(&self) -> &ReplayBuffer {
        &self.replay
    }

    pub fn decisions(&self) -> u64 {
        self.state.decisions
    }

    pub fn learn_steps(&self) -> u64 {
        self.state.learn_steps
    }

    pub fn skipped_updates(&self) -> u64 {
        self.state.skipped_updates
    }

    /// Consecutive learner steps that ended in a non-finite loss.
    pub fn nonfinite_streak(&self) -> u64 {
        self.state.nonfinite_streak
    }

    pub fn epsilon(&self) -> f64 {
        self.state.schedule.value(self.state.decisions)
    }

    pub fn q_values(&self, obs: &[f64]) -> Result<Vec<f64>> {
        let x = self.state.scaler.apply(obs)?;
        Ok(self.state.online.q_values(&x)?)
    }

    /// Epsilon-greedy action; advances the decision counter.
    pub fn act(&mut self, obs: &[f64]) -> Result<usize> {
        let q = self.q_values(obs)?;
        let eps = self.epsilon();
        let a = select_action(&q, eps, &mut self.state.rng)?;
        self.state.decisions += 1;
        Ok(a)
    }

    /// Greedy action; touches no state.
    pub fn greedy(&self, obs: &[f64]) -> Result<usize> {
        Ok(argmax(&self.q_values(obs)?))
    }

    /// Stores a transition. `terminal` marks a true terminal; `time_limit`
    /// marks an episode cut that only bootstraps when configured to.
    pub fn remember(
        &mut self,
        obs: &[f64],
        action: usize,
        reward: f64,
        next_obs: &[f64],
        terminal: bool,
        time_limit: bool,
    ) -> Result<()> {
        let done = terminal || (time_limit && self.state.config.time_limit_terminal);
        let t = Transition::new(
            self.state.scaler.apply(obs)?,
            action,
            reward,
            self.state.scaler.apply(next_obs)?,
            done,
            self.state.config.gamma,
        );
        t.validate(Some(self.state.n_actions))?;
        self.replay.push(t);
        Ok(())
    }

    /// One mini-batch gradient step followed by the configured target update.
    pub fn learn(&mut self) -> Result<LearnOutcome> {
        let st = &mut self.state;
        if self.replay.len() < st.config.learn_start.max(1) {
            return Ok(LearnOutcome::Waiting);
        }
        let batch = self.replay.sample_batch(st.config.batch_size, &mut st.rng)?;
        let y = if st.config.variant.double_target() {
            td_target_double(&batch, &st.online, &st.target)?
        } else {
            td_target_vanilla(&batch, &st.target)?
        };
        st.learn_steps += 1;
        let stepped = q_loss_and_grad(&batch, &y, &st.online, Some(st.config.grad_clip)).and_then(
            |(loss, grad)| {
                let mut trial = st.online.params().to_vec();
                adam_step(&mut trial, &grad, &mut st.adam)?;
                if trial.iter().any(|p| !p.is_finite()) {
                    return Err(RlError::Numeric("non-finite parameters".into()));
                }
                st.online.params_mut().copy_from_slice(&trial);
                Ok(loss)
            },
        );
        let outcome = match stepped {
            Ok(loss) => {
                st.nonfinite_streak = 0;
                LearnOutcome::Updated { loss }
            }
            Err(RlError::Numeric(msg)) => {
                log::warn!("skipped learner step {}: {msg}", st.learn_steps);
                st.skipped_updates += 1;
                st.nonfinite_streak += 1;
                LearnOutcome::Skipped
            }
            Err(e) => return Err(e),
        };
        match st.config.target_update {
            TargetUpdate::Hard { interval } => {
                if st.learn_steps.is_multiple_of(interval) {
                    hard_update(&mut st.target, &st.online)?;
                }
            }
            TargetUpdate::Soft { tau } => soft_update(&mut st.target, &st.online, tau)?,
        }
        Ok(outcome)
    }
}
