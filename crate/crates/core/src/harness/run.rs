use std::path::Path;
use std::time::Instant;

use super::metrics::{write_history_csv, write_metrics_csv, write_timing_csv};
use super::{fmt_float, Checkpoint, EpisodeStats, HarnessError, HistoryRow, MetricsRow, Result, RunConfig};
use crate::bridge::{Environment, StepOutcome};
use crate::rl::{DqnAgent, ObsScaler};
use crate::thermal::{in_band, steady_state, EnvConfig, ThermalEnv, ThermalGrid};

/// Consecutive non-finite learner steps tolerated before a run is abandoned.
const MAX_NONFINITE_STREAK: u64 = 100;

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub metrics: Vec<MetricsRow>,
    /// Seconds per episode; kept apart from `metrics`.
    pub wall_clock: Vec<f64>,
    pub checkpoint: Checkpoint,
    pub aborted_episodes: usize,
    pub skipped_updates: u64,
}

impl TrainReport {
    /// Writes `metrics.csv`, `timing.csv` and `checkpoint.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
        write_file(&dir.join("metrics.csv"), |w| write_metrics_csv(w, &self.metrics))?;
        write_file(&dir.join("timing.csv"), |w| write_timing_csv(w, &self.wall_clock))?;
        self.checkpoint.save(&dir.join("checkpoint.json"))
    }
}

pub(crate) fn write_file(
    path: &Path,
    f: impl FnOnce(&mut std::io::BufWriter<std::fs::File>) -> std::io::Result<()>,
) -> Result<()> {
    use std::io::Write;
    let file = std::fs::File::create(path).map_err(|e| HarnessError::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    f(&mut w).and_then(|_| w.flush()).map_err(|e| HarnessError::io(path, e))
}

fn scaler_for<E: Environment + ?Sized>(env: &E) -> Result<ObsScaler> {
    let spec = env.spec();
    spec.validate()?;
    Ok(match (spec.obs_shift, spec.obs_scale) {
        (Some(shift), Some(scale)) => ObsScaler::new(shift, scale)?,
        _ => ObsScaler::identity(spec.obs_dim),
    })
}

/// Trains against any environment. `t_d` and `band` only feed the in-band
/// statistics; the reward comes from the environment.
pub fn train_with_env<E: Environment + ?Sized>(cfg: &RunConfig, env: &mut E) -> Result<TrainReport> {
    cfg.validate()?;
    let spec = env.spec();
    let scaler = scaler_for(env)?;
    let per_episode = spec.max_decisions_per_episode;
    let planned = (cfg.n_episodes * per_episode) as u64;
    let mut agent = DqnAgent::new(cfg.effective_agent(), scaler, spec.n_actions, planned, cfg.seed)?;
    let props = &cfg.env.props;
    let mut metrics = Vec::with_capacity(cfg.n_episodes);
    let mut wall_clock = Vec::with_capacity(cfg.n_episodes);
    let mut aborted_episodes = 0;

    for episode in 0..cfg.n_episodes {
        let started = Instant::now();
        let mut stats = EpisodeStats::new(props.t_d, cfg.env.reward_band);
        let mut aborted = false;
        match env.reset() {
            Ok(mut obs) => loop {
                let action = agent.act(&obs)?;
                let out = match env.step(action) {
                    Ok(out) => out,
                    Err(e) => {
                        log::error!("episode {episode} aborted at decision {}: {e}", stats.decisions());
                        aborted = true;
                        break;
                    }
                };
                agent.remember(&obs, action, out.reward, &out.obs, false, out.done)?;
                agent.learn()?;
                if agent.nonfinite_streak() > MAX_NONFINITE_STREAK {
                    return Err(HarnessError::Aborted(format!(
                        "{} consecutive non-finite losses in episode {episode}",
                        agent.nonfinite_streak()
                    )));
                }
                stats.record(&out);
                if out.done {
                    break;
                }
                obs = out.obs;
            },
            Err(e) => {
                log::error!("episode {episode} aborted at reset: {e}");
                aborted = true;
            }
        }
        aborted_episodes += usize::from(aborted);
        let row = stats.finish(episode, per_episode, agent.epsilon(), aborted);
        log::info!(
            "episode {episode}: normalized reward {:.2}, in band {:.3}, eps {:.3}",
            row.normalized_reward,
            row.in_band_fraction,
            row.epsilon
        );
        metrics.push(row);
        wall_clock.push(started.elapsed().as_secs_f64());
    }
    Ok(TrainReport {
        metrics,
        wall_clock,
        checkpoint: Checkpoint::from_agent(&agent),
        aborted_episodes,
        skipped_updates: agent.skipped_updates(),
    })
}

/// Trains against the thermal environment described by `cfg.env`.
pub fn train(cfg: &RunConfig) -> Result<TrainReport> {
    cfg.validate()?;
    let mut env = ThermalEnv::new(cfg.env.clone())?;
    train_with_env(cfg, &mut env)
}

/// Outcome of a greedy or constant-action rollout.
#[derive(Debug, Clone)]
pub struct EvalReport {
    pub history: Vec<HistoryRow>,
    pub in_band_fraction: f64,
    pub normalized_reward: f64,
    pub mean_t_star: f64,
    /// Steady surface temperature for baselines.
    pub steady_t_surf: Option<f64>,
    /// Temperature field averaged over the rollout.
    pub field: Option<ThermalGrid>,
}

impl EvalReport {
    fn from_history(history: Vec<HistoryRow>, t_d: f64, band: f64) -> Self {
        let n = history.len().max(1) as f64;
        let inside = history.iter().filter(|r| in_band(r.t_surf, t_d, band)).count();
        Self {
            in_band_fraction: inside as f64 / n,
            normalized_reward: 100.0 * history.iter().map(|r| r.reward).sum::<f64>() / n,
            mean_t_star: history.iter().map(|r| r.t_star).sum::<f64>() / n,
            history,
            steady_t_surf: None,
            field: None,
        }
    }

    /// Writes `<stem>.csv`, `<stem>_summary.csv` and, when present,
    /// `<stem>_field.csv` into `dir`.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<()> {
        use std::io::Write;
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
        write_file(&dir.join(format!("{stem}.csv")), |w| write_history_csv(w, &self.history))?;
        write_file(&dir.join(format!("{stem}_summary.csv")), |w| {
            writeln!(w, "key,value")?;
            writeln!(w, "decisions,{}", self.history.len())?;
            writeln!(w, "in_band_fraction,{}", fmt_float(self.in_band_fraction))?;
            writeln!(w, "normalized_reward,{}", fmt_float(self.normalized_reward))?;
            writeln!(w, "mean_t_star,{}", fmt_float(self.mean_t_star))?;
            if let Some(t) = self.steady_t_surf {
                writeln!(w, "steady_t_surf,{}", fmt_float(t))?;
            }
            Ok(())
        })?;
        if let Some(field) = &self.field {
            write_file(&dir.join(format!("{stem}_field.csv")), |w| field.write_csv(w))?;
        }
        Ok(())
    }
}

fn history_row(out: &StepOutcome, t_d: f64) -> HistoryRow {
    let (time, v_jet, t_surf) = match &out.info {
        Some(i) => (i.time, i.v_jet, i.t_surf),
        None => (f64::NAN, f64::NAN, f64::NAN),
    };
    HistoryRow {
        time,
        v_jet,
        t_surf,
        t_star: t_surf / t_d,
        reward: out.reward,
    }
}

/// Greedy rollout of one full episode. The agent is borrowed immutably, so
/// neither its replay buffer nor its counters change.
pub fn evaluate_with_env<E: Environment + ?Sized>(
    agent: &DqnAgent,
    env: &mut E,
    env_cfg: &EnvConfig,
) -> Result<EvalReport> {
    let spec = env.spec();
    let st = agent.state();
    if spec.obs_dim != st.scaler.dim() || spec.n_actions != st.n_actions {
        return Err(HarnessError::Config(format!(
            "checkpoint expects {} observations and {} actions, environment has {} and {}",
            st.scaler.dim(),
            st.n_actions,
            spec.obs_dim,
            spec.n_actions
        )));
    }
    let t_d = env_cfg.props.t_d;
    let mut obs = env.reset()?;
    let mut history = Vec::with_capacity(spec.max_decisions_per_episode);
    loop {
        let out = env.step(agent.greedy(&obs)?)?;
        history.push(history_row(&out, t_d));
        if out.done {
            break;
        }
        obs = out.obs;
    }
    Ok(EvalReport::from_history(history, t_d, env_cfg.reward_band))
}

fn eval_env(cfg: &RunConfig) -> Result<ThermalEnv> {
    cfg.validate()?;
    let mut env_cfg = cfg.env.clone();
    env_cfg.episode_duration = cfg.eval_duration;
    Ok(ThermalEnv::new(env_cfg)?)
}

/// Greedy evaluation over `cfg.eval_duration` seconds, including the
/// time-averaged temperature field.
pub fn evaluate(ckpt: &Checkpoint, cfg: &RunConfig) -> Result<EvalReport> {
    let mut env = eval_env(cfg)?;
    let agent = ckpt.clone().into_agent()?;
    let env_cfg = env.config().clone();
    let mut report = evaluate_with_env(&agent, &mut env, &env_cfg)?;
    report.field = Some(env.time_averaged_field());
    Ok(report)
}

/// Holds action `level` for `cfg.eval_duration` seconds and also reports
/// the steady surface temperature at that velocity.
pub fn run_baseline(level: usize, cfg: &RunConfig) -> Result<EvalReport> {
    let mut env = eval_env(cfg)?;
    let v = env
        .action_velocity(level)
        .ok_or_else(|| HarnessError::Config(format!("level {level} outside [0, {})", env.n_actions())))?;
    let env_cfg = env.config().clone();
    let t_d = env_cfg.props.t_d;
    env.reset();
    let mut history = Vec::new();
    loop {
        let out = Environment::step(&mut env, level)?;
        history.push(history_row(&out, t_d));
        if out.done {
            break;
        }
    }
    let mut report = EvalReport::from_history(history, t_d, env_cfg.reward_band);
    let mut calibrated = env_cfg;
    calibrated.props.q_flux = env.q_flux();
    report.steady_t_surf = Some(steady_state(&calibrated, v)?.t_surf);
    report.field = Some(env.time_averaged_field());
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rl::Preset;

    pub(crate) fn tiny_config() -> RunConfig {
        let mut cfg = RunConfig {
            n_episodes: 3,
            eval_duration: 1.0,
            ..RunConfig::default()
        };
        cfg.env.nx = 24;
        cfg.env.ny = 12;
        cfg.env.episode_duration = 2.0;
        cfg.agent.hidden = vec![16, 16];
        cfg.agent.stream_hidden = 8;
        cfg.agent.batch_size = 8;
        cfg.agent.learn_start = 10;
        cfg
    }

    #[test]
    fn zero_episodes_gives_untrained_checkpoint() {
        let mut cfg = tiny_config();
        cfg.n_episodes = 0;
        let report = train(&cfg).unwrap();
        assert!(report.metrics.is_empty());
        let agent = report.checkpoint.into_agent().unwrap();
        assert_eq!(agent.learn_steps(), 0);
        assert_eq!(agent.decisions(), 0);
    }

    #[test]
    fn training_is_deterministic_per_seed() {
        let cfg = tiny_config();
        let a = train(&cfg).unwrap();
        let b = train(&cfg).unwrap();
        assert_eq!(a.metrics, b.metrics);
        assert_eq!(a.checkpoint.to_bytes(), b.checkpoint.to_bytes());
        let mut other = cfg.clone();
        other.seed = 1;
        assert_ne!(train(&other).unwrap().checkpoint, a.checkpoint);
    }

    #[test]
    fn metrics_rows_are_consistent() {
        let report = train(&tiny_config()).unwrap();
        assert_eq!(report.metrics.len(), 3);
        assert_eq!(report.wall_clock.len(), 3);
        for row in &report.metrics {
            assert_eq!(row.decisions, 20);
            assert!((0.0..=1.0).contains(&row.in_band_fraction));
            assert!(row.normalized_reward <= 100.0);
            assert!((row.normalized_reward - 100.0 * row.total_reward / 20.0).abs() < 1e-12);
            assert!(!row.aborted);
        }
    }

    #[test]
    fn evaluation_is_greedy_and_side_effect_free() {
        let cfg = tiny_config();
        let report = train(&cfg).unwrap();
        let agent = report.checkpoint.clone().into_agent().unwrap();
        let before = agent.state().clone();
        let mut env = ThermalEnv::new(cfg.env.clone()).unwrap();
        let a = evaluate_with_env(&agent, &mut env, &cfg.env).unwrap();
        let b = evaluate_with_env(&agent, &mut env, &cfg.env).unwrap();
        assert_eq!(a.history, b.history);
        assert_eq!(agent.state(), &before);
        assert_eq!(agent.replay().len(), 0);
        let full = evaluate(&report.checkpoint, &cfg).unwrap();
        assert_eq!(full.history.len(), 10);
        for r in &full.history {
            assert_eq!(r.t_star, r.t_surf / 303.0);
        }
        assert!((0.0..=1.0).contains(&full.in_band_fraction));
        assert!(full.field.is_some());
    }

    #[test]
    fn evaluation_rejects_mismatched_env() {
        let mut cfg = tiny_config();
        cfg.n_episodes = 0;
        let ckpt = train(&cfg).unwrap().checkpoint;
        cfg.env.n_probes = 3;
        assert!(matches!(evaluate(&ckpt, &cfg), Err(HarnessError::Config(_))));
    }

    #[test]
    fn baseline_holds_its_level() {
        let mut cfg = tiny_config();
        cfg.env.nx = 96;
        cfg.env.ny = 48;
        let low = run_baseline(0, &cfg).unwrap();
        assert!(low.history.iter().all(|r| r.v_jet == 0.1));
        assert!(low.steady_t_surf.unwrap() > 303.0);
        let high = run_baseline(9, &cfg).unwrap();
        assert!(high.steady_t_surf.unwrap() < 303.0);
        assert!(run_baseline(10, &cfg).is_err());
    }

    #[test]
    fn reports_write_expected_files() {
        let mut cfg = tiny_config();
        cfg.preset = Some(Preset::Duel);
        let dir = tempfile::tempdir().unwrap();
        let report = train(&cfg).unwrap();
        report.write(dir.path()).unwrap();
        let eval = evaluate(&report.checkpoint, &cfg).unwrap();
        eval.write(dir.path(), "eval").unwrap();
        for f in ["metrics.csv", "timing.csv", "checkpoint.json", "eval.csv", "eval_summary.csv", "eval_field.csv"] {
            assert!(dir.path().join(f).exists(), "{f}");
        }
        let metrics = std::fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
        assert_eq!(metrics.lines().count(), 4);
    }
}
