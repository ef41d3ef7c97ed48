use serde::{Deserialize, Serialize};

use super::{
    BoundaryMode, FluidPlateProps, JetFlowModel, ProbeLayout, Result, ThermalError, ThermalGrid,
    ThermalSolver,
};

/// Width of the rewarded band around `T_d` used by [`reward_fn`], K.
pub const DEFAULT_BAND: f64 = 2.0;

/// `+1` inside the band, otherwise `0.1 - 0.1 |T_surf / T_d - 1|`.
///
/// ```
/// use jetdqn::thermal::reward_fn;
/// assert_eq!(reward_fn(304.0, 303.0), 1.0);
/// assert!((reward_fn(310.0, 303.0) - 0.097690).abs() < 1e-6);
/// ```
pub fn reward_fn(t_surf: f64, t_d: f64) -> f64 {
    reward_with_band(t_surf, t_d, DEFAULT_BAND)
}

pub fn reward_with_band(t_surf: f64, t_d: f64, band: f64) -> f64 {
    if in_band(t_surf, t_d, band) {
        1.0
    } else {
        0.1 - (t_surf / t_d - 1.0).abs() * 0.1
    }
}

pub fn in_band(t_surf: f64, t_d: f64, band: f64) -> bool {
    (t_surf - t_d).abs() < band
}

/// Rule for choosing the plate heat flux.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "target", rename_all = "snake_case", deny_unknown_fields)]
pub enum Calibration {
    /// Use `props.q_flux` as given.
    Off,
    /// Steady `T_surf = T_d` at the velocity halfway through the action range.
    Midpoint,
    /// Steady `T_surf / T_d = t_star` at the slowest jet.
    SlowJet { t_star: f64 },
}

impl Default for Calibration {
    /// The uncontrolled slow-jet level of the reference experiment, 324 K.
    fn default() -> Self {
        Calibration::SlowJet { t_star: 1.07 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvConfig {
    pub props: FluidPlateProps,
    /// How `props.q_flux` is chosen at construction.
    pub calibration: Calibration,
    /// Episode length, s.
    pub episode_duration: f64,
    /// Solver step, s.
    pub dt: f64,
    /// Solver steps per agent decision.
    pub decision_interval: usize,
    pub n_actions: usize,
    /// Slowest and fastest jet velocity as fractions of `v_inf`.
    pub v_min_frac: f64,
    pub v_max_frac: f64,
    pub nx: usize,
    pub ny: usize,
    pub n_probes: usize,
    /// Probe height above the plate, m.
    pub probe_offset: f64,
    /// Wall-jet peak position as a multiple of `d`.
    pub jet_width_over_d: f64,
    /// Near-wall shear layer thickness, m.
    pub bl_thickness: f64,
    /// Half-width of the rewarded band, K.
    pub reward_band: f64,
    pub boundary: BoundaryMode,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            props: FluidPlateProps::default(),
            calibration: Calibration::default(),
            episode_duration: 100.0,
            dt: 0.01,
            decision_interval: 10,
            n_actions: 10,
            v_min_frac: 0.1,
            v_max_frac: 1.0,
            nx: 96,
            ny: 48,
            n_probes: 5,
            probe_offset: 0.001,
            jet_width_over_d: 1.5,
            bl_thickness: 0.002,
            reward_band: DEFAULT_BAND,
            boundary: BoundaryMode::Open,
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(ThermalError::Config(m));
        self.props.validate()?;
        if !(self.dt > 0.0 && self.episode_duration > 0.0) {
            return bad("dt and episode_duration must be positive".into());
        }
        let steps = self.episode_duration / self.dt;
        if (steps - steps.round()).abs() > 1e-9 * steps.max(1.0) {
            return bad(format!("episode_duration / dt = {steps} is not an integer"));
        }
        if self.decision_interval == 0 || !(steps.round() as usize).is_multiple_of(self.decision_interval) {
            return bad("decision_interval must be positive and divide the episode step count".into());
        }
        if self.n_actions < 2 {
            return bad("need at least two actions".into());
        }
        if !(self.v_min_frac > 0.0 && self.v_min_frac < self.v_max_frac) {
            return bad("velocity range must satisfy 0 < v_min_frac < v_max_frac".into());
        }
        if !(self.reward_band > 0.0) {
            return bad("reward_band must be positive".into());
        }
        if !(self.jet_width_over_d > 0.0 && self.bl_thickness > 0.0) {
            return bad("flow shape parameters must be positive".into());
        }
        if let Calibration::SlowJet { t_star } = self.calibration {
            if !(t_star * self.props.t_d > self.props.t_inf) {
                return bad(format!("calibration target T* = {t_star} is not above T_inf"));
            }
        }
        if self.nx < 2 || self.ny < 2 {
            return bad(format!("grid {}x{} is too small", self.nx, self.ny));
        }
        if self.n_probes == 0 {
            return bad("need at least one probe".into());
        }
        let (lx, ly) = self.extent();
        ProbeLayout::evenly_spaced(self.n_probes, self.probe_offset, lx)?.validate(lx, ly)?;
        Ok(())
    }

    /// Domain extent `(lx, ly)`: half the plate by the nozzle height.
    pub fn extent(&self) -> (f64, f64) {
        (0.5 * self.props.plate_len, self.props.height())
    }

    pub fn steps_per_episode(&self) -> usize {
        (self.episode_duration / self.dt).round() as usize
    }

    pub fn decisions_per_episode(&self) -> usize {
        self.steps_per_episode() / self.decision_interval
    }

    /// Evenly spaced jet velocities, m/s.
    pub fn action_velocities(&self) -> Vec<f64> {
        let lo = self.v_min_frac * self.props.v_inf;
        let hi = self.v_max_frac * self.props.v_inf;
        let n = self.n_actions;
        (0..n)
            .map(|a| {
                let f = a as f64 / (n - 1) as f64;
                lo * (1.0 - f) + hi * f
            })
            .collect()
    }

    fn flow(&self, v_jet: f64) -> Result<JetFlowModel> {
        let (lx, ly) = self.extent();
        JetFlowModel::new(v_jet, self.jet_width_over_d * self.props.d, self.bl_thickness, lx, ly)
    }

    fn solver(&self) -> Result<ThermalSolver> {
        ThermalSolver::new(self.nx, self.ny, self.props, self.flow(0.0)?, self.boundary)
    }

    fn fresh_grid(&self) -> Result<ThermalGrid> {
        let (lx, ly) = self.extent();
        ThermalGrid::uniform(self.nx, self.ny, lx, ly, self.props.t_inf)
    }
}

/// Converged constant-velocity state.
#[derive(Debug, Clone)]
pub struct SteadyState {
    pub t_surf: f64,
    /// Simulated time to convergence, s.
    pub time: f64,
    pub grid: ThermalGrid,
}

const STEADY_CHUNK: f64 = 1.0;
const STEADY_TOL: f64 = 1e-7;
const STEADY_MAX_TIME: f64 = 5000.0;

/// Marches from `T_inf` at fixed `v_jet` until the surface temperature moves
/// by less than 1e-7 K per simulated second.
pub fn steady_state(cfg: &EnvConfig, v_jet: f64) -> Result<SteadyState> {
    cfg.validate()?;
    let mut solver = cfg.solver()?;
    let mut grid = cfg.fresh_grid()?;
    let mut last = grid.surface_avg_temperature();
    let mut time = 0.0;
    while time < STEADY_MAX_TIME {
        solver.advance(&mut grid, v_jet, STEADY_CHUNK)?;
        time += STEADY_CHUNK;
        let now = grid.surface_avg_temperature();
        if (now - last).abs() < STEADY_TOL {
            return Ok(SteadyState {
                t_surf: now,
                time,
                grid,
            });
        }
        last = now;
    }
    Err(ThermalError::NoConvergence(format!(
        "surface temperature still moving after {STEADY_MAX_TIME} s at v_jet = {v_jet}"
    )))
}

/// Plate heat flux meeting `cfg.calibration`, or `props.q_flux` when
/// calibration is off. The steady rise above `T_inf` is proportional to
/// `q''`, so one unit-flux solve fixes it; a second solve checks the result
/// lands within 0.5 K.
pub fn calibrate_q_flux(cfg: &EnvConfig) -> Result<f64> {
    let v = cfg.action_velocities();
    let p = &cfg.props;
    let (v_cal, target) = match cfg.calibration {
        Calibration::Off => return Ok(p.q_flux),
        Calibration::Midpoint => (0.5 * (v[0] + v[v.len() - 1]), p.t_d),
        Calibration::SlowJet { t_star } => (v[0], t_star * p.t_d),
    };
    let mut unit = cfg.clone();
    unit.props.q_flux = 1.0;
    let rise = steady_state(&unit, v_cal)?.t_surf - p.t_inf;
    if !(rise > 0.0) {
        return Err(ThermalError::NoConvergence("unit flux produced no temperature rise".into()));
    }
    let q = (target - p.t_inf) / rise;
    let mut check = cfg.clone();
    check.props.q_flux = q;
    let t = steady_state(&check, v_cal)?.t_surf;
    if (t - target).abs() > 0.5 {
        return Err(ThermalError::NoConvergence(format!(
            "calibrated flux {q} gives {t} K instead of {target} K"
        )));
    }
    Ok(q)
}

/// What one decision produced.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalStep {
    pub obs: Vec<f64>,
    pub reward: f64,
    pub done: bool,
    pub t_surf: f64,
    pub v_jet: f64,
    /// Simulated time after the step, s.
    pub time: f64,
}

/// The jet-cooled plate as a control environment.
#[derive(Debug, Clone)]
pub struct ThermalEnv {
    cfg: EnvConfig,
    solver: ThermalSolver,
    grid: ThermalGrid,
    layout: ProbeLayout,
    unit_speeds: Vec<f64>,
    velocities: Vec<f64>,
    v_jet: f64,
    prev_action: usize,
    decisions: usize,
    is_reset: bool,
    field_sum: Vec<f64>,
    field_count: usize,
}

impl ThermalEnv {
    /// Builds the environment, calibrating the plate flux first unless
    /// calibration is off.
    pub fn new(cfg: EnvConfig) -> Result<Self> {
        cfg.validate()?;
        let mut cfg = cfg;
        if cfg.calibration != Calibration::Off {
            cfg.props.q_flux = calibrate_q_flux(&cfg)?;
            cfg.calibration = Calibration::Off;
        }
        let (lx, ly) = cfg.extent();
        let layout = ProbeLayout::evenly_spaced(cfg.n_probes, cfg.probe_offset, lx)?;
        layout.validate(lx, ly)?;
        let solver = cfg.solver()?;
        let grid = cfg.fresh_grid()?;
        let unit_speeds = layout.unit_speeds(&grid, solver.flow())?;
        let velocities = cfg.action_velocities();
        let n = grid.t.len();
        Ok(Self {
            v_jet: velocities[0],
            cfg,
            solver,
            grid,
            layout,
            unit_speeds,
            velocities,
            prev_action: 0,
            decisions: 0,
            is_reset: false,
            field_sum: vec![0.0; n],
            field_count: 0,
        })
    }

    /// Effective configuration; `props.q_flux` holds the flux in use.
    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    pub fn q_flux(&self) -> f64 {
        self.cfg.props.q_flux
    }

    pub fn grid(&self) -> &ThermalGrid {
        &self.grid
    }

    pub fn layout(&self) -> &ProbeLayout {
        &self.layout
    }

    pub fn n_actions(&self) -> usize {
        self.cfg.n_actions
    }

    pub fn obs_dim(&self) -> usize {
        2 * self.layout.len() + 1
    }

    pub fn max_decisions(&self) -> usize {
        self.cfg.decisions_per_episode()
    }

    pub fn action_velocity(&self, action: usize) -> Option<f64> {
        self.velocities.get(action).copied()
    }

    pub fn v_jet(&self) -> f64 {
        self.v_jet
    }

    pub fn time(&self) -> f64 {
        (self.decisions * self.cfg.decision_interval) as f64 * self.cfg.dt
    }

    pub fn is_done(&self) -> bool {
        self.decisions >= self.max_decisions()
    }

    pub fn surface_temperature(&self) -> f64 {
        self.grid.surface_avg_temperature()
    }

    /// Suggested `(shift, scale)` bringing each observation entry to order one.
    pub fn obs_scaling_hint(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.layout.len();
        let top = self.unit_speeds.iter().copied().fold(0.0, f64::max) * self.velocities[self.velocities.len() - 1]
            / self.cfg.props.v_inf;
        let half = 0.5 * (self.cfg.n_actions - 1) as f64;
        let mut shift = vec![1.0; n];
        let mut scale = vec![0.02; n];
        shift.extend(vec![0.0; n]);
        scale.extend(vec![if top > 0.0 { top } else { 1.0 }; n]);
        shift.push(half);
        scale.push(half.max(1.0));
        (shift, scale)
    }

    /// `[T_probe / T_d ..., |u|_probe / V_inf ..., previous action]`.
    pub fn observation(&self) -> Vec<f64> {
        let p = &self.cfg.props;
        let mut obs: Vec<f64> = self.layout.temperatures(&self.grid).iter().map(|t| t / p.t_d).collect();
        obs.extend(self.unit_speeds.iter().map(|s| s * self.v_jet / p.v_inf));
        obs.push(self.prev_action as f64);
        obs
    }

    pub fn reset(&mut self) -> Vec<f64> {
        self.grid.fill(self.cfg.props.t_inf);
        self.v_jet = self.velocities[0];
        self.prev_action = 0;
        self.decisions = 0;
        self.is_reset = true;
        self.field_sum.iter_mut().for_each(|v| *v = 0.0);
        self.field_count = 0;
        self.observation()
    }

    pub fn step(&mut self, action: usize) -> Result<ThermalStep> {
        if !self.is_reset {
            return Err(ThermalError::State("step called before reset".into()));
        }
        if self.is_done() {
            return Err(ThermalError::State("episode is over; reset first".into()));
        }
        let v_jet = *self.velocities.get(action).ok_or_else(|| {
            ThermalError::Input(format!("action {action} outside [0, {})", self.cfg.n_actions))
        })?;
        self.v_jet = v_jet;
        for _ in 0..self.cfg.decision_interval {
            self.solver.advance(&mut self.grid, v_jet, self.cfg.dt)?;
        }
        self.prev_action = action;
        self.decisions += 1;
        for (s, t) in self.field_sum.iter_mut().zip(&self.grid.t) {
            *s += t;
        }
        self.field_count += 1;
        let t_surf = self.surface_temperature();
        Ok(ThermalStep {
            obs: self.observation(),
            reward: reward_with_band(t_surf, self.cfg.props.t_d, self.cfg.reward_band),
            done: self.is_done(),
            t_surf,
            v_jet,
            time: self.time(),
        })
    }

    /// Field averaged over the decisions since the last reset.
    pub fn time_averaged_field(&self) -> ThermalGrid {
        let mut g = self.grid.clone();
        if self.field_count > 0 {
            let n = self.field_count as f64;
            for (dst, s) in g.t.iter_mut().zip(&self.field_sum) {
                *dst = s / n;
            }
            g.update_wall(self.cfg.props.q_flux, self.cfg.props.k);
        }
        g
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> EnvConfig {
        EnvConfig {
            nx: 24,
            ny: 12,
            episode_duration: 2.0,
            ..EnvConfig::default()
        }
    }

    #[test]
    fn reward_examples() {
        assert_eq!(reward_fn(304.0, 303.0), 1.0);
        assert_eq!(reward_fn(303.0, 303.0), 1.0);
        assert!((reward_fn(310.0, 303.0) - (0.1 - 7.0 / 303.0 * 0.1)).abs() < 1e-15);
        assert!((reward_fn(310.0, 303.0) - 0.097690).abs() < 1e-6);
        assert!((reward_fn(324.0, 303.0) - 0.093069).abs() < 1e-6);
        assert!(reward_fn(305.0, 303.0) < 1.0);
    }

    #[test]
    fn config_checks() {
        assert!(EnvConfig::default().validate().is_ok());
        assert_eq!(EnvConfig::default().decisions_per_episode(), 1000);
        let v = EnvConfig::default().action_velocities();
        assert_eq!(v.len(), 10);
        assert!((v[0] - 0.1).abs() < 1e-15 && (v[9] - 1.0).abs() < 1e-15);
        let mut c = EnvConfig::default();
        c.decision_interval = 3;
        assert!(c.validate().is_err());
        c = EnvConfig::default();
        c.dt = 0.03;
        assert!(c.validate().is_err());
    }

    #[test]
    fn reset_state() {
        let mut env = ThermalEnv::new(small()).unwrap();
        let obs = env.reset();
        assert_eq!(obs.len(), 11);
        for t in &obs[..5] {
            assert!((t - 288.0 / 303.0).abs() < 1e-12);
        }
        assert_eq!(env.surface_temperature(), 288.0);
        assert_eq!(obs[10], 0.0);
        assert_eq!(env.reset(), obs);
    }

    #[test]
    fn step_protocol() {
        let mut env = ThermalEnv::new(small()).unwrap();
        assert!(matches!(env.step(0), Err(ThermalError::State(_))));
        env.reset();
        assert!(matches!(env.step(10), Err(ThermalError::Input(_))));
        let mut n = 0;
        loop {
            let s = env.step(3).unwrap();
            n += 1;
            assert_eq!(s.reward, reward_fn(s.t_surf, 303.0));
            if s.done {
                break;
            }
        }
        assert_eq!(n, 20);
        assert!(matches!(env.step(0), Err(ThermalError::State(_))));
    }

    #[test]
    fn calibration_brackets_the_setpoint() {
        // the slow-jet bracket needs the default resolution
        for calibration in [Calibration::default(), Calibration::Midpoint] {
            let cfg = EnvConfig {
                calibration,
                ..EnvConfig::default()
            };
            let q = calibrate_q_flux(&cfg).unwrap();
            let mut c = cfg.clone();
            c.props.q_flux = q;
            let v = c.action_velocities();
            let lo = steady_state(&c, v[0]).unwrap().t_surf;
            let hi = steady_state(&c, v[9]).unwrap().t_surf;
            assert!(lo > 303.0 && hi < 303.0, "{lo} {hi}");
            if calibration == Calibration::default() {
                assert!((lo - 1.07 * 303.0).abs() < 0.5);
            }
        }
    }

    #[test]
    fn calibration_off_keeps_flux() {
        let mut cfg = small();
        cfg.calibration = Calibration::Off;
        cfg.props.q_flux = 55.0;
        assert_eq!(calibrate_q_flux(&cfg).unwrap(), 55.0);
        assert_eq!(ThermalEnv::new(cfg).unwrap().q_flux(), 55.0);
    }

    #[test]
    fn calibration_toml_form() {
        let cfg: EnvConfig = toml::from_str("[calibration]\ntarget = \"midpoint\"\n").unwrap();
        assert_eq!(cfg.calibration, Calibration::Midpoint);
        let cfg: EnvConfig = toml::from_str("[calibration]\ntarget = \"slow_jet\"\nt_star = 1.05\n").unwrap();
        assert_eq!(cfg.calibration, Calibration::SlowJet { t_star: 1.05 });
        let mut bad = EnvConfig::default();
        bad.calibration = Calibration::SlowJet { t_star: 0.9 };
        assert!(bad.validate().is_err());
    }
}
