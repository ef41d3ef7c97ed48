//! Surrogate jet-cooled plate: a 2-D advection-diffusion temperature field
//! over a constant-flux plate, driven by a prescribed impinging-jet velocity
//! field whose magnitude is the control input.

mod env;
mod flow;
mod grid;
mod probes;
mod props;
mod solver;

pub use env::{
    calibrate_q_flux, in_band, Calibration, reward_fn, reward_with_band, steady_state, EnvConfig, SteadyState, ThermalEnv,
    ThermalStep, DEFAULT_BAND,
};
pub use flow::JetFlowModel;
pub use grid::ThermalGrid;
pub use probes::{bilinear_sample, ProbeLayout};
pub use props::FluidPlateProps;
pub use solver::{BoundaryMode, ThermalSolver};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum ThermalError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("input error: {0}")]
    Input(String),
    #[error("state error: {0}")]
    State(String),
    #[error("stability error: {0}")]
    Stability(String),
    #[error("did not converge: {0}")]
    NoConvergence(String),
}

pub type Result<T, E = ThermalError> = std::result::Result<T, E>;
