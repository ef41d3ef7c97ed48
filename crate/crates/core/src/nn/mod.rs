//! Small dense feed-forward networks used as Q-function approximators.
//!
//! Everything here works on flat `f64` parameter vectors so that optimizers,
//! target-network updates and checkpoints can treat any network uniformly.
//! Within a flat vector each layer contributes its weight matrix (row-major,
//! `out_dim x in_dim`) followed by its bias vector, layers in order.

mod adam;
mod check;
mod dense;
mod dueling;
mod qnet;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use check::{finite_difference_gradient, max_relative_error, Parameterized};
pub use dense::{init_network, DenseNet, Tape};
pub use dueling::{dueling_combine, DuelingHead, DuelingSpec};
pub use qnet::{clip_global_norm, QNet};

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum NnError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("input error: {0}")]
    Input(String),
    #[error("numeric error: {0}")]
    Numeric(String),
}

pub type Result<T, E = NnError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Identity => z,
        }
    }

    /// Derivative evaluated at the pre-activation `z`. ReLU uses 0 at the kink.
    #[inline]
    fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub in_dim: usize,
    pub out_dim: usize,
    pub activation: Activation,
}

impl LayerSpec {
    pub fn new(in_dim: usize, out_dim: usize, activation: Activation) -> Self {
        Self {
            in_dim,
            out_dim,
            activation,
        }
    }

    pub fn param_count(&self) -> usize {
        self.in_dim * self.out_dim + self.out_dim
    }
}

/// Builds `[input -> hidden... -> output]` with ReLU hidden layers and an
/// identity output layer.
pub fn mlp_layers(input: usize, hidden: &[usize], output: usize) -> Vec<LayerSpec> {
    let mut layers = Vec::with_capacity(hidden.len() + 1);
    let mut prev = input;
    for &h in hidden {
        layers.push(LayerSpec::new(prev, h, Activation::Relu));
        prev = h;
    }
    layers.push(LayerSpec::new(prev, output, Activation::Identity));
    layers
}

fn check_finite(xs: &[f64], what: &str) -> Result<()> {
    if xs.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(NnError::Input(format!("{what} contains non-finite values")))
    }
}
