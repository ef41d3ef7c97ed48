use serde::{Deserialize, Serialize};

use super::dense::Tape;
use super::dueling::DuelingTape;
use super::{DenseNet, DuelingHead, NnError, Result};

/// A Q-function approximator: either a plain dense network or a dueling head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum QNet {
    Dense(DenseNet),
    Dueling(DuelingHead),
}

pub(crate) enum QTape {
    Dense(Tape),
    Dueling(DuelingTape),
}

impl QTape {
    /// Q-values, `batch x n_actions` row-major.
    pub fn q(&self) -> &[f64] {
        match self {
            QTape::Dense(t) => t.output(),
            QTape::Dueling(t) => t.q(),
        }
    }
}

impl QNet {
    pub fn input_dim(&self) -> usize {
        match self {
            QNet::Dense(n) => n.input_dim(),
            QNet::Dueling(h) => h.input_dim(),
        }
    }

    pub fn n_actions(&self) -> usize {
        match self {
            QNet::Dense(n) => n.output_dim(),
            QNet::Dueling(h) => h.n_actions(),
        }
    }

    pub fn params(&self) -> &[f64] {
        match self {
            QNet::Dense(n) => n.params(),
            QNet::Dueling(h) => h.params(),
        }
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        match self {
            QNet::Dense(n) => n.params_mut(),
            QNet::Dueling(h) => h.params_mut(),
        }
    }

    pub fn same_shape(&self, other: &QNet) -> bool {
        match (self, other) {
            (QNet::Dense(a), QNet::Dense(b)) => a.layers() == b.layers(),
            (QNet::Dueling(a), QNet::Dueling(b)) => {
                a.params().len() == b.params().len()
                    && a.n_actions() == b.n_actions()
                    && a.input_dim() == b.input_dim()
            }
            _ => false,
        }
    }

    pub fn q_values(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            QNet::Dense(n) => n.forward(x),
            QNet::Dueling(h) => h.forward(x),
        }
    }

    pub fn backward(&self, x: &[f64], dl_dq: &[f64]) -> Result<Vec<f64>> {
        match self {
            QNet::Dense(n) => n.backward(x, dl_dq),
            QNet::Dueling(h) => h.backward(x, dl_dq),
        }
    }

    pub(crate) fn forward_batch(&self, xs: &[f64], batch: usize) -> Result<QTape> {
        match self {
            QNet::Dense(n) => n.forward_batch(xs, batch).map(QTape::Dense),
            QNet::Dueling(h) => h.forward_batch(xs, batch).map(QTape::Dueling),
        }
    }

    pub(crate) fn backward_batch(&self, tape: &QTape, dl_dq: &[f64]) -> Result<Vec<f64>> {
        match (self, tape) {
            (QNet::Dense(n), QTape::Dense(t)) => n.backward_batch(t, dl_dq),
            (QNet::Dueling(h), QTape::Dueling(t)) => Ok(h.backward_batch(t, dl_dq)),
            _ => Err(NnError::Input("tape does not belong to this network".into())),
        }
    }

    /// Q-values for `batch` row-major inputs.
    pub fn q_batch(&self, xs: &[f64], batch: usize) -> Result<Vec<f64>> {
        Ok(match self.forward_batch(xs, batch)? {
            QTape::Dense(t) => t.output().to_vec(),
            QTape::Dueling(t) => t.q().to_vec(),
        })
    }
}

/// Rescales `grad` in place so its Euclidean norm is at most `max_norm`.
/// Returns the norm before clipping.
pub fn clip_global_norm(grad: &mut [f64], max_norm: f64) -> f64 {
    let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm && norm.is_finite() {
        let scale = max_norm / norm;
        grad.iter_mut().for_each(|g| *g *= scale);
    }
    norm
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clipping_caps_the_norm() {
        let mut g = vec![3.0, 4.0];
        assert_eq!(clip_global_norm(&mut g, 1.0), 5.0);
        assert!((g[0] - 0.6).abs() < 1e-15 && (g[1] - 0.8).abs() < 1e-15);
        let mut small = vec![0.1, 0.1];
        clip_global_norm(&mut small, 10.0);
        assert_eq!(small, vec![0.1, 0.1]);
    }
}
