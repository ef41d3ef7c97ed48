//! Central finite differences, the reference the analytic gradients are checked against.

use super::{DenseNet, DuelingHead, NnError, QNet, Result};

/// Anything with a flat parameter vector and a forward map.
pub trait Parameterized: Clone {
    fn flat_params_mut(&mut self) -> &mut [f64];
    fn flat_params(&self) -> &[f64];
    fn eval(&self, x: &[f64]) -> Result<Vec<f64>>;
}

impl Parameterized for DenseNet {
    fn flat_params_mut(&mut self) -> &mut [f64] {
        self.params_mut()
    }
    fn flat_params(&self) -> &[f64] {
        self.params()
    }
    fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.forward(x)
    }
}

impl Parameterized for DuelingHead {
    fn flat_params_mut(&mut self) -> &mut [f64] {
        self.params_mut()
    }
    fn flat_params(&self) -> &[f64] {
        self.params()
    }
    fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.forward(x)
    }
}

impl Parameterized for QNet {
    fn flat_params_mut(&mut self) -> &mut [f64] {
        self.params_mut()
    }
    fn flat_params(&self) -> &[f64] {
        self.params()
    }
    fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.q_values(x)
    }
}

/// Central-difference estimate of `d(dl_dy . f(x; params)) / d params` with step `h`.
pub fn finite_difference_gradient<N: Parameterized>(
    net: &N,
    x: &[f64],
    dl_dy: &[f64],
    h: f64,
) -> Result<Vec<f64>> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(NnError::Input(format!("step h must be positive, got {h}")));
    }
    let loss = |n: &N| -> Result<f64> {
        let y = n.eval(x)?;
        if y.len() != dl_dy.len() {
            return Err(NnError::Input("output gradient has the wrong length".into()));
        }
        Ok(y.iter().zip(dl_dy).map(|(a, b)| a * b).sum())
    };
    let mut probe = net.clone();
    let n = net.flat_params().len();
    let mut grad = Vec::with_capacity(n);
    for i in 0..n {
        let orig = net.flat_params()[i];
        probe.flat_params_mut()[i] = orig + h;
        let up = loss(&probe)?;
        probe.flat_params_mut()[i] = orig - h;
        let down = loss(&probe)?;
        probe.flat_params_mut()[i] = orig;
        grad.push((up - down) / (2.0 * h));
    }
    Ok(grad)
}

/// Largest elementwise `|a - b| / max(|a|, |b|, 1e-6)`.
pub fn max_relative_error(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(1e-6))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Activation, LayerSpec};

    #[test]
    fn linear_scalar_net_gradient_is_the_input() {
        let net = DenseNet::from_parts(
            vec![LayerSpec::new(2, 1, Activation::Identity)],
            vec![0.3, -0.7, 0.1],
        )
        .unwrap();
        let x = [1.5, -2.0];
        let fd = finite_difference_gradient(&net, &x, &[1.0], 1e-5).unwrap();
        assert!((fd[0] - 1.5).abs() < 1e-9);
        assert!((fd[1] + 2.0).abs() < 1e-9);
        assert!((fd[2] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn zero_step_is_rejected() {
        let net = DenseNet::from_parts(
            vec![LayerSpec::new(1, 1, Activation::Identity)],
            vec![1.0, 0.0],
        )
        .unwrap();
        assert!(matches!(
            finite_difference_gradient(&net, &[1.0], &[1.0], 0.0),
            Err(NnError::Input(_))
        ));
    }
}
