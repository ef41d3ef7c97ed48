use serde::{Deserialize, Serialize};

use super::{NnError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps_hat: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps_hat: 1e-8,
        }
    }
}

/// First/second moment estimates for one flat parameter vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps_hat: f64,
}

impl AdamState {
    pub fn new(len: usize, cfg: AdamConfig) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
            lr: cfg.lr,
            beta1: cfg.beta1,
            beta2: cfg.beta2,
            eps_hat: cfg.eps_hat,
        }
    }
}

/// One bias-corrected Adam update.
///
/// A gradient that is exactly zero everywhere leaves `params` untouched (the
/// moments still decay and `t` still advances). Non-finite gradients are
/// rejected without modifying anything.
///
/// ```
/// use jetdqn::nn::{adam_step, AdamConfig, AdamState};
///
/// let mut p = vec![0.0];
/// let mut st = AdamState::new(1, AdamConfig::default());
/// adam_step(&mut p, &[1.0], &mut st).unwrap();
/// assert!((p[0] + 0.001).abs() < 1e-9);
/// assert_eq!(st.t, 1);
/// ```
pub fn adam_step(params: &mut [f64], grads: &[f64], st: &mut AdamState) -> Result<()> {
    if params.len() != grads.len() || st.m.len() != params.len() || st.v.len() != params.len() {
        return Err(NnError::Input(format!(
            "length mismatch: params {}, grads {}, state {}",
            params.len(),
            grads.len(),
            st.m.len()
        )));
    }
    if grads.iter().any(|g| !g.is_finite()) {
        return Err(NnError::Numeric("non-finite gradient".into()));
    }
    st.t += 1;
    let (b1, b2) = (st.beta1, st.beta2);
    let all_zero = grads.iter().all(|&g| g == 0.0);
    let c1 = 1.0 - b1.powi(st.t.min(i32::MAX as u64) as i32);
    let c2 = 1.0 - b2.powi(st.t.min(i32::MAX as u64) as i32);
    for i in 0..params.len() {
        let g = grads[i];
        st.m[i] = b1 * st.m[i] + (1.0 - b1) * g;
        st.v[i] = b2 * st.v[i] + (1.0 - b2) * g * g;
        if !all_zero {
            let m_hat = st.m[i] / c1;
            let v_hat = st.v[i] / c2;
            params[i] -= st.lr * m_hat / (v_hat.sqrt() + st.eps_hat);
        }
    }
    if params.iter().any(|p| !p.is_finite()) {
        return Err(NnError::Numeric("update produced non-finite parameters".into()));
    }
    Ok(())
}
