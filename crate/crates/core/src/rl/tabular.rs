use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Result, RlError};

const VALUE_ITERATION_CAP: usize = 100_000;

/// Dense `n_states x n_actions` action-value table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QTable {
    n_states: usize,
    n_actions: usize,
    values: Vec<f64>,
}

impl QTable {
    pub fn zeros(n_states: usize, n_actions: usize) -> Self {
        Self {
            n_states,
            n_actions,
            values: vec![0.0; n_states * n_actions],
        }
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn get(&self, s: usize, a: usize) -> f64 {
        self.values[s * self.n_actions + a]
    }

    pub fn set(&mut self, s: usize, a: usize, v: f64) {
        self.values[s * self.n_actions + a] = v;
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.values[s * self.n_actions..(s + 1) * self.n_actions]
    }

    pub fn max_row(&self, s: usize) -> f64 {
        self.row(s).iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sup_distance(&self, other: &QTable) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TabularTransition {
    pub s: usize,
    pub a: usize,
    pub r: f64,
    pub s_next: usize,
    pub done: bool,
}

/// Finite MDP with transition kernel `t[s][a][s']` and expected rewards `r[s][a]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabularMDP {
    pub n_states: usize,
    pub n_actions: usize,
    pub t: Vec<Vec<Vec<f64>>>,
    pub r: Vec<Vec<f64>>,
    pub gamma: f64,
}

impl TabularMDP {
    pub fn new(t: Vec<Vec<Vec<f64>>>, r: Vec<Vec<f64>>, gamma: f64) -> Result<Self> {
        let n_states = t.len();
        if n_states == 0 || r.len() != n_states {
            return Err(RlError::Input("kernel and rewards must cover the same states".into()));
        }
        let n_actions = t[0].len();
        if n_actions == 0 {
            return Err(RlError::Input("MDP needs at least one action".into()));
        }
        if !(0.0..=1.0).contains(&gamma) {
            return Err(RlError::Input(format!("gamma {gamma} outside [0, 1]")));
        }
        for (s, (ts, rs)) in t.iter().zip(&r).enumerate() {
            if ts.len() != n_actions || rs.len() != n_actions {
                return Err(RlError::Input(format!("state {s} has the wrong number of actions")));
            }
            for (a, row) in ts.iter().enumerate() {
                if row.len() != n_states || row.iter().any(|&p| !(p >= 0.0)) {
                    return Err(RlError::Input(format!("T[{s}][{a}] is not a distribution")));
                }
                let total: f64 = row.iter().sum();
                if (total - 1.0).abs() > 1e-12 {
                    return Err(RlError::Input(format!("T[{s}][{a}] sums to {total}")));
                }
            }
        }
        Ok(Self {
            n_states,
            n_actions,
            t,
            r,
            gamma,
        })
    }

    /// Draws `s'` from `T[s][a]`; the reward is the expected reward `R[s][a]`.
    pub fn sample<R: Rng + ?Sized>(&self, s: usize, a: usize, rng: &mut R) -> TabularTransition {
        let u: f64 = rng.gen();
        let row = &self.t[s][a];
        let mut acc = 0.0;
        let mut s_next = self.n_states - 1;
        for (i, p) in row.iter().enumerate() {
            acc += p;
            if u < acc {
                s_next = i;
                break;
            }
        }
        TabularTransition {
            s,
            a,
            r: self.r[s][a],
            s_next,
            done: false,
        }
    }

    /// `max_s,a |(B Q)(s, a) - Q(s, a)|` for the Bellman optimality operator `B`.
    pub fn bellman_residual(&self, q: &QTable) -> f64 {
        let bq = self.bellman(q);
        bq.sup_distance(q)
    }

    fn bellman(&self, q: &QTable) -> QTable {
        let maxes: Vec<f64> = (0..self.n_states).map(|s| q.max_row(s)).collect();
        let mut out = QTable::zeros(self.n_states, self.n_actions);
        for s in 0..self.n_states {
            for a in 0..self.n_actions {
                let future: f64 = self.t[s][a].iter().zip(&maxes).map(|(p, m)| p * m).sum();
                out.set(s, a, self.r[s][a] + self.gamma * future);
            }
        }
        out
    }
}

/// One Q-learning step on entry `(s, a)`; terminal transitions do not bootstrap.
pub fn tabular_q_update(q: &mut QTable, t: &TabularTransition, alpha: f64, gamma: f64) -> Result<()> {
    if t.s >= q.n_states || t.s_next >= q.n_states || t.a >= q.n_actions {
        return Err(RlError::Input(format!(
            "transition ({}, {}, {}) outside a {}x{} table",
            t.s, t.a, t.s_next, q.n_states, q.n_actions
        )));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(RlError::Input(format!("alpha {alpha} outside (0, 1]")));
    }
    let bootstrap = if t.done { 0.0 } else { gamma * q.max_row(t.s_next) };
    let old = q.get(t.s, t.a);
    q.set(t.s, t.a, old + alpha * (t.r + bootstrap - old));
    Ok(())
}

/// Q-learning update in expectation over `T` for every entry at once.
pub fn expected_q_sweep(mdp: &TabularMDP, q: &mut QTable, alpha: f64) {
    let bq = mdp.bellman(q);
    for (v, b) in q.values.iter_mut().zip(&bq.values) {
        *v += alpha * (b - *v);
    }
}

/// Iterates the Bellman optimality operator until the residual drops below `tol`.
pub fn value_iteration_oracle(mdp: &TabularMDP, tol: f64) -> Result<QTable> {
    if !(tol > 0.0) {
        return Err(RlError::Input(format!("tolerance {tol} must be positive")));
    }
    let mut q = QTable::zeros(mdp.n_states, mdp.n_actions);
    for _ in 0..VALUE_ITERATION_CAP {
        let next = mdp.bellman(&q);
        let delta = next.sup_distance(&q);
        q = next;
        if delta < tol && mdp.bellman_residual(&q) < tol {
            return Ok(q);
        }
    }
    Err(RlError::Numeric(format!(
        "value iteration did not reach {tol} in {VALUE_ITERATION_CAP} iterations"
    )))
}

/// `sum_k gamma^k r_k`.
pub fn discounted_return(rewards: &[f64], gamma: f64) -> f64 {
    rewards.iter().rev().fold(0.0, |acc, r| r + gamma * acc)
}

/// MDP with Dirichlet(1)-like kernels and rewards uniform in `[-1, 1]`.
pub fn random_mdp<R: Rng + ?Sized>(
    n_states: usize,
    n_actions: usize,
    gamma: f64,
    rng: &mut R,
) -> Result<TabularMDP> {
    let mut t = Vec::with_capacity(n_states);
    let mut r = Vec::with_capacity(n_states);
    for _ in 0..n_states {
        let mut ts = Vec::with_capacity(n_actions);
        let mut rs = Vec::with_capacity(n_actions);
        for _ in 0..n_actions {
            let w: Vec<f64> = (0..n_states).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
            let total: f64 = w.iter().sum();
            let mut row: Vec<f64> = w.iter().map(|x| x / total).collect();
            // push the rounding residue into the largest entry
            let resid = 1.0 - row.iter().sum::<f64>();
            let big = super::argmax(&row);
            row[big] += resid;
            ts.push(row);
            rs.push(rng.gen_range(-1.0..1.0));
        }
        t.push(ts);
        r.push(rs);
    }
    TabularMDP::new(t, r, gamma)
}
