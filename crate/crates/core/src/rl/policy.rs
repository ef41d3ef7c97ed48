use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Result, RlError};

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(q: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in q.iter().enumerate().skip(1) {
        if v > q[best] {
            best = i;
        }
    }
    best
}

/// Epsilon-greedy: greedy with probability `1 - eps`, otherwise uniform.
pub fn select_action<R: Rng + ?Sized>(q: &[f64], eps: f64, rng: &mut R) -> Result<usize> {
    if q.is_empty() {
        return Err(RlError::Input("no action values".into()));
    }
    if q.iter().any(|v| !v.is_finite()) {
        return Err(RlError::Input("non-finite action value".into()));
    }
    if !(0.0..=1.0).contains(&eps) {
        return Err(RlError::Input(format!("epsilon {eps} outside [0, 1]")));
    }
    if eps > 0.0 && rng.gen::<f64>() < eps {
        Ok(rng.gen_range(0..q.len()))
    } else {
        Ok(argmax(q))
    }
}

/// Linear decay from `eps_start` to `eps_end` over `decay_steps`, then constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSchedule {
    pub eps_start: f64,
    pub eps_end: f64,
    pub decay_steps: u64,
}

impl EpsilonSchedule {
    pub fn new(eps_start: f64, eps_end: f64, decay_steps: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eps_start) || !(0.0..=1.0).contains(&eps_end) {
            return Err(RlError::Config("epsilon endpoints must lie in [0, 1]".into()));
        }
        if decay_steps == 0 {
            return Err(RlError::Config("decay_steps must be positive".into()));
        }
        Ok(Self {
            eps_start,
            eps_end,
            decay_steps,
        })
    }

    pub fn value(&self, step: u64) -> f64 {
        let frac = (step as f64 / self.decay_steps as f64).min(1.0);
        self.eps_start + (self.eps_end - self.eps_start) * frac
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn greedy_choices() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..100 {
            assert_eq!(select_action(&[0.1, 0.9], 0.0, &mut rng).unwrap(), 1);
        }
        assert_eq!(select_action(&[0.5, 0.5], 0.0, &mut rng).unwrap(), 0);
        assert_eq!(argmax(&[1.0, 3.0, 3.0, 2.0]), 1);
    }

    #[test]
    fn invalid_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(select_action(&[], 0.1, &mut rng).is_err());
        assert!(select_action(&[f64::NAN], 0.1, &mut rng).is_err());
        assert!(select_action(&[1.0], 1.5, &mut rng).is_err());
    }

    #[test]
    fn full_exploration_is_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let n = 100_000;
        let mut counts = [0usize; 4];
        for _ in 0..n {
            counts[select_action(&[0.0, 1.0, 2.0, 3.0], 1.0, &mut rng).unwrap()] += 1;
        }
        let p = 0.25;
        let mean = n as f64 * p;
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!((c as f64 - mean).abs() < 3.0 * sigma, "{counts:?}");
        }
    }

    #[test]
    fn deterministic_given_rng_state() {
        let draw = || {
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            (0..50)
                .map(|_| select_action(&[0.2, 0.1, 0.3], 0.5, &mut rng).unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(), draw());
    }

    #[test]
    fn schedule_is_linear_then_flat() {
        let s = EpsilonSchedule::new(1.0, 0.05, 100).unwrap();
        assert_eq!(s.value(0), 1.0);
        assert!((s.value(50) - 0.525).abs() < 1e-12);
        assert!((s.value(100) - 0.05).abs() < 1e-12);
        assert!((s.value(10_000) - 0.05).abs() < 1e-12);
        assert!(EpsilonSchedule::new(1.0, 0.05, 0).is_err());
    }
}
