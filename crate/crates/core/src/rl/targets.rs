use crate::nn::{clip_global_norm, QNet};

use super::{argmax, Batch, Result, RlError};

fn check_nets(batch: &Batch, nets: &[&QNet]) -> Result<()> {
    for net in nets {
        batch.check_against(net.input_dim(), net.n_actions())?;
    }
    Ok(())
}

/// `y = r + gamma_next * max_a' Q_target(s', a')`; terminal steps give `y = r`.
pub fn td_target_vanilla(batch: &Batch, target: &QNet) -> Result<Vec<f64>> {
    check_nets(batch, &[target])?;
    if batch.is_empty() {
        return Ok(Vec::new());
    }
    let n_act = target.n_actions();
    let q_next = target.q_batch(&batch.next_states, batch.len())?;
    Ok(q_next
        .chunks_exact(n_act)
        .enumerate()
        .map(|(i, q)| {
            if batch.dones[i] {
                batch.rewards[i]
            } else {
                batch.rewards[i] + batch.gammas[i] * q[argmax(q)]
            }
        })
        .collect())
}

/// Double-DQN target: the online network picks `a'`, the target network scores it.
pub fn td_target_double(batch: &Batch, online: &QNet, target: &QNet) -> Result<Vec<f64>> {
    check_nets(batch, &[online, target])?;
    if batch.is_empty() {
        return Ok(Vec::new());
    }
    let n_act = target.n_actions();
    let q_online = online.q_batch(&batch.next_states, batch.len())?;
    let q_target = target.q_batch(&batch.next_states, batch.len())?;
    Ok(q_online
        .chunks_exact(n_act)
        .zip(q_target.chunks_exact(n_act))
        .enumerate()
        .map(|(i, (qo, qt))| {
            if batch.dones[i] {
                batch.rewards[i]
            } else {
                batch.rewards[i] + batch.gammas[i] * qt[argmax(qo)]
            }
        })
        .collect())
}

/// Mean squared TD error over the batch and its gradient with respect to the
/// online parameters. Targets are constants. When `clip` is set the gradient
/// is rescaled to that global norm.
pub fn q_loss_and_grad(
    batch: &Batch,
    y: &[f64],
    online: &QNet,
    clip: Option<f64>,
) -> Result<(f64, Vec<f64>)> {
    check_nets(batch, &[online])?;
    if y.len() != batch.len() {
        return Err(RlError::Input(format!(
            "{} targets for {} transitions",
            y.len(),
            batch.len()
        )));
    }
    if batch.is_empty() {
        return Ok((0.0, vec![0.0; online.params().len()]));
    }
    let n = batch.len();
    let n_act = online.n_actions();
    let tape = online.forward_batch(&batch.states, n)?;
    let q = tape.q();
    let mut loss = 0.0;
    let mut dq = vec![0.0; n * n_act];
    for i in 0..n {
        let a = batch.actions[i];
        let err = y[i] - q[i * n_act + a];
        loss += err * err;
        dq[i * n_act + a] = -2.0 * err / n as f64;
    }
    loss /= n as f64;
    if !loss.is_finite() {
        return Err(RlError::Numeric(format!("loss is {loss}")));
    }
    let mut grad = online.backward_batch(&tape, &dq)?;
    if let Some(max_norm) = clip {
        clip_global_norm(&mut grad, max_norm);
    }
    Ok((loss, grad))
}

pub fn hard_update(target: &mut QNet, online: &QNet) -> Result<()> {
    if !target.same_shape(online) {
        return Err(RlError::Input("target and online networks differ in shape".into()));
    }
    target.params_mut().copy_from_slice(online.params());
    Ok(())
}

/// `theta_target <- tau * theta_online + (1 - tau) * theta_target`, `tau` in (0, 1].
pub fn soft_update(target: &mut QNet, online: &QNet, tau: f64) -> Result<()> {
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(RlError::Input(format!("tau {tau} outside (0, 1]")));
    }
    if !target.same_shape(online) {
        return Err(RlError::Input("target and online networks differ in shape".into()));
    }
    if tau == 1.0 {
        target.params_mut().copy_from_slice(online.params());
        return Ok(());
    }
    for (t, o) in target.params_mut().iter_mut().zip(online.params()) {
        *t = tau * o + (1.0 - tau) * *t;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{init_network, mlp_layers, Activation, DenseNet, LayerSpec};
    use crate::rl::Transition;

    /// Network that ignores its input and returns fixed Q-values.
    fn constant_net(values: &[f64]) -> QNet {
        let n = values.len();
        let mut params = vec![0.0; n];
        params.extend_from_slice(values);
        QNet::Dense(
            DenseNet::from_parts(vec![LayerSpec::new(1, n, Activation::Identity)], params).unwrap(),
        )
    }

    fn batch_of(ts: &[Transition]) -> Batch {
        Batch::from_transitions(ts).unwrap()
    }

    #[test]
    fn vanilla_target_examples() {
        let target = constant_net(&[0.5, 0.3]);
        let terminal = Transition::new(vec![0.0], 0, 1.0, vec![0.0], true, 0.9);
        let live = Transition::new(vec![0.0], 0, 1.0, vec![0.0], false, 0.9);
        let y = td_target_vanilla(&batch_of(&[terminal, live]), &target).unwrap();
        assert_eq!(y[0], 1.0);
        assert!((y[1] - 1.45).abs() < 1e-12);
    }

    #[test]
    fn double_target_example() {
        let online = constant_net(&[0.2, 0.8]);
        let target = constant_net(&[0.5, 0.3]);
        let live = Transition::new(vec![0.0], 0, 1.0, vec![0.0], false, 0.9);
        let done = Transition::new(vec![0.0], 0, 2.0, vec![0.0], true, 0.9);
        let y = td_target_double(&batch_of(&[live, done]), &online, &target).unwrap();
        assert!((y[0] - 1.27).abs() < 1e-12);
        assert_eq!(y[1], 2.0);
    }

    #[test]
    fn non_terminal_zero_discount_is_rejected() {
        let target = constant_net(&[0.5, 0.3]);
        let b = Batch {
            obs_dim: 1,
            states: vec![0.0],
            actions: vec![0],
            rewards: vec![1.0],
            gammas: vec![0.0],
            next_states: vec![0.0],
            dones: vec![false],
        };
        assert!(matches!(td_target_vanilla(&b, &target), Err(RlError::Input(_))));
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let target = constant_net(&[0.5, 0.3]);
        let t = Transition::new(vec![0.0, 1.0], 0, 1.0, vec![0.0, 1.0], false, 0.9);
        assert!(td_target_vanilla(&batch_of(&[t]), &target).is_err());
    }

    #[test]
    fn loss_zero_when_targets_match() {
        let net = QNet::Dense(init_network(&mlp_layers(2, &[4], 3), 1).unwrap());
        let ts: Vec<Transition> = (0..4)
            .map(|i| Transition::new(vec![i as f64, 0.5], i % 3, 0.0, vec![0.0, 0.0], false, 0.9))
            .collect();
        let b = batch_of(&ts);
        let y: Vec<f64> = ts
            .iter()
            .map(|t| net.q_values(&t.s).unwrap()[t.a])
            .collect();
        let (loss, grad) = q_loss_and_grad(&b, &y, &net, None).unwrap();
        assert_eq!(loss, 0.0);
        assert!(grad.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn loss_hand_value_scalar_net() {
        // Q(s) = w * s + b with w = 2, b = 1; s = 3 -> Q = 7; y = 10 -> loss 9
        let net = QNet::Dense(
            DenseNet::from_parts(vec![LayerSpec::new(1, 1, Activation::Identity)], vec![2.0, 1.0])
                .unwrap(),
        );
        let b = batch_of(&[Transition::new(vec![3.0], 0, 0.0, vec![0.0], true, 0.9)]);
        let (loss, grad) = q_loss_and_grad(&b, &[10.0], &net, None).unwrap();
        assert_eq!(loss, 9.0);
        // dL/dw = -2 (y - Q) s = -18, dL/db = -6
        assert_eq!(grad, vec![-18.0, -6.0]);
    }

    #[test]
    fn clipped_gradient_has_bounded_norm() {
        let net = QNet::Dense(
            DenseNet::from_parts(vec![LayerSpec::new(1, 1, Activation::Identity)], vec![2.0, 1.0])
                .unwrap(),
        );
        let b = batch_of(&[Transition::new(vec![3.0], 0, 0.0, vec![0.0], true, 0.9)]);
        let (_, grad) = q_loss_and_grad(&b, &[10.0], &net, Some(10.0)).unwrap();
        let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        assert!((norm - 10.0).abs() < 1e-12);
    }

    #[test]
    fn soft_update_hand_value_and_limits() {
        let mut target = constant_net(&[0.5]);
        target.params_mut().iter_mut().for_each(|p| *p = 0.5);
        let mut online = target.clone();
        online.params_mut().iter_mut().for_each(|p| *p = 1.5);
        let mut t1 = target.clone();
        soft_update(&mut t1, &online, 0.001).unwrap();
        assert!(t1.params().iter().all(|&p| (p - 0.501).abs() < 1e-15));
        let mut t2 = target.clone();
        soft_update(&mut t2, &online, 1.0).unwrap();
        assert_eq!(t2.params(), online.params());
        assert!(soft_update(&mut t2, &online, 0.0).is_err());
        assert!(soft_update(&mut t2, &online, 1.5).is_err());
        let mut t3 = target.clone();
        soft_update(&mut t3, &online, 1e-12).unwrap();
        for (a, b) in t3.params().iter().zip(target.params()) {
            assert!((a - b).abs() <= 1e-12 * 1.0 + 1e-16);
        }
    }

    #[test]
    fn hard_update_copies_deeply() {
        let mut online = QNet::Dense(init_network(&mlp_layers(2, &[3], 2), 1).unwrap());
        let mut target = QNet::Dense(init_network(&mlp_layers(2, &[3], 2), 2).unwrap());
        hard_update(&mut target, &online).unwrap();
        assert_eq!(target.params(), online.params());
        online.params_mut()[0] += 1.0;
        assert_ne!(target.params(), online.params());
        let other = QNet::Dense(init_network(&mlp_layers(2, &[4], 2), 1).unwrap());
        assert!(hard_update(&mut target, &other).is_err());
    }

    #[test]
    fn soft_update_contracts_geometrically() {
        let online = QNet::Dense(init_network(&mlp_layers(3, &[5], 2), 1).unwrap());
        let mut target = QNet::Dense(init_network(&mlp_layers(3, &[5], 2), 2).unwrap());
        let gap0: Vec<f64> = target.params().iter().zip(online.params()).map(|(t, o)| t - o).collect();
        let tau = 0.05;
        for n in 1..=50 {
            soft_update(&mut target, &online, tau).unwrap();
            let f = (1.0 - tau).powi(n);
            for ((t, o), g) in target.params().iter().zip(online.params()).zip(&gap0) {
                assert!(((t - o) - f * g).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn loss_gradient_ignores_target_network() {
        let online = QNet::Dense(init_network(&mlp_layers(2, &[6], 3), 3).unwrap());
        let mut target = QNet::Dense(init_network(&mlp_layers(2, &[6], 3), 4).unwrap());
        let ts: Vec<Transition> = (0..5)
            .map(|i| Transition::new(vec![0.1 * i as f64, -0.3], i % 3, 0.5, vec![0.2, 0.1 * i as f64], false, 0.9))
            .collect();
        let b = batch_of(&ts);
        let y = td_target_double(&b, &online, &target).unwrap();
        let (_, g0) = q_loss_and_grad(&b, &y, &online, None).unwrap();
        target.params_mut().iter_mut().for_each(|p| *p += 0.37);
        let (_, g1) = q_loss_and_grad(&b, &y, &online, None).unwrap();
        assert_eq!(g0, g1);
    }

    #[test]
    fn loss_gradient_matches_finite_differences() {
        use crate::nn::max_relative_error;
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let mut net = QNet::Dense(init_network(&mlp_layers(2, &[5], 3), 3).unwrap());
        net.params_mut().iter_mut().for_each(|p| *p = rng.gen_range(-1.0..1.0));
        let ts: Vec<Transition> = (0..6)
            .map(|i| Transition::new(vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)], i % 3, 0.0, vec![0.0, 0.0], true, 0.9))
            .collect();
        let b = batch_of(&ts);
        let y: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (_, g) = q_loss_and_grad(&b, &y, &net, None).unwrap();
        let h = 1e-6;
        let fd: Vec<f64> = (0..net.params().len())
            .map(|k| {
                let mut plus = net.clone();
                plus.params_mut()[k] += h;
                let mut minus = net.clone();
                minus.params_mut()[k] -= h;
                let lp = q_loss_and_grad(&b, &y, &plus, None).unwrap().0;
                let lm = q_loss_and_grad(&b, &y, &minus, None).unwrap().0;
                (lp - lm) / (2.0 * h)
            })
            .collect();
        assert!(max_relative_error(&g, &fd) < 1e-4);
    }
}
