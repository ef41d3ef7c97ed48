use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dense::{backward_batch, forward_batch, init_params, validate_chain, Tape};
use super::{check_finite, Activation, DenseNet, LayerSpec, NnError, Result};

/// Shape of a dueling network: a shared ReLU trunk feeding a scalar state-value
/// stream and an `n_actions` advantage stream.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DuelingSpec {
    pub input: usize,
    pub trunk_hidden: Vec<usize>,
    pub stream_hidden: usize,
    pub n_actions: usize,
}

/// Dueling Q-network. Parameters are stored flat as `[trunk | value | advantage]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DuelingHead {
    trunk: Vec<LayerSpec>,
    value: Vec<LayerSpec>,
    advantage: Vec<LayerSpec>,
    params: Vec<f64>,
    n_actions: usize,
}

pub(crate) struct DuelingTape {
    trunk: Tape,
    value: Tape,
    advantage: Tape,
    q: Vec<f64>,
}

impl DuelingTape {
    pub fn q(&self) -> &[f64] {
        &self.q
    }
}

/// `Q_a = V + A_a - mean(A)`.
pub fn dueling_combine(value: f64, advantages: &[f64]) -> Vec<f64> {
    let mean = advantages.iter().sum::<f64>() / advantages.len() as f64;
    advantages.iter().map(|a| value + (a - mean)).collect()
}

impl DuelingHead {
    pub fn new(spec: &DuelingSpec, seed: u64) -> Result<Self> {
        if spec.trunk_hidden.is_empty() {
            return Err(NnError::Config("dueling trunk needs a hidden layer".into()));
        }
        if spec.stream_hidden == 0 || spec.n_actions == 0 {
            return Err(NnError::Config("dueling streams need positive widths".into()));
        }
        let mut trunk = Vec::new();
        let mut prev = spec.input;
        for &h in &spec.trunk_hidden {
            trunk.push(LayerSpec::new(prev, h, Activation::Relu));
            prev = h;
        }
        let value = vec![
            LayerSpec::new(prev, spec.stream_hidden, Activation::Relu),
            LayerSpec::new(spec.stream_hidden, 1, Activation::Identity),
        ];
        let advantage = vec![
            LayerSpec::new(prev, spec.stream_hidden, Activation::Relu),
            LayerSpec::new(spec.stream_hidden, spec.n_actions, Activation::Identity),
        ];
        validate_chain(&trunk)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = init_params(&trunk, &mut rng);
        params.extend(init_params(&value, &mut rng));
        params.extend(init_params(&advantage, &mut rng));
        Ok(Self {
            trunk,
            value,
            advantage,
            params,
            n_actions: spec.n_actions,
        })
    }

    /// Assembles a head from three networks; the value stream must output one
    /// value and both streams must consume the trunk output.
    pub fn from_parts(trunk: &DenseNet, value: &DenseNet, advantage: &DenseNet) -> Result<Self> {
        if value.output_dim() != 1 {
            return Err(NnError::Config("value stream must output a scalar".into()));
        }
        if value.input_dim() != trunk.output_dim() || advantage.input_dim() != trunk.output_dim() {
            return Err(NnError::Config(
                "streams must consume the trunk output dimension".into(),
            ));
        }
        let mut params = trunk.params().to_vec();
        params.extend_from_slice(value.params());
        params.extend_from_slice(advantage.params());
        Ok(Self {
            trunk: trunk.layers().to_vec(),
            value: value.layers().to_vec(),
            advantage: advantage.layers().to_vec(),
            params,
            n_actions: advantage.output_dim(),
        })
    }

    fn sizes(&self) -> (usize, usize, usize) {
        let count = |ls: &[LayerSpec]| ls.iter().map(LayerSpec::param_count).sum::<usize>();
        (count(&self.trunk), count(&self.value), count(&self.advantage))
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn input_dim(&self) -> usize {
        self.trunk[0].in_dim
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn trunk_params(&self) -> &[f64] {
        let (t, _, _) = self.sizes();
        &self.params[..t]
    }

    pub fn value_params(&self) -> &[f64] {
        let (t, v, _) = self.sizes();
        &self.params[t..t + v]
    }

    pub fn advantage_params(&self) -> &[f64] {
        let (t, v, _) = self.sizes();
        &self.params[t + v..]
    }

    pub fn advantage_params_mut(&mut self) -> &mut [f64] {
        let (t, v, _) = self.sizes();
        &mut self.params[t + v..]
    }

    /// Mutable view of the advantage stream's output-layer bias.
    pub fn advantage_output_bias_mut(&mut self) -> &mut [f64] {
        let n = self.n_actions;
        let len = self.params.len();
        &mut self.params[len - n..]
    }

    pub fn trunk(&self) -> DenseNet {
        DenseNet::from_parts(self.trunk.clone(), self.trunk_params().to_vec()).unwrap()
    }

    pub fn value_stream(&self) -> DenseNet {
        DenseNet::from_parts(self.value.clone(), self.value_params().to_vec()).unwrap()
    }

    pub fn advantage_stream(&self) -> DenseNet {
        DenseNet::from_parts(self.advantage.clone(), self.advantage_params().to_vec()).unwrap()
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(NnError::Input(format!(
                "expected input of length {}, got {}",
                self.input_dim(),
                x.len()
            )));
        }
        check_finite(x, "input")?;
        Ok(self.forward_batch(x, 1)?.q)
    }

    /// Gradient of `L = dl_dq . forward(x)` with respect to `[xi | eta | psi]`.
    pub fn backward(&self, x: &[f64], dl_dq: &[f64]) -> Result<Vec<f64>> {
        if dl_dq.len() != self.n_actions {
            return Err(NnError::Input(format!(
                "expected output gradient of length {}, got {}",
                self.n_actions,
                dl_dq.len()
            )));
        }
        if x.len() != self.input_dim() {
            return Err(NnError::Input("input has the wrong length".into()));
        }
        let tape = self.forward_batch(x, 1)?;
        Ok(self.backward_batch(&tape, dl_dq))
    }

    pub(crate) fn forward_batch(&self, xs: &[f64], batch: usize) -> Result<DuelingTape> {
        let (t, v, _) = self.sizes();
        let trunk = forward_batch(&self.trunk, &self.params[..t], xs, batch)?;
        let value = forward_batch(&self.value, &self.params[t..t + v], trunk.output(), batch)?;
        let advantage = forward_batch(&self.advantage, &self.params[t + v..], trunk.output(), batch)?;
        let n = self.n_actions;
        let mut q = Vec::with_capacity(batch * n);
        for (vs, adv) in value.output().iter().zip(advantage.output().chunks_exact(n)) {
            q.extend(dueling_combine(*vs, adv));
        }
        Ok(DuelingTape {
            trunk,
            value,
            advantage,
            q,
        })
    }

    pub(crate) fn backward_batch(&self, tape: &DuelingTape, dl_dq: &[f64]) -> Vec<f64> {
        let (t, v, _) = self.sizes();
        let n = self.n_actions;
        let batch = tape.trunk.batch();
        let mut d_value = Vec::with_capacity(batch);
        let mut d_adv = Vec::with_capacity(batch * n);
        for row in dl_dq.chunks_exact(n) {
            let total: f64 = row.iter().sum();
            let mean = total / n as f64;
            d_value.push(total);
            d_adv.extend(row.iter().map(|d| d - mean));
        }
        let mut grad = vec![0.0; self.params.len()];
        let (g_trunk, rest) = grad.split_at_mut(t);
        let (g_value, g_adv) = rest.split_at_mut(v);
        let dh_v = backward_batch(
            &self.value,
            &self.params[t..t + v],
            &tape.value,
            &d_value,
            g_value,
            true,
        )
        .unwrap();
        let dh_a = backward_batch(
            &self.advantage,
            &self.params[t + v..],
            &tape.advantage,
            &d_adv,
            g_adv,
            true,
        )
        .unwrap();
        let dh: Vec<f64> = dh_v.iter().zip(&dh_a).map(|(a, b)| a + b).collect();
        backward_batch(&self.trunk, &self.params[..t], &tape.trunk, &dh, g_trunk, false);
        grad
    }
}
