use ndarray::linalg::general_mat_mul;
use ndarray::{ArrayView2, ArrayViewMut2};
use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_finite, Activation, LayerSpec, NnError, Result};

/// A dense feed-forward network with its parameters stored as one flat vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseNet {
    layers: Vec<LayerSpec>,
    params: Vec<f64>,
    seed: u64,
}

/// Activations recorded by a batched forward pass, consumed by the backward pass.
#[derive(Debug, Clone)]
pub struct Tape {
    batch: usize,
    input: Vec<f64>,
    pre: Vec<Vec<f64>>,
    post: Vec<Vec<f64>>,
}

impl Tape {
    pub fn batch(&self) -> usize {
        self.batch
    }

    /// Final-layer activations, `batch x out_dim` row-major.
    pub fn output(&self) -> &[f64] {
        self.post.last().map(Vec::as_slice).unwrap_or(&self.input)
    }
}

/// Builds a network with weights drawn from `U(-1/sqrt(in_dim), 1/sqrt(in_dim))`
/// and zero biases. The final layer must use the identity activation.
///
/// ```
/// use jetdqn::nn::{init_network, Activation, LayerSpec};
///
/// let net = init_network(
///     &[
///         LayerSpec::new(4, 8, Activation::Relu),
///         LayerSpec::new(8, 2, Activation::Identity),
///     ],
///     7,
/// )
/// .unwrap();
/// assert_eq!(net.params().len(), 4 * 8 + 8 + 8 * 2 + 2);
/// ```
pub fn init_network(layers: &[LayerSpec], seed: u64) -> Result<DenseNet> {
    validate_chain(layers)?;
    if layers.last().map(|l| l.activation) != Some(Activation::Identity) {
        return Err(NnError::Config(
            "output layer must use the identity activation".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(DenseNet {
        layers: layers.to_vec(),
        params: init_params(layers, &mut rng),
        seed,
    })
}

pub(crate) fn validate_chain(layers: &[LayerSpec]) -> Result<()> {
    if layers.is_empty() {
        return Err(NnError::Config("network needs at least one layer".into()));
    }
    for (k, l) in layers.iter().enumerate() {
        if l.in_dim == 0 || l.out_dim == 0 {
            return Err(NnError::Config(format!("layer {k} has a zero dimension")));
        }
    }
    for (k, pair) in layers.windows(2).enumerate() {
        if pair[0].out_dim != pair[1].in_dim {
            return Err(NnError::Config(format!(
                "layer {} outputs {} values but layer {} expects {}",
                k,
                pair[0].out_dim,
                k + 1,
                pair[1].in_dim
            )));
        }
    }
    Ok(())
}

pub(crate) fn init_params(layers: &[LayerSpec], rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut params = Vec::with_capacity(layers.iter().map(LayerSpec::param_count).sum());
    for l in layers {
        let bound = 1.0 / (l.in_dim as f64).sqrt();
        let dist = Uniform::new_inclusive(-bound, bound);
        params.extend((0..l.in_dim * l.out_dim).map(|_| dist.sample(rng)));
        params.extend(std::iter::repeat_n(0.0, l.out_dim));
    }
    params
}

impl DenseNet {
    /// Builds a network from explicit parameters. Unlike [`init_network`] the
    /// output activation is unrestricted, which is what a shared trunk needs.
    pub fn from_parts(layers: Vec<LayerSpec>, params: Vec<f64>) -> Result<Self> {
        validate_chain(&layers)?;
        let expected: usize = layers.iter().map(LayerSpec::param_count).sum();
        if params.len() != expected {
            return Err(NnError::Config(format!(
                "expected {expected} parameters, got {}",
                params.len()
            )));
        }
        Ok(Self {
            layers,
            params,
            seed: 0,
        })
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim
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
        Ok(forward_batch(&self.layers, &self.params, x, 1)?.post.pop().unwrap())
    }

    /// Gradient of `L = dl_dy . forward(x)` with respect to every parameter.
    pub fn backward(&self, x: &[f64], dl_dy: &[f64]) -> Result<Vec<f64>> {
        if dl_dy.len() != self.output_dim() {
            return Err(NnError::Input(format!(
                "expected output gradient of length {}, got {}",
                self.output_dim(),
                dl_dy.len()
            )));
        }
        if x.len() != self.input_dim() {
            return Err(NnError::Input(format!(
                "expected input of length {}, got {}",
                self.input_dim(),
                x.len()
            )));
        }
        let tape = forward_batch(&self.layers, &self.params, x, 1)?;
        let mut grad = vec![0.0; self.params.len()];
        backward_batch(&self.layers, &self.params, &tape, dl_dy, &mut grad, false);
        Ok(grad)
    }

    /// Forward pass over `batch` row-major inputs, keeping activations.
    pub fn forward_batch(&self, xs: &[f64], batch: usize) -> Result<Tape> {
        forward_batch(&self.layers, &self.params, xs, batch)
    }

    /// Parameter gradient for output gradients `dl_dy` (`batch x out_dim`).
    /// The result is summed over the batch.
    pub fn backward_batch(&self, tape: &Tape, dl_dy: &[f64]) -> Result<Vec<f64>> {
        if dl_dy.len() != tape.batch * self.output_dim() {
            return Err(NnError::Input("output gradient has the wrong shape".into()));
        }
        let mut grad = vec![0.0; self.params.len()];
        backward_batch(&self.layers, &self.params, tape, dl_dy, &mut grad, false);
        Ok(grad)
    }
}

pub(crate) fn forward_batch(
    layers: &[LayerSpec],
    params: &[f64],
    xs: &[f64],
    batch: usize,
) -> Result<Tape> {
    let in_dim = layers[0].in_dim;
    if xs.len() != batch * in_dim {
        return Err(NnError::Input(format!(
            "expected {batch} inputs of length {in_dim}, got {} values",
            xs.len()
        )));
    }
    let mut pre = Vec::with_capacity(layers.len());
    let mut post: Vec<Vec<f64>> = Vec::with_capacity(layers.len());
    let mut offset = 0;
    for l in layers {
        let (w, b) = layer_params(params, offset, l);
        offset += l.param_count();
        let input = post.last().map(Vec::as_slice).unwrap_or(xs);
        let mut z = vec![0.0; batch * l.out_dim];
        {
            let x = ArrayView2::from_shape((batch, l.in_dim), input).unwrap();
            let w = ArrayView2::from_shape((l.out_dim, l.in_dim), w).unwrap();
            let mut zv = ArrayViewMut2::from_shape((batch, l.out_dim), &mut z).unwrap();
            general_mat_mul(1.0, &x, &w.t(), 0.0, &mut zv);
        }
        for row in z.chunks_exact_mut(l.out_dim) {
            for (zi, bi) in row.iter_mut().zip(b) {
                *zi += bi;
            }
        }
        let a = match l.activation {
            Activation::Identity => z.clone(),
            act => z.iter().map(|&v| act.apply(v)).collect(),
        };
        pre.push(z);
        post.push(a);
    }
    Ok(Tape {
        batch,
        input: xs.to_vec(),
        pre,
        post,
    })
}

/// Writes the batch-summed parameter gradient into `grad` (same layout as
/// `params`). When `want_input_grad` is set the gradient with respect to the
/// inputs is returned as well.
pub(crate) fn backward_batch(
    layers: &[LayerSpec],
    params: &[f64],
    tape: &Tape,
    dl_dy: &[f64],
    grad: &mut [f64],
    want_input_grad: bool,
) -> Option<Vec<f64>> {
    let batch = tape.batch;
    let mut offsets = Vec::with_capacity(layers.len());
    let mut off = 0;
    for l in layers {
        offsets.push(off);
        off += l.param_count();
    }
    let mut delta = dl_dy.to_vec();
    for k in (0..layers.len()).rev() {
        let l = &layers[k];
        if l.activation != Activation::Identity {
            for (d, &z) in delta.iter_mut().zip(&tape.pre[k]) {
                *d *= l.activation.derivative(z);
            }
        }
        let input: &[f64] = if k == 0 { &tape.input } else { &tape.post[k - 1] };
        let (w, _) = layer_params(params, offsets[k], l);
        let (gw, gb) = grad[offsets[k]..offsets[k] + l.param_count()].split_at_mut(l.in_dim * l.out_dim);
        {
            let dz = ArrayView2::from_shape((batch, l.out_dim), &delta).unwrap();
            let x = ArrayView2::from_shape((batch, l.in_dim), input).unwrap();
            let mut gwv = ArrayViewMut2::from_shape((l.out_dim, l.in_dim), gw).unwrap();
            general_mat_mul(1.0, &dz.t(), &x, 0.0, &mut gwv);
        }
        gb.iter_mut().for_each(|g| *g = 0.0);
        for row in delta.chunks_exact(l.out_dim) {
            for (g, d) in gb.iter_mut().zip(row) {
                *g += d;
            }
        }
        if k > 0 || want_input_grad {
            let mut next = vec![0.0; batch * l.in_dim];
            {
                let dz = ArrayView2::from_shape((batch, l.out_dim), &delta).unwrap();
                let w = ArrayView2::from_shape((l.out_dim, l.in_dim), w).unwrap();
                let mut nv = ArrayViewMut2::from_shape((batch, l.in_dim), &mut next).unwrap();
                general_mat_mul(1.0, &dz, &w, 0.0, &mut nv);
            }
            delta = next;
        }
    }
    want_input_grad.then_some(delta)
}

fn layer_params<'a>(params: &'a [f64], offset: usize, l: &LayerSpec) -> (&'a [f64], &'a [f64]) {
    let nw = l.in_dim * l.out_dim;
    (
        &params[offset..offset + nw],
        &params[offset + nw..offset + nw + l.out_dim],
    )
}
