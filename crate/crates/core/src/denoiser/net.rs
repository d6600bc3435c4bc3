use ndarray::{s, Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::diffusion::NoiseSchedule;
use crate::error::{check_dim, Error, Result};
use crate::rng::{self, stream};

pub const DEFAULT_HIDDEN: usize = 128;

const LAYERS: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct DenoiserParams {
    state_dim: usize,
    action_dim: usize,
    hidden: usize,
    steps: usize,
    /// Weights stored `(fan_in, fan_out)`.
    pub(crate) weights: [Array2<f64>; LAYERS],
    pub(crate) biases: [Array1<f64>; LAYERS],
    /// One row per diffusion step; row `k - 1` conditions step `k`.
    pub(crate) emb: Array2<f64>,
}

/// Activations kept from a forward pass for backpropagation.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    /// Layer inputs `h_0..h_3` (`h_0` is the network input).
    inputs: Vec<Array2<f64>>,
    /// Hidden pre-embedding linear outputs.
    linear: Vec<Array2<f64>>,
    /// Hidden post-embedding pre-activations.
    fused: Vec<Array2<f64>>,
    gathered: Array2<f64>,
    pub output: Array2<f64>,
}

impl ForwardTrace {
    /// Post-softplus activations of the three hidden layers.
    pub fn hidden_activations(&self) -> impl Iterator<Item = &Array2<f64>> {
        self.inputs.iter().skip(1)
    }
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl DenoiserParams {
    /// Fan-in scaled uniform weights, zero biases, unit-uniform embeddings.
    pub fn init(state_dim: usize, action_dim: usize, hidden: usize, steps: usize, seed: u64) -> Self {
        assert!(action_dim > 0 && hidden > 0 && steps > 0, "dimensions must be positive");
        let mut r = rng::rng_from(seed, stream::INIT);
        let width = state_dim + action_dim;
        let shapes = [(width, hidden), (hidden, hidden), (hidden, hidden), (hidden, width)];
        let weights = shapes.map(|(fan_in, fan_out)| {
            let bound = 1.0 / (fan_in as f64).sqrt();
            Array2::from_shape_simple_fn((fan_in, fan_out), || r.random_range(-bound..bound))
        });
        let biases = shapes.map(|(_, fan_out)| Array1::zeros(fan_out));
        let emb = Array2::from_shape_simple_fn((steps, hidden), || r.random::<f64>());
        Self { state_dim, action_dim, hidden, steps, weights, biases, emb }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            weights: self.weights.clone().map(|w| Array2::zeros(w.raw_dim())),
            biases: self.biases.clone().map(|b| Array1::zeros(b.raw_dim())),
            emb: Array2::zeros(self.emb.raw_dim()),
            ..*self
        }
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn action_dim(&self) -> usize {
        self.action_dim
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn width(&self) -> usize {
        self.state_dim + self.action_dim
    }

    pub fn weight(&self, layer: usize) -> &Array2<f64> {
        &self.weights[layer]
    }

    pub fn bias(&self, layer: usize) -> &Array1<f64> {
        &self.biases[layer]
    }

    pub fn embedding(&self) -> &Array2<f64> {
        &self.emb
    }

    /// Parameter tensors in checkpoint order: `W1 b1 W2 b2 W3 b3 W4 b4 emb`.
    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out = Vec::with_capacity(2 * LAYERS + 1);
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.push(w.as_slice().expect("standard layout"));
            out.push(b.as_slice().expect("standard layout"));
        }
        out.push(self.emb.as_slice().expect("standard layout"));
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::with_capacity(2 * LAYERS + 1);
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            out.push(w.as_slice_mut().expect("standard layout"));
            out.push(b.as_slice_mut().expect("standard layout"));
        }
        out.push(self.emb.as_slice_mut().expect("standard layout"));
        out
    }

    pub fn num_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }

    fn check_k(&self, k: usize) -> Result<()> {
        if k == 0 || k > self.steps {
            Err(Error::StepOutOfRange { k, lo: 1, hi: self.steps })
        } else {
            Ok(())
        }
    }

    /// Full-width network output for a single `(state, noisy_action)` at step `k`.
    pub fn forward(&self, state: &[f64], noisy_action: &[f64], k: usize) -> Result<Vec<f64>> {
        check_dim(self.state_dim, state.len())?;
        check_dim(self.action_dim, noisy_action.len())?;
        self.check_k(k)?;
        let mut x = Array2::zeros((1, self.width()));
        for (dst, src) in x.iter_mut().zip(state.iter().chain(noisy_action)) {
            *dst = *src;
        }
        Ok(self.forward_batch(x.view(), &[k])?.into_raw_vec_and_offset().0)
    }

    /// Predicted noise on the action coordinates.
    pub fn predict_noise(&self, state: &[f64], noisy_action: &[f64], k: usize) -> Result<Vec<f64>> {
        let mut out = self.forward(state, noisy_action, k)?;
        Ok(out.split_off(self.state_dim))
    }

    /// Batched forward; row `i` of `x` is evaluated at step `ks[i]`.
    pub fn forward_batch(&self, x: ArrayView2<f64>, ks: &[usize]) -> Result<Array2<f64>> {
        Ok(self.forward_trace(x, ks)?.output)
    }

    pub fn forward_trace(&self, x: ArrayView2<f64>, ks: &[usize]) -> Result<ForwardTrace> {
        check_dim(self.width(), x.ncols())?;
        check_dim(x.nrows(), ks.len())?;
        for &k in ks {
            self.check_k(k)?;
        }
        let mut gathered = Array2::zeros((ks.len(), self.hidden));
        for (mut row, &k) in gathered.rows_mut().into_iter().zip(ks) {
            row.assign(&self.emb.row(k - 1));
        }
        let mut inputs = Vec::with_capacity(LAYERS);
        let mut linear = Vec::with_capacity(LAYERS - 1);
        let mut fused = Vec::with_capacity(LAYERS - 1);
        let mut h = x.to_owned();
        for layer in 0..LAYERS - 1 {
            let u = h.dot(&self.weights[layer]) + &self.biases[layer];
            let v = &u * &gathered;
            let next = v.mapv(softplus);
            inputs.push(h);
            linear.push(u);
            fused.push(v);
            h = next;
        }
        let output = h.dot(&self.weights[LAYERS - 1]) + &self.biases[LAYERS - 1];
        inputs.push(h);
        Ok(ForwardTrace { inputs, linear, fused, gathered, output })
    }

    /// Gradient of `sum(d_output ⊙ output)` with respect to every parameter.
    pub fn backward(&self, trace: &ForwardTrace, ks: &[usize], d_output: ArrayView2<f64>) -> Self {
        let mut grads = self.zeros_like();
        let last = LAYERS - 1;
        grads.weights[last] = trace.inputs[last].t().dot(&d_output);
        grads.biases[last] = d_output.sum_axis(Axis(0));
        let mut dh = d_output.dot(&self.weights[last].t());
        for layer in (0..last).rev() {
            let mut dv = dh;
            Zip::from(&mut dv).and(&trace.fused[layer]).for_each(|d, &v| *d *= sigmoid(v));
            let du = &dv * &trace.gathered;
            let de = &dv * &trace.linear[layer];
            for (row, &k) in de.rows().into_iter().zip(ks) {
                let mut target = grads.emb.row_mut(k - 1);
                target += &row;
            }
            grads.weights[layer] = trace.inputs[layer].t().dot(&du);
            grads.biases[layer] = du.sum_axis(Axis(0));
            dh = if layer > 0 { du.dot(&self.weights[layer].t()) } else { Array2::zeros((0, 0)) };
        }
        grads
    }

    /// Builds the training inputs/targets and returns `(loss, grads)` for
    /// explicit per-record steps and action noise.
    ///
    /// Input row: `(s, sqrt(ab_k) a + sqrt(1 - ab_k) eps)`; target `(0, eps)`;
    /// loss is the mean squared error over every output component.
    pub fn loss_and_grad_with(
        &self,
        states: ArrayView2<f64>,
        actions: ArrayView2<f64>,
        ks: &[usize],
        eps: ArrayView2<f64>,
        sched: &NoiseSchedule,
    ) -> Result<(f64, Self)> {
        let n = states.nrows();
        if n == 0 {
            return Err(Error::Config("empty training batch".into()));
        }
        check_dim(self.state_dim, states.ncols())?;
        check_dim(self.action_dim, actions.ncols())?;
        check_dim(n, actions.nrows())?;
        check_dim(n, eps.nrows())?;
        check_dim(self.action_dim, eps.ncols())?;
        check_dim(n, ks.len())?;
        if sched.steps() != self.steps {
            return Err(Error::Dimension { expected: self.steps, got: sched.steps() });
        }
        let sd = self.state_dim;
        let mut x = Array2::zeros((n, self.width()));
        x.slice_mut(s![.., ..sd]).assign(&states);
        for (i, &k) in ks.iter().enumerate() {
            self.check_k(k)?;
            let ab = sched.alpha_bar(k);
            let (ca, ce) = (ab.sqrt(), (1.0 - ab).sqrt());
            for j in 0..self.action_dim {
                x[[i, sd + j]] = ca * actions[[i, j]] + ce * eps[[i, j]];
            }
        }
        let trace = self.forward_trace(x.view(), ks)?;
        let mut diff = trace.output.clone();
        {
            let mut act = diff.slice_mut(s![.., sd..]);
            act -= &eps;
        }
        let count = (n * self.width()) as f64;
        let loss = diff.iter().map(|d| d * d).sum::<f64>() / count;
        diff.mapv_inplace(|d| 2.0 * d / count);
        let grads = self.backward(&trace, ks, diff.view());
        Ok((loss, grads))
    }

    /// Draws `k ~ U{1..K}` and `eps ~ N(0, I)` per record, then evaluates the loss.
    pub fn loss_and_grad<R: Rng + ?Sized>(
        &self,
        states: ArrayView2<f64>,
        actions: ArrayView2<f64>,
        sched: &NoiseSchedule,
        rng: &mut R,
    ) -> Result<(f64, Self)> {
        let n = states.nrows();
        let mut ks = Vec::with_capacity(n);
        let mut eps = Array2::zeros((n, self.action_dim));
        for mut row in eps.rows_mut() {
            ks.push(rng.random_range(1..=self.steps));
            for e in row.iter_mut() {
                *e = rng.sample(StandardNormal);
            }
        }
        self.loss_and_grad_with(states, actions, &ks, eps.view(), sched)
    }

    pub(crate) fn from_parts(
        state_dim: usize,
        action_dim: usize,
        hidden: usize,
        steps: usize,
        weights: [Array2<f64>; LAYERS],
        biases: [Array1<f64>; LAYERS],
        emb: Array2<f64>,
    ) -> Self {
        Self { state_dim, action_dim, hidden, steps, weights, biases, emb }
    }

    /// Tensor shapes in checkpoint order.
    pub fn tensor_shapes(state_dim: usize, action_dim: usize, hidden: usize, steps: usize) -> Vec<Vec<usize>> {
        let w = state_dim + action_dim;
        vec![
            vec![w, hidden],
            vec![hidden],
            vec![hidden, hidden],
            vec![hidden],
            vec![hidden, hidden],
            vec![hidden],
            vec![hidden, w],
            vec![w],
            vec![steps, hidden],
        ]
    }
}
