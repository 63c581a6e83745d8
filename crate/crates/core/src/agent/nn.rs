//! Feed-forward networks with manual backpropagation, plus Adam.
//!
//! Everything is f64 and allocation-light: forward/backward run on whole
//! minibatches as row-major matrix products, which is where the training
//! loop spends its time.

use rand::Rng;
use rand_chacha::ChaCha12Rng;

/// One dense layer, weights row-major `[n_out × n_in]`.
#[derive(Debug, Clone)]
pub struct Dense {
    pub n_in: usize,
    pub n_out: usize,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

/// Multi-layer perceptron with rectified-linear hidden activations and a
/// linear output layer.
#[derive(Debug, Clone)]
pub struct Mlp {
    pub layers: Vec<Dense>,
}

/// Post-activation values per layer for a batch, consumed by backward.
pub struct BatchCache {
    /// `activations[0]` is the input batch; `activations[i]` the output of
    /// layer `i−1` after its activation.
    activations: Vec<Vec<f64>>,
    n_rows: usize,
}

/// Per-layer parameter gradients, same shapes as the network.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub dw: Vec<Vec<f64>>,
    pub db: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(mlp: &Mlp) -> Self {
        Self {
            dw: mlp.layers.iter().map(|l| vec![0.0; l.w.len()]).collect(),
            db: mlp.layers.iter().map(|l| vec![0.0; l.b.len()]).collect(),
        }
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (dw, db) in self.dw.iter().zip(&self.db) {
            out.extend_from_slice(dw);
            out.extend_from_slice(db);
        }
        out
    }

    /// Euclidean norm over all entries.
    pub fn global_norm(&self) -> f64 {
        let mut sq = 0.0;
        for dw in &self.dw {
            sq += dw.iter().map(|g| g * g).sum::<f64>();
        }
        for db in &self.db {
            sq += db.iter().map(|g| g * g).sum::<f64>();
        }
        sq.sqrt()
    }

    pub fn scale(&mut self, factor: f64) {
        for dw in self.dw.iter_mut() {
            for g in dw.iter_mut() {
                *g *= factor;
            }
        }
        for db in self.db.iter_mut() {
            for g in db.iter_mut() {
                *g *= factor;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.dw.iter().all(|dw| dw.iter().all(|g| g.is_finite()))
            && self.db.iter().all(|db| db.iter().all(|g| g.is_finite()))
    }
}

impl Mlp {
    /// He-uniform initialization from a dedicated stream.
    pub fn new(sizes: &[usize], rng: &mut ChaCha12Rng) -> Self {
        let mut layers = Vec::with_capacity(sizes.len() - 1);
        for pair in sizes.windows(2) {
            let (n_in, n_out) = (pair[0], pair[1]);
            let bound = (6.0 / n_in as f64).sqrt();
            let w = (0..n_in * n_out)
                .map(|_| rng.gen_range(-bound..bound))
                .collect();
            layers.push(Dense {
                n_in,
                n_out,
                w,
                b: vec![0.0; n_out],
            });
        }
        Self { layers }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].n_in
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("nonempty").n_out
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![self.input_dim()];
        sizes.extend(self.layers.iter().map(|l| l.n_out));
        sizes
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend_from_slice(&l.w);
            out.extend_from_slice(&l.b);
        }
        out
    }

    pub fn set_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.param_count());
        let mut at = 0;
        for l in self.layers.iter_mut() {
            let nw = l.w.len();
            l.w.copy_from_slice(&flat[at..at + nw]);
            at += nw;
            let nb = l.b.len();
            l.b.copy_from_slice(&flat[at..at + nb]);
            at += nb;
        }
    }

    /// Batched forward pass; `inputs` is row-major `n_rows × input_dim`.
    pub fn forward_batch(&self, inputs: &[f64], n_rows: usize) -> (Vec<f64>, BatchCache) {
        assert_eq!(inputs.len(), n_rows * self.input_dim());
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(inputs.to_vec());
        let n_layers = self.layers.len();
        for (li, layer) in self.layers.iter().enumerate() {
            let x = &activations[li];
            let mut y = vec![0.0f64; n_rows * layer.n_out];
            for r in 0..n_rows {
                let row = &x[r * layer.n_in..(r + 1) * layer.n_in];
                let out = &mut y[r * layer.n_out..(r + 1) * layer.n_out];
                for (o, out_slot) in out.iter_mut().enumerate() {
                    let wrow = &layer.w[o * layer.n_in..(o + 1) * layer.n_in];
                    let mut acc = layer.b[o];
                    for (xi, wi) in row.iter().zip(wrow) {
                        acc += xi * wi;
                    }
                    *out_slot = acc;
                }
            }
            if li + 1 < n_layers {
                for v in y.iter_mut() {
                    if *v < 0.0 {
                        *v = 0.0;
                    }
                }
            }
            activations.push(y);
        }
        let output = activations.last().expect("pushed").clone();
        (output, BatchCache {
            activations,
            n_rows,
        })
    }

    /// Single-row forward without caching, for rollouts.
    pub fn forward_one(&self, input: &[f64]) -> Vec<f64> {
        let n_layers = self.layers.len();
        let mut current = input.to_vec();
        for (li, layer) in self.layers.iter().enumerate() {
            let mut y = vec![0.0f64; layer.n_out];
            for (o, slot) in y.iter_mut().enumerate() {
                let wrow = &layer.w[o * layer.n_in..(o + 1) * layer.n_in];
                let mut acc = layer.b[o];
                for (xi, wi) in current.iter().zip(wrow) {
                    acc += xi * wi;
                }
                *slot = acc;
            }
            if li + 1 < n_layers {
                for v in y.iter_mut() {
                    if *v < 0.0 {
                        *v = 0.0;
                    }
                }
            }
            current = y;
        }
        current
    }

    /// Backpropagates `grad_out` (row-major `n_rows × output_dim`) through
    /// the cached batch; returns parameter gradients summed over rows.
    pub fn backward_batch(&self, cache: &BatchCache, grad_out: &[f64]) -> Gradients {
        let n_rows = cache.n_rows;
        assert_eq!(grad_out.len(), n_rows * self.output_dim());
        let mut grads = Gradients::zeros_like(self);
        let mut delta = grad_out.to_vec();

        for li in (0..self.layers.len()).rev() {
            let layer = &self.layers[li];
            let x = &cache.activations[li];
            let dw = &mut grads.dw[li];
            let db = &mut grads.db[li];
            for r in 0..n_rows {
                let drow = &delta[r * layer.n_out..(r + 1) * layer.n_out];
                let xrow = &x[r * layer.n_in..(r + 1) * layer.n_in];
                for (o, d) in drow.iter().enumerate() {
                    db[o] += d;
                    let wslot = &mut dw[o * layer.n_in..(o + 1) * layer.n_in];
                    for (ws, xi) in wslot.iter_mut().zip(xrow) {
                        *ws += d * xi;
                    }
                }
            }
            if li == 0 {
                break;
            }
            // gradient w.r.t. the layer input, gated by the ReLU mask
            let mut prev = vec![0.0f64; n_rows * layer.n_in];
            for r in 0..n_rows {
                let drow = &delta[r * layer.n_out..(r + 1) * layer.n_out];
                let prow = &mut prev[r * layer.n_in..(r + 1) * layer.n_in];
                for (o, d) in drow.iter().enumerate() {
                    if *d == 0.0 {
                        continue;
                    }
                    let wrow = &layer.w[o * layer.n_in..(o + 1) * layer.n_in];
                    for (ps, wi) in prow.iter_mut().zip(wrow) {
                        *ps += d * wi;
                    }
                }
                let xrow = &cache.activations[li][r * layer.n_in..(r + 1) * layer.n_in];
                for (ps, xi) in prow.iter_mut().zip(xrow) {
                    if *xi <= 0.0 {
                        *ps = 0.0;
                    }
                }
            }
            delta = prev;
        }
        grads
    }

    /// Applies a flat parameter update produced by the optimizer.
    pub fn apply_flat(&mut self, flat: &[f64]) {
        self.set_flat(flat);
    }

    /// Scales the final layer's weights (and biases) in place.
    pub fn scale_output_layer(&mut self, gain: f64) {
        let last = self.layers.last_mut().expect("nonempty");
        for w in last.w.iter_mut() {
            *w *= gain;
        }
        for b in last.b.iter_mut() {
            *b *= gain;
        }
    }
}

/// Adam optimizer over a flat parameter vector.
#[derive(Debug, Clone)]
pub struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Adam {
    pub fn new(n_params: usize) -> Self {
        Self {
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            t: 0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64], lr: f64) {
        assert_eq!(params.len(), self.m.len());
        assert_eq!(grads.len(), self.m.len());
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grads[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grads[i] * grads[i];
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= lr * m_hat / (v_hat.sqrt() + self.epsilon);
        }
    }
}

/// Numerically stable softplus and its derivative (the logistic sigmoid).
pub fn softplus(z: f64) -> f64 {
    z.max(0.0) + (1.0 + (-z.abs()).exp()).ln()
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}
