//! Small dense networks with hand-written backpropagation and Adam.
//!
//! Parameters live in one flat vector. Layer `l` stores its weight matrix
//! row-major (`out × in`) followed by its bias. Hidden layers use tanh.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputActivation {
    Tanh,
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    sizes: Vec<usize>,
    output: OutputActivation,
    params: Vec<f64>,
}

/// Post-activation values of every layer, input first.
#[derive(Debug, Clone)]
pub struct Trace {
    acts: Vec<Vec<f64>>,
}

impl Trace {
    pub fn output(&self) -> &[f64] {
        self.acts.last().expect("trace has at least the input layer")
    }
}

/// Four independent partial sums so the loop vectorizes.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    let tail: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

fn param_count(sizes: &[usize]) -> usize {
    sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

impl Mlp {
    /// Glorot-uniform weights, zero biases.
    pub fn new<R: Rng + ?Sized>(
        input: usize,
        hidden_layers: usize,
        hidden_units: usize,
        output: usize,
        activation: OutputActivation,
        rng: &mut R,
    ) -> Result<Self> {
        if input == 0 || output == 0 || (hidden_layers > 0 && hidden_units == 0) {
            return Err(Error::Config("network dimensions must be positive".into()));
        }
        let mut sizes = vec![input];
        sizes.extend(std::iter::repeat_n(hidden_units, hidden_layers));
        sizes.push(output);
        let mut params = Vec::with_capacity(param_count(&sizes));
        for w in sizes.windows(2) {
            let limit = (6.0 / (w[0] + w[1]) as f64).sqrt();
            params.extend((0..w[0] * w[1]).map(|_| rng.random_range(-limit..limit)));
            params.extend(std::iter::repeat_n(0.0, w[1]));
        }
        Ok(Self {
            sizes,
            output: activation,
            params,
        })
    }

    pub fn from_parts(sizes: Vec<usize>, output: OutputActivation, params: Vec<f64>) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::Config(format!("invalid layer sizes {sizes:?}")));
        }
        let expected = param_count(&sizes);
        if params.len() != expected {
            return Err(Error::Shape {
                expected,
                actual: params.len(),
            });
        }
        Ok(Self {
            sizes,
            output,
            params,
        })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().expect("at least two layers")
    }

    pub fn activation(&self) -> OutputActivation {
        self.output
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }

    /// Scales the last layer; zero makes the output constant.
    pub fn scale_output_layer(&mut self, k: f64) {
        let n = self.sizes.len();
        let last = self.sizes[n - 2] * self.sizes[n - 1] + self.sizes[n - 1];
        let start = self.params.len() - last;
        for p in &mut self.params[start..] {
            *p *= k;
        }
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::Shape {
                expected: self.input_dim(),
                actual: x.len(),
            });
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward_traced(x)?.acts.pop().expect("non-empty trace"))
    }

    pub fn forward_traced(&self, x: &[f64]) -> Result<Trace> {
        self.check_input(x)?;
        let mut acts = vec![x.to_vec()];
        let mut offset = 0;
        let layers = self.sizes.len() - 1;
        for l in 0..layers {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let w = &self.params[offset..offset + n_in * n_out];
            let b = &self.params[offset + n_in * n_out..offset + n_in * n_out + n_out];
            let input = &acts[l];
            let last = l + 1 == layers;
            let out: Vec<f64> = (0..n_out)
                .map(|o| {
                    let row = &w[o * n_in..(o + 1) * n_in];
                    let z = b[o] + dot(row, input);
                    if !last || self.output == OutputActivation::Tanh {
                        z.tanh()
                    } else {
                        z
                    }
                })
                .collect();
            acts.push(out);
            offset += n_in * n_out + n_out;
        }
        Ok(Trace { acts })
    }

    /// Adds d(output · grad_out)/d(params) into `grad`.
    pub fn backward(&self, trace: &Trace, grad_out: &[f64], grad: &mut [f64]) {
        debug_assert_eq!(grad.len(), self.params.len());
        let layers = self.sizes.len() - 1;
        let mut offsets = Vec::with_capacity(layers);
        let mut off = 0;
        for l in 0..layers {
            offsets.push(off);
            off += self.sizes[l] * self.sizes[l + 1] + self.sizes[l + 1];
        }
        let mut delta: Vec<f64> = grad_out.to_vec();
        for l in (0..layers).rev() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let out = &trace.acts[l + 1];
            if l + 1 < layers || self.output == OutputActivation::Tanh {
                for (d, y) in delta.iter_mut().zip(out) {
                    *d *= 1.0 - y * y;
                }
            }
            let input = &trace.acts[l];
            let base = offsets[l];
            for o in 0..n_out {
                let d = delta[o];
                if d == 0.0 {
                    continue;
                }
                let row = &mut grad[base + o * n_in..base + (o + 1) * n_in];
                for (g, x) in row.iter_mut().zip(input) {
                    *g += d * x;
                }
                grad[base + n_in * n_out + o] += d;
            }
            if l > 0 {
                let w = &self.params[base..base + n_in * n_out];
                let mut prev = vec![0.0; n_in];
                for o in 0..n_out {
                    let d = delta[o];
                    if d == 0.0 {
                        continue;
                    }
                    for (p, wv) in prev.iter_mut().zip(&w[o * n_in..(o + 1) * n_in]) {
                        *p += d * wv;
                    }
                }
                delta = prev;
            }
        }
    }
}

/// Adam with bias correction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(n: usize, lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: vec![0.0; n],
            v: vec![0.0; n],
        }
    }

    /// Descends along `grad`.
    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t as i32);
        let c2 = 1.0 - self.beta2.powi(self.t as i32);
        for (((p, g), m), v) in params.iter_mut().zip(grad).zip(&mut self.m).zip(&mut self.v) {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            *p -= self.lr * (*m / c1) / ((*v / c2).sqrt() + self.eps);
        }
    }
}
