//! Dense tanh networks with exact reverse-mode gradients and Adam.
//!
//! Parameters live in one flat vector, layer by layer: row-major weights
//! (`out x in`) followed by biases. Gradients and optimizer state use the
//! same layout.

use std::io::{Read, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Mlp {
    widths: Vec<usize>,
    params: Vec<f64>,
    version: u64,
}

/// Equality of architecture and parameters; the cache version is ignored.
impl PartialEq for Mlp {
    fn eq(&self, other: &Self) -> bool {
        self.widths == other.widths && self.params == other.params
    }
}

/// Activations recorded by [`Mlp::forward`] for a later backward pass.
#[derive(Debug, Clone)]
pub struct Cache {
    version: u64,
    /// `acts[0]` is the input, `acts[l + 1]` the output of layer `l`.
    acts: Vec<Vec<f64>>,
}

impl Cache {
    pub fn output(&self) -> &[f64] {
        self.acts.last().expect("cache holds at least the input")
    }
}

fn param_count(widths: &[usize]) -> usize {
    widths.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

impl Mlp {
    /// Glorot-uniform weights, zero biases.
    pub fn new<R: Rng + ?Sized>(widths: &[usize], rng: &mut R) -> Self {
        let mut net = Self::zeros(widths);
        let mut offset = 0;
        for w in widths.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for p in &mut net.params[offset..offset + fan_in * fan_out] {
                *p = rng.random_range(-limit..limit);
            }
            offset += fan_in * fan_out + fan_out;
        }
        net
    }

    pub fn zeros(widths: &[usize]) -> Self {
        assert!(
            widths.len() >= 2 && widths.iter().all(|w| *w > 0),
            "bad widths {widths:?}"
        );
        Self {
            widths: widths.to_vec(),
            params: vec![0.0; param_count(widths)],
            version: 0,
        }
    }

    pub fn from_params(widths: &[usize], params: Vec<f64>) -> Result<Self> {
        let mut net = Self::zeros(widths);
        if params.len() != net.params.len() {
            return Err(Error::Shape {
                expected: net.params.len(),
                got: params.len(),
            });
        }
        net.params = params;
        Ok(net)
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn output_dim(&self) -> usize {
        self.widths[self.widths.len() - 1]
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    /// Mutable parameter access; invalidates outstanding caches.
    pub fn params_mut(&mut self) -> &mut [f64] {
        self.version += 1;
        &mut self.params
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    /// (weights, biases) slices of layer `l`.
    pub fn layer(&self, l: usize) -> (&[f64], &[f64]) {
        let offset = param_count(&self.widths[..=l]);
        let (i, o) = (self.widths[l], self.widths[l + 1]);
        (
            &self.params[offset..offset + i * o],
            &self.params[offset + i * o..offset + i * o + o],
        )
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.input_dim() {
            return Err(Error::Shape {
                expected: self.input_dim(),
                got: input.len(),
            });
        }
        Ok(())
    }

    pub fn forward(&self, input: &[f64]) -> Result<Cache> {
        self.check_input(input)?;
        let n_layers = self.widths.len() - 1;
        let mut acts = Vec::with_capacity(n_layers + 1);
        acts.push(input.to_vec());
        let mut offset = 0;
        for l in 0..n_layers {
            let (i, o) = (self.widths[l], self.widths[l + 1]);
            let w = &self.params[offset..offset + i * o];
            let b = &self.params[offset + i * o..offset + i * o + o];
            let x = &acts[l];
            let mut y: Vec<f64> = (0..o)
                .map(|r| b[r] + dot(&w[r * i..(r + 1) * i], x))
                .collect();
            if l + 1 < n_layers {
                y.iter_mut().for_each(|v| *v = v.tanh());
            }
            acts.push(y);
            offset += i * o + o;
        }
        Ok(Cache {
            version: self.version,
            acts,
        })
    }

    /// Output of a single-output network without keeping a cache.
    pub fn eval_scalar(&self, input: &[f64]) -> f64 {
        debug_assert_eq!(self.output_dim(), 1);
        let mut x: Vec<f64> = input.to_vec();
        let n_layers = self.widths.len() - 1;
        let mut offset = 0;
        for l in 0..n_layers {
            let (i, o) = (self.widths[l], self.widths[l + 1]);
            let w = &self.params[offset..offset + i * o];
            let b = &self.params[offset + i * o..offset + i * o + o];
            let last = l + 1 == n_layers;
            x = (0..o)
                .map(|r| {
                    let z = b[r] + dot(&w[r * i..(r + 1) * i], &x);
                    if last {
                        z
                    } else {
                        z.tanh()
                    }
                })
                .collect();
            offset += i * o + o;
        }
        x[0]
    }

    /// Gradients of `output . upstream` into fresh buffers; returns
    /// (parameter gradients, input gradient).
    pub fn backward(&self, cache: &Cache, upstream: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut grads = vec![0.0; self.params.len()];
        let dx = self.backward_accumulate(cache, upstream, &mut grads)?;
        Ok((grads, dx))
    }

    /// Like [`Mlp::backward`] but adds parameter gradients into `grads`.
    pub fn backward_accumulate(
        &self,
        cache: &Cache,
        upstream: &[f64],
        grads: &mut [f64],
    ) -> Result<Vec<f64>> {
        if cache.version != self.version || cache.acts.len() != self.widths.len() {
            return Err(Error::Usage(
                "cache does not belong to this network state".into(),
            ));
        }
        if upstream.len() != self.output_dim() {
            return Err(Error::Shape {
                expected: self.output_dim(),
                got: upstream.len(),
            });
        }
        if grads.len() != self.params.len() {
            return Err(Error::Shape {
                expected: self.params.len(),
                got: grads.len(),
            });
        }
        let n_layers = self.widths.len() - 1;
        let mut offsets = Vec::with_capacity(n_layers);
        let mut offset = 0;
        for l in 0..n_layers {
            offsets.push(offset);
            offset += self.widths[l] * self.widths[l + 1] + self.widths[l + 1];
        }

        // delta = dL/dz for the current layer's pre-activation
        let mut delta = upstream.to_vec();
        for l in (0..n_layers).rev() {
            let (i, o) = (self.widths[l], self.widths[l + 1]);
            let off = offsets[l];
            let x = &cache.acts[l];
            let w = &self.params[off..off + i * o];
            {
                let (gw, gb) = grads[off..off + i * o + o].split_at_mut(i * o);
                for r in 0..o {
                    let d = delta[r];
                    if d != 0.0 {
                        for (g, xv) in gw[r * i..(r + 1) * i].iter_mut().zip(x) {
                            *g += d * xv;
                        }
                    }
                    gb[r] += d;
                }
            }
            let mut dx = vec![0.0; i];
            for r in 0..o {
                let d = delta[r];
                if d != 0.0 {
                    for (g, wv) in dx.iter_mut().zip(&w[r * i..(r + 1) * i]) {
                        *g += d * wv;
                    }
                }
            }
            if l > 0 {
                // x = tanh(z) of the previous layer
                for (g, a) in dx.iter_mut().zip(x) {
                    *g *= 1.0 - a * a;
                }
            }
            delta = dx;
        }
        Ok(delta)
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(MAGIC)?;
        out.write_all(&FORMAT_VERSION.to_le_bytes())?;
        out.write_all(&(self.widths.len() as u32).to_le_bytes())?;
        for w in &self.widths {
            out.write_all(&(*w as u32).to_le_bytes())?;
        }
        out.write_all(&(self.params.len() as u64).to_le_bytes())?;
        for p in &self.params {
            out.write_all(&p.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut input: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        input.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Usage("not a network checkpoint".into()));
        }
        let version = read_u32(&mut input)?;
        if version != FORMAT_VERSION {
            return Err(Error::Usage(format!(
                "unsupported checkpoint version {version}"
            )));
        }
        let n = read_u32(&mut input)? as usize;
        if !(2..=64).contains(&n) {
            return Err(Error::Usage(format!("implausible layer count {n}")));
        }
        let widths = (0..n)
            .map(|_| read_u32(&mut input).map(|w| w as usize))
            .collect::<Result<Vec<_>>>()?;
        if widths.contains(&0) {
            return Err(Error::Usage("zero-width layer in checkpoint".into()));
        }
        let count = {
            let mut b = [0u8; 8];
            input.read_exact(&mut b)?;
            u64::from_le_bytes(b) as usize
        };
        if count != param_count(&widths) {
            return Err(Error::Shape {
                expected: param_count(&widths),
                got: count,
            });
        }
        let mut params = Vec::with_capacity(count);
        let mut b = [0u8; 8];
        for _ in 0..count {
            input.read_exact(&mut b)?;
            params.push(f64::from_le_bytes(b));
        }
        Self::from_params(&widths, params)
    }
}

const MAGIC: &[u8; 4] = b"CFNN";
const FORMAT_VERSION: u32 = 1;

fn read_u32<R: Read>(input: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    input.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    // four accumulators let the compiler vectorize
    let mut acc = [0.0; 4];
    let chunks = a.len() / 4;
    for k in 0..chunks {
        for j in 0..4 {
            acc[j] += a[4 * k + j] * b[4 * k + j];
        }
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for k in 4 * chunks..a.len() {
        s += a[k] * b[k];
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 3e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
}

impl AdamState {
    pub fn new(config: AdamConfig, n_params: usize) -> Self {
        Self {
            config,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            step: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// Bias-corrected Adam update of `params` in place.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::Shape {
                expected: self.m.len(),
                got: if params.len() != self.m.len() {
                    params.len()
                } else {
                    grads.len()
                },
            });
        }
        self.step += 1;
        let AdamConfig {
            lr,
            beta1,
            beta2,
            eps,
        } = self.config;
        let c1 = 1.0 - beta1.powi(self.step as i32);
        let c2 = 1.0 - beta2.powi(self.step as i32);
        for k in 0..params.len() {
            let g = grads[k];
            self.m[k] = beta1 * self.m[k] + (1.0 - beta1) * g;
            self.v[k] = beta2 * self.v[k] + (1.0 - beta2) * g * g;
            let m_hat = self.m[k] / c1;
            let v_hat = self.v[k] / c2;
            params[k] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
        Ok(())
    }
}

/// Worst relative disagreement between backprop and central finite
/// differences (step `h`) of `loss(forward(input))` over all parameters.
///
/// `loss` returns the scalar loss and its gradient with respect to the
/// network output. Relative error is `|a - n| / max(|a|, |n|, floor)`.
pub fn grad_check<L>(net: &Mlp, input: &[f64], loss: L, h: f64) -> Result<f64>
where
    L: Fn(&[f64]) -> (f64, Vec<f64>),
{
    let cache = net.forward(input)?;
    let (_, upstream) = loss(cache.output());
    let (analytic, _) = net.backward(&cache, &upstream)?;
    let mut probe = net.clone();
    let mut worst = 0.0_f64;
    for k in 0..net.num_params() {
        let base = net.params[k];
        probe.params_mut()[k] = base + h;
        let plus = loss(probe.forward(input)?.output()).0;
        probe.params_mut()[k] = base - h;
        let minus = loss(probe.forward(input)?.output()).0;
        probe.params_mut()[k] = base;
        let numeric = (plus - minus) / (2.0 * h);
        worst = worst.max(relative_error(analytic[k], numeric));
    }
    Ok(worst)
}

/// Gradients below this magnitude are compared in absolute terms.
pub const GRAD_CHECK_FLOOR: f64 = 1e-7;

pub fn relative_error(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs()).max(GRAD_CHECK_FLOOR);
    (a - b).abs() / scale
}
