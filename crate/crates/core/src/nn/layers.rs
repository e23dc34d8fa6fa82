//! Layer variants with batched forward and reverse-mode backward passes.
//!
//! Shapes (batch first):
//! - `Dense`: `[B, in] → [B, out]`
//! - `Conv1d`: `[B, L, C] → [B, L', F]` (channels last)
//! - `GlobalAvgPool1d`: `[B, L, F] → [B, F]`
//! - `Lstm`: `[B, T, C] → [B, units]` (last hidden state)
//! - `Relu`, `Tanh`: elementwise, any shape

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tensor::Tensor;
use crate::error::{Error, Result};

fn glorot<R: Rng + ?Sized>(rng: &mut R, shape: &[usize], fan_in: usize, fan_out: usize) -> Tensor {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    Tensor::from_fn(shape, |_| rng.gen_range(-limit..limit))
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    // Four partial sums let the compiler vectorize the reduction.
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    let tail: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
    (acc[0] + acc[2]) + (acc[1] + acc[3]) + tail
}

#[inline]
fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    /// `[out, in]`
    pub weight: Tensor,
    /// `[out]`
    pub bias: Tensor,
}

impl Dense {
    pub fn new<R: Rng + ?Sized>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        Self {
            weight: glorot(rng, &[outputs, inputs], inputs, outputs),
            bias: Tensor::zeros(&[outputs]),
        }
    }

    pub fn from_parts(weight: Tensor, bias: Tensor) -> Result<Self> {
        if weight.shape().len() != 2 || bias.shape() != [weight.shape()[0]] {
            return Err(Error::Shape(format!(
                "dense weight {:?} incompatible with bias {:?}",
                weight.shape(),
                bias.shape()
            )));
        }
        Ok(Self { weight, bias })
    }

    pub fn inputs(&self) -> usize {
        self.weight.shape()[1]
    }

    pub fn outputs(&self) -> usize {
        self.weight.shape()[0]
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let (nin, nout) = (self.inputs(), self.outputs());
        if x.shape().len() != 2 || x.shape()[1] != nin {
            return Err(Error::Shape(format!(
                "dense layer expects [batch, {nin}], got {:?}",
                x.shape()
            )));
        }
        let batch = x.batch();
        let w = self.weight.data();
        let b = self.bias.data();
        let mut out = Vec::with_capacity(batch * nout);
        for s in 0..batch {
            let xs = x.row(s);
            for o in 0..nout {
                out.push(b[o] + dot(&w[o * nin..(o + 1) * nin], xs));
            }
        }
        Tensor::new(vec![batch, nout], out)
    }

    fn backward(&self, x: &Tensor, gy: &Tensor, grads: &mut [Tensor]) -> Tensor {
        let (nin, nout) = (self.inputs(), self.outputs());
        let w = self.weight.data();
        let mut gx = Tensor::zeros(x.shape());
        let (gw, rest) = grads.split_at_mut(1);
        let gw = gw[0].data_mut();
        let gb = rest[0].data_mut();
        for s in 0..x.batch() {
            let xs = x.row(s);
            let gys = gy.row(s);
            let gxs = &mut gx.data_mut()[s * nin..(s + 1) * nin];
            for o in 0..nout {
                let g = gys[o];
                if g == 0.0 {
                    continue;
                }
                gb[o] += g;
                axpy(&mut gw[o * nin..(o + 1) * nin], g, xs);
                axpy(gxs, g, &w[o * nin..(o + 1) * nin]);
            }
        }
        gx
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Padding {
    Same,
    Valid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conv1d {
    /// `[filters, in_channels, width]`
    pub kernel: Tensor,
    /// `[filters]`
    pub bias: Tensor,
    pub padding: Padding,
}

impl Conv1d {
    pub fn new<R: Rng + ?Sized>(
        in_channels: usize,
        filters: usize,
        width: usize,
        padding: Padding,
        rng: &mut R,
    ) -> Self {
        Self {
            kernel: glorot(
                rng,
                &[filters, in_channels, width],
                in_channels * width,
                filters * width,
            ),
            bias: Tensor::zeros(&[filters]),
            padding,
        }
    }

    pub fn filters(&self) -> usize {
        self.kernel.shape()[0]
    }

    pub fn in_channels(&self) -> usize {
        self.kernel.shape()[1]
    }

    pub fn width(&self) -> usize {
        self.kernel.shape()[2]
    }

    fn left_pad(&self) -> usize {
        match self.padding {
            Padding::Same => (self.width() - 1) / 2,
            Padding::Valid => 0,
        }
    }

    pub fn output_len(&self, len: usize) -> Result<usize> {
        let width = self.width();
        if width > len {
            return Err(Error::Shape(format!(
                "kernel width {width} exceeds input length {len}"
            )));
        }
        Ok(match self.padding {
            Padding::Same => len,
            Padding::Valid => len - width + 1,
        })
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let (nf, nc, width) = (self.filters(), self.in_channels(), self.width());
        if x.shape().len() != 3 || x.shape()[2] != nc {
            return Err(Error::Shape(format!(
                "conv1d expects [batch, length, {nc}], got {:?}",
                x.shape()
            )));
        }
        let (batch, len) = (x.shape()[0], x.shape()[1]);
        let out_len = self.output_len(len)?;
        let pad = self.left_pad() as isize;
        let k = self.kernel.data();
        let bias = self.bias.data();
        let mut out = vec![0.0; batch * out_len * nf];
        for s in 0..batch {
            let xs = x.row(s);
            for t in 0..out_len {
                let dst = &mut out[(s * out_len + t) * nf..(s * out_len + t + 1) * nf];
                dst.copy_from_slice(bias);
                for j in 0..width {
                    let pos = t as isize + j as isize - pad;
                    if pos < 0 || pos >= len as isize {
                        continue;
                    }
                    let xrow = &xs[pos as usize * nc..(pos as usize + 1) * nc];
                    for (f, d) in dst.iter_mut().enumerate() {
                        let kf = &k[f * nc * width..(f + 1) * nc * width];
                        let mut acc = 0.0;
                        for (c, xv) in xrow.iter().enumerate() {
                            acc += kf[c * width + j] * xv;
                        }
                        *d += acc;
                    }
                }
            }
        }
        Tensor::new(vec![batch, out_len, nf], out)
    }

    fn backward(&self, x: &Tensor, gy: &Tensor, grads: &mut [Tensor]) -> Tensor {
        let (nf, nc, width) = (self.filters(), self.in_channels(), self.width());
        let (batch, len) = (x.shape()[0], x.shape()[1]);
        let out_len = gy.shape()[1];
        let pad = self.left_pad() as isize;
        let k = self.kernel.data();
        let mut gx = Tensor::zeros(x.shape());
        let (gk, rest) = grads.split_at_mut(1);
        let gk = gk[0].data_mut();
        let gb = rest[0].data_mut();
        for s in 0..batch {
            let xs = x.row(s);
            let gys = gy.row(s);
            let gxs = &mut gx.data_mut()[s * len * nc..(s + 1) * len * nc];
            for t in 0..out_len {
                let g = &gys[t * nf..(t + 1) * nf];
                for (f, gv) in g.iter().enumerate() {
                    gb[f] += gv;
                }
                for j in 0..width {
                    let pos = t as isize + j as isize - pad;
                    if pos < 0 || pos >= len as isize {
                        continue;
                    }
                    let p = pos as usize;
                    for (f, &gv) in g.iter().enumerate() {
                        if gv == 0.0 {
                            continue;
                        }
                        for c in 0..nc {
                            let ki = f * nc * width + c * width + j;
                            gk[ki] += gv * xs[p * nc + c];
                            gxs[p * nc + c] += gv * k[ki];
                        }
                    }
                }
            }
        }
        gx
    }
}

/// LSTM layer with gate blocks stacked in the order input, forget,
/// candidate, output. Initial hidden and cell states are zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lstm {
    /// Input weights `[4·units, in]`.
    pub w: Tensor,
    /// Recurrent weights `[4·units, units]`.
    pub u: Tensor,
    /// `[4·units]`
    pub b: Tensor,
}

/// Per-timestep activations kept for backpropagation through time.
#[derive(Debug, Clone, Default)]
pub struct LstmTrace {
    /// `[T, 4·units]` post-activation gates (i, f, g, o).
    pub gates: Vec<f64>,
    /// `[T + 1, units]`, index 0 is the zero initial state.
    pub cells: Vec<f64>,
    pub hidden: Vec<f64>,
    /// `[T, units]` values of tanh(c_t).
    pub tanh_cells: Vec<f64>,
}

impl Lstm {
    pub fn new<R: Rng + ?Sized>(inputs: usize, units: usize, rng: &mut R) -> Self {
        let mut b = Tensor::zeros(&[4 * units]);
        b.data_mut()[units..2 * units].iter_mut().for_each(|v| *v = 1.0);
        Self {
            w: glorot(rng, &[4 * units, inputs], inputs, units),
            u: glorot(rng, &[4 * units, units], units, units),
            b,
        }
    }

    pub fn units(&self) -> usize {
        self.u.shape()[1]
    }

    pub fn inputs(&self) -> usize {
        self.w.shape()[1]
    }

    /// One cell update; `gates` receives the activated (i, f, g, o).
    pub fn cell_step(&self, x: &[f64], h: &[f64], c: &[f64], gates: &mut [f64], h_out: &mut [f64], c_out: &mut [f64]) {
        let (nu, nin) = (self.units(), self.inputs());
        let (w, u, b) = (self.w.data(), self.u.data(), self.b.data());
        for r in 0..4 * nu {
            gates[r] = b[r] + dot(&w[r * nin..(r + 1) * nin], x) + dot(&u[r * nu..(r + 1) * nu], h);
        }
        for j in 0..nu {
            let i = sigmoid(gates[j]);
            let f = sigmoid(gates[nu + j]);
            let g = gates[2 * nu + j].tanh();
            let o = sigmoid(gates[3 * nu + j]);
            gates[j] = i;
            gates[nu + j] = f;
            gates[2 * nu + j] = g;
            gates[3 * nu + j] = o;
            c_out[j] = f * c[j] + i * g;
            h_out[j] = o * c_out[j].tanh();
        }
    }

    fn check_input(&self, x: &Tensor) -> Result<(usize, usize)> {
        let nin = self.inputs();
        if x.shape().len() != 3 || x.shape()[2] != nin || x.shape()[1] == 0 {
            return Err(Error::Shape(format!(
                "lstm expects [batch, T >= 1, {nin}], got {:?}",
                x.shape()
            )));
        }
        Ok((x.shape()[0], x.shape()[1]))
    }

    /// Input and recurrent weights transposed to `[in, 4·units]` and
    /// `[units, 4·units]` so the gate pre-activations are built from axpys.
    fn transposed(&self) -> (Vec<f64>, Vec<f64>) {
        let (nu, nin) = (self.units(), self.inputs());
        let t = |m: &[f64], cols: usize| {
            let mut out = vec![0.0; m.len()];
            for r in 0..4 * nu {
                for c in 0..cols {
                    out[c * 4 * nu + r] = m[r * cols + c];
                }
            }
            out
        };
        (t(self.w.data(), nin), t(self.u.data(), nu))
    }

    fn run(&self, xs: &[f64], steps: usize, wt: &[f64], ut: &[f64]) -> LstmTrace {
        let (nu, nin) = (self.units(), self.inputs());
        let width = 4 * nu;
        let mut tr = LstmTrace {
            gates: vec![0.0; steps * width],
            cells: vec![0.0; (steps + 1) * nu],
            hidden: vec![0.0; (steps + 1) * nu],
            tanh_cells: vec![0.0; steps * nu],
        };
        for t in 0..steps {
            let z = &mut tr.gates[t * width..(t + 1) * width];
            z.copy_from_slice(self.b.data());
            for (k, &xv) in xs[t * nin..(t + 1) * nin].iter().enumerate() {
                axpy(z, xv, &wt[k * width..(k + 1) * width]);
            }
            let (h_prev, h_next) = tr.hidden.split_at_mut((t + 1) * nu);
            let h_prev = &h_prev[t * nu..];
            for (j, &hv) in h_prev.iter().enumerate() {
                if hv != 0.0 {
                    axpy(z, hv, &ut[j * width..(j + 1) * width]);
                }
            }
            let (c_prev, c_next) = tr.cells.split_at_mut((t + 1) * nu);
            let c_prev = &c_prev[t * nu..];
            let tc = &mut tr.tanh_cells[t * nu..(t + 1) * nu];
            for j in 0..nu {
                let i = sigmoid(z[j]);
                let f = sigmoid(z[nu + j]);
                let g = z[2 * nu + j].tanh();
                let o = sigmoid(z[3 * nu + j]);
                z[j] = i;
                z[nu + j] = f;
                z[2 * nu + j] = g;
                z[3 * nu + j] = o;
                c_next[j] = f * c_prev[j] + i * g;
                tc[j] = c_next[j].tanh();
                h_next[j] = o * tc[j];
            }
        }
        tr
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        Ok(self.forward_traced(x)?.0)
    }

    fn forward_traced(&self, x: &Tensor) -> Result<(Tensor, Vec<LstmTrace>)> {
        let (batch, steps) = self.check_input(x)?;
        let nu = self.units();
        let mut out = Vec::with_capacity(batch * nu);
        let mut traces = Vec::with_capacity(batch);
        let (wt, ut) = self.transposed();
        for s in 0..batch {
            let tr = self.run(x.row(s), steps, &wt, &ut);
            out.extend_from_slice(&tr.hidden[steps * nu..]);
            traces.push(tr);
        }
        Ok((Tensor::new(vec![batch, nu], out)?, traces))
    }

    fn backward(&self, x: &Tensor, traces: &[LstmTrace], gy: &Tensor, grads: &mut [Tensor]) -> Tensor {
        let (nu, nin) = (self.units(), self.inputs());
        let steps = x.shape()[1];
        let (w, u) = (self.w.data(), self.u.data());
        let mut gx = Tensor::zeros(x.shape());
        let [gw, gu, gb] = grads else {
            unreachable!("lstm has three parameter tensors")
        };
        let (gw, gu, gb) = (gw.data_mut(), gu.data_mut(), gb.data_mut());
        let mut dz = vec![0.0; 4 * nu];
        for (s, tr) in traces.iter().enumerate() {
            let xs = x.row(s);
            let gxs = &mut gx.data_mut()[s * steps * nin..(s + 1) * steps * nin];
            let mut dh = gy.row(s).to_vec();
            let mut dc = vec![0.0; nu];
            let mut dh_prev = vec![0.0; nu];
            for t in (0..steps).rev() {
                let gates = &tr.gates[t * 4 * nu..(t + 1) * 4 * nu];
                let c_prev = &tr.cells[t * nu..(t + 1) * nu];
                let tanh_c = &tr.tanh_cells[t * nu..(t + 1) * nu];
                let h_prev = &tr.hidden[t * nu..(t + 1) * nu];
                for j in 0..nu {
                    let (i, f, g, o) = (gates[j], gates[nu + j], gates[2 * nu + j], gates[3 * nu + j]);
                    let tc = tanh_c[j];
                    let d_o = dh[j] * tc;
                    let dcj = dc[j] + dh[j] * o * (1.0 - tc * tc);
                    dz[j] = dcj * g * i * (1.0 - i);
                    dz[nu + j] = dcj * c_prev[j] * f * (1.0 - f);
                    dz[2 * nu + j] = dcj * i * (1.0 - g * g);
                    dz[3 * nu + j] = d_o * o * (1.0 - o);
                    dc[j] = dcj * f;
                }
                dh_prev.iter_mut().for_each(|v| *v = 0.0);
                let gxt = &mut gxs[t * nin..(t + 1) * nin];
                let xt = &xs[t * nin..(t + 1) * nin];
                for (r, &d) in dz.iter().enumerate() {
                    gb[r] += d;
                    if d == 0.0 {
                        continue;
                    }
                    axpy(&mut gw[r * nin..(r + 1) * nin], d, xt);
                    axpy(&mut gu[r * nu..(r + 1) * nu], d, h_prev);
                    axpy(&mut dh_prev, d, &u[r * nu..(r + 1) * nu]);
                    axpy(gxt, d, &w[r * nin..(r + 1) * nin]);
                }
                std::mem::swap(&mut dh, &mut dh_prev);
            }
        }
        gx
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Layer {
    Dense(Dense),
    Relu,
    Tanh,
    Conv1d(Conv1d),
    GlobalAvgPool1d,
    Lstm(Lstm),
}

/// Values a layer keeps from its forward pass.
#[derive(Debug, Clone)]
pub enum Cache {
    Input(Tensor),
    Output(Tensor),
    Pool { len: usize },
    Lstm { input: Tensor, traces: Vec<LstmTrace> },
}

impl Layer {
    pub fn name(&self) -> &'static str {
        match self {
            Layer::Dense(_) => "dense",
            Layer::Relu => "relu",
            Layer::Tanh => "tanh",
            Layer::Conv1d(_) => "conv1d",
            Layer::GlobalAvgPool1d => "global_avg_pool1d",
            Layer::Lstm(_) => "lstm",
        }
    }

    pub fn params(&self) -> Vec<&Tensor> {
        match self {
            Layer::Dense(d) => vec![&d.weight, &d.bias],
            Layer::Conv1d(c) => vec![&c.kernel, &c.bias],
            Layer::Lstm(l) => vec![&l.w, &l.u, &l.b],
            _ => Vec::new(),
        }
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        match self {
            Layer::Dense(d) => vec![&mut d.weight, &mut d.bias],
            Layer::Conv1d(c) => vec![&mut c.kernel, &mut c.bias],
            Layer::Lstm(l) => vec![&mut l.w, &mut l.u, &mut l.b],
            _ => Vec::new(),
        }
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        Ok(self.forward_cached(x, false)?.0)
    }

    pub(crate) fn forward_cached(&self, x: &Tensor, keep: bool) -> Result<(Tensor, Option<Cache>)> {
        let keep_input = || keep.then(|| Cache::Input(x.clone()));
        Ok(match self {
            Layer::Dense(d) => (d.forward(x)?, keep_input()),
            Layer::Conv1d(c) => (c.forward(x)?, keep_input()),
            Layer::Relu => {
                let y = Tensor::new(x.shape().to_vec(), x.data().iter().map(|v| v.max(0.0)).collect())?;
                (y, keep_input())
            }
            Layer::Tanh => {
                let y = Tensor::new(x.shape().to_vec(), x.data().iter().map(|v| v.tanh()).collect())?;
                let cache = keep.then(|| Cache::Output(y.clone()));
                (y, cache)
            }
            Layer::GlobalAvgPool1d => {
                if x.shape().len() != 3 || x.shape()[1] == 0 {
                    return Err(Error::Shape(format!(
                        "global average pooling expects [batch, length, channels], got {:?}",
                        x.shape()
                    )));
                }
                let (batch, len, ch) = (x.shape()[0], x.shape()[1], x.shape()[2]);
                let mut out = vec![0.0; batch * ch];
                for s in 0..batch {
                    let xs = x.row(s);
                    let dst = &mut out[s * ch..(s + 1) * ch];
                    for t in 0..len {
                        axpy(dst, 1.0, &xs[t * ch..(t + 1) * ch]);
                    }
                    dst.iter_mut().for_each(|v| *v /= len as f64);
                }
                (Tensor::new(vec![batch, ch], out)?, keep.then_some(Cache::Pool { len }))
            }
            Layer::Lstm(l) => {
                if keep {
                    let (y, traces) = l.forward_traced(x)?;
                    (y, Some(Cache::Lstm { input: x.clone(), traces }))
                } else {
                    (l.forward(x)?, None)
                }
            }
        })
    }

    /// Accumulates parameter gradients into `grads` (same order as
    /// [`Layer::params`]) and returns the gradient with respect to the input.
    pub(crate) fn backward(&self, cache: &Cache, gy: &Tensor, grads: &mut [Tensor]) -> Result<Tensor> {
        match (self, cache) {
            (Layer::Dense(d), Cache::Input(x)) => Ok(d.backward(x, gy, grads)),
            (Layer::Conv1d(c), Cache::Input(x)) => Ok(c.backward(x, gy, grads)),
            (Layer::Relu, Cache::Input(x)) => Tensor::new(
                x.shape().to_vec(),
                x.data()
                    .iter()
                    .zip(gy.data())
                    .map(|(v, g)| if *v > 0.0 { *g } else { 0.0 })
                    .collect(),
            ),
            (Layer::Tanh, Cache::Output(y)) => Tensor::new(
                y.shape().to_vec(),
                y.data().iter().zip(gy.data()).map(|(v, g)| g * (1.0 - v * v)).collect(),
            ),
            (Layer::GlobalAvgPool1d, Cache::Pool { len }) => {
                let (batch, ch) = (gy.shape()[0], gy.shape()[1]);
                let mut gx = Vec::with_capacity(batch * len * ch);
                for s in 0..batch {
                    let g = gy.row(s);
                    for _ in 0..*len {
                        gx.extend(g.iter().map(|v| v / *len as f64));
                    }
                }
                Tensor::new(vec![batch, *len, ch], gx)
            }
            (Layer::Lstm(l), Cache::Lstm { input, traces }) => Ok(l.backward(input, traces, gy, grads)),
            _ => Err(Error::State(format!(
                "cached activations do not belong to a {} layer",
                self.name()
            ))),
        }
    }
}
