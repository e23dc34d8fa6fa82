//! Batched second-order jets through Dense/Tanh networks, with the reverse
//! pass needed to train on losses that involve `y'` and `y''`.

use super::dual::check_jet_capable;
use super::layers::Layer;
use super::network::{Gradients, Network};
use crate::error::{Error, Result};

/// Value and first two input derivatives at each point, row-major `[P, width]`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct JetArrays {
    pub value: Vec<f64>,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
}

impl JetArrays {
    fn zeros(n: usize) -> Self {
        Self {
            value: vec![0.0; n],
            d1: vec![0.0; n],
            d2: vec![0.0; n],
        }
    }
}

#[derive(Debug, Default)]
pub struct JetTape {
    /// Input jets of each layer (Tanh layers keep their output value in
    /// `value` and input derivatives in `d1`, `d2`).
    caches: Vec<JetArrays>,
    points: usize,
}

/// Forward pass of `points` scalar inputs. `d_input` is the derivative of the
/// network input with respect to the physical variable (an input scaling).
pub fn jet_forward(net: &Network, inputs: &[f64], d_input: f64) -> Result<(JetArrays, JetTape)> {
    check_jet_capable(net)?;
    let p = inputs.len();
    let mut cur = JetArrays {
        value: inputs.to_vec(),
        d1: vec![d_input; p],
        d2: vec![0.0; p],
    };
    let mut width = 1;
    let mut tape = JetTape {
        caches: Vec::with_capacity(net.layers.len()),
        points: p,
    };
    for (li, layer) in net.layers.iter().enumerate() {
        match layer {
            Layer::Dense(d) => {
                let (nin, nout) = (d.inputs(), d.outputs());
                let w = d.weight.data();
                let b = d.bias.data();
                let mut next = JetArrays::zeros(p * nout);
                for k in 0..p {
                    let (av, a1, a2) = (
                        &cur.value[k * nin..(k + 1) * nin],
                        &cur.d1[k * nin..(k + 1) * nin],
                        &cur.d2[k * nin..(k + 1) * nin],
                    );
                    for o in 0..nout {
                        let row = &w[o * nin..(o + 1) * nin];
                        let (mut z, mut z1, mut z2) = (b[o], 0.0, 0.0);
                        for i in 0..nin {
                            z += row[i] * av[i];
                            z1 += row[i] * a1[i];
                            z2 += row[i] * a2[i];
                        }
                        next.value[k * nout + o] = z;
                        next.d1[k * nout + o] = z1;
                        next.d2[k * nout + o] = z2;
                    }
                }
                tape.caches.push(cur);
                cur = next;
                width = nout;
            }
            Layer::Tanh => {
                let mut next = JetArrays::zeros(p * width);
                for i in 0..p * width {
                    let h = cur.value[i].tanh();
                    let s = 1.0 - h * h;
                    let (z1, z2) = (cur.d1[i], cur.d2[i]);
                    next.value[i] = h;
                    next.d1[i] = s * z1;
                    next.d2[i] = s * z2 - 2.0 * h * s * z1 * z1;
                }
                tape.caches.push(JetArrays {
                    value: next.value.clone(),
                    d1: cur.d1,
                    d2: cur.d2,
                });
                cur = next;
            }
            _ => unreachable!("capability checked"),
        }
        let finite = cur.value.iter().chain(&cur.d1).chain(&cur.d2).all(|v| v.is_finite());
        if !finite {
            return Err(Error::NonFinite {
                index: li,
                layer: layer.name().to_string(),
            });
        }
    }
    Ok((cur, tape))
}

/// Parameter gradients of `Σ_k g.value[k]·y_k + g.d1[k]·y'_k + g.d2[k]·y''_k`.
pub fn jet_backward(net: &Network, tape: &JetTape, upstream: &JetArrays) -> Result<Gradients> {
    if tape.caches.len() != net.layers.len() {
        return Err(Error::State(
            "jet backward called without a recorded jet forward".into(),
        ));
    }
    let p = tape.points;
    if upstream.value.len() != p || upstream.d1.len() != p || upstream.d2.len() != p {
        return Err(Error::Shape(format!(
            "upstream jet has {} entries for {p} points",
            upstream.value.len()
        )));
    }
    let mut grads = net.zero_grads();
    let mut offsets = Vec::with_capacity(net.layers.len());
    let mut off = 0;
    for l in &net.layers {
        offsets.push(off);
        off += l.params().len();
    }

    let mut g = upstream.clone();
    for (li, layer) in net.layers.iter().enumerate().rev() {
        let cache = &tape.caches[li];
        match layer {
            Layer::Dense(d) => {
                let (nin, nout) = (d.inputs(), d.outputs());
                let w = d.weight.data();
                let mut ga = JetArrays::zeros(p * nin);
                let (gw_slot, gb_slot) = grads[offsets[li]..offsets[li] + 2].split_at_mut(1);
                let gw = gw_slot[0].data_mut();
                let gb = gb_slot[0].data_mut();
                for k in 0..p {
                    for o in 0..nout {
                        let (g0, g1, g2) = (g.value[k * nout + o], g.d1[k * nout + o], g.d2[k * nout + o]);
                        gb[o] += g0;
                        let row = &w[o * nin..(o + 1) * nin];
                        let grow = &mut gw[o * nin..(o + 1) * nin];
                        for i in 0..nin {
                            let idx = k * nin + i;
                            grow[i] += g0 * cache.value[idx] + g1 * cache.d1[idx] + g2 * cache.d2[idx];
                            ga.value[idx] += row[i] * g0;
                            ga.d1[idx] += row[i] * g1;
                            ga.d2[idx] += row[i] * g2;
                        }
                    }
                }
                g = ga;
            }
            Layer::Tanh => {
                let n = cache.value.len();
                let mut gz = JetArrays::zeros(n);
                for i in 0..n {
                    let h = cache.value[i];
                    let s = 1.0 - h * h;
                    let (z1, z2) = (cache.d1[i], cache.d2[i]);
                    let (g0, g1, g2) = (g.value[i], g.d1[i], g.d2[i]);
                    gz.value[i] = g0 * s - 2.0 * h * s * z1 * g1
                        + g2 * (-2.0 * h * s * z2 - 2.0 * s * (s - 2.0 * h * h) * z1 * z1);
                    gz.d1[i] = g1 * s - 4.0 * h * s * z1 * g2;
                    gz.d2[i] = g2 * s;
                }
                g = gz;
            }
            _ => unreachable!("capability checked in forward"),
        }
    }
    Ok(grads)
}
