//! Second-order forward-mode numbers and exact input derivatives of scalar
//! networks.

use std::ops::{Add, Div, Mul, Neg, Sub};

use super::layers::Layer;
use super::network::Network;
use crate::error::{Error, Result};

/// Truncated Taylor jet `(f, f', f'')` with respect to one scalar input.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Dual2 {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Dual2 {
    pub const fn new(value: f64, d1: f64, d2: f64) -> Self {
        Self { value, d1, d2 }
    }

    pub const fn constant(value: f64) -> Self {
        Self::new(value, 0.0, 0.0)
    }

    /// The independent variable itself.
    pub const fn variable(value: f64) -> Self {
        Self::new(value, 1.0, 0.0)
    }

    /// Applies a scalar function given its value and first two derivatives
    /// at `self.value`.
    #[inline]
    pub fn chain(self, f: f64, df: f64, d2f: f64) -> Self {
        Self::new(f, df * self.d1, df * self.d2 + d2f * self.d1 * self.d1)
    }

    pub fn tanh(self) -> Self {
        let t = self.value.tanh();
        let s = 1.0 - t * t;
        self.chain(t, s, -2.0 * t * s)
    }

    pub fn sin(self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.chain(s, c, -s)
    }

    pub fn cos(self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.chain(c, -s, -c)
    }

    pub fn exp(self) -> Self {
        let e = self.value.exp();
        self.chain(e, e, e)
    }

    pub fn powi(self, n: i32) -> Self {
        let v = self.value;
        let nf = n as f64;
        self.chain(
            v.powi(n),
            nf * v.powi(n - 1),
            nf * (nf - 1.0) * v.powi(n - 2),
        )
    }
}

impl Add for Dual2 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.value + o.value, self.d1 + o.d1, self.d2 + o.d2)
    }
}

impl Sub for Dual2 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.value - o.value, self.d1 - o.d1, self.d2 - o.d2)
    }
}

impl Mul for Dual2 {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self::new(
            self.value * o.value,
            self.d1 * o.value + self.value * o.d1,
            self.d2 * o.value + 2.0 * self.d1 * o.d1 + self.value * o.d2,
        )
    }
}

impl Div for Dual2 {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let inv = 1.0 / o.value;
        let recip = o.chain(inv, -inv * inv, 2.0 * inv * inv * inv);
        self * recip
    }
}

impl Neg for Dual2 {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.value, -self.d1, -self.d2)
    }
}

impl Add<f64> for Dual2 {
    type Output = Self;
    fn add(self, o: f64) -> Self {
        Self::new(self.value + o, self.d1, self.d2)
    }
}

impl Sub<f64> for Dual2 {
    type Output = Self;
    fn sub(self, o: f64) -> Self {
        Self::new(self.value - o, self.d1, self.d2)
    }
}

impl Mul<f64> for Dual2 {
    type Output = Self;
    fn mul(self, o: f64) -> Self {
        Self::new(self.value * o, self.d1 * o, self.d2 * o)
    }
}

impl Mul<Dual2> for f64 {
    type Output = Dual2;
    fn mul(self, o: Dual2) -> Dual2 {
        o * self
    }
}

/// Layers that admit second input derivatives everywhere.
pub fn check_jet_capable(net: &Network) -> Result<()> {
    for (i, layer) in net.layers.iter().enumerate() {
        match layer {
            Layer::Dense(_) | Layer::Tanh => {}
            other => {
                return Err(Error::Capability(format!(
                    "layer {i} is {}; only dense and tanh layers are supported",
                    other.name()
                )))
            }
        }
    }
    let first_in = net.layers.iter().find_map(|l| match l {
        Layer::Dense(d) => Some(d.inputs()),
        _ => None,
    });
    let last_out = net.layers.iter().rev().find_map(|l| match l {
        Layer::Dense(d) => Some(d.outputs()),
        _ => None,
    });
    if first_in != Some(1) || last_out != Some(1) {
        return Err(Error::Capability(
            "input derivatives need a scalar-to-scalar network".into(),
        ));
    }
    Ok(())
}

/// Evaluates a scalar network on a jet input.
pub fn forward_dual(net: &Network, x: Dual2) -> Result<Dual2> {
    check_jet_capable(net)?;
    let mut cur = vec![x];
    for layer in &net.layers {
        cur = match layer {
            Layer::Dense(d) => {
                let nin = d.inputs();
                let w = d.weight.data();
                d.bias
                    .data()
                    .iter()
                    .enumerate()
                    .map(|(o, &b)| {
                        w[o * nin..(o + 1) * nin]
                            .iter()
                            .zip(&cur)
                            .fold(Dual2::constant(b), |acc, (&wi, &a)| acc + a * wi)
                    })
                    .collect()
            }
            Layer::Tanh => cur.into_iter().map(Dual2::tanh).collect(),
            _ => unreachable!("checked above"),
        };
    }
    Ok(cur[0])
}

/// Returns `(y, dy/dx, d²y/dx²)` of a scalar network at `x`.
pub fn input_derivatives(net: &Network, x: f64) -> Result<(f64, f64, f64)> {
    let y = forward_dual(net, Dual2::variable(x))?;
    Ok((y.value, y.d1, y.d2))
}
