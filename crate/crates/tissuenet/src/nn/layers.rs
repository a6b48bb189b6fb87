//! Concrete layers: normal conv/dense, stacked layers, residual blocks,
//! pooling, flatten.

use crate::error::{Error, Result};
use crate::nn::unit::{accumulate, accumulate_bias, BasicUnit};
use crate::nn::{Activation, Layer, Parameter};
use crate::tensor::{
    channel_concat, channel_split, conv2d, conv2d_backward, global_avg_pool, matmul, matmul_nt,
    matmul_tn, max_pool2d, max_pool2d_backward, ConvGeometry, Tensor,
};

/// Standard convolutional layer with full connection across channels.
#[derive(Debug, Clone)]
pub struct ConvLayer {
    pub name: String,
    pub weight: Parameter,
    pub bias: Option<Parameter>,
    pub geom: ConvGeometry,
    pub activation: Activation,
    cache: Option<(Tensor, Tensor)>,
}

impl ConvLayer {
    pub fn new(
        name: impl Into<String>,
        weight: Parameter,
        bias: Option<Parameter>,
        geom: ConvGeometry,
        activation: Activation,
    ) -> Self {
        Self { name: name.into(), weight, bias, geom, activation, cache: None }
    }

    pub fn forward(&mut self, x: &Tensor) -> Result<Tensor> {
        let pre = conv2d(x, &self.weight.value, self.bias.as_ref().map(|p| &p.value), &self.geom)?;
        let out = self.activation.apply(&pre);
        self.cache = Some((x.clone(), out.clone()));
        Ok(out)
    }

    pub fn backward(&mut self, grad_out: &Tensor) -> Result<Tensor> {
        let (x, out) = self
            .cache
            .take()
            .ok_or_else(|| Error::State(format!("backward before forward in {}", self.name)))?;
        let g_pre = self.activation.backward(&out, grad_out);
        let (gx, gw, gb) =
            conv2d_backward(&x, &self.weight.value, &self.geom, &g_pre, self.bias.is_some())?;
        accumulate(&mut self.weight, &gw);
        if let (Some(b), Some(gb)) = (self.bias.as_mut(), gb) {
            accumulate(b, &gb);
        }
        Ok(gx)
    }

    pub(crate) fn collect_params<'a>(&'a self, out: &mut Vec<&'a Parameter>) {
        out.push(&self.weight);
        if let Some(b) = &self.bias {
            out.push(b);
        }
    }

    pub(crate) fn collect_params_mut<'a>(&'a mut self, out: &mut Vec<&'a mut Parameter>) {
        out.push(&mut self.weight);
        if let Some(b) = &mut self.bias {
            out.push(b);
        }
    }
}

/// Fully-connected layer, weight stored `[n_in, n_out]`.
#[derive(Debug, Clone)]
pub struct DenseLayer {
    pub name: String,
    pub weight: Parameter,
    pub bias: Option<Parameter>,
    pub activation: Activation,
    cache: Option<(Tensor, Tensor)>,
}

impl DenseLayer {
    pub fn new(
        name: impl Into<String>,
        weight: Parameter,
        bias: Option<Parameter>,
        activation: Activation,
    ) -> Self {
        Self { name: name.into(), weight, bias, activation, cache: None }
    }

    pub fn forward(&mut self, x: &Tensor) -> Result<Tensor> {
        let mut pre = matmul(x, &self.weight.value)?;
        if let Some(b) = &self.bias {
            let cols = pre.shape()[1];
            for row in pre.data_mut().chunks_mut(cols) {
                for (v, &bv) in row.iter_mut().zip(b.value.data()) {
                    *v += bv;
                }
            }
        }
        let out = self.activation.apply(&pre);
        self.cache = Some((x.clone(), out.clone()));
        Ok(out)
    }

    pub fn backward(&mut self, grad_out: &Tensor) -> Result<Tensor> {
        let (x, out) = self
            .cache
            .take()
            .ok_or_else(|| Error::State(format!("backward before forward in {}", self.name)))?;
        let g_pre = self.activation.backward(&out, grad_out);
        let gw = matmul_tn(&x, &g_pre)?;
        accumulate(&mut self.weight, &gw);
        if let Some(b) = self.bias.as_mut() {
            accumulate_bias(b, &g_pre);
        }
        matmul_nt(&g_pre, &self.weight.value)
    }

    pub(crate) fn collect_params<'a>(&'a self, out: &mut Vec<&'a Parameter>) {
        out.push(&self.weight);
        if let Some(b) = &self.bias {
            out.push(b);
        }
    }

    pub(crate) fn collect_params_mut<'a>(&'a mut self, out: &mut Vec<&'a mut Parameter>) {
        out.push(&mut self.weight);
        if let Some(b) = &mut self.bias {
            out.push(b);
        }
    }
}

/// A layer formed by m independent basic units on disjoint channel slices,
/// outputs concatenated in unit order. Works for both conv and dense units
/// (dense units slice feature indices instead of channels).
#[derive(Debug, Clone)]
pub struct StackedLayer {
    pub name: String,
    pub units: Vec<BasicUnit>,
    pub input_sizes: Vec<usize>,
    pub output_sizes: Vec<usize>,
}

impl StackedLayer {
    pub fn new(name: impl Into<String>, units: Vec<BasicUnit>) -> Self {
        let input_sizes = units.iter().map(|u| u.c_in()).collect();
        let output_sizes = units.iter().map(|u| u.c_out()).collect();
        Self { name: name.into(), units, input_sizes, output_sizes }
    }

    pub fn forward(&mut self, x: &Tensor) -> Result<Tensor> {
        let pieces = channel_split(x, &self.input_sizes)?;
        let mut outs = Vec::with_capacity(pieces.len());
        for (unit, piece) in self.units.iter_mut().zip(&pieces) {
            outs.push(unit.forward(piece)?);
        }
        channel_concat(&outs)
    }

    pub fn backward(&mut self, grad_out: &Tensor) -> Result<Tensor> {
        let grads = channel_split(grad_out, &self.output_sizes)?;
        let mut in_grads = Vec::with_capacity(grads.len());
        for (unit, g) in self.units.iter_mut().zip(&grads) {
            in_grads.push(unit.backward(g)?);
        }
        channel_concat(&in_grads)
    }

    pub(crate) fn collect_params<'a>(&'a self, out: &mut Vec<&'a Parameter>) {
        for u in &self.units {
            u.collect_params(out);
        }
    }

    pub(crate) fn collect_params_mut<'a>(&'a mut self, out: &mut Vec<&'a mut Parameter>) {
        for u in &mut self.units {
            u.collect_params_mut(out);
        }
    }
}

/// activation(main(x) + shortcut(x)); shortcut is identity or a strided
/// 1x1 projection when shapes differ.
#[derive(Debug, Clone)]
pub struct ResidualBlock {
    pub name: String,
    pub main: Vec<Layer>,
    pub shortcut: Option<ConvLayer>,
    pub activation: Activation,
    cache: Option<Tensor>,
}

impl ResidualBlock {
    pub fn new(
        name: impl Into<String>,
        main: Vec<Layer>,
        shortcut: Option<ConvLayer>,
        activation: Activation,
    ) -> Self {
        Self { name: name.into(), main, shortcut, activation, cache: None }
    }

    pub fn forward(&mut self, x: &Tensor) -> Result<Tensor> {
        let mut m = x.clone();
        for layer in &mut self.main {
            m = layer.forward(&m)?;
        }
        let s = match &mut self.shortcut {
            Some(proj) => proj.forward(x)?,
            None => x.clone(),
        };
        if m.shape() != s.shape() {
            return Err(Error::Shape {
                op: "residual_forward",
                detail: format!(
                    "main path produced {:?}, shortcut {:?} in {}",
                    m.shape(),
                    s.shape(),
                    self.name
                ),
            });
        }
        let mut sum = m;
        for (v, &sv) in sum.data_mut().iter_mut().zip(s.data()) {
            *v += sv;
        }
        let out = self.activation.apply(&sum);
        self.cache = Some(out.clone());
        Ok(out)
    }

    pub fn backward(&mut self, grad_out: &Tensor) -> Result<Tensor> {
        let out = self
            .cache
            .take()
            .ok_or_else(|| Error::State(format!("backward before forward in {}", self.name)))?;
        let g_sum = self.activation.backward(&out, grad_out);
        let mut g_main = g_sum.clone();
        for layer in self.main.iter_mut().rev() {
            g_main = layer.backward(&g_main)?;
        }
        let g_short = match &mut self.shortcut {
            Some(proj) => proj.backward(&g_sum)?,
            None => g_sum,
        };
        let mut grad_in = g_main;
        for (v, &sv) in grad_in.data_mut().iter_mut().zip(g_short.data()) {
            *v += sv;
        }
        Ok(grad_in)
    }

    pub(crate) fn collect_params<'a>(&'a self, out: &mut Vec<&'a Parameter>) {
        for l in &self.main {
            l.collect_params(out);
        }
        if let Some(p) = &self.shortcut {
            p.collect_params(out);
        }
    }

    pub(crate) fn collect_params_mut<'a>(&'a mut self, out: &mut Vec<&'a mut Parameter>) {
        for l in &mut self.main {
            l.collect_params_mut(out);
        }
        if let Some(p) = &mut self.shortcut {
            p.collect_params_mut(out);
        }
    }
}

#[derive(Debug, Clone)]
pub struct MaxPoolLayer {
    pub name: String,
    pub window: usize,
    pub stride: usize,
    cache: Option<(Vec<usize>, Vec<usize>)>,
}

impl MaxPoolLayer {
    pub fn new(name: impl Into<String>, window: usize, stride: usize) -> Self {
        Self { name: name.into(), window, stride, cache: None }
    }

    pub fn forward(&mut self, x: &Tensor) -> Result<Tensor> {
        let (out, argmax) = max_pool2d(x, self.window, self.stride)?;
        self.cache = Some((x.shape().to_vec(), argmax));
        Ok(out)
    }

    pub fn backward(&mut self, grad_out: &Tensor) -> Result<Tensor> {
        let (in_shape, argmax) = self
            .cache
            .take()
            .ok_or_else(|| Error::State(format!("backward before forward in {}", self.name)))?;
        Ok(max_pool2d_backward(&in_shape, &argmax, grad_out))
    }
}

#[derive(Debug, Clone)]
pub struct GapLayer {
    pub name: String,
    cache: Option<Vec<usize>>,
}

impl GapLayer {
    pub fn new(name: impl Into<String>) -> Self {
        Self { name: name.into(), cache: None }
    }

    pub fn forward(&mut self, x: &Tensor) -> Result<Tensor> {
        let out = global_avg_pool(x)?;
        self.cache = Some(x.shape().to_vec());
        Ok(out)
    }

    pub fn backward(&mut self, grad_out: &Tensor) -> Result<Tensor> {
        let in_shape = self
            .cache
            .take()
            .ok_or_else(|| Error::State(format!("backward before forward in {}", self.name)))?;
        let (n, c, h, w) = (in_shape[0], in_shape[1], in_shape[2], in_shape[3]);
        let mut grad_in = Tensor::zeros(&in_shape);
        let hw = (h * w) as f64;
        for s in 0..n {
            for ch in 0..c {
                let g = grad_out.data()[s * c + ch] / hw;
                grad_in.data_mut()[(s * c + ch) * h * w..(s * c + ch + 1) * h * w].fill(g);
            }
        }
        Ok(grad_in)
    }
}

/// `[N,C,H,W] → [N,C·H·W]`.
#[derive(Debug, Clone)]
pub struct FlattenLayer {
    pub name: String,
    cache: Option<Vec<usize>>,
}

impl FlattenLayer {
    pub fn new(name: impl Into<String>) -> Self {
        Self { name: name.into(), cache: None }
    }

    pub fn forward(&mut self, x: &Tensor) -> Result<Tensor> {
        let n = x.shape()[0];
        let rest: usize = x.shape()[1..].iter().product();
        let out = x.reshape(&[n, rest])?;
        self.cache = Some(x.shape().to_vec());
        Ok(out)
    }

    pub fn backward(&mut self, grad_out: &Tensor) -> Result<Tensor> {
        let in_shape = self
            .cache
            .take()
            .ok_or_else(|| Error::State(format!("backward before forward in {}", self.name)))?;
        grad_out.reshape(&in_shape)
    }
}
