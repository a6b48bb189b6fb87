//! Layer abstraction with forward/backward passes: basic units, stacked
//! layers, normal layers, residual blocks, and the training objective.

mod layers;
pub mod loss;
mod unit;

pub use layers::{ConvLayer, DenseLayer, FlattenLayer, GapLayer, MaxPoolLayer, ResidualBlock, StackedLayer};
pub use unit::{BasicUnit, UnitKind};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// A trainable tensor paired with its gradient accumulator.
#[derive(Debug, Clone)]
pub struct Parameter {
    pub name: String,
    pub value: Tensor,
    pub grad: Tensor,
}

impl Parameter {
    pub fn new(name: impl Into<String>, value: Tensor) -> Self {
        let grad = Tensor::zeros(value.shape());
        Self { name: name.into(), value, grad }
    }

    pub fn zero_grad(&mut self) {
        self.grad.data_mut().fill(0.0);
    }
}

/// Activation applied after every convolution/dense transform.
///
/// `Identity` is the linear test mode used by the oracle tests; real
/// networks use `Relu` everywhere except the final logits layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    pub fn apply(&self, x: &Tensor) -> Tensor {
        match self {
            Activation::Relu => crate::tensor::relu(x),
            Activation::Identity => x.clone(),
        }
    }

    /// Chain-rule through the activation given its *output* and the upstream
    /// gradient. For ReLU the output alone determines the mask.
    pub fn backward(&self, output: &Tensor, grad_out: &Tensor) -> Tensor {
        match self {
            Activation::Identity => grad_out.clone(),
            Activation::Relu => {
                let mut g = grad_out.clone();
                for (gv, &ov) in g.data_mut().iter_mut().zip(output.data()) {
                    if ov <= 0.0 {
                        *gv = 0.0;
                    }
                }
                g
            }
        }
    }
}

/// One layer of a model. Forward caches whatever backward needs; backward
/// accumulates parameter gradients and returns the gradient w.r.t. input.
#[derive(Debug, Clone)]
pub enum Layer {
    Conv(ConvLayer),
    StackedConv(StackedLayer),
    Dense(DenseLayer),
    StackedDense(StackedLayer),
    Residual(ResidualBlock),
    MaxPool(MaxPoolLayer),
    GlobalAvgPool(GapLayer),
    Flatten(FlattenLayer),
}

impl Layer {
    pub fn forward(&mut self, x: &Tensor) -> Result<Tensor> {
        match self {
            Layer::Conv(l) => l.forward(x),
            Layer::StackedConv(l) | Layer::StackedDense(l) => l.forward(x),
            Layer::Dense(l) => l.forward(x),
            Layer::Residual(l) => l.forward(x),
            Layer::MaxPool(l) => l.forward(x),
            Layer::GlobalAvgPool(l) => l.forward(x),
            Layer::Flatten(l) => l.forward(x),
        }
    }

    pub fn backward(&mut self, grad_out: &Tensor) -> Result<Tensor> {
        match self {
            Layer::Conv(l) => l.backward(grad_out),
            Layer::StackedConv(l) | Layer::StackedDense(l) => l.backward(grad_out),
            Layer::Dense(l) => l.backward(grad_out),
            Layer::Residual(l) => l.backward(grad_out),
            Layer::MaxPool(l) => l.backward(grad_out),
            Layer::GlobalAvgPool(l) => l.backward(grad_out),
            Layer::Flatten(l) => l.backward(grad_out),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Layer::Conv(_) => "normal-conv",
            Layer::StackedConv(_) => "stacked-conv",
            Layer::Dense(_) => "dense",
            Layer::StackedDense(_) => "stacked-dense",
            Layer::Residual(_) => "residual-block",
            Layer::MaxPool(_) => "pool",
            Layer::GlobalAvgPool(_) => "global-avg-pool",
            Layer::Flatten(_) => "flatten",
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Layer::Conv(l) => &l.name,
            Layer::StackedConv(l) | Layer::StackedDense(l) => &l.name,
            Layer::Dense(l) => &l.name,
            Layer::Residual(l) => &l.name,
            Layer::MaxPool(l) => &l.name,
            Layer::GlobalAvgPool(l) => &l.name,
            Layer::Flatten(l) => &l.name,
        }
    }

    pub fn params(&self) -> Vec<&Parameter> {
        let mut out = Vec::new();
        self.collect_params(&mut out);
        out
    }

    fn collect_params<'a>(&'a self, out: &mut Vec<&'a Parameter>) {
        match self {
            Layer::Conv(l) => l.collect_params(out),
            Layer::StackedConv(l) | Layer::StackedDense(l) => l.collect_params(out),
            Layer::Dense(l) => l.collect_params(out),
            Layer::Residual(l) => l.collect_params(out),
            Layer::MaxPool(_) | Layer::GlobalAvgPool(_) | Layer::Flatten(_) => {}
        }
    }

    pub fn params_mut(&mut self) -> Vec<&mut Parameter> {
        let mut out = Vec::new();
        self.collect_params_mut(&mut out);
        out
    }

    fn collect_params_mut<'a>(&'a mut self, out: &mut Vec<&'a mut Parameter>) {
        match self {
            Layer::Conv(l) => l.collect_params_mut(out),
            Layer::StackedConv(l) | Layer::StackedDense(l) => l.collect_params_mut(out),
            Layer::Dense(l) => l.collect_params_mut(out),
            Layer::Residual(l) => l.collect_params_mut(out),
            Layer::MaxPool(_) | Layer::GlobalAvgPool(_) | Layer::Flatten(_) => {}
        }
    }
}

/// An ordered sequence of layers; forward applies in order, backward in
/// reverse. A model instance is single-writer: forward/backward/update must
/// be externally serialized.
#[derive(Debug, Clone, Default)]
pub struct Model {
    pub layers: Vec<Layer>,
}

impl Model {
    pub fn new(layers: Vec<Layer>) -> Self {
        Self { layers }
    }

    pub fn forward(&mut self, x: &Tensor) -> Result<Tensor> {
        let mut cur = x.clone();
        for layer in &mut self.layers {
            cur = layer.forward(&cur)?;
        }
        Ok(cur)
    }

    /// Forward that names the first layer producing a non-finite activation.
    pub fn forward_diagnose(&mut self, x: &Tensor, epoch: usize) -> Result<Tensor> {
        let mut cur = x.clone();
        for layer in &mut self.layers {
            cur = layer.forward(&cur)?;
            if !cur.data().iter().all(|v| v.is_finite()) {
                return Err(Error::NonFinite { epoch, layer: layer.name().to_string() });
            }
        }
        Ok(cur)
    }

    pub fn backward(&mut self, grad_out: &Tensor) -> Result<Tensor> {
        let mut grad = grad_out.clone();
        for layer in self.layers.iter_mut().rev() {
            grad = layer.backward(&grad)?;
        }
        Ok(grad)
    }

    pub fn params(&self) -> Vec<&Parameter> {
        let mut out = Vec::new();
        for l in &self.layers {
            l.collect_params(&mut out);
        }
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut Parameter> {
        let mut out = Vec::new();
        for l in &mut self.layers {
            l.collect_params_mut(&mut out);
        }
        out
    }

    pub fn zero_grad(&mut self) {
        for p in self.params_mut() {
            p.zero_grad();
        }
    }

    pub fn param_count(&self) -> usize {
        self.params().iter().map(|p| p.value.len()).sum()
    }
}
