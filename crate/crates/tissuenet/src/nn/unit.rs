//! The basic unit ("tissue"): a tiny private two-transform network
//! c_in' → c_h → c_out' with activation after each transform.

use crate::error::{Error, Result};
use crate::nn::{Activation, Parameter};
use crate::tensor::{conv2d, conv2d_backward, matmul, matmul_nt, matmul_tn, ConvGeometry, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitKind {
    Conv,
    Dense,
}

#[derive(Debug, Clone)]
struct UnitCache {
    x: Tensor,
    hidden: Tensor,
    out: Tensor,
}

/// A basic unit with its own private weights. Conv units hold kernel
/// weights of shape `[c_h, c_in', d, d]` / `[c_out', c_h, d, d]`; dense
/// units hold `[c_in', c_h]` / `[c_h, c_out']`.
#[derive(Debug, Clone)]
pub struct BasicUnit {
    pub kind: UnitKind,
    pub w_l: Parameter,
    pub b_l: Option<Parameter>,
    pub w_r: Parameter,
    pub b_r: Option<Parameter>,
    /// Geometry of the first internal transform (carries any stride).
    pub geom_l: ConvGeometry,
    /// Geometry of the second internal transform.
    pub geom_r: ConvGeometry,
    pub activation: Activation,
    cache: Option<UnitCache>,
}

impl BasicUnit {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        kind: UnitKind,
        w_l: Parameter,
        b_l: Option<Parameter>,
        w_r: Parameter,
        b_r: Option<Parameter>,
        geom_l: ConvGeometry,
        geom_r: ConvGeometry,
        activation: Activation,
    ) -> Self {
        Self { kind, w_l, b_l, w_r, b_r, geom_l, geom_r, activation, cache: None }
    }

    pub fn c_in(&self) -> usize {
        match self.kind {
            UnitKind::Conv => self.w_l.value.shape()[1],
            UnitKind::Dense => self.w_l.value.shape()[0],
        }
    }

    pub fn c_hidden(&self) -> usize {
        match self.kind {
            UnitKind::Conv => self.w_l.value.shape()[0],
            UnitKind::Dense => self.w_l.value.shape()[1],
        }
    }

    pub fn c_out(&self) -> usize {
        match self.kind {
            UnitKind::Conv => self.w_r.value.shape()[0],
            UnitKind::Dense => self.w_r.value.shape()[1],
        }
    }

    fn transform(
        &self,
        x: &Tensor,
        w: &Parameter,
        b: Option<&Parameter>,
        geom: &ConvGeometry,
    ) -> Result<Tensor> {
        let pre = match self.kind {
            UnitKind::Conv => conv2d(x, &w.value, b.map(|p| &p.value), geom)?,
            UnitKind::Dense => {
                let mut y = matmul(x, &w.value)?;
                if let Some(b) = b {
                    let cols = y.shape()[1];
                    for row in y.data_mut().chunks_mut(cols) {
                        for (v, &bv) in row.iter_mut().zip(b.value.data()) {
                            *v += bv;
                        }
                    }
                }
                y
            }
        };
        Ok(self.activation.apply(&pre))
    }

    /// activation(T(activation(T(x, W_l)), W_r)) with cached intermediates.
    pub fn forward(&mut self, x: &Tensor) -> Result<Tensor> {
        let expect = self.c_in();
        if x.shape()[1] != expect {
            return Err(Error::Shape {
                op: "unit_forward",
                detail: format!("unit expects {expect} input channels, got {}", x.shape()[1]),
            });
        }
        let hidden = self.transform(x, &self.w_l, self.b_l.as_ref(), &self.geom_l)?;
        let out = self.transform(&hidden, &self.w_r, self.b_r.as_ref(), &self.geom_r)?;
        self.cache = Some(UnitCache { x: x.clone(), hidden: hidden.clone(), out: out.clone() });
        Ok(out)
    }

    pub fn backward(&mut self, grad_out: &Tensor) -> Result<Tensor> {
        let cache = self
            .cache
            .take()
            .ok_or_else(|| Error::State("unit backward called before forward".into()))?;
        let g_out_pre = self.activation.backward(&cache.out, grad_out);
        let g_hidden = self.backward_right(&cache.hidden, &g_out_pre)?;
        let g_hidden_pre = self.activation.backward(&cache.hidden, &g_hidden);
        self.backward_left(&cache.x, &g_hidden_pre)
    }

    fn backward_right(&mut self, input: &Tensor, grad_pre: &Tensor) -> Result<Tensor> {
        match self.kind {
            UnitKind::Conv => {
                let (gx, gw, gb) = conv2d_backward(
                    input,
                    &self.w_r.value,
                    &self.geom_r,
                    grad_pre,
                    self.b_r.is_some(),
                )?;
                accumulate(&mut self.w_r, &gw);
                if let (Some(b), Some(gb)) = (self.b_r.as_mut(), gb) {
                    accumulate(b, &gb);
                }
                Ok(gx)
            }
            UnitKind::Dense => {
                let gw = matmul_tn(input, grad_pre)?;
                accumulate(&mut self.w_r, &gw);
                if let Some(b) = self.b_r.as_mut() {
                    accumulate_bias(b, grad_pre);
                }
                matmul_nt(grad_pre, &self.w_r.value)
            }
        }
    }

    fn backward_left(&mut self, input: &Tensor, grad_pre: &Tensor) -> Result<Tensor> {
        match self.kind {
            UnitKind::Conv => {
                let (gx, gw, gb) = conv2d_backward(
                    input,
                    &self.w_l.value,
                    &self.geom_l,
                    grad_pre,
                    self.b_l.is_some(),
                )?;
                accumulate(&mut self.w_l, &gw);
                if let (Some(b), Some(gb)) = (self.b_l.as_mut(), gb) {
                    accumulate(b, &gb);
                }
                Ok(gx)
            }
            UnitKind::Dense => {
                let gw = matmul_tn(input, grad_pre)?;
                accumulate(&mut self.w_l, &gw);
                if let Some(b) = self.b_l.as_mut() {
                    accumulate_bias(b, grad_pre);
                }
                matmul_nt(grad_pre, &self.w_l.value)
            }
        }
    }

    pub(crate) fn collect_params<'a>(&'a self, out: &mut Vec<&'a Parameter>) {
        out.push(&self.w_l);
        if let Some(b) = &self.b_l {
            out.push(b);
        }
        out.push(&self.w_r);
        if let Some(b) = &self.b_r {
            out.push(b);
        }
    }

    pub(crate) fn collect_params_mut<'a>(&'a mut self, out: &mut Vec<&'a mut Parameter>) {
        out.push(&mut self.w_l);
        if let Some(b) = &mut self.b_l {
            out.push(b);
        }
        out.push(&mut self.w_r);
        if let Some(b) = &mut self.b_r {
            out.push(b);
        }
    }
}

pub(crate) fn accumulate(p: &mut Parameter, grad: &Tensor) {
    for (g, &v) in p.grad.data_mut().iter_mut().zip(grad.data()) {
        *g += v;
    }
}

/// Column-sum a `[N, C]` gradient into a `[C]` bias gradient.
pub(crate) fn accumulate_bias(p: &mut Parameter, grad: &Tensor) {
    let cols = grad.shape()[1];
    for row in grad.data().chunks(cols) {
        for (g, &v) in p.grad.data_mut().iter_mut().zip(row) {
            *g += v;
        }
    }
}
