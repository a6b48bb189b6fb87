//! Dense tensor storage and the numerical kernels everything else builds on.
//!
//! All kernels are pure functions of their inputs and deterministic:
//! identical inputs produce bit-identical outputs. Reductions always run in
//! a fixed order, so the im2col convolution path matches the direct
//! loop-nest reference bit for bit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense N-dimensional array of `f64` in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(Error::Shape {
                op: "Tensor::new",
                detail: format!("shape {:?} implies {} elements, got {}", shape, n, data.len()),
            });
        }
        if shape.iter().any(|&d| d == 0) {
            return Err(Error::Shape {
                op: "Tensor::new",
                detail: format!("zero-sized dimension in {:?}", shape),
            });
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        let n = shape.iter().product();
        Self { shape: shape.to_vec(), data: vec![0.0; n] }
    }

    pub fn full(shape: &[usize], value: f64) -> Self {
        let n = shape.iter().product();
        Self { shape: shape.to_vec(), data: vec![value; n] }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Row-major flat offset of a multi-index.
    pub fn offset(&self, index: &[usize]) -> usize {
        debug_assert_eq!(index.len(), self.shape.len());
        let mut off = 0;
        for (i, &ix) in index.iter().enumerate() {
            debug_assert!(ix < self.shape[i]);
            off = off * self.shape[i] + ix;
        }
        off
    }

    pub fn at(&self, index: &[usize]) -> f64 {
        self.data[self.offset(index)]
    }

    pub fn set(&mut self, index: &[usize], value: f64) {
        let off = self.offset(index);
        self.data[off] = value;
    }

    /// Same data, new shape (element count must match).
    pub fn reshape(&self, shape: &[usize]) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != self.data.len() {
            return Err(Error::Shape {
                op: "reshape",
                detail: format!("cannot view {:?} as {:?}", self.shape, shape),
            });
        }
        Ok(Self { shape: shape.to_vec(), data: self.data.clone() })
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.data.iter()
    }

    pub fn max_abs_diff(&self, other: &Tensor) -> f64 {
        assert_eq!(self.shape, other.shape, "max_abs_diff on mismatched shapes");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Square-kernel convolution geometry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvGeometry {
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
    pub groups: usize,
}

impl ConvGeometry {
    pub fn new(kernel: usize, stride: usize, padding: usize, groups: usize) -> Result<Self> {
        if kernel == 0 || stride == 0 || groups == 0 {
            return Err(Error::Geometry(format!(
                "kernel ({kernel}), stride ({stride}) and groups ({groups}) must be positive"
            )));
        }
        Ok(Self { kernel, stride, padding, groups })
    }

    pub fn unit(kernel: usize, stride: usize, padding: usize) -> Self {
        Self { kernel, stride, padding, groups: 1 }
    }

    /// Output spatial extent for one input dimension.
    pub fn out_size(&self, input: usize) -> Result<usize> {
        let padded = input + 2 * self.padding;
        if padded < self.kernel {
            return Err(Error::Geometry(format!(
                "kernel {} larger than padded input {} (input {}, padding {})",
                self.kernel, padded, input, self.padding
            )));
        }
        Ok((padded - self.kernel) / self.stride + 1)
    }
}

/// `out += a * b` for row-major `a: [m,k]`, `b: [k,p]`, `out: [m,p]`.
///
/// i-k-j loop order: the inner loop walks contiguous rows of `b` and `out`,
/// which the compiler vectorizes. The k-order of accumulation is fixed, so
/// results are deterministic.
fn matmul_acc(a: &[f64], b: &[f64], m: usize, k: usize, p: usize, out: &mut [f64]) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * p);
    debug_assert_eq!(out.len(), m * p);
    for i in 0..m {
        let a_row = &a[i * k..(i + 1) * k];
        let out_row = &mut out[i * p..(i + 1) * p];
        for (l, &av) in a_row.iter().enumerate() {
            let b_row = &b[l * p..(l + 1) * p];
            for (o, &bv) in out_row.iter_mut().zip(b_row) {
                *o += av * bv;
            }
        }
    }
}

/// Exact matrix product of `a: [M,K]` and `b: [K,P]`.
pub fn matmul(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    let (m, k) = dims2(a, "matmul lhs")?;
    let (k2, p) = dims2(b, "matmul rhs")?;
    if k != k2 {
        return Err(Error::Shape {
            op: "matmul",
            detail: format!("inner dimensions disagree: [{m},{k}] x [{k2},{p}]"),
        });
    }
    let mut out = Tensor::zeros(&[m, p]);
    matmul_acc(a.data(), b.data(), m, k, p, out.data_mut());
    Ok(out)
}

/// `aᵀ · b` without materializing the transpose: `a: [k,m]`, `b: [k,p]` → `[m,p]`.
pub fn matmul_tn(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    let (k, m) = dims2(a, "matmul_tn lhs")?;
    let (k2, p) = dims2(b, "matmul_tn rhs")?;
    if k != k2 {
        return Err(Error::Shape {
            op: "matmul_tn",
            detail: format!("leading dimensions disagree: [{k},{m}]ᵀ x [{k2},{p}]"),
        });
    }
    let mut out = Tensor::zeros(&[m, p]);
    let (ad, bd, od) = (a.data(), b.data(), out.data_mut());
    for l in 0..k {
        let a_row = &ad[l * m..(l + 1) * m];
        let b_row = &bd[l * p..(l + 1) * p];
        for (i, &av) in a_row.iter().enumerate() {
            let out_row = &mut od[i * p..(i + 1) * p];
            for (o, &bv) in out_row.iter_mut().zip(b_row) {
                *o += av * bv;
            }
        }
    }
    Ok(out)
}

/// `a · bᵀ`: `a: [m,k]`, `b: [p,k]` → `[m,p]`.
pub fn matmul_nt(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    let (m, k) = dims2(a, "matmul_nt lhs")?;
    let (p, k2) = dims2(b, "matmul_nt rhs")?;
    if k != k2 {
        return Err(Error::Shape {
            op: "matmul_nt",
            detail: format!("trailing dimensions disagree: [{m},{k}] x [{p},{k2}]ᵀ"),
        });
    }
    let mut out = Tensor::zeros(&[m, p]);
    let (ad, bd, od) = (a.data(), b.data(), out.data_mut());
    for i in 0..m {
        let a_row = &ad[i * k..(i + 1) * k];
        for j in 0..p {
            let b_row = &bd[j * k..(j + 1) * k];
            let mut acc = 0.0;
            for (&av, &bv) in a_row.iter().zip(b_row) {
                acc += av * bv;
            }
            od[i * p + j] = acc;
        }
    }
    Ok(out)
}

fn dims2(t: &Tensor, what: &'static str) -> Result<(usize, usize)> {
    match t.shape() {
        [m, k] => Ok((*m, *k)),
        s => Err(Error::Shape { op: what, detail: format!("expected rank-2, got {s:?}") }),
    }
}

fn conv_check(
    input: &Tensor,
    weight: &Tensor,
    bias: Option<&Tensor>,
    geom: &ConvGeometry,
) -> Result<(usize, usize, usize, usize, usize, usize, usize)> {
    let [n, c_in, h, w] = *as4(input, "conv2d input")?;
    let [c_out, c_in_g, kh, kw] = *as4(weight, "conv2d weight")?;
    let g = geom.groups;
    if kh != geom.kernel || kw != geom.kernel {
        return Err(Error::Shape {
            op: "conv2d",
            detail: format!("weight kernel {kh}x{kw} does not match geometry kernel {}", geom.kernel),
        });
    }
    if c_in % g != 0 || c_out % g != 0 {
        return Err(Error::Geometry(format!(
            "channels (in {c_in}, out {c_out}) must be divisible by groups {g}"
        )));
    }
    if c_in_g != c_in / g {
        return Err(Error::Shape {
            op: "conv2d",
            detail: format!("weight expects {c_in_g} input channels per group, input has {}", c_in / g),
        });
    }
    if let Some(b) = bias {
        if b.shape() != [c_out] {
            return Err(Error::Shape {
                op: "conv2d",
                detail: format!("bias shape {:?}, expected [{c_out}]", b.shape()),
            });
        }
    }
    let h_out = geom.out_size(h)?;
    let w_out = geom.out_size(w)?;
    Ok((n, c_in, h, w, c_out, h_out, w_out))
}

fn as4<'t>(t: &'t Tensor, what: &'static str) -> Result<&'t [usize; 4]> {
    t.shape()
        .try_into()
        .map_err(|_| Error::Shape { op: what, detail: format!("expected rank-4, got {:?}", t.shape()) })
}

/// Lower one sample's group into a `[c_in_g*d*d, h_out*w_out]` patch matrix.
#[allow(clippy::too_many_arguments)]
fn im2col(
    input: &[f64],
    c_in_g: usize,
    h: usize,
    w: usize,
    geom: &ConvGeometry,
    h_out: usize,
    w_out: usize,
    col: &mut [f64],
) {
    let d = geom.kernel;
    let hw_out = h_out * w_out;
    for c in 0..c_in_g {
        let plane = &input[c * h * w..(c + 1) * h * w];
        for kh in 0..d {
            for kw in 0..d {
                let row = &mut col[(c * d * d + kh * d + kw) * hw_out..][..hw_out];
                for oh in 0..h_out {
                    let ih = (oh * geom.stride + kh) as isize - geom.padding as isize;
                    let out_row = &mut row[oh * w_out..(oh + 1) * w_out];
                    if ih < 0 || ih >= h as isize {
                        out_row.fill(0.0);
                        continue;
                    }
                    let in_row = &plane[ih as usize * w..(ih as usize + 1) * w];
                    for (ow, o) in out_row.iter_mut().enumerate() {
                        let iw = (ow * geom.stride + kw) as isize - geom.padding as isize;
                        *o = if iw < 0 || iw >= w as isize { 0.0 } else { in_row[iw as usize] };
                    }
                }
            }
        }
    }
}

/// Scatter-add the patch matrix back onto an input-shaped gradient.
#[allow(clippy::too_many_arguments)]
fn col2im(
    col: &[f64],
    c_in_g: usize,
    h: usize,
    w: usize,
    geom: &ConvGeometry,
    h_out: usize,
    w_out: usize,
    grad_input: &mut [f64],
) {
    let d = geom.kernel;
    let hw_out = h_out * w_out;
    for c in 0..c_in_g {
        let plane = &mut grad_input[c * h * w..(c + 1) * h * w];
        for kh in 0..d {
            for kw in 0..d {
                let row = &col[(c * d * d + kh * d + kw) * hw_out..][..hw_out];
                for oh in 0..h_out {
                    let ih = (oh * geom.stride + kh) as isize - geom.padding as isize;
                    if ih < 0 || ih >= h as isize {
                        continue;
                    }
                    for ow in 0..w_out {
                        let iw = (ow * geom.stride + kw) as isize - geom.padding as isize;
                        if iw < 0 || iw >= w as isize {
                            continue;
                        }
                        plane[ih as usize * w + iw as usize] += row[oh * w_out + ow];
                    }
                }
            }
        }
    }
}

/// Grouped 2-D cross-correlation via im2col + matmul.
///
/// Group `k` consumes input channels `[k*C_in/g, (k+1)*C_in/g)` and produces
/// output channels `[k*C_out/g, (k+1)*C_out/g)`.
pub fn conv2d(
    input: &Tensor,
    weight: &Tensor,
    bias: Option<&Tensor>,
    geom: &ConvGeometry,
) -> Result<Tensor> {
    let (n, c_in, h, w, c_out, h_out, w_out) = conv_check(input, weight, bias, geom)?;
    let g = geom.groups;
    let (c_in_g, c_out_g) = (c_in / g, c_out / g);
    let d = geom.kernel;
    let k = c_in_g * d * d;
    let hw_out = h_out * w_out;

    let mut out = Tensor::zeros(&[n, c_out, h_out, w_out]);
    // Seed the accumulators with the bias so the summation order is
    // identical to `conv2d_direct` (bias first, then taps in k order).
    if let Some(b) = bias {
        for s in 0..n {
            for co in 0..c_out {
                out.data_mut()[(s * c_out + co) * hw_out..(s * c_out + co + 1) * hw_out]
                    .fill(b.data()[co]);
            }
        }
    }
    let mut col = vec![0.0; k * hw_out];
    for s in 0..n {
        let sample = &input.data()[s * c_in * h * w..(s + 1) * c_in * h * w];
        for grp in 0..g {
            im2col(&sample[grp * c_in_g * h * w..], c_in_g, h, w, geom, h_out, w_out, &mut col);
            let w_grp = &weight.data()[grp * c_out_g * k..(grp + 1) * c_out_g * k];
            let out_grp = &mut out.data_mut()
                [(s * c_out + grp * c_out_g) * hw_out..(s * c_out + (grp + 1) * c_out_g) * hw_out];
            matmul_acc(w_grp, &col, c_out_g, k, hw_out, out_grp);
        }
    }
    Ok(out)
}

/// Direct loop-nest convolution, the reference kernel.
///
/// Accumulation order (channel, kh, kw) matches the im2col path exactly, so
/// the two agree bit for bit.
pub fn conv2d_direct(
    input: &Tensor,
    weight: &Tensor,
    bias: Option<&Tensor>,
    geom: &ConvGeometry,
) -> Result<Tensor> {
    let (n, c_in, h, w, c_out, h_out, w_out) = conv_check(input, weight, bias, geom)?;
    let g = geom.groups;
    let (c_in_g, c_out_g) = (c_in / g, c_out / g);
    let d = geom.kernel;

    let mut out = Tensor::zeros(&[n, c_out, h_out, w_out]);
    for s in 0..n {
        for co in 0..c_out {
            let grp = co / c_out_g;
            for oh in 0..h_out {
                for ow in 0..w_out {
                    let mut acc = bias.map_or(0.0, |b| b.data()[co]);
                    for ci in 0..c_in_g {
                        for kh in 0..d {
                            for kw in 0..d {
                                let ih = (oh * geom.stride + kh) as isize - geom.padding as isize;
                                let iw = (ow * geom.stride + kw) as isize - geom.padding as isize;
                                if ih < 0 || ih >= h as isize || iw < 0 || iw >= w as isize {
                                    continue;
                                }
                                let x = input.at(&[s, grp * c_in_g + ci, ih as usize, iw as usize]);
                                let wv = weight.at(&[co, ci, kh, kw]);
                                acc += x * wv;
                            }
                        }
                    }
                    out.set(&[s, co, oh, ow], acc);
                }
            }
        }
    }
    Ok(out)
}

/// Gradients of `conv2d` w.r.t. input, weight and bias.
pub fn conv2d_backward(
    input: &Tensor,
    weight: &Tensor,
    geom: &ConvGeometry,
    grad_out: &Tensor,
    with_bias: bool,
) -> Result<(Tensor, Tensor, Option<Tensor>)> {
    let (n, c_in, h, w, c_out, h_out, w_out) = conv_check(input, weight, None, geom)?;
    if grad_out.shape() != [n, c_out, h_out, w_out] {
        return Err(Error::Shape {
            op: "conv2d_backward",
            detail: format!(
                "grad_out shape {:?}, expected [{n},{c_out},{h_out},{w_out}]",
                grad_out.shape()
            ),
        });
    }
    let g = geom.groups;
    let (c_in_g, c_out_g) = (c_in / g, c_out / g);
    let d = geom.kernel;
    let k = c_in_g * d * d;
    let hw_out = h_out * w_out;

    let mut grad_input = Tensor::zeros(input.shape());
    let mut grad_weight = Tensor::zeros(weight.shape());
    let mut col = vec![0.0; k * hw_out];
    let mut grad_col = vec![0.0; k * hw_out];
    for s in 0..n {
        let sample = &input.data()[s * c_in * h * w..(s + 1) * c_in * h * w];
        for grp in 0..g {
            im2col(&sample[grp * c_in_g * h * w..], c_in_g, h, w, geom, h_out, w_out, &mut col);
            let go = &grad_out.data()
                [(s * c_out + grp * c_out_g) * hw_out..(s * c_out + (grp + 1) * c_out_g) * hw_out];
            // dW_g += G · colᵀ
            let gw = &mut grad_weight.data_mut()[grp * c_out_g * k..(grp + 1) * c_out_g * k];
            for co in 0..c_out_g {
                let g_row = &go[co * hw_out..(co + 1) * hw_out];
                let w_row = &mut gw[co * k..(co + 1) * k];
                for (l, wv) in w_row.iter_mut().enumerate() {
                    let c_row = &col[l * hw_out..(l + 1) * hw_out];
                    let mut acc = 0.0;
                    for (&gv, &cv) in g_row.iter().zip(c_row) {
                        acc += gv * cv;
                    }
                    *wv += acc;
                }
            }
            // grad_col = Wᵀ · G, then scatter back
            grad_col.fill(0.0);
            let w_grp = &weight.data()[grp * c_out_g * k..(grp + 1) * c_out_g * k];
            for co in 0..c_out_g {
                let w_row = &w_grp[co * k..(co + 1) * k];
                let g_row = &go[co * hw_out..(co + 1) * hw_out];
                for (l, &wv) in w_row.iter().enumerate() {
                    let gc_row = &mut grad_col[l * hw_out..(l + 1) * hw_out];
                    for (o, &gv) in gc_row.iter_mut().zip(g_row) {
                        *o += wv * gv;
                    }
                }
            }
            let gi = &mut grad_input.data_mut()
                [(s * c_in + grp * c_in_g) * h * w..(s * c_in + (grp + 1) * c_in_g) * h * w];
            col2im(&grad_col, c_in_g, h, w, geom, h_out, w_out, gi);
        }
    }
    let grad_bias = if with_bias {
        let mut gb = Tensor::zeros(&[c_out]);
        for s in 0..n {
            for co in 0..c_out {
                let mut acc = 0.0;
                for &v in &grad_out.data()[(s * c_out + co) * hw_out..(s * c_out + co + 1) * hw_out] {
                    acc += v;
                }
                gb.data_mut()[co] += acc;
            }
        }
        Some(gb)
    } else {
        None
    };
    Ok((grad_input, grad_weight, grad_bias))
}

fn split_dims(t: &Tensor, what: &'static str) -> Result<(usize, usize, usize)> {
    match t.shape() {
        [n, c] => Ok((*n, *c, 1)),
        [n, c, h, w] => Ok((*n, *c, h * w)),
        s => Err(Error::Shape { op: what, detail: format!("expected rank-2 or rank-4, got {s:?}") }),
    }
}

/// Split along the channel axis into contiguous pieces of the given sizes.
pub fn channel_split(input: &Tensor, sizes: &[usize]) -> Result<Vec<Tensor>> {
    let (n, c, inner) = split_dims(input, "channel_split")?;
    let total: usize = sizes.iter().sum();
    if total != c {
        return Err(Error::Partition(format!(
            "piece sizes {sizes:?} sum to {total}, input has {c} channels"
        )));
    }
    if sizes.iter().any(|&s| s == 0) {
        return Err(Error::Partition(format!("piece sizes must be positive, got {sizes:?}")));
    }
    let mut pieces = Vec::with_capacity(sizes.len());
    let mut start = 0;
    for &sz in sizes {
        let mut shape = input.shape().to_vec();
        shape[1] = sz;
        let mut piece = Tensor::zeros(&shape);
        for s in 0..n {
            let src = &input.data()[(s * c + start) * inner..(s * c + start + sz) * inner];
            piece.data_mut()[s * sz * inner..(s + 1) * sz * inner].copy_from_slice(src);
        }
        pieces.push(piece);
        start += sz;
    }
    Ok(pieces)
}

/// Concatenate pieces along the channel axis, order preserved.
pub fn channel_concat(pieces: &[Tensor]) -> Result<Tensor> {
    let first = pieces.first().ok_or_else(|| Error::Shape {
        op: "channel_concat",
        detail: "no pieces".into(),
    })?;
    let (n, _, inner) = split_dims(first, "channel_concat")?;
    let mut c_total = 0;
    for p in pieces {
        let (pn, pc, pinner) = split_dims(p, "channel_concat")?;
        if pn != n || pinner != inner || p.shape().len() != first.shape().len() {
            return Err(Error::Shape {
                op: "channel_concat",
                detail: format!("piece shape {:?} incompatible with {:?}", p.shape(), first.shape()),
            });
        }
        c_total += pc;
    }
    let mut shape = first.shape().to_vec();
    shape[1] = c_total;
    let mut out = Tensor::zeros(&shape);
    let mut start = 0;
    for p in pieces {
        let pc = p.shape()[1];
        for s in 0..n {
            let dst = &mut out.data_mut()[(s * c_total + start) * inner..(s * c_total + start + pc) * inner];
            dst.copy_from_slice(&p.data()[s * pc * inner..(s + 1) * pc * inner]);
        }
        start += pc;
    }
    Ok(out)
}

/// Elementwise max(0, x).
pub fn relu(x: &Tensor) -> Tensor {
    let mut out = x.clone();
    for v in out.data_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    out
}

/// 2-D max pooling; returns the output and the flat input index each output
/// element was taken from (for backward).
pub fn max_pool2d(x: &Tensor, window: usize, stride: usize) -> Result<(Tensor, Vec<usize>)> {
    let [n, c, h, w] = *as4(x, "max_pool2d")?;
    if window == 0 || stride == 0 {
        return Err(Error::Geometry("pooling window and stride must be positive".into()));
    }
    if window > h || window > w {
        return Err(Error::Geometry(format!(
            "pooling window {window} larger than input {h}x{w}"
        )));
    }
    let h_out = (h - window) / stride + 1;
    let w_out = (w - window) / stride + 1;
    let mut out = Tensor::zeros(&[n, c, h_out, w_out]);
    let mut argmax = vec![0usize; n * c * h_out * w_out];
    for s in 0..n {
        for ch in 0..c {
            let plane_off = (s * c + ch) * h * w;
            let plane = &x.data()[plane_off..plane_off + h * w];
            for oh in 0..h_out {
                for ow in 0..w_out {
                    let mut best = f64::NEG_INFINITY;
                    let mut best_ix = 0;
                    for kh in 0..window {
                        for kw in 0..window {
                            let ix = (oh * stride + kh) * w + ow * stride + kw;
                            if plane[ix] > best {
                                best = plane[ix];
                                best_ix = ix;
                            }
                        }
                    }
                    let o = ((s * c + ch) * h_out + oh) * w_out + ow;
                    out.data_mut()[o] = best;
                    argmax[o] = plane_off + best_ix;
                }
            }
        }
    }
    Ok((out, argmax))
}

pub fn max_pool2d_backward(in_shape: &[usize], argmax: &[usize], grad_out: &Tensor) -> Tensor {
    let mut grad_in = Tensor::zeros(in_shape);
    for (o, &src) in argmax.iter().enumerate() {
        grad_in.data_mut()[src] += grad_out.data()[o];
    }
    grad_in
}

/// Mean over the spatial extent: `[N,C,H,W] → [N,C]`.
pub fn global_avg_pool(x: &Tensor) -> Result<Tensor> {
    let [n, c, h, w] = *as4(x, "global_avg_pool")?;
    let hw = h * w;
    let mut out = Tensor::zeros(&[n, c]);
    for s in 0..n {
        for ch in 0..c {
            let mut acc = 0.0;
            for &v in &x.data()[(s * c + ch) * hw..(s * c + ch + 1) * hw] {
                acc += v;
            }
            out.data_mut()[s * c + ch] = acc / hw as f64;
        }
    }
    Ok(out)
}

/// Numerically stable row-wise softmax of `[N,K]` logits.
pub fn softmax(logits: &Tensor) -> Result<Tensor> {
    let (n, k) = dims2(logits, "softmax")?;
    let mut out = logits.clone();
    for row in out.data_mut().chunks_mut(k) {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    debug_assert_eq!(out.shape(), [n, k]);
    Ok(out)
}
