//! Exact parameter and FLOPs accounting.
//!
//! Counts are exact integers: parameters are weight-tensor entries and
//! FLOPs are multiply-accumulates (MACs) per sample. Two reporting
//! conventions are exposed — 1 FLOP per MAC and 2 FLOPs per MAC — because
//! published tables mix the two. Biases, activations, pooling and residual
//! additions are excluded throughout.

use serde::{Deserialize, Serialize};

use crate::arch::{ArchSpec, LayerSpec, UnitSpec};
use crate::error::{Error, Result};
use crate::nn::{Layer, Model};
use crate::tensor::ConvGeometry;

/// How to convert MAC counts into reported FLOPs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FlopConvention {
    /// 1 FLOP per multiply-accumulate.
    MacIsOne,
    /// 2 FLOPs per multiply-accumulate (multiply + add counted separately).
    MacIsTwo,
}

impl FlopConvention {
    pub fn apply(self, macs: u64) -> u64 {
        match self {
            FlopConvention::MacIsOne => macs,
            FlopConvention::MacIsTwo => 2 * macs,
        }
    }
}

/// Cost record for one layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerCost {
    pub name: String,
    pub kind: String,
    pub params: u64,
    pub macs: u64,
    pub out_shape: Vec<usize>,
}

/// Per-layer costs plus totals for a whole architecture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub arch: String,
    pub layers: Vec<LayerCost>,
    pub total_params: u64,
    pub total_macs: u64,
}

impl CostReport {
    pub fn total_flops(&self, conv: FlopConvention) -> u64 {
        conv.apply(self.total_macs)
    }

    /// Comma-separated rows: layer,kind,params,flops,out_shape.
    pub fn to_csv(&self, conv: FlopConvention) -> String {
        let mut out = String::from("layer,kind,params,flops,out_shape\n");
        for l in &self.layers {
            let shape =
                l.out_shape.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("x");
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                l.name,
                l.kind,
                l.params,
                conv.apply(l.macs),
                shape
            ));
        }
        out.push_str(&format!(
            "total,,{},{},\n",
            self.total_params,
            conv.apply(self.total_macs)
        ));
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("CostReport serialization cannot fail")
    }
}

/// Closed-form memory and MAC cost of a stacked layer of `m` identical
/// units {c_in', c_h, c_out'} with kernel size `d`:
/// M_s = m·d²·c_h·(c_in' + c_out'),
/// C_s = m·d²·c_h·(c_in'·h_l·w_l + c_out'·h_r·w_r),
/// where (h_l, w_l) and (h_r, w_r) are the output maps of the unit's first
/// and second transforms.
pub fn stacked_costs_closed_form(
    m: u64,
    d: u64,
    c_h: u64,
    c_in: u64,
    c_out: u64,
    out_left: (u64, u64),
    out_right: (u64, u64),
) -> (u64, u64) {
    let mem = m * d * d * c_h * (c_in + c_out);
    let macs = m * d * d * c_h * (c_in * out_left.0 * out_left.1 + c_out * out_right.0 * out_right.1);
    (mem, macs)
}

/// The fully-connected counterpart over the same node counts costs exactly
/// m times the stacked layer: M_n = m·M_s and C_n = m·C_s.
pub fn dense_costs_closed_form(
    m: u64,
    d: u64,
    c_h: u64,
    c_in: u64,
    c_out: u64,
    out_left: (u64, u64),
    out_right: (u64, u64),
) -> (u64, u64) {
    let (mem, macs) = stacked_costs_closed_form(m, d, c_h, c_in, c_out, out_left, out_right);
    (m * mem, m * macs)
}

/// Published (or separately measured) reference model record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineRecord {
    /// Top-1 accuracy in percent.
    pub acc: f64,
    pub flops: f64,
    pub params: f64,
}

impl BaselineRecord {
    fn check(&self) -> Result<()> {
        if self.acc <= 0.0 || self.flops <= 0.0 || self.params <= 0.0 {
            return Err(Error::Domain(format!("baseline fields must be positive: {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyScores {
    pub ce: f64,
    pub se: f64,
}

/// Computation efficiency: accuracy per FLOP relative to the baseline,
/// CE = (acc_n/flops_n) / (acc_b/flops_b). Unit-free: both FLOPs fields
/// must simply use the same convention and scale.
pub fn compute_ce(acc_n: f64, flops_n: f64, base: &BaselineRecord) -> Result<f64> {
    base.check()?;
    if flops_n <= 0.0 {
        return Err(Error::Domain(format!("flops must be positive, got {flops_n}")));
    }
    Ok((acc_n / flops_n) / (base.acc / base.flops))
}

/// Storage efficiency: accuracy per parameter relative to the baseline,
/// SE = (acc_n/param_n) / (acc_b/param_b).
pub fn compute_se(acc_n: f64, param_n: f64, base: &BaselineRecord) -> Result<f64> {
    base.check()?;
    if param_n <= 0.0 {
        return Err(Error::Domain(format!("params must be positive, got {param_n}")));
    }
    Ok((acc_n / param_n) / (base.acc / base.params))
}

fn unit_costs(u: &UnitSpec, d: u64, hw_left: u64, hw_right: u64) -> (u64, u64) {
    let (ci, ch, co) = (u.c_in as u64, u.c_hidden as u64, u.c_out as u64);
    let mem = d * d * ch * (ci + co);
    let macs = d * d * ch * (ci * hw_left + co * hw_right);
    (mem, macs)
}

/// Parameters, MACs and output shape of one layer spec given its input
/// shape (batch dimension excluded; counts are per sample).
pub fn count_layer(spec: &LayerSpec, input: &[usize]) -> Result<(u64, u64, Vec<usize>)> {
    let out_shape = spec.output_shape(input)?;
    let (params, macs) = match spec {
        LayerSpec::Conv { c_in, c_out, kernel, .. } => {
            let p = (kernel * kernel * c_in * c_out) as u64;
            let hw = (out_shape[1] * out_shape[2]) as u64;
            (p, p * hw)
        }
        LayerSpec::StackedConv { units, kernel, stride, padding, .. } => {
            let left = ConvGeometry::unit(*kernel, *stride, *padding);
            let right = ConvGeometry::unit(*kernel, 1, *padding);
            let (hl, wl) = (left.out_size(input[1])?, left.out_size(input[2])?);
            let (hr, wr) = (right.out_size(hl)?, right.out_size(wl)?);
            let d = *kernel as u64;
            units.iter().fold((0, 0), |(p, m), u| {
                let (up, um) = unit_costs(u, d, (hl * wl) as u64, (hr * wr) as u64);
                (p + up, m + um)
            })
        }
        LayerSpec::Dense { n_in, n_out, .. } => {
            let p = (n_in * n_out) as u64;
            (p, p)
        }
        LayerSpec::StackedDense { units, .. } => units.iter().fold((0, 0), |(p, m), u| {
            let (up, um) = unit_costs(u, 1, 1, 1);
            (p + up, m + um)
        }),
        LayerSpec::Residual { main, projection, .. } => {
            let mut shape = input.to_vec();
            let (mut p, mut m) = (0, 0);
            for l in main {
                let (lp, lm, next) = count_layer(l, &shape)?;
                p += lp;
                m += lm;
                shape = next;
            }
            if let Some(proj) = projection {
                let pp = (proj.c_in * proj.c_out) as u64;
                p += pp;
                m += pp * (out_shape[1] * out_shape[2]) as u64;
            }
            (p, m)
        }
        LayerSpec::MaxPool { .. } | LayerSpec::GlobalAvgPool | LayerSpec::Flatten => (0, 0),
    };
    Ok((params, macs, out_shape))
}

/// Full per-layer cost report for an architecture.
pub fn analyze(arch: &ArchSpec) -> Result<CostReport> {
    let mut shape = arch.input_shape.clone();
    let mut layers = Vec::with_capacity(arch.layers.len());
    let (mut total_params, mut total_macs) = (0, 0);
    for (i, spec) in arch.layers.iter().enumerate() {
        let (params, macs, out_shape) = count_layer(spec, &shape)?;
        let kind = match spec {
            LayerSpec::Conv { .. } => "normal-conv",
            LayerSpec::StackedConv { .. } => "stacked-conv",
            LayerSpec::Dense { .. } => "dense",
            LayerSpec::StackedDense { .. } => "stacked-dense",
            LayerSpec::Residual { .. } => "residual-block",
            LayerSpec::MaxPool { .. } => "pool",
            LayerSpec::GlobalAvgPool => "global-avg-pool",
            LayerSpec::Flatten => "flatten",
        };
        total_params += params;
        total_macs += macs;
        layers.push(LayerCost {
            name: format!("l{i}"),
            kind: kind.to_string(),
            params,
            macs,
            out_shape: out_shape.clone(),
        });
        shape = out_shape;
    }
    Ok(CostReport { arch: arch.name.clone(), layers, total_params, total_macs })
}

/// Measure a *built* layer by enumeration: parameters are the actual weight
/// tensor entries; MACs are the dimensions of the matrix products the
/// implementation actually executes (weight entries × output positions for
/// convolutions). Independent of the closed forms above — used to
/// cross-check them.
pub fn measure_built_layer(layer: &Layer, input: &[usize]) -> Result<(u64, u64, Vec<usize>)> {
    let conv_out = |geom: &ConvGeometry, h: usize, w: usize| -> Result<(usize, usize)> {
        Ok((geom.out_size(h)?, geom.out_size(w)?))
    };
    match layer {
        Layer::Conv(l) => {
            let p = l.weight.value.len() as u64;
            let (h, w) = conv_out(&l.geom, input[1], input[2])?;
            Ok((p, p * (h * w) as u64, vec![l.weight.value.shape()[0], h, w]))
        }
        Layer::StackedConv(sl) => {
            let (mut p, mut m) = (0u64, 0u64);
            let (mut out_c, mut oh, mut ow) = (0, 0, 0);
            for u in &sl.units {
                let wl = u.w_l.value.len() as u64;
                let wr = u.w_r.value.len() as u64;
                let (hl, wl_sp) = conv_out(&u.geom_l, input[1], input[2])?;
                let (hr, wr_sp) = conv_out(&u.geom_r, hl, wl_sp)?;
                p += wl + wr;
                m += wl * (hl * wl_sp) as u64 + wr * (hr * wr_sp) as u64;
                out_c += u.c_out();
                oh = hr;
                ow = wr_sp;
            }
            Ok((p, m, vec![out_c, oh, ow]))
        }
        Layer::Dense(l) => {
            let p = l.weight.value.len() as u64;
            Ok((p, p, vec![l.weight.value.shape()[1]]))
        }
        Layer::StackedDense(sl) => {
            let (mut p, mut m) = (0u64, 0u64);
            let mut out = 0;
            for u in &sl.units {
                let e = (u.w_l.value.len() + u.w_r.value.len()) as u64;
                p += e;
                m += e;
                out += u.c_out();
            }
            Ok((p, m, vec![out]))
        }
        Layer::Residual(b) => {
            let mut shape = input.to_vec();
            let (mut p, mut m) = (0u64, 0u64);
            for l in &b.main {
                let (lp, lm, next) = measure_built_layer(l, &shape)?;
                p += lp;
                m += lm;
                shape = next;
            }
            if let Some(proj) = &b.shortcut {
                let pp = proj.weight.value.len() as u64;
                let (h, w) = conv_out(&proj.geom, input[1], input[2])?;
                p += pp;
                m += pp * (h * w) as u64;
            }
            Ok((p, m, shape))
        }
        Layer::MaxPool(l) => {
            let h = (input[1] - l.window) / l.stride + 1;
            let w = (input[2] - l.window) / l.stride + 1;
            Ok((0, 0, vec![input[0], h, w]))
        }
        Layer::GlobalAvgPool(_) => Ok((0, 0, vec![input[0]])),
        Layer::Flatten(_) => Ok((0, 0, vec![input.iter().product()])),
    }
}

/// Totals of `measure_built_layer` over a whole model.
pub fn measure_built_model(model: &Model, input_shape: &[usize]) -> Result<(u64, u64)> {
    let mut shape = input_shape.to_vec();
    let (mut p, mut m) = (0u64, 0u64);
    for layer in &model.layers {
        let (lp, lm, next) = measure_built_layer(layer, &shape)?;
        p += lp;
        m += lm;
        shape = next;
    }
    Ok((p, m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arch::{build_mlp_baseline, build_mlp_style, ProjectionSpec};
    use crate::nn::Activation;

    #[test]
    fn conv_layer_counts() {
        // d=3, c_in=16, c_out=32 on an 8x8 output map.
        let spec = LayerSpec::Conv {
            c_in: 16,
            c_out: 32,
            kernel: 3,
            stride: 1,
            padding: 1,
            activation: Activation::Relu,
        };
        let (p, m, out) = count_layer(&spec, &[16, 8, 8]).unwrap();
        assert_eq!(p, 4608);
        assert_eq!(m, 294_912);
        assert_eq!(out, vec![32, 8, 8]);
    }

    #[test]
    fn one_by_one_unit_case() {
        let spec = LayerSpec::Conv {
            c_in: 1,
            c_out: 1,
            kernel: 1,
            stride: 1,
            padding: 0,
            activation: Activation::Identity,
        };
        let (p, m, _) = count_layer(&spec, &[1, 1, 1]).unwrap();
        assert_eq!((p, m), (1, 1));
    }

    #[test]
    fn stacked_closed_form_examples() {
        let (mem, _) = stacked_costs_closed_form(8, 3, 4, 2, 2, (8, 8), (8, 8));
        assert_eq!(mem, 1152);
        let (_, macs) = stacked_costs_closed_form(8, 3, 4, 2, 2, (8, 8), (8, 8));
        assert_eq!(macs, 73_728);
        let (dense_mem, dense_macs) = dense_costs_closed_form(8, 3, 4, 2, 2, (8, 8), (8, 8));
        assert_eq!(dense_mem, 8 * 1152);
        assert_eq!(dense_macs, 8 * 73_728);
    }

    #[test]
    fn m_equals_one_degenerates_to_dense() {
        let (ms, cs) = stacked_costs_closed_form(1, 3, 7, 5, 6, (4, 4), (4, 4));
        let (mn, cn) = dense_costs_closed_form(1, 3, 7, 5, 6, (4, 4), (4, 4));
        assert_eq!((ms, cs), (mn, cn));
    }

    #[test]
    fn ce_se_published_numbers() {
        let base = BaselineRecord { acc: 92.65, flops: 1.09e6, params: 0.55e6 };
        let ce = compute_ce(91.95, 0.03e6, &base).unwrap();
        let se = compute_se(91.95, 0.02e6, &base).unwrap();
        assert!((ce - 36.06).abs() < 0.05, "ce = {ce}");
        assert!((se - 27.29).abs() < 0.05, "se = {se}");
    }

    #[test]
    fn baseline_against_itself_is_one() {
        let base = BaselineRecord { acc: 80.0, flops: 5e8, params: 2e6 };
        assert_eq!(compute_ce(80.0, 5e8, &base).unwrap(), 1.0);
        assert_eq!(compute_se(80.0, 2e6, &base).unwrap(), 1.0);
    }

    #[test]
    fn scores_are_scale_invariant() {
        let base = BaselineRecord { acc: 90.0, flops: 1e6, params: 1e5 };
        let scaled = BaselineRecord { acc: 90.0, flops: 7.3e6, params: 7.3e5 };
        let a = compute_ce(85.0, 2e5, &base).unwrap();
        let b = compute_ce(85.0, 7.3 * 2e5, &scaled).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn nonpositive_inputs_error() {
        let base = BaselineRecord { acc: 90.0, flops: 1e6, params: 1e5 };
        assert!(compute_ce(85.0, 0.0, &base).is_err());
        assert!(compute_se(85.0, -1.0, &base).is_err());
        let bad = BaselineRecord { acc: 0.0, flops: 1e6, params: 1e5 };
        assert!(compute_ce(85.0, 1.0, &bad).is_err());
    }

    #[test]
    fn mlp_baseline_totals_match_hand_count() {
        // 784·500 + 500·300 + 300·10 = 545,000 weights, one MAC each.
        let arch = build_mlp_baseline(&[784, 500, 300, 10], 0).unwrap();
        let report = analyze(&arch).unwrap();
        assert_eq!(report.total_params, 545_000);
        assert_eq!(report.total_macs, 545_000);
        assert_eq!(report.total_flops(FlopConvention::MacIsTwo), 1_090_000);
    }

    #[test]
    fn analyzer_matches_built_model_enumeration() {
        let arch = build_mlp_style(&[64, 32, 10], &crate::arch::UnitSpec::new(2, 4, 2), None, 3)
            .unwrap();
        let report = analyze(&arch).unwrap();
        let model = arch.build().unwrap();
        let (p, m) = measure_built_model(&model, &arch.input_shape).unwrap();
        assert_eq!(report.total_params, p);
        assert_eq!(report.total_macs, m);
        assert_eq!(model.param_count() as u64, p);
    }

    #[test]
    fn residual_block_counts_include_projection() {
        let spec = LayerSpec::Residual {
            main: vec![LayerSpec::Conv {
                c_in: 4,
                c_out: 8,
                kernel: 3,
                stride: 2,
                padding: 1,
                activation: Activation::Identity,
            }],
            projection: Some(ProjectionSpec { c_in: 4, c_out: 8, stride: 2 }),
            activation: Activation::Relu,
        };
        let (p, m, out) = count_layer(&spec, &[4, 8, 8]).unwrap();
        assert_eq!(out, vec![8, 4, 4]);
        assert_eq!(p, 9 * 4 * 8 + 4 * 8);
        assert_eq!(m, 9 * 4 * 8 * 16 + 4 * 8 * 16);
    }

    #[test]
    fn csv_has_header_and_total_row() {
        let arch = build_mlp_baseline(&[8, 4, 2], 0).unwrap();
        let report = analyze(&arch).unwrap();
        let csv = report.to_csv(FlopConvention::MacIsOne);
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "layer,kind,params,flops,out_shape");
        assert!(lines.last().unwrap().starts_with("total,"));
    }
}
