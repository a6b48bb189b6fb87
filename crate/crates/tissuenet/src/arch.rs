//! Declarative architecture specs and builders: MLP-, LeNet-, VGG- and
//! ResNet-style networks assembled from stacked layers of basic units,
//! with uniform or hybrid (randomly mixed) unit stacking and the 'r'
//! replacement strategy that keeps boundary blocks dense.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::init::{kaiming_uniform, SeedExt, SeededRng};
use crate::nn::{
    Activation, BasicUnit, ConvLayer, DenseLayer, FlattenLayer, GapLayer, Layer, MaxPoolLayer,
    Model, Parameter, ResidualBlock, StackedLayer, UnitKind,
};
use crate::tensor::ConvGeometry;

/// Channel plan of one basic unit: a private two-transform network
/// c_in' → c_h → c_out'.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnitSpec {
    pub c_in: usize,
    pub c_hidden: usize,
    pub c_out: usize,
}

impl UnitSpec {
    pub const fn new(c_in: usize, c_hidden: usize, c_out: usize) -> Self {
        Self { c_in, c_hidden, c_out }
    }

    fn check(&self) -> Result<()> {
        if self.c_in == 0 || self.c_hidden == 0 || self.c_out == 0 {
            return Err(Error::Config(format!("unit channel counts must be >= 1, got {self:?}")));
        }
        Ok(())
    }
}

/// Randomized unit selection: each unit position draws uniformly from a
/// candidate pool until the drawn input widths tile the layer exactly.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HybridPolicy {
    pub pool: Vec<UnitSpec>,
    pub seed: u64,
}

const HYBRID_MAX_RETRIES: usize = 100;

/// Partition `c_in` input channels into units.
///
/// Without a policy the partition is uniform: m = c_in / unit.c_in
/// identical units (c_in must divide evenly). With a policy, unit shapes
/// are drawn from the pool with a seeded generator; a draw sequence that
/// cannot reach `c_in` exactly is abandoned and redrawn, up to 100 times.
pub fn stack_units(
    unit: &UnitSpec,
    c_in: usize,
    policy: Option<&HybridPolicy>,
) -> Result<Vec<UnitSpec>> {
    match policy {
        None => {
            unit.check()?;
            if c_in % unit.c_in != 0 {
                return Err(Error::Partition(format!(
                    "layer width {} is not divisible by unit input width {}",
                    c_in, unit.c_in
                )));
            }
            Ok(vec![*unit; c_in / unit.c_in])
        }
        Some(policy) => {
            if policy.pool.is_empty() {
                return Err(Error::Policy("empty candidate pool".into()));
            }
            for cand in &policy.pool {
                cand.check()?;
            }
            let mut rng = SeededRng::seed(policy.seed);
            'attempt: for _ in 0..HYBRID_MAX_RETRIES {
                let mut units = Vec::new();
                let mut remaining = c_in;
                while remaining > 0 {
                    let cand = policy.pool[rng.gen_range(0..policy.pool.len())];
                    if cand.c_in > remaining {
                        continue 'attempt;
                    }
                    remaining -= cand.c_in;
                    units.push(cand);
                }
                return Ok(units);
            }
            Err(Error::Policy(format!(
                "could not tile width {} from pool {:?} after {} attempts",
                c_in, policy.pool, HYBRID_MAX_RETRIES
            )))
        }
    }
}

/// 1x1 shortcut projection used when a residual block changes shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectionSpec {
    pub c_in: usize,
    pub c_out: usize,
    pub stride: usize,
}

/// One layer of an architecture, in declarative form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum LayerSpec {
    Conv {
        c_in: usize,
        c_out: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
        activation: Activation,
    },
    StackedConv {
        units: Vec<UnitSpec>,
        kernel: usize,
        /// Stride of each unit's first internal convolution; the second is
        /// always stride 1. This is how stacked layers downsample.
        stride: usize,
        padding: usize,
        activation: Activation,
    },
    Dense { n_in: usize, n_out: usize, activation: Activation },
    StackedDense { units: Vec<UnitSpec>, activation: Activation },
    Residual {
        main: Vec<LayerSpec>,
        projection: Option<ProjectionSpec>,
        activation: Activation,
    },
    MaxPool { window: usize, stride: usize },
    GlobalAvgPool,
    Flatten,
}

impl LayerSpec {
    /// Sum of unit input widths for stacked layers.
    pub fn stacked_c_in(units: &[UnitSpec]) -> usize {
        units.iter().map(|u| u.c_in).sum()
    }

    /// Sum of unit output widths for stacked layers.
    pub fn stacked_c_out(units: &[UnitSpec]) -> usize {
        units.iter().map(|u| u.c_out).sum()
    }

    /// The dense layer pair computing over the same node counts with full
    /// connectivity: every stacked layer of m units {c_in', c_h, c_out'}
    /// becomes one unit {Σc_in', Σc_h, Σc_out'}. Normal layers pass through.
    pub fn dense_counterpart(&self) -> LayerSpec {
        match self {
            LayerSpec::StackedConv { units, kernel, stride, padding, activation } => {
                let merged = UnitSpec::new(
                    Self::stacked_c_in(units),
                    units.iter().map(|u| u.c_hidden).sum(),
                    Self::stacked_c_out(units),
                );
                LayerSpec::StackedConv {
                    units: vec![merged],
                    kernel: *kernel,
                    stride: *stride,
                    padding: *padding,
                    activation: *activation,
                }
            }
            LayerSpec::StackedDense { units, activation } => {
                let merged = UnitSpec::new(
                    Self::stacked_c_in(units),
                    units.iter().map(|u| u.c_hidden).sum(),
                    Self::stacked_c_out(units),
                );
                LayerSpec::StackedDense { units: vec![merged], activation: *activation }
            }
            LayerSpec::Residual { main, projection, activation } => LayerSpec::Residual {
                main: main.iter().map(|l| l.dense_counterpart()).collect(),
                projection: *projection,
                activation: *activation,
            },
            other => other.clone(),
        }
    }

    /// Output shape (without the batch dimension) for a given input shape.
    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        let spatial = |c_in_expect: usize, name: &str| -> Result<(usize, usize, usize)> {
            match input {
                [c, h, w] => {
                    if *c != c_in_expect {
                        Err(Error::Shape {
                            op: "shape_walk",
                            detail: format!("{name} expects {c_in_expect} channels, got {c}"),
                        })
                    } else {
                        Ok((*c, *h, *w))
                    }
                }
                _ => Err(Error::Shape {
                    op: "shape_walk",
                    detail: format!("{name} expects [C,H,W] input, got {input:?}"),
                }),
            }
        };
        match self {
            LayerSpec::Conv { c_in, c_out, kernel, stride, padding, .. } => {
                let (_, h, w) = spatial(*c_in, "conv")?;
                let geom = ConvGeometry::unit(*kernel, *stride, *padding);
                Ok(vec![*c_out, geom.out_size(h)?, geom.out_size(w)?])
            }
            LayerSpec::StackedConv { units, kernel, stride, padding, .. } => {
                let (_, h, w) = spatial(Self::stacked_c_in(units), "stacked-conv")?;
                let left = ConvGeometry::unit(*kernel, *stride, *padding);
                let right = ConvGeometry::unit(*kernel, 1, *padding);
                let (h1, w1) = (left.out_size(h)?, left.out_size(w)?);
                Ok(vec![Self::stacked_c_out(units), right.out_size(h1)?, right.out_size(w1)?])
            }
            LayerSpec::Dense { n_in, n_out, .. } => {
                if input != [*n_in] {
                    return Err(Error::Shape {
                        op: "shape_walk",
                        detail: format!("dense expects [{n_in}], got {input:?}"),
                    });
                }
                Ok(vec![*n_out])
            }
            LayerSpec::StackedDense { units, .. } => {
                let n_in = Self::stacked_c_in(units);
                if input != [n_in] {
                    return Err(Error::Shape {
                        op: "shape_walk",
                        detail: format!("stacked-dense expects [{n_in}], got {input:?}"),
                    });
                }
                Ok(vec![Self::stacked_c_out(units)])
            }
            LayerSpec::Residual { main, projection, .. } => {
                let mut shape = input.to_vec();
                for l in main {
                    shape = l.output_shape(&shape)?;
                }
                let short = match projection {
                    Some(p) => {
                        let (_, h, w) = spatial(p.c_in, "projection")?;
                        let geom = ConvGeometry::unit(1, p.stride, 0);
                        vec![p.c_out, geom.out_size(h)?, geom.out_size(w)?]
                    }
                    None => input.to_vec(),
                };
                if shape != short {
                    return Err(Error::Shape {
                        op: "shape_walk",
                        detail: format!(
                            "residual main path gives {shape:?} but shortcut gives {short:?}"
                        ),
                    });
                }
                Ok(shape)
            }
            LayerSpec::MaxPool { window, stride } => match input {
                [c, h, w] if h >= window && w >= window => Ok(vec![
                    *c,
                    (h - window) / stride + 1,
                    (w - window) / stride + 1,
                ]),
                _ => Err(Error::Shape {
                    op: "shape_walk",
                    detail: format!("max-pool window {window} too large for input {input:?}"),
                }),
            },
            LayerSpec::GlobalAvgPool => match input {
                [c, _, _] => Ok(vec![*c]),
                _ => Err(Error::Shape {
                    op: "shape_walk",
                    detail: format!("global-avg-pool expects [C,H,W], got {input:?}"),
                }),
            },
            LayerSpec::Flatten => Ok(vec![input.iter().product()]),
        }
    }
}

/// Strategy for which blocks/stages a builder replaces with stacked layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// Replace every block/stage.
    All,
    /// 'r': keep the first and last blocks/stages as normal layers and
    /// replace only the intermediate ones.
    Intermediate,
}

/// A complete, serializable architecture description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchSpec {
    pub name: String,
    /// Input shape without the batch dimension: [C,H,W] or [features].
    pub input_shape: Vec<usize>,
    pub layers: Vec<LayerSpec>,
    /// Seed for weight initialization when the spec is built.
    pub seed: u64,
}

impl ArchSpec {
    /// Static shape-walk: chains every layer's output shape into the next
    /// layer's input. Returns each layer's output shape.
    pub fn validate(&self) -> Result<Vec<Vec<usize>>> {
        let mut shape = self.input_shape.clone();
        let mut shapes = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate() {
            shape = layer.output_shape(&shape).map_err(|e| Error::Shape {
                op: "shape_walk",
                detail: format!("layer {} of '{}': {}", i, self.name, e),
            })?;
            shapes.push(shape.clone());
        }
        Ok(shapes)
    }

    /// Output shape of the final layer.
    pub fn output_shape(&self) -> Result<Vec<usize>> {
        self.validate()?.pop().ok_or_else(|| Error::Config("empty architecture".into()))
    }

    /// The same architecture with every stacked layer replaced by its
    /// fully-connected counterpart (m = 1 over the merged node counts).
    pub fn dense_counterpart(&self) -> ArchSpec {
        ArchSpec {
            name: format!("{}-dense", self.name),
            input_shape: self.input_shape.clone(),
            layers: self.layers.iter().map(|l| l.dense_counterpart()).collect(),
            seed: self.seed,
        }
    }

    /// Instantiate the model with seeded weight initialization. For a fixed
    /// spec (including seed) the result is identical on every call.
    pub fn build(&self) -> Result<Model> {
        self.validate()?;
        let mut rng = SeededRng::seed(self.seed);
        let mut layers = Vec::with_capacity(self.layers.len());
        for (i, spec) in self.layers.iter().enumerate() {
            layers.push(build_layer(spec, &format!("l{i}"), &mut rng)?);
        }
        Ok(Model::new(layers))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("ArchSpec serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("architecture file: {e}")))
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        Ok(std::fs::write(path, self.to_json())?)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }
}

fn conv_param(name: String, shape: &[usize], fan_in: usize, rng: &mut SeededRng) -> Parameter {
    Parameter::new(name, kaiming_uniform(shape, fan_in, rng))
}

fn build_layer(spec: &LayerSpec, name: &str, rng: &mut SeededRng) -> Result<Layer> {
    Ok(match spec {
        LayerSpec::Conv { c_in, c_out, kernel, stride, padding, activation } => {
            let d = *kernel;
            let w = conv_param(format!("{name}.w"), &[*c_out, *c_in, d, d], d * d * c_in, rng);
            Layer::Conv(ConvLayer::new(
                name,
                w,
                None,
                ConvGeometry::unit(d, *stride, *padding),
                *activation,
            ))
        }
        LayerSpec::StackedConv { units, kernel, stride, padding, activation } => {
            let d = *kernel;
            let geom_l = ConvGeometry::unit(d, *stride, *padding);
            let geom_r = ConvGeometry::unit(d, 1, *padding);
            let built = units
                .iter()
                .enumerate()
                .map(|(u, us)| {
                    us.check()?;
                    let w_l = conv_param(
                        format!("{name}.u{u}.wl"),
                        &[us.c_hidden, us.c_in, d, d],
                        d * d * us.c_in,
                        rng,
                    );
                    let w_r = conv_param(
                        format!("{name}.u{u}.wr"),
                        &[us.c_out, us.c_hidden, d, d],
                        d * d * us.c_hidden,
                        rng,
                    );
                    Ok(BasicUnit::new(UnitKind::Conv, w_l, None, w_r, None, geom_l, geom_r, *activation))
                })
                .collect::<Result<Vec<_>>>()?;
            Layer::StackedConv(StackedLayer::new(name, built))
        }
        LayerSpec::Dense { n_in, n_out, activation } => {
            let w = conv_param(format!("{name}.w"), &[*n_in, *n_out], *n_in, rng);
            Layer::Dense(DenseLayer::new(name, w, None, *activation))
        }
        LayerSpec::StackedDense { units, activation } => {
            let geom = ConvGeometry::unit(1, 1, 0);
            let built = units
                .iter()
                .enumerate()
                .map(|(u, us)| {
                    us.check()?;
                    let w_l = conv_param(
                        format!("{name}.u{u}.wl"),
                        &[us.c_in, us.c_hidden],
                        us.c_in,
                        rng,
                    );
                    let w_r = conv_param(
                        format!("{name}.u{u}.wr"),
                        &[us.c_hidden, us.c_out],
                        us.c_hidden,
                        rng,
                    );
                    Ok(BasicUnit::new(UnitKind::Dense, w_l, None, w_r, None, geom, geom, *activation))
                })
                .collect::<Result<Vec<_>>>()?;
            Layer::StackedDense(StackedLayer::new(name, built))
        }
        LayerSpec::Residual { main, projection, activation } => {
            let built_main = main
                .iter()
                .enumerate()
                .map(|(i, l)| build_layer(l, &format!("{name}.m{i}"), rng))
                .collect::<Result<Vec<_>>>()?;
            let shortcut = projection
                .map(|p| {
                    let w = conv_param(
                        format!("{name}.proj.w"),
                        &[p.c_out, p.c_in, 1, 1],
                        p.c_in,
                        rng,
                    );
                    ConvLayer::new(
                        format!("{name}.proj"),
                        w,
                        None,
                        ConvGeometry::unit(1, p.stride, 0),
                        Activation::Identity,
                    )
                });
            Layer::Residual(ResidualBlock::new(name, built_main, shortcut, *activation))
        }
        LayerSpec::MaxPool { window, stride } => {
            Layer::MaxPool(MaxPoolLayer::new(name, *window, *stride))
        }
        LayerSpec::GlobalAvgPool => Layer::GlobalAvgPool(GapLayer::new(name)),
        LayerSpec::Flatten => Layer::Flatten(FlattenLayer::new(name)),
    })
}

fn stacked_dense(width: usize, unit: &UnitSpec, policy: Option<&HybridPolicy>) -> Result<LayerSpec> {
    Ok(LayerSpec::StackedDense {
        units: stack_units(unit, width, policy)?,
        activation: Activation::Relu,
    })
}

fn stacked_conv(
    width: usize,
    unit: &UnitSpec,
    policy: Option<&HybridPolicy>,
    stride: usize,
) -> Result<LayerSpec> {
    Ok(LayerSpec::StackedConv {
        units: stack_units(unit, width, policy)?,
        kernel: 3,
        stride,
        padding: 1,
        activation: Activation::Relu,
    })
}

fn normal_conv(c_in: usize, c_out: usize, stride: usize, activation: Activation) -> LayerSpec {
    LayerSpec::Conv { c_in, c_out, kernel: 3, stride, padding: 1, activation }
}

/// MLP-style network: the hidden weight matrices of `widths` (for example
/// 784-500-300-10) are traded for stacked-dense layers at the input width,
/// normal dense layers mix between consecutive stacked layers, and a
/// K-class linear head finishes the network.
pub fn build_mlp_style(
    widths: &[usize],
    unit: &UnitSpec,
    hybrid: Option<&HybridPolicy>,
    seed: u64,
) -> Result<ArchSpec> {
    if widths.len() < 2 {
        return Err(Error::Config("need at least input and output widths".into()));
    }
    let (w0, classes) = (widths[0], *widths.last().unwrap());
    // One stacked layer stands in for every pair of hidden weight matrices.
    let n_stacked = (widths.len() - 2).div_ceil(2).max(1);
    let mut layers = Vec::new();
    for i in 0..n_stacked {
        layers.push(stacked_dense(w0, unit, hybrid)?);
        if i + 1 < n_stacked {
            layers.push(LayerSpec::Dense { n_in: w0, n_out: w0, activation: Activation::Relu });
        }
    }
    layers.push(LayerSpec::Dense { n_in: w0, n_out: classes, activation: Activation::Identity });
    Ok(ArchSpec {
        name: format!("mlp-tissue-{}", widths.iter().map(|w| w.to_string()).collect::<Vec<_>>().join("-")),
        input_shape: vec![w0],
        layers,
        seed,
    })
}

/// Plain fully-connected baseline over the same widths (ReLU between
/// layers, linear head).
pub fn build_mlp_baseline(widths: &[usize], seed: u64) -> Result<ArchSpec> {
    if widths.len() < 2 {
        return Err(Error::Config("need at least input and output widths".into()));
    }
    let layers = widths
        .windows(2)
        .enumerate()
        .map(|(i, pair)| LayerSpec::Dense {
            n_in: pair[0],
            n_out: pair[1],
            activation: if i + 2 == widths.len() { Activation::Identity } else { Activation::Relu },
        })
        .collect();
    Ok(ArchSpec {
        name: format!("mlp-{}", widths.iter().map(|w| w.to_string()).collect::<Vec<_>>().join("-")),
        input_shape: vec![widths[0]],
        layers,
        seed,
    })
}

/// Small LeNet-5-style convolutional network for 28x28 grayscale input:
/// normal 5x5 stem, one stacked layer, one normal mixing conv, linear head.
/// `hybrid` randomizes the stacked layer's unit shapes.
pub fn build_lenet_style(
    c_h: usize,
    classes: usize,
    hybrid: Option<&HybridPolicy>,
    seed: u64,
) -> Result<ArchSpec> {
    let unit = UnitSpec::new(2, c_h, 2);
    let layers = vec![
        LayerSpec::Conv { c_in: 1, c_out: 8, kernel: 5, stride: 1, padding: 2, activation: Activation::Relu },
        LayerSpec::MaxPool { window: 2, stride: 2 },
        stacked_conv(8, &unit, hybrid, 1)?,
        LayerSpec::MaxPool { window: 2, stride: 2 },
        normal_conv(8, 16, 1, Activation::Relu),
        LayerSpec::Flatten,
        LayerSpec::Dense { n_in: 16 * 7 * 7, n_out: classes, activation: Activation::Identity },
    ];
    Ok(ArchSpec { name: format!("lenet-tissue-ch{c_h}"), input_shape: vec![1, 28, 28], layers, seed })
}

/// VGG base variants the builder knows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VggBase {
    /// 32x32 input, five stages 64-128-256-512-512.
    Vgg16Cifar,
    /// 64x64 input, deeper stages for tiny images.
    Vgg19Tiny,
}

/// VGG-style network: within each stage the leading convolutions become
/// stacked layers at the incoming width and the final convolution stays a
/// normal layer (widening the stage); max-pool between stages; global
/// average pooling plus one linear layer replace the classifier. Strategy
/// 'r' (`Intermediate`) keeps the first and last stages entirely normal.
pub fn build_vgg_style(
    base: VggBase,
    c_h: usize,
    strategy: Strategy,
    classes: usize,
    seed: u64,
) -> Result<ArchSpec> {
    let unit = UnitSpec::new(2, c_h, 2);
    // (stage width, stacked layers per stage when replaced)
    let (plan, input_shape): (&[(usize, usize)], Vec<usize>) = match base {
        VggBase::Vgg16Cifar => (&[(64, 1), (128, 1), (256, 1), (512, 1), (512, 1)], vec![3, 32, 32]),
        VggBase::Vgg19Tiny => (&[(64, 1), (128, 1), (256, 2), (512, 2), (512, 2)], vec![3, 64, 64]),
    };
    let n_stages = plan.len();
    let mut layers = Vec::new();
    let mut prev = input_shape[0];
    for (i, &(width, n_stacked)) in plan.iter().enumerate() {
        let replace = match strategy {
            Strategy::All => true,
            Strategy::Intermediate => i != 0 && i + 1 != n_stages,
        };
        if i == 0 {
            // The 3-channel input always feeds a normal layer first.
            layers.push(normal_conv(prev, width, 1, Activation::Relu));
            if replace {
                for _ in 0..n_stacked {
                    layers.push(stacked_conv(width, &unit, None, 1)?);
                }
            } else {
                layers.push(normal_conv(width, width, 1, Activation::Relu));
            }
        } else if replace {
            for _ in 0..n_stacked {
                layers.push(stacked_conv(prev, &unit, None, 1)?);
            }
            layers.push(normal_conv(prev, width, 1, Activation::Relu));
        } else {
            layers.push(normal_conv(prev, width, 1, Activation::Relu));
            layers.push(normal_conv(width, width, 1, Activation::Relu));
        }
        layers.push(LayerSpec::MaxPool { window: 2, stride: 2 });
        prev = width;
    }
    layers.push(LayerSpec::GlobalAvgPool);
    layers.push(LayerSpec::Dense { n_in: prev, n_out: classes, activation: Activation::Identity });
    Ok(ArchSpec {
        name: format!("vgg-tissue-{base:?}-ch{c_h}").to_lowercase(),
        input_shape,
        layers,
        seed,
    })
}

/// ResNet base variants the builder knows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResNetBase {
    ResNet18,
    ResNet34,
}

/// ResNet-style network with basic residual blocks (CIFAR stem: one 3x3
/// stride-1 conv, no max-pool).
///
/// Replaced blocks keep the residual structure: the first conv of the block
/// becomes a stacked layer (carrying the block's stride inside its units)
/// and the second conv stays a normal mixing layer. Under `Strategy::All`
/// the boundary blocks — both stage-1 blocks and the final block — go
/// further and become fully stacked (no mixing conv), which is what pushes
/// the totals down to the compact regime. `Strategy::Intermediate` ('r')
/// replaces only the stage-2 and stage-3 blocks and keeps everything else
/// a normal block.
pub fn build_resnet_style(
    base: ResNetBase,
    c_h: usize,
    strategy: Strategy,
    classes: usize,
    seed: u64,
) -> Result<ArchSpec> {
    let blocks: [usize; 4] = match base {
        ResNetBase::ResNet18 => [2, 2, 2, 2],
        ResNetBase::ResNet34 => [3, 4, 6, 3],
    };
    let widths = [64usize, 128, 256, 512];
    let mut layers = vec![normal_conv(3, 64, 1, Activation::Relu)];
    let total_blocks: usize = blocks.iter().sum();
    let mut block_index = 0;
    let mut prev = 64;
    for (stage, (&n, &width)) in blocks.iter().zip(&widths).enumerate() {
        for b in 0..n {
            let stride = if stage > 0 && b == 0 { 2 } else { 1 };
            let transition = prev != width || stride != 1;
            let is_last = block_index + 1 == total_blocks;
            let projection = transition.then_some(ProjectionSpec { c_in: prev, c_out: width, stride });
            let replace = match strategy {
                Strategy::All => true,
                Strategy::Intermediate => stage == 1 || stage == 2,
            };
            let fully_stacked = replace && matches!(strategy, Strategy::All) && (stage == 0 || is_last);
            let main = if !replace {
                vec![
                    normal_conv(prev, width, stride, Activation::Relu),
                    normal_conv(width, width, 1, Activation::Identity),
                ]
            } else {
                // Width changes double inside the units: c_out' = 2·c_in'.
                let unit = if transition {
                    UnitSpec::new(2, c_h, 2 * width / prev)
                } else {
                    UnitSpec::new(2, c_h, 2)
                };
                let stacked = stacked_conv(prev, &unit, None, stride)?;
                if fully_stacked {
                    vec![stacked]
                } else {
                    vec![stacked, normal_conv(width, width, 1, Activation::Identity)]
                }
            };
            layers.push(LayerSpec::Residual { main, projection, activation: Activation::Relu });
            prev = width;
            block_index += 1;
        }
    }
    layers.push(LayerSpec::GlobalAvgPool);
    layers.push(LayerSpec::Dense { n_in: 512, n_out: classes, activation: Activation::Identity });
    Ok(ArchSpec {
        name: format!("resnet-tissue-{base:?}-ch{c_h}").to_lowercase(),
        input_shape: vec![3, 32, 32],
        layers,
        seed,
    })
}
