//! Dataset loading and generation: MNIST IDX and CIFAR-10 binary parsers
//! (bit-exact, failing loudly on any byte anomaly), normalization,
//! crop/flip augmentation, and deterministic synthetic datasets for tests
//! and offline environments.

use std::fs;
use std::io::Read;
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};
use crate::init::{SeedExt, SeededRng};
use crate::tensor::Tensor;

/// An in-memory labeled image dataset. Pixels live in [0,1] until
/// `normalize` is applied.
#[derive(Debug, Clone)]
pub struct Dataset {
    /// `[N,C,H,W]` for images or `[N,F]` for flat features.
    pub images: Tensor,
    pub labels: Vec<usize>,
    pub class_count: usize,
}

impl Dataset {
    pub fn new(images: Tensor, labels: Vec<usize>, class_count: usize) -> Result<Self> {
        if images.shape()[0] != labels.len() {
            return Err(Error::Format {
                path: "<memory>".into(),
                detail: format!(
                    "{} images but {} labels",
                    images.shape()[0],
                    labels.len()
                ),
            });
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= class_count) {
            return Err(Error::Format {
                path: "<memory>".into(),
                detail: format!("label {bad} out of range for {class_count} classes"),
            });
        }
        Ok(Self { images, labels, class_count })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Per-sample feature count (product of non-batch dimensions).
    pub fn sample_len(&self) -> usize {
        self.images.shape()[1..].iter().product()
    }

    /// The same data reshaped to `[N, F]` for MLP-style models.
    pub fn flattened(&self) -> Result<Dataset> {
        let n = self.images.shape()[0];
        Ok(Dataset {
            images: self.images.reshape(&[n, self.sample_len()])?,
            labels: self.labels.clone(),
            class_count: self.class_count,
        })
    }

    /// A new dataset holding the samples at `indices`, in order.
    pub fn subset(&self, indices: &[usize]) -> Result<Dataset> {
        let f = self.sample_len();
        let mut shape = self.images.shape().to_vec();
        shape[0] = indices.len();
        let mut data = Vec::with_capacity(indices.len() * f);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            if i >= self.len() {
                return Err(Error::Domain(format!("subset index {i} out of range")));
            }
            data.extend_from_slice(&self.images.data()[i * f..(i + 1) * f]);
            labels.push(self.labels[i]);
        }
        Ok(Dataset { images: Tensor::new(shape, data)?, labels, class_count: self.class_count })
    }

    /// The minibatch `[start, start+len)` as (images, labels).
    pub fn batch(&self, order: &[usize], start: usize, len: usize) -> Result<(Tensor, Vec<usize>)> {
        let idx = &order[start..(start + len).min(order.len())];
        let sub = self.subset(idx)?;
        Ok((sub.images, sub.labels))
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    fs::File::open(path)
        .map_err(|e| Error::Format { path: path.display().to_string(), detail: e.to_string() })?
        .read_to_end(&mut buf)?;
    Ok(buf)
}

fn be_u32(bytes: &[u8], offset: usize, path: &Path) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::Format {
            path: path.display().to_string(),
            detail: format!("truncated header at byte {offset}"),
        })
}

const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

/// Parse an IDX3 image file: big-endian magic 0x803, count, rows, cols,
/// then unsigned pixel bytes. Pixels are scaled to [0,1].
pub fn read_idx_images(path: &Path) -> Result<Tensor> {
    let bytes = read_file(path)?;
    let magic = be_u32(&bytes, 0, path)?;
    if magic != IDX_IMAGES_MAGIC {
        return Err(Error::Format {
            path: path.display().to_string(),
            detail: format!("bad magic {magic:#010x}, expected {IDX_IMAGES_MAGIC:#010x}"),
        });
    }
    let n = be_u32(&bytes, 4, path)? as usize;
    let rows = be_u32(&bytes, 8, path)? as usize;
    let cols = be_u32(&bytes, 12, path)? as usize;
    let expected = 16 + n * rows * cols;
    if bytes.len() != expected {
        return Err(Error::Format {
            path: path.display().to_string(),
            detail: format!("file is {} bytes, header implies {expected}", bytes.len()),
        });
    }
    let data = bytes[16..].iter().map(|&b| b as f64 / 255.0).collect();
    Tensor::new(vec![n, 1, rows, cols], data)
}

/// Parse an IDX1 label file: big-endian magic 0x801, count, label bytes.
pub fn read_idx_labels(path: &Path) -> Result<Vec<usize>> {
    let bytes = read_file(path)?;
    let magic = be_u32(&bytes, 0, path)?;
    if magic != IDX_LABELS_MAGIC {
        return Err(Error::Format {
            path: path.display().to_string(),
            detail: format!("bad magic {magic:#010x}, expected {IDX_LABELS_MAGIC:#010x}"),
        });
    }
    let n = be_u32(&bytes, 4, path)? as usize;
    if bytes.len() != 8 + n {
        return Err(Error::Format {
            path: path.display().to_string(),
            detail: format!("file is {} bytes, header implies {}", bytes.len(), 8 + n),
        });
    }
    Ok(bytes[8..].iter().map(|&b| b as usize).collect())
}

fn idx_pair(dir: &Path, images: &str, labels: &str) -> Result<Dataset> {
    let imgs = read_idx_images(&dir.join(images))?;
    let lbls = read_idx_labels(&dir.join(labels))?;
    if imgs.shape()[0] != lbls.len() {
        return Err(Error::Format {
            path: dir.join(images).display().to_string(),
            detail: format!("{} images but {} labels", imgs.shape()[0], lbls.len()),
        });
    }
    Dataset::new(imgs, lbls, 10)
}

/// Load the MNIST train/test splits from their standard IDX file names.
pub fn load_mnist(dir: &Path) -> Result<(Dataset, Dataset)> {
    Ok((
        idx_pair(dir, "train-images-idx3-ubyte", "train-labels-idx1-ubyte")?,
        idx_pair(dir, "t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte")?,
    ))
}

const CIFAR_RECORD: usize = 3073;

/// Parse one CIFAR-10 binary batch file: 3073-byte records, each a label
/// byte followed by 3072 channel-major (R,G,B plane) pixels.
pub fn read_cifar_batch(path: &Path) -> Result<(Vec<f64>, Vec<usize>)> {
    let bytes = read_file(path)?;
    if bytes.is_empty() || bytes.len() % CIFAR_RECORD != 0 {
        return Err(Error::Format {
            path: path.display().to_string(),
            detail: format!("file is {} bytes, not a positive multiple of {CIFAR_RECORD}", bytes.len()),
        });
    }
    let n = bytes.len() / CIFAR_RECORD;
    let mut pixels = Vec::with_capacity(n * 3072);
    let mut labels = Vec::with_capacity(n);
    for rec in bytes.chunks(CIFAR_RECORD) {
        if rec[0] > 9 {
            return Err(Error::Format {
                path: path.display().to_string(),
                detail: format!("label byte {} out of range 0..9", rec[0]),
            });
        }
        labels.push(rec[0] as usize);
        pixels.extend(rec[1..].iter().map(|&b| b as f64 / 255.0));
    }
    Ok((pixels, labels))
}

/// Load CIFAR-10 from its standard binary batch file names.
pub fn load_cifar10(dir: &Path) -> Result<(Dataset, Dataset)> {
    let mut pixels = Vec::new();
    let mut labels = Vec::new();
    for i in 1..=5 {
        let (p, l) = read_cifar_batch(&dir.join(format!("data_batch_{i}.bin")))?;
        pixels.extend(p);
        labels.extend(l);
    }
    let n = labels.len();
    let train = Dataset::new(Tensor::new(vec![n, 3, 32, 32], pixels)?, labels, 10)?;
    let (p, l) = read_cifar_batch(&dir.join("test_batch.bin"))?;
    let n = l.len();
    let test = Dataset::new(Tensor::new(vec![n, 3, 32, 32], p)?, l, 10)?;
    Ok((train, test))
}

const CIFAR100_RECORD: usize = 3074;

/// Parse one CIFAR-100 binary file: 3074-byte records, each a coarse label
/// byte, a fine label byte, then 3072 channel-major pixels. Fine labels are
/// used.
pub fn read_cifar100_batch(path: &Path) -> Result<(Vec<f64>, Vec<usize>)> {
    let bytes = read_file(path)?;
    if bytes.is_empty() || bytes.len() % CIFAR100_RECORD != 0 {
        return Err(Error::Format {
            path: path.display().to_string(),
            detail: format!(
                "file is {} bytes, not a positive multiple of {CIFAR100_RECORD}",
                bytes.len()
            ),
        });
    }
    let n = bytes.len() / CIFAR100_RECORD;
    let mut pixels = Vec::with_capacity(n * 3072);
    let mut labels = Vec::with_capacity(n);
    for rec in bytes.chunks(CIFAR100_RECORD) {
        if rec[1] > 99 {
            return Err(Error::Format {
                path: path.display().to_string(),
                detail: format!("fine label byte {} out of range 0..99", rec[1]),
            });
        }
        labels.push(rec[1] as usize);
        pixels.extend(rec[2..].iter().map(|&b| b as f64 / 255.0));
    }
    Ok((pixels, labels))
}

/// Load CIFAR-100 from its standard binary file names (train.bin, test.bin).
pub fn load_cifar100(dir: &Path) -> Result<(Dataset, Dataset)> {
    let mut out = Vec::with_capacity(2);
    for file in ["train.bin", "test.bin"] {
        let (p, l) = read_cifar100_batch(&dir.join(file))?;
        let n = l.len();
        out.push(Dataset::new(Tensor::new(vec![n, 3, 32, 32], p)?, l, 100)?);
    }
    let test = out.pop().unwrap();
    Ok((out.pop().unwrap(), test))
}

/// Write images in IDX3 format (pixels quantized to bytes).
pub fn write_idx_images(path: &Path, images: &Tensor) -> Result<()> {
    let shape = images.shape();
    let (n, rows, cols) = (shape[0], shape[2], shape[3]);
    let mut bytes = Vec::with_capacity(16 + n * rows * cols);
    bytes.extend(IDX_IMAGES_MAGIC.to_be_bytes());
    bytes.extend((n as u32).to_be_bytes());
    bytes.extend((rows as u32).to_be_bytes());
    bytes.extend((cols as u32).to_be_bytes());
    bytes.extend(images.data().iter().map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8));
    Ok(fs::write(path, bytes)?)
}

/// Write labels in IDX1 format.
pub fn write_idx_labels(path: &Path, labels: &[usize]) -> Result<()> {
    let mut bytes = Vec::with_capacity(8 + labels.len());
    bytes.extend(IDX_LABELS_MAGIC.to_be_bytes());
    bytes.extend((labels.len() as u32).to_be_bytes());
    bytes.extend(labels.iter().map(|&l| l as u8));
    Ok(fs::write(path, bytes)?)
}

/// Write one CIFAR-10 binary batch file.
pub fn write_cifar_batch(path: &Path, ds: &Dataset) -> Result<()> {
    let f = ds.sample_len();
    let mut bytes = Vec::with_capacity(ds.len() * CIFAR_RECORD);
    for i in 0..ds.len() {
        bytes.push(ds.labels[i] as u8);
        bytes.extend(
            ds.images.data()[i * f..(i + 1) * f]
                .iter()
                .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8),
        );
    }
    Ok(fs::write(path, bytes)?)
}

/// Per-channel affine normalization: x ← (x − mean)/std.
pub fn normalize(ds: &Dataset, mean: &[f64], std: &[f64]) -> Result<Dataset> {
    apply_affine(ds, mean, std, false)
}

/// Inverse of `normalize`: x ← x·std + mean.
pub fn denormalize(ds: &Dataset, mean: &[f64], std: &[f64]) -> Result<Dataset> {
    apply_affine(ds, mean, std, true)
}

fn apply_affine(ds: &Dataset, mean: &[f64], std: &[f64], invert: bool) -> Result<Dataset> {
    let channels = if ds.images.shape().len() == 4 { ds.images.shape()[1] } else { 1 };
    if mean.len() != channels || std.len() != channels {
        return Err(Error::Config(format!(
            "expected {channels} per-channel constants, got {} means / {} stds",
            mean.len(),
            std.len()
        )));
    }
    if let Some(&bad) = std.iter().find(|&&s| s <= 0.0) {
        return Err(Error::Domain(format!("std must be positive, got {bad}")));
    }
    let mut images = ds.images.clone();
    let plane = ds.sample_len() / channels;
    for (i, v) in images.data_mut().iter_mut().enumerate() {
        let c = (i / plane) % channels;
        *v = if invert { *v * std[c] + mean[c] } else { (*v - mean[c]) / std[c] };
    }
    Ok(Dataset { images, labels: ds.labels.clone(), class_count: ds.class_count })
}

/// Seeded random-crop + horizontal-flip augmentation stream. Each call to
/// `epoch` yields a freshly augmented copy of the base dataset; the whole
/// stream replays identically from the same seed.
pub struct AugmentStream {
    base: Dataset,
    pad: usize,
    rng: SeededRng,
}

impl AugmentStream {
    pub fn new(base: Dataset, pad: usize, seed: u64) -> Self {
        Self { base, pad, rng: SeededRng::seed(seed) }
    }

    pub fn epoch(&mut self) -> Result<Dataset> {
        let shape = self.base.images.shape().to_vec();
        let [n, c, h, w] = [shape[0], shape[1], shape[2], shape[3]];
        let mut out = Tensor::zeros(&shape);
        for s in 0..n {
            // Crop offsets select a h×w window from the pad-extended image.
            let dy = self.rng.gen_range(0..=2 * self.pad) as isize - self.pad as isize;
            let dx = self.rng.gen_range(0..=2 * self.pad) as isize - self.pad as isize;
            let flip = self.rng.gen_bool(0.5);
            for ch in 0..c {
                for y in 0..h {
                    for x in 0..w {
                        let sy = y as isize + dy;
                        let sx = x as isize + dx;
                        if sy < 0 || sy >= h as isize || sx < 0 || sx >= w as isize {
                            continue;
                        }
                        let tx = if flip { w - 1 - x } else { x };
                        let v = self.base.images.at(&[s, ch, sy as usize, sx as usize]);
                        out.set(&[s, ch, y, tx], v);
                    }
                }
            }
        }
        Dataset::new(out, self.base.labels.clone(), self.base.class_count)
    }
}

/// Deterministic pseudo-random dataset of flat feature vectors. In
/// separable mode, class k's mean sits at +6 on feature k (unit noise), so
/// classes are linearly separable by construction.
pub fn synth_dataset(
    seed: u64,
    n: usize,
    classes: usize,
    features: usize,
    separable: bool,
) -> Result<Dataset> {
    if classes == 0 || n < classes || features < classes {
        return Err(Error::Config(format!(
            "need n >= classes and features >= classes, got n={n} classes={classes} features={features}"
        )));
    }
    let mut rng = SeededRng::seed(seed);
    let mut data = Vec::with_capacity(n * features);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let k = i % classes; // balanced within ±1
        for f in 0..features {
            let noise: f64 = rng.gen_range(-1.0..1.0);
            let mean = if separable && f == k { 6.0 } else { 0.0 };
            data.push(mean + noise);
        }
        labels.push(k);
    }
    Ok(Dataset { images: Tensor::new(vec![n, features], data)?, labels, class_count: classes })
}

/// Seven-segment display geometry used by the synthetic digit renderer.
/// Segment order: top, top-right, bottom-right, bottom, bottom-left,
/// top-left, middle.
const DIGIT_SEGMENTS: [[bool; 7]; 10] = [
    [true, true, true, true, true, true, false],    // 0
    [false, true, true, false, false, false, false], // 1
    [true, true, false, true, true, false, true],   // 2
    [true, true, true, true, false, false, true],   // 3
    [false, true, true, false, false, true, true],  // 4
    [true, false, true, true, false, true, true],   // 5
    [true, false, true, true, true, true, true],    // 6
    [true, true, true, false, false, false, false], // 7
    [true, true, true, true, true, true, true],     // 8
    [true, true, true, true, false, true, true],    // 9
];

/// Render a 28×28 grayscale glyph for `digit` with positional jitter,
/// stroke-intensity variation and pixel noise. Deterministic per rng state.
fn render_digit(digit: usize, rng: &mut SeededRng) -> [f64; 28 * 28] {
    // Glyph box: 12 wide × 18 tall, nominal top-left at (8, 5).
    let (bw, bh, t) = (12isize, 18isize, 2isize);
    let ox = 8 + rng.gen_range(-3..=3);
    let oy = 5 + rng.gen_range(-3..=3);
    let amp: f64 = rng.gen_range(0.6..1.0);
    // Each segment as (x, y, w, h) inside the glyph box.
    let half = bh / 2;
    let segs: [(isize, isize, isize, isize); 7] = [
        (0, 0, bw, t),                    // top
        (bw - t, 0, t, half + t / 2),     // top-right
        (bw - t, half, t, bh - half),     // bottom-right
        (0, bh - t, bw, t),               // bottom
        (0, half, t, bh - half),          // bottom-left
        (0, 0, t, half + t / 2),          // top-left
        (0, half - t / 2, bw, t),         // middle
    ];
    let mut img = [0.0f64; 28 * 28];
    for (s, &(sx, sy, sw, sh)) in segs.iter().enumerate() {
        if !DIGIT_SEGMENTS[digit][s] {
            continue;
        }
        for y in sy..sy + sh {
            for x in sx..sx + sw {
                let (px, py) = (ox + x, oy + y);
                if (0..28).contains(&px) && (0..28).contains(&py) {
                    img[(py * 28 + px) as usize] = amp;
                }
            }
        }
    }
    for v in &mut img {
        let noise: f64 = rng.gen_range(-0.05..0.05);
        *v = (*v + noise).clamp(0.0, 1.0);
    }
    img
}

/// Deterministic MNIST-like dataset: seven-segment digit glyphs with
/// jitter and noise, shape `[n,1,28,28]`, balanced labels.
pub fn synth_digits(seed: u64, n: usize) -> Result<Dataset> {
    let mut rng = SeededRng::seed(seed);
    let mut data = Vec::with_capacity(n * 28 * 28);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let digit = i % 10;
        data.extend_from_slice(&render_digit(digit, &mut rng));
        labels.push(digit);
    }
    Ok(Dataset { images: Tensor::new(vec![n, 1, 28, 28], data)?, labels, class_count: 10 })
}

/// Deterministic CIFAR-like dataset: per-class sinusoidal color textures
/// with random phase and noise, shape `[n,3,32,32]`.
pub fn synth_color_textures(seed: u64, n: usize) -> Result<Dataset> {
    let mut rng = SeededRng::seed(seed);
    let mut data = Vec::with_capacity(n * 3 * 32 * 32);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let k = i % 10;
        // Class-specific spatial frequencies; random phase per sample.
        let fx = 0.2 + 0.15 * (k % 5) as f64;
        let fy = 0.2 + 0.15 * (k / 5) as f64;
        let phase: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        for c in 0..3 {
            let shift = c as f64 * (0.6 + 0.1 * k as f64);
            for y in 0..32 {
                for x in 0..32 {
                    let s = (fx * x as f64 + fy * y as f64 + phase + shift).sin();
                    let noise: f64 = rng.gen_range(-0.08..0.08);
                    data.push((0.5 + 0.4 * s + noise).clamp(0.0, 1.0));
                }
            }
        }
        labels.push(k);
    }
    Ok(Dataset { images: Tensor::new(vec![n, 3, 32, 32], data)?, labels, class_count: 10 })
}

/// Generate and write an MNIST-format fixture (synthetic digits) into
/// `dir` under the standard IDX file names.
pub fn write_mnist_fixture(dir: &Path, n_train: usize, n_test: usize, seed: u64) -> Result<()> {
    fs::create_dir_all(dir)?;
    let train = synth_digits(seed, n_train)?;
    let test = synth_digits(seed.wrapping_add(1), n_test)?;
    write_idx_images(&dir.join("train-images-idx3-ubyte"), &train.images)?;
    write_idx_labels(&dir.join("train-labels-idx1-ubyte"), &train.labels)?;
    write_idx_images(&dir.join("t10k-images-idx3-ubyte"), &test.images)?;
    write_idx_labels(&dir.join("t10k-labels-idx1-ubyte"), &test.labels)?;
    Ok(())
}

/// Generate and write a CIFAR-10-format fixture (synthetic textures) into
/// `dir` under the standard batch file names, `per_batch` records each.
pub fn write_cifar_fixture(dir: &Path, per_batch: usize, seed: u64) -> Result<()> {
    fs::create_dir_all(dir)?;
    for i in 1..=5 {
        let batch = synth_color_textures(seed.wrapping_add(i), per_batch)?;
        write_cifar_batch(&dir.join(format!("data_batch_{i}.bin")), &batch)?;
    }
    let test = synth_color_textures(seed.wrapping_add(6), per_batch)?;
    write_cifar_batch(&dir.join("test_batch.bin"), &test)?;
    Ok(())
}
