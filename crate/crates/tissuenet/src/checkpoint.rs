//! Binary checkpoints: the architecture spec (JSON) plus every named
//! parameter as little-endian f64, bit-exact across save/load.

use std::fs;
use std::path::Path;

use crate::arch::ArchSpec;
use crate::error::{Error, Result};
use crate::nn::Model;
use crate::tensor::Tensor;

const MAGIC: &[u8; 8] = b"TNCKPT01";

struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn u32(&mut self, v: u32) {
        self.buf.extend(v.to_le_bytes());
    }
    fn bytes(&mut self, b: &[u8]) {
        self.u32(b.len() as u32);
        self.buf.extend(b);
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let piece = self
            .buf
            .get(self.pos..self.pos + n)
            .ok_or_else(|| Error::Checkpoint(format!("truncated at byte {}", self.pos)))?;
        self.pos += n;
        Ok(piece)
    }
    fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }
    fn bytes(&mut self) -> Result<&'a [u8]> {
        let n = self.u32()? as usize;
        self.take(n)
    }
}

/// Save the spec and the model's parameter values.
pub fn save_checkpoint(path: &Path, arch: &ArchSpec, model: &Model) -> Result<()> {
    let mut w = Writer { buf: MAGIC.to_vec() };
    w.bytes(arch.to_json().as_bytes());
    let params = model.params();
    w.u32(params.len() as u32);
    for p in params {
        w.bytes(p.name.as_bytes());
        w.u32(p.value.shape().len() as u32);
        for &d in p.value.shape() {
            w.buf.extend((d as u64).to_le_bytes());
        }
        for &v in p.value.data() {
            w.buf.extend(v.to_le_bytes());
        }
    }
    Ok(fs::write(path, w.buf)?)
}

/// Load a checkpoint: rebuild the model from its spec, then overwrite every
/// parameter with the stored values (matched by name, bit-exact).
pub fn load_checkpoint(path: &Path) -> Result<(ArchSpec, Model)> {
    let buf = fs::read(path)?;
    let mut r = Reader { buf: &buf, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err(Error::Checkpoint(format!("{} is not a checkpoint file", path.display())));
    }
    let arch_json = String::from_utf8(r.bytes()?.to_vec())
        .map_err(|e| Error::Checkpoint(format!("arch spec is not UTF-8: {e}")))?;
    let arch = ArchSpec::from_json(&arch_json)?;
    let mut model = arch.build()?;
    let count = r.u32()? as usize;
    let mut params = model.params_mut();
    if count != params.len() {
        return Err(Error::Checkpoint(format!(
            "checkpoint stores {count} parameters but the spec builds {}",
            params.len()
        )));
    }
    for p in params.iter_mut() {
        let name = String::from_utf8(r.bytes()?.to_vec())
            .map_err(|e| Error::Checkpoint(format!("parameter name is not UTF-8: {e}")))?;
        if name != p.name {
            return Err(Error::Checkpoint(format!(
                "parameter order mismatch: stored '{name}', spec builds '{}'",
                p.name
            )));
        }
        let rank = r.u32()? as usize;
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            let b = r.take(8)?;
            shape.push(u64::from_le_bytes(b.try_into().unwrap()) as usize);
        }
        if shape != p.value.shape() {
            return Err(Error::Checkpoint(format!(
                "shape mismatch for '{name}': stored {shape:?}, spec builds {:?}",
                p.value.shape()
            )));
        }
        let n: usize = shape.iter().product();
        let raw = r.take(8 * n)?;
        let data = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        p.value = Tensor::new(shape, data)?;
    }
    if r.pos != buf.len() {
        return Err(Error::Checkpoint(format!(
            "{} trailing bytes after the last parameter",
            buf.len() - r.pos
        )));
    }
    Ok((arch, model))
}
