//! `.pccdckpt` binary format (all integers and floats little-endian):
//!
//! ```text
//! magic "PCCDCKP1" | version u32
//! config: stages u32, widths u32 × stages, use_attention u32, time_embed_dim u32, steps u32
//! param count u32, then per parameter: name len u32, UTF-8 name, element count u64, f64 values
//! adam step u64, then first-moment sections and second-moment sections in the same layout
//! schedule fingerprint [u8; 8]
//! ```

use std::path::Path;

use super::adam::AdamState;
use super::config::DenoiserConfig;
use super::params::Grads;
use super::unet::UNet;
use super::{DenoiserCheckpoint, NnError};

pub const CKPT_MAGIC: &[u8; 8] = b"PCCDCKP1";
pub const CKPT_VERSION: u32 = 1;

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_sections<'a>(out: &mut Vec<u8>, sections: impl Iterator<Item = (&'a str, &'a [f64])>) {
    for (name, values) in sections {
        put_u32(out, name.len() as u32);
        out.extend_from_slice(name.as_bytes());
        out.extend_from_slice(&(values.len() as u64).to_le_bytes());
        for v in values {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
}

pub fn to_bytes(ckpt: &DenoiserCheckpoint) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(CKPT_MAGIC);
    put_u32(&mut out, CKPT_VERSION);
    let c = &ckpt.config;
    put_u32(&mut out, c.stages as u32);
    for &w in &c.widths {
        put_u32(&mut out, w as u32);
    }
    put_u32(&mut out, c.use_attention as u32);
    put_u32(&mut out, c.time_embed_dim as u32);
    put_u32(&mut out, c.steps as u32);

    put_u32(&mut out, ckpt.params.len() as u32);
    put_sections(&mut out, ckpt.params.iter().map(|p| (p.name.as_str(), p.values.as_slice())));
    out.extend_from_slice(&ckpt.adam.step.to_le_bytes());
    let names: Vec<&str> = ckpt.params.iter().map(|p| p.name.as_str()).collect();
    put_sections(&mut out, names.iter().copied().zip(ckpt.adam.m.0.iter().map(|v| v.as_slice())));
    put_sections(&mut out, names.iter().copied().zip(ckpt.adam.v.0.iter().map(|v| v.as_slice())));
    out.extend_from_slice(&ckpt.schedule_fingerprint);
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], NnError> {
        if self.buf.len() - self.pos < n {
            return Err(NnError::CorruptCheckpoint(format!("truncated at byte {}", self.pos)));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, NnError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, NnError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn section(&mut self, expect_name: &str, expect_len: usize) -> Result<Vec<f64>, NnError> {
        let n = self.u32()? as usize;
        let name = std::str::from_utf8(self.take(n)?)
            .map_err(|_| NnError::CorruptCheckpoint("parameter name is not UTF-8".into()))?;
        if name != expect_name {
            return Err(NnError::CorruptCheckpoint(format!("expected parameter {expect_name:?}, found {name:?}")));
        }
        let count = self.u64()? as usize;
        if count != expect_len {
            return Err(NnError::CorruptCheckpoint(format!(
                "parameter {name:?} has {count} values, architecture needs {expect_len}"
            )));
        }
        let bytes = self.take(count.checked_mul(8).ok_or_else(|| NnError::CorruptCheckpoint("overflow".into()))?)?;
        let values: Vec<f64> = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(NnError::CorruptCheckpoint(format!("parameter {name:?} holds non-finite values")));
        }
        Ok(values)
    }
}

pub fn from_bytes(buf: &[u8]) -> Result<DenoiserCheckpoint, NnError> {
    let mut r = Reader { buf, pos: 0 };
    if r.take(8).map_err(|_| NnError::CorruptCheckpoint("file too short".into()))? != CKPT_MAGIC {
        return Err(NnError::CorruptCheckpoint("bad magic".into()));
    }
    let version = r.u32()?;
    if version != CKPT_VERSION {
        return Err(NnError::VersionMismatch { found: version, expected: CKPT_VERSION });
    }
    let stages = r.u32()? as usize;
    if stages > 16 {
        return Err(NnError::CorruptCheckpoint(format!("implausible stage count {stages}")));
    }
    let widths = (0..stages).map(|_| r.u32().map(|w| w as usize)).collect::<Result<Vec<_>, _>>()?;
    let use_attention = match r.u32()? {
        0 => false,
        1 => true,
        x => return Err(NnError::CorruptCheckpoint(format!("bad attention flag {x}"))),
    };
    let time_embed_dim = r.u32()? as usize;
    let steps = r.u32()? as usize;
    let config = DenoiserConfig { stages, widths, use_attention, time_embed_dim, steps };
    config.validate().map_err(|e| NnError::CorruptCheckpoint(e.to_string()))?;

    let (net, mut params) = UNet::build(&config);
    let count = r.u32()? as usize;
    if count != params.len() {
        return Err(NnError::CorruptCheckpoint(format!(
            "{count} parameter sections, architecture has {}",
            params.len()
        )));
    }
    let layout: Vec<(String, usize)> = params.iter().map(|p| (p.name.clone(), p.values.len())).collect();
    for (p, (name, len)) in params.iter_mut().zip(&layout) {
        p.values = r.section(name, *len)?;
    }
    let step = r.u64()?;
    let mut m = Vec::with_capacity(layout.len());
    for (name, len) in &layout {
        m.push(r.section(name, *len)?);
    }
    let mut v = Vec::with_capacity(layout.len());
    for (name, len) in &layout {
        v.push(r.section(name, *len)?);
    }
    let fp: [u8; 8] = r.take(8)?.try_into().unwrap();
    if r.pos != buf.len() {
        return Err(NnError::CorruptCheckpoint(format!("{} trailing bytes", buf.len() - r.pos)));
    }
    Ok(DenoiserCheckpoint {
        config,
        net,
        params,
        adam: AdamState { step, m: Grads(m), v: Grads(v) },
        schedule_fingerprint: fp,
    })
}

pub fn save_checkpoint(ckpt: &DenoiserCheckpoint, path: &Path) -> Result<(), crate::Error> {
    std::fs::write(path, to_bytes(ckpt))?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<DenoiserCheckpoint, crate::Error> {
    let buf = std::fs::read(path)?;
    Ok(from_bytes(&buf)?)
}
