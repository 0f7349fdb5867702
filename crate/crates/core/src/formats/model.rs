//! Model container: magic bytes, a length-prefixed JSON header, then one
//! block per regressor in (stage, landmark, axis x then y) order. Every
//! number in a block is little-endian 64-bit.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::descriptor::{Descriptor, DESCRIPTOR_LEN};
use crate::error::{Error, Result};
use crate::rirv::params::{validate_tables, LANDMARKS, STAGES};
use crate::rirv::{AxisPair, FlipRule, RirvModel, StageParams, FORMAT_VERSION};
use crate::svr::{FitInfo, SvrHyper, SvrModel};

pub const MAGIC: &[u8; 12] = b"CALSCANRIRV1";

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format_version: u32,
    working_side: usize,
    train_stages: [StageParams; STAGES],
    predict_stages: [StageParams; STAGES],
    flip_rule: FlipRule,
    regressor_count: usize,
}

fn put_f64(out: &mut Vec<u8>, v: f64) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn write_block(out: &mut Vec<u8>, m: &SvrModel) {
    put_u64(out, m.support_count() as u64);
    for sv in m.support_vectors.iter() {
        for &v in sv.as_slice() {
            put_f64(out, v as f64);
        }
    }
    for &c in &m.dual_coefs {
        put_f64(out, c);
    }
    put_f64(out, m.bias);
    put_f64(out, m.hyper.c);
    put_f64(out, m.hyper.epsilon);
    put_f64(out, m.hyper.gamma);
    put_f64(out, m.hyper.tol);
    put_u64(out, m.hyper.max_passes as u64);
    put_u64(out, m.fit.iterations);
    put_u64(out, m.fit.converged as u64);
    put_f64(out, m.fit.gap);
}

pub fn serialize_model(model: &RirvModel) -> Result<Vec<u8>> {
    if !model.is_complete() {
        return Err(Error::Argument("cannot serialize an incomplete model".into()));
    }
    let header = Header {
        format_version: model.format_version,
        working_side: model.working_side,
        train_stages: model.train_stages,
        predict_stages: model.predict_stages,
        flip_rule: model.flip_rule,
        regressor_count: model.regressor_count(),
    };
    let json = serde_json::to_vec(&header).map_err(|e| Error::format("model header", e.to_string()))?;
    let rows: usize = model
        .regressors
        .iter()
        .map(|p| p.x.support_count() + p.y.support_count())
        .sum();
    let mut out = Vec::with_capacity(32 + json.len() + rows * (DESCRIPTOR_LEN + 1) * 8 + model.regressor_count() * 96);
    out.extend_from_slice(MAGIC);
    put_u64(&mut out, json.len() as u64);
    out.extend_from_slice(&json);
    for pair in &model.regressors {
        write_block(&mut out, &pair.x);
        write_block(&mut out, &pair.y);
    }
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let s = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(Error::format(
                "model",
                format!("truncated while reading {what} at byte {}", self.pos),
            )),
        }
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().expect("8 bytes")))
    }
}

fn read_block(r: &mut Reader, index: usize) -> Result<SvrModel> {
    let n = r.u64("support count")? as usize;
    let remaining = (r.bytes.len() - r.pos) / 8;
    if n > remaining / (DESCRIPTOR_LEN + 1) {
        return Err(Error::format(
            "model",
            format!("regressor {index} claims {n} support vectors, more than the file holds"),
        ));
    }
    let mut svs = Vec::with_capacity(n);
    for _ in 0..n {
        let mut d = Descriptor::zeros();
        for v in d.0.iter_mut() {
            let x = r.f64("support vector")?;
            *v = x as f32;
            if (*v as f64).to_bits() != x.to_bits() {
                return Err(Error::format(
                    "model",
                    format!("regressor {index} has a support vector value not representable as f32"),
                ));
            }
        }
        svs.push(d);
    }
    let coefs = (0..n).map(|_| r.f64("dual coefficient")).collect::<Result<Vec<_>>>()?;
    let bias = r.f64("bias")?;
    let hyper = SvrHyper {
        c: r.f64("C")?,
        epsilon: r.f64("epsilon")?,
        gamma: r.f64("gamma")?,
        tol: r.f64("tol")?,
        max_passes: r.u64("max passes")? as usize,
    };
    let fit = FitInfo {
        iterations: r.u64("iterations")?,
        converged: r.u64("converged flag")? != 0,
        gap: r.f64("gap")?,
    };
    hyper
        .validate()
        .map_err(|e| Error::format("model", format!("regressor {index}: {e}")))?;
    if !bias.is_finite() || coefs.iter().any(|c| !c.is_finite()) {
        return Err(Error::format(
            "model",
            format!("regressor {index} has non-finite coefficients"),
        ));
    }
    Ok(SvrModel {
        support_vectors: svs.into(),
        dual_coefs: coefs,
        bias,
        hyper,
        fit,
    })
}

pub fn deserialize_model(bytes: &[u8]) -> Result<RirvModel> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(MAGIC.len(), "magic")? != MAGIC {
        return Err(Error::format("model", "not a calscan model (bad magic bytes)"));
    }
    let len = r.u64("header length")? as usize;
    let header: Header =
        serde_json::from_slice(r.take(len, "header")?).map_err(|e| Error::format("model header", e.to_string()))?;
    if header.format_version != FORMAT_VERSION {
        return Err(Error::format(
            "model",
            format!("unsupported format version {}", header.format_version),
        ));
    }
    if header.regressor_count != 2 * STAGES * LANDMARKS {
        return Err(Error::format(
            "model",
            format!(
                "expected {} regressors, header says {}",
                2 * STAGES * LANDMARKS,
                header.regressor_count
            ),
        ));
    }
    validate_tables(&header.train_stages, &header.predict_stages)
        .map_err(|e| Error::format("model header", e.to_string()))?;
    let mut regressors = Vec::with_capacity(STAGES * LANDMARKS);
    for k in 0..STAGES * LANDMARKS {
        let x = read_block(&mut r, 2 * k)?;
        let mut y = read_block(&mut r, 2 * k + 1)?;
        // Restore pool sharing so paired prediction takes the same path as
        // before serialization.
        if x.support_vectors == y.support_vectors {
            y.support_vectors = Arc::clone(&x.support_vectors);
        }
        regressors.push(AxisPair { x, y });
    }
    if r.pos != bytes.len() {
        return Err(Error::format(
            "model",
            format!("{} trailing bytes", bytes.len() - r.pos),
        ));
    }
    Ok(RirvModel {
        format_version: header.format_version,
        working_side: header.working_side,
        train_stages: header.train_stages,
        predict_stages: header.predict_stages,
        flip_rule: header.flip_rule,
        regressors,
    })
}

pub fn save_model(model: &RirvModel, path: impl AsRef<Path>) -> Result<()> {
    super::write_atomic(path, &serialize_model(model)?)
}

pub fn load_model(path: impl AsRef<Path>) -> Result<RirvModel> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    deserialize_model(&bytes).map_err(|e| match e {
        Error::Format { message, .. } => Error::format(path.display().to_string(), message),
        other => other,
    })
}
