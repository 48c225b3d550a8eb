//! Binary checkpoint format.
//!
//! ```text
//! "UKGE"                      4 bytes magic
//! version                     u32 little-endian
//! header length               u64 little-endian
//! header                      UTF-8 JSON
//! entities                    n_entities * (p + q) f64 LE, space then time per entity
//! biases                      n_entities f64 LE
//! rotation angles             n_relations * d/2 f64 LE
//! reflection angles           n_relations * d/2 f64 LE
//! boosts                      n_relations * q f64 LE
//! margin                      1 f64 LE
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Geometry, Model, Names, ParamSet};
use crate::geometry::Signature;
use crate::kgdata::names_digest;
use crate::operators::OperatorKind;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"UKGE";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a checkpoint (bad magic bytes)")]
    BadMagic,
    #[error("unsupported checkpoint version {0} (expected {CHECKPOINT_VERSION})")]
    Version(u32),
    #[error("corrupt checkpoint header: {0}")]
    CorruptHeader(String),
    #[error("truncated checkpoint: need {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("checkpoint has {0} unexpected trailing bytes")]
    TrailingBytes(usize),
    #[error("checkpoint does not match the requested configuration: {0}")]
    ConfigMismatch(String),
}

impl CheckpointError {
    /// Stable numeric code per failure kind.
    pub fn code(&self) -> u8 {
        match self {
            CheckpointError::Io(_) => 1,
            CheckpointError::BadMagic => 2,
            CheckpointError::Version(_) => 3,
            CheckpointError::CorruptHeader(_) => 4,
            CheckpointError::Truncated { .. } => 5,
            CheckpointError::TrailingBytes(_) => 6,
            CheckpointError::ConfigMismatch(_) => 7,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    signature: Signature,
    operator: OperatorKind,
    geometry: Geometry,
    entities: usize,
    relations: usize,
    entity_digest: String,
    relation_digest: String,
    entity_names: Vec<String>,
    relation_names: Vec<String>,
}

/// Serializes a model to bytes.
pub fn to_bytes(m: &Model) -> Vec<u8> {
    let names = m.names.clone().unwrap_or_default();
    let header = Header {
        signature: m.sig,
        operator: m.kind,
        geometry: m.geometry,
        entities: m.n_entities,
        relations: m.n_relations,
        entity_digest: names_digest(&names.entities),
        relation_digest: names_digest(&names.relations),
        entity_names: names.entities,
        relation_names: names.relations,
    };
    let json = serde_json::to_vec(&header).expect("header serializes");
    let mut out = Vec::with_capacity(16 + json.len() + 8 * (m.param_count() + 1));
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    let mut put = |vals: &[f64]| {
        for v in vals {
            out.extend_from_slice(&v.to_le_bytes());
        }
    };
    for e in 0..m.n_entities {
        put(m.entity_space(e));
        put(m.entity_time(e));
    }
    put(&m.params.biases);
    put(&m.params.theta);
    put(&m.params.phi);
    put(&m.params.mu);
    put(&[m.params.delta]);
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CheckpointError> {
        let end = self.pos.checked_add(n).ok_or(CheckpointError::Truncated {
            expected: usize::MAX,
            found: self.buf.len(),
        })?;
        if end > self.buf.len() {
            return Err(CheckpointError::Truncated {
                expected: end,
                found: self.buf.len(),
            });
        }
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>, CheckpointError> {
        let bytes = self.take(n.checked_mul(8).ok_or_else(|| {
            CheckpointError::CorruptHeader("parameter count overflows".into())
        })?)?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect())
    }
}

/// Parses a model from bytes.
pub fn from_bytes(buf: &[u8]) -> Result<Model, CheckpointError> {
    let mut r = Reader { buf, pos: 0 };
    if buf.len() < 4 || r.take(4)? != CHECKPOINT_MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let version = u32::from_le_bytes(r.take(4)?.try_into().expect("4 bytes"));
    if version != CHECKPOINT_VERSION {
        return Err(CheckpointError::Version(version));
    }
    let len = u64::from_le_bytes(r.take(8)?.try_into().expect("8 bytes"));
    let len = usize::try_from(len).map_err(|_| CheckpointError::CorruptHeader("header too large".into()))?;
    let header: Header =
        serde_json::from_slice(r.take(len)?).map_err(|e| CheckpointError::CorruptHeader(e.to_string()))?;
    let sig = Signature::new(header.signature.p(), header.signature.q(), header.signature.alpha())
        .map_err(|e| CheckpointError::CorruptHeader(e.to_string()))?;
    sig.require_even()
        .map_err(|e| CheckpointError::CorruptHeader(e.to_string()))?;
    if !header.entity_names.is_empty() && header.entity_names.len() != header.entities {
        return Err(CheckpointError::CorruptHeader("entity name count mismatch".into()));
    }
    if !header.relation_names.is_empty() && header.relation_names.len() != header.relations {
        return Err(CheckpointError::CorruptHeader("relation name count mismatch".into()));
    }
    if names_digest(&header.entity_names) != header.entity_digest
        || names_digest(&header.relation_names) != header.relation_digest
    {
        return Err(CheckpointError::CorruptHeader("name digest does not match names".into()));
    }

    let (p, q, d) = (sig.p(), sig.q(), sig.dim());
    let (ne, nr) = (header.entities, header.relations);
    let entity_rows = r.f64s(ne * d)?;
    let mut params = ParamSet::zeros(&sig, ne, nr);
    for (e, row) in entity_rows.chunks_exact(d.max(1)).enumerate().take(ne) {
        params.entity_space[e * p..(e + 1) * p].copy_from_slice(&row[..p]);
        params.entity_time[e * q..(e + 1) * q].copy_from_slice(&row[p..]);
    }
    params.biases = r.f64s(ne)?;
    params.theta = r.f64s(nr * (d / 2))?;
    params.phi = r.f64s(nr * (d / 2))?;
    params.mu = r.f64s(nr * q)?;
    params.delta = r.f64s(1)?[0];
    if r.pos != buf.len() {
        return Err(CheckpointError::TrailingBytes(buf.len() - r.pos));
    }
    let names = if header.entity_names.is_empty() && header.relation_names.is_empty() {
        None
    } else {
        Some(Names {
            entities: header.entity_names,
            relations: header.relation_names,
        })
    };
    Ok(Model {
        sig,
        kind: header.operator,
        geometry: header.geometry,
        n_entities: ne,
        n_relations: nr,
        params,
        names,
    })
}

/// Writes `m` to `path`.
pub fn save(m: &Model, path: &Path) -> Result<(), CheckpointError> {
    std::fs::write(path, to_bytes(m))?;
    Ok(())
}

/// Reads a model from `path`. Nothing is returned unless the whole file
/// parses.
pub fn load(path: &Path) -> Result<Model, CheckpointError> {
    from_bytes(&std::fs::read(path)?)
}

/// Like [`load`], additionally requiring the stored signature to equal
/// `expected`.
pub fn load_expecting(path: &Path, expected: &Signature) -> Result<Model, CheckpointError> {
    let m = load(path)?;
    if m.sig != *expected {
        return Err(CheckpointError::ConfigMismatch(format!(
            "checkpoint has signature (p={}, q={}, alpha={}), requested (p={}, q={}, alpha={})",
            m.sig.p(),
            m.sig.q(),
            m.sig.alpha(),
            expected.p(),
            expected.q(),
            expected.alpha()
        )));
    }
    Ok(m)
}
