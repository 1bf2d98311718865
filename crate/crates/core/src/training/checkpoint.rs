//! Binary model checkpoints.
//!
//! Layout (little-endian): magic `PIEK`, version `u32`, model kind `u8`,
//! table variant `u8`, `|E|` `u64`, `|R|` `u64`, `d` `u32`, `r` `u32`
//! (0 for a full table), `γ` `f64`, then `f32` arrays: `Z` or `Z_d`, `W` for
//! low-rank tables, and the relation parameters.

use std::fs;
use std::path::Path;

use crate::embedding::{EmbeddingTable, TableVariant};
use crate::error::{KgeError, Result};
use crate::models::{ModelKind, ScoringModel};

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"PIEK";
pub const CHECKPOINT_VERSION: u32 = 1;

pub fn write_checkpoint(model: &ScoringModel) -> Vec<u8> {
    let table = model.entity_table();
    let mut out = Vec::with_capacity(48 + 4 * (table.param_count() + model.relations().len()));
    out.extend_from_slice(&CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.push(model.kind().code());
    out.push(table.variant().code());
    out.extend_from_slice(&(model.entity_count() as u64).to_le_bytes());
    out.extend_from_slice(&(model.relation_count() as u64).to_le_bytes());
    out.extend_from_slice(&(model.dim() as u32).to_le_bytes());
    out.extend_from_slice(&(table.rank().unwrap_or(0) as u32).to_le_bytes());
    out.extend_from_slice(&model.gamma().to_le_bytes());
    let mut put = |xs: &[f32]| xs.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes()));
    match table {
        EmbeddingTable::Full { rows, .. } => put(rows),
        EmbeddingTable::LowRank { factors, basis, .. } => {
            put(factors);
            put(basis);
        }
    }
    put(model.relations());
    out
}

pub fn save_checkpoint(model: &ScoringModel, path: &Path) -> Result<()> {
    fs::write(path, write_checkpoint(model)).map_err(|e| KgeError::io(path, e))
}

pub(crate) struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub(crate) fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    pub(crate) fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(KgeError::Truncated(format!(
                "need {n} bytes for {what} at offset {}, {} left",
                self.pos,
                self.bytes.len() - self.pos
            )));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub(crate) fn magic(&mut self, expected: [u8; 4]) -> Result<()> {
        let found: [u8; 4] = self.take(4, "magic")?.try_into().expect("4 bytes");
        if found != expected {
            return Err(KgeError::BadMagic { expected, found });
        }
        Ok(())
    }

    pub(crate) fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    pub(crate) fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().expect("4 bytes")))
    }

    pub(crate) fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().expect("8 bytes")))
    }

    pub(crate) fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().expect("8 bytes")))
    }

    pub(crate) fn f32s(&mut self, n: usize, what: &str) -> Result<Vec<f32>> {
        let bytes = n
            .checked_mul(4)
            .ok_or_else(|| KgeError::Truncated(format!("{what}: size overflow")))?;
        let raw = self.take(bytes, what)?;
        Ok(raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes"))).collect())
    }

    pub(crate) fn finish(&self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(KgeError::InvalidArgument(format!(
                "{} trailing bytes after checkpoint payload",
                self.bytes.len() - self.pos
            )));
        }
        Ok(())
    }
}

pub fn read_checkpoint(bytes: &[u8]) -> Result<ScoringModel> {
    let mut r = Reader::new(bytes);
    r.magic(CHECKPOINT_MAGIC)?;
    let version = r.u32("version")?;
    if version != CHECKPOINT_VERSION {
        return Err(KgeError::UnsupportedVersion {
            found: version,
            supported: CHECKPOINT_VERSION,
        });
    }
    let kind_code = r.u8("model kind")?;
    let kind = ModelKind::from_code(kind_code).ok_or_else(|| KgeError::InvalidArgument(format!("unknown model kind code {kind_code}")))?;
    let variant_code = r.u8("table variant")?;
    let variant =
        TableVariant::from_code(variant_code).ok_or_else(|| KgeError::InvalidArgument(format!("unknown table variant code {variant_code}")))?;
    let n_e = r.u64("entity count")? as usize;
    let n_r = r.u64("relation count")? as usize;
    let dim = r.u32("dim")? as usize;
    let rank = r.u32("rank")? as usize;
    let gamma = r.f64("gamma")?;

    let table = match variant {
        TableVariant::Full => EmbeddingTable::full(n_e, dim, r.f32s(n_e * dim, "entity table")?)?,
        TableVariant::LowRank => {
            let factors = r.f32s(n_e * rank, "entity factors")?;
            let basis = r.f32s(rank * dim, "basis")?;
            EmbeddingTable::low_rank(n_e, dim, rank, factors, basis, true)?
        }
    };
    // relation width depends on the kind; build a probe to ask it
    let probe = crate::models::model_registry().create(kind.name(), &crate::models::ModelOptions { dim, gamma })?;
    let relations = r.f32s(n_r * probe.relation_dim(dim), "relation parameters")?;
    r.finish()?;
    ScoringModel::from_parts(kind, gamma, table, relations, n_r)
}

pub fn load_checkpoint(path: &Path) -> Result<ScoringModel> {
    let bytes = fs::read(path).map_err(|e| KgeError::io(path, e))?;
    read_checkpoint(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ModelSpec;
    use crate::rng::stream;

    #[test]
    fn round_trip_is_bitwise() {
        for kind in ModelKind::ALL {
            for rank in [None, Some(2)] {
                let mut spec = ModelSpec::new(kind, 4, 3.0);
                spec.rank = rank;
                let model = ScoringModel::new(&spec, 5, 3, &mut stream(1, "init")).unwrap();
                let bytes = write_checkpoint(&model);
                let back = read_checkpoint(&bytes).unwrap();
                assert_eq!(write_checkpoint(&back), bytes);
                assert_eq!(back.kind(), kind);
                assert_eq!(back.entity_table(), model.entity_table());
            }
        }
    }

    #[test]
    fn structured_errors() {
        let model = ScoringModel::new(&ModelSpec::new(ModelKind::TransE, 2, 1.0), 2, 1, &mut stream(1, "init")).unwrap();
        let bytes = write_checkpoint(&model);

        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(read_checkpoint(&bad), Err(KgeError::BadMagic { .. })));

        let mut bad = bytes.clone();
        bad[4..8].copy_from_slice(&7u32.to_le_bytes());
        assert!(matches!(read_checkpoint(&bad), Err(KgeError::UnsupportedVersion { found: 7, .. })));

        assert!(matches!(read_checkpoint(&bytes[..bytes.len() - 1]), Err(KgeError::Truncated(_))));
        assert!(matches!(read_checkpoint(&bytes[..10]), Err(KgeError::Truncated(_))));
    }
}
