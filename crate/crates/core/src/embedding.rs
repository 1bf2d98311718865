//! Entity parameter storage: a full `|E|×d` table or the low-rank
//! factorization `Z = Z_d · W` with `Z_d: |E|×r` and a shared `W: r×d`.
//!
//! Storage is `f32`; materialized rows and gradients are `f64`.

use rand::Rng;

use crate::error::{KgeError, Result};
use crate::graph::EntityId;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TableVariant {
    Full,
    LowRank,
}

impl TableVariant {
    pub fn code(self) -> u8 {
        match self {
            TableVariant::Full => 0,
            TableVariant::LowRank => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(TableVariant::Full),
            1 => Some(TableVariant::LowRank),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum EmbeddingTable {
    Full {
        dim: usize,
        /// `|E| × dim`, row-major.
        rows: Vec<f32>,
    },
    LowRank {
        dim: usize,
        rank: usize,
        /// `Z_d`, `|E| × rank`, row-major.
        factors: Vec<f32>,
        /// `W`, `rank × dim`, row-major.
        basis: Vec<f32>,
    },
}

fn check_rank(dim: usize, rank: usize, allow_full_rank: bool) -> Result<()> {
    if rank == 0 {
        return Err(KgeError::InvalidArgument("low-rank table needs rank ≥ 1".into()));
    }
    if rank > dim || (rank == dim && !allow_full_rank) {
        return Err(KgeError::InvalidArgument(format!(
            "low-rank factorization requires rank < dim (rank {rank}, dim {dim})"
        )));
    }
    Ok(())
}

impl EmbeddingTable {
    pub fn full(entity_count: usize, dim: usize, rows: Vec<f32>) -> Result<Self> {
        if rows.len() != entity_count * dim {
            return Err(KgeError::InvalidArgument(format!(
                "full table expects {} values, got {}",
                entity_count * dim,
                rows.len()
            )));
        }
        Ok(Self::Full { dim, rows })
    }

    /// Builds a low-rank table from explicit factors. `allow_full_rank`
    /// permits `rank == dim`, used for identity-equivalence checks.
    pub fn low_rank(entity_count: usize, dim: usize, rank: usize, factors: Vec<f32>, basis: Vec<f32>, allow_full_rank: bool) -> Result<Self> {
        check_rank(dim, rank, allow_full_rank)?;
        if factors.len() != entity_count * rank || basis.len() != rank * dim {
            return Err(KgeError::InvalidArgument(format!(
                "low-rank table expects {}+{} values, got {}+{}",
                entity_count * rank,
                rank * dim,
                factors.len(),
                basis.len()
            )));
        }
        Ok(Self::LowRank { dim, rank, factors, basis })
    }

    /// Uniform initialization in `[-bound, bound]`. For the low-rank variant,
    /// `Z_d` takes that range and `W` is uniform with variance `1/rank`, so
    /// materialized rows start with the same variance as a full table.
    pub fn random(entity_count: usize, dim: usize, rank: Option<usize>, bound: f64, allow_full_rank: bool, rng: &mut impl Rng) -> Result<Self> {
        let mut uniform = |n: usize, b: f64| -> Vec<f32> { (0..n).map(|_| rng.gen_range(-b..=b) as f32).collect() };
        match rank {
            None => Self::full(entity_count, dim, uniform(entity_count * dim, bound)),
            Some(rank) => {
                check_rank(dim, rank, allow_full_rank)?;
                let factors = uniform(entity_count * rank, bound);
                let basis = uniform(rank * dim, (3.0 / rank as f64).sqrt());
                Self::low_rank(entity_count, dim, rank, factors, basis, allow_full_rank)
            }
        }
    }

    pub fn variant(&self) -> TableVariant {
        match self {
            Self::Full { .. } => TableVariant::Full,
            Self::LowRank { .. } => TableVariant::LowRank,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Full { dim, .. } | Self::LowRank { dim, .. } => *dim,
        }
    }

    pub fn rank(&self) -> Option<usize> {
        match self {
            Self::Full { .. } => None,
            Self::LowRank { rank, .. } => Some(*rank),
        }
    }

    /// Width of a stored per-entity row: `d` for full, `r` for low-rank.
    pub fn row_width(&self) -> usize {
        self.rank().unwrap_or_else(|| self.dim())
    }

    pub fn entity_count(&self) -> usize {
        match self {
            Self::Full { dim, rows } => rows.len() / (*dim).max(1),
            Self::LowRank { rank, factors, .. } => factors.len() / (*rank).max(1),
        }
    }

    /// `|E|·d` or `|E|·r + r·d`.
    pub fn param_count(&self) -> usize {
        match self {
            Self::Full { rows, .. } => rows.len(),
            Self::LowRank { factors, basis, .. } => factors.len() + basis.len(),
        }
    }

    pub fn check(&self, id: EntityId) -> Result<()> {
        let n = self.entity_count();
        if (id as usize) < n {
            Ok(())
        } else {
            Err(KgeError::OutOfRange {
                kind: "entity",
                id: u64::from(id),
                count: n as u64,
            })
        }
    }

    pub fn materialize(&self, id: EntityId) -> Result<Vec<f64>> {
        self.check(id)?;
        let mut out = vec![0.0; self.dim()];
        self.materialize_into(id, &mut out);
        Ok(out)
    }

    /// Writes the `d`-dimensional row of `id` into `out`. Panics on a bad id.
    pub fn materialize_into(&self, id: EntityId, out: &mut [f64]) {
        let i = id as usize;
        match self {
            Self::Full { dim, rows } => {
                for (o, &v) in out.iter_mut().zip(&rows[i * dim..(i + 1) * dim]) {
                    *o = f64::from(v);
                }
            }
            Self::LowRank { dim, rank, factors, basis } => {
                out.iter_mut().for_each(|o| *o = 0.0);
                let z = &factors[i * rank..(i + 1) * rank];
                for (k, &zk) in z.iter().enumerate() {
                    let zk = f64::from(zk);
                    for (o, &w) in out.iter_mut().zip(&basis[k * dim..(k + 1) * dim]) {
                        *o += zk * f64::from(w);
                    }
                }
            }
        }
    }

    /// All materialized rows, `|E| × d` row-major.
    pub fn materialize_all(&self) -> Vec<f64> {
        let d = self.dim();
        let n = self.entity_count();
        let mut out = vec![0.0; n * d];
        for (i, row) in out.chunks_mut(d.max(1)).enumerate().take(n) {
            self.materialize_into(i as EntityId, row);
        }
        out
    }

    /// Stored row of `id` (`d` values for full, `r` for low-rank).
    pub fn stored_row(&self, id: EntityId) -> &[f32] {
        let w = self.row_width();
        let i = id as usize;
        match self {
            Self::Full { rows, .. } => &rows[i * w..(i + 1) * w],
            Self::LowRank { factors, .. } => &factors[i * w..(i + 1) * w],
        }
    }

    pub fn stored_row_mut(&mut self, id: EntityId) -> &mut [f32] {
        let w = self.row_width();
        let i = id as usize;
        match self {
            Self::Full { rows, .. } => &mut rows[i * w..(i + 1) * w],
            Self::LowRank { factors, .. } => &mut factors[i * w..(i + 1) * w],
        }
    }

    pub fn basis(&self) -> Option<&[f32]> {
        match self {
            Self::Full { .. } => None,
            Self::LowRank { basis, .. } => Some(basis),
        }
    }

    pub fn basis_mut(&mut self) -> Option<&mut Vec<f32>> {
        match self {
            Self::Full { .. } => None,
            Self::LowRank { basis, .. } => Some(basis),
        }
    }

    /// Chain rule through `Z = Z_d · W` for one entity. `grad_row` is the
    /// gradient with respect to the materialized row; the gradient with
    /// respect to the stored row is written to `grad_stored`, and for the
    /// low-rank variant `z_rowᵀ · grad_row` is added into `grad_basis`.
    pub fn backprop_row(&self, id: EntityId, grad_row: &[f64], grad_stored: &mut [f64], grad_basis: Option<&mut [f64]>) {
        match self {
            Self::Full { .. } => {
                for (g, &v) in grad_stored.iter_mut().zip(grad_row) {
                    *g += v;
                }
            }
            Self::LowRank { dim, rank, factors, basis } => {
                let i = id as usize;
                for (k, g) in grad_stored.iter_mut().enumerate().take(*rank) {
                    let w = &basis[k * dim..(k + 1) * dim];
                    *g += w.iter().zip(grad_row).map(|(&w, &gr)| f64::from(w) * gr).sum::<f64>();
                }
                if let Some(gb) = grad_basis {
                    let z = &factors[i * rank..(i + 1) * rank];
                    for (k, &zk) in z.iter().enumerate() {
                        let zk = f64::from(zk);
                        for (g, &gr) in gb[k * dim..(k + 1) * dim].iter_mut().zip(grad_row) {
                            *g += zk * gr;
                        }
                    }
                }
            }
        }
    }
}
