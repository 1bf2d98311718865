//! Typing checkpoints: magic `PIET`, version `u32`, `K`, `|R|`, `h_edge`,
//! `h_node` as `u32`, then `f32` parameter blocks in declaration order
//! (edge embedding, per-layer weight and bias, output weight and bias).

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};

use super::network::{EdgeLayer, TypingArchitecture, TypingNetwork};
use crate::error::{KgeError, Result};
use crate::training::checkpoint::Reader;

pub const TYPING_MAGIC: [u8; 4] = *b"PIET";
pub const TYPING_VERSION: u32 = 1;

pub fn write_typing_checkpoint(network: &TypingNetwork) -> Vec<u8> {
    let arch = network.architecture();
    let mut out = Vec::with_capacity(24 + 4 * network.param_count());
    out.extend_from_slice(&TYPING_MAGIC);
    for v in [TYPING_VERSION, arch.layers as u32, arch.relation_count as u32, arch.edge_dim as u32, arch.node_dim as u32] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for block in network.blocks() {
        block.iter().for_each(|&x| out.extend_from_slice(&(x as f32).to_le_bytes()));
    }
    out
}

pub fn save_typing_checkpoint(network: &TypingNetwork, path: &Path) -> Result<()> {
    fs::write(path, write_typing_checkpoint(network)).map_err(|e| KgeError::io(path, e))
}

pub fn read_typing_checkpoint(bytes: &[u8]) -> Result<TypingNetwork> {
    let mut r = Reader::new(bytes);
    r.magic(TYPING_MAGIC)?;
    let version = r.u32("version")?;
    if version != TYPING_VERSION {
        return Err(KgeError::UnsupportedVersion {
            found: version,
            supported: TYPING_VERSION,
        });
    }
    let arch = TypingArchitecture {
        layers: r.u32("layers")? as usize,
        relation_count: r.u32("relation count")? as usize,
        edge_dim: r.u32("h_edge")? as usize,
        node_dim: r.u32("h_node")? as usize,
    };
    arch.validate()?;
    let (h, types) = (arch.edge_dim, arch.type_count());
    let mut matrix = |rows: usize, cols: usize, what: &str| -> Result<Array2<f64>> {
        let v = r.f32s(rows * cols, what)?;
        Ok(Array2::from_shape_vec((rows, cols), v.into_iter().map(f64::from).collect()).expect("sized"))
    };
    let edge_embedding = matrix(types, h, "edge embedding")?;
    let mut layers = Vec::new();
    for _ in 1..arch.layers {
        let weight = matrix(3 * h, h, "layer weight")?;
        let bias = matrix(1, h, "layer bias")?.into_shape_with_order(h).expect("sized");
        layers.push(EdgeLayer { weight, bias });
    }
    let output = matrix(arch.layers * h, types, "output weight")?;
    let output_bias: Array1<f64> = matrix(1, types, "output bias")?.into_shape_with_order(types).expect("sized");
    r.finish()?;
    TypingNetwork::from_parts(arch, edge_embedding, layers, output, output_bias)
}

pub fn load_typing_checkpoint(path: &Path) -> Result<TypingNetwork> {
    let bytes = fs::read(path).map_err(|e| KgeError::io(path, e))?;
    read_typing_checkpoint(&bytes)
}
