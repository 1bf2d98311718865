//! Relational message-passing network over edge-labelled subgraphs.
//!
//! Edge states start from a learned embedding of their directed type. Each
//! round sums edge states into node messages, then refreshes every edge from
//! `[m_src, m_dst, s_e]`. The target is represented by the concatenation of
//! its messages from all rounds.

use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array1, Array2, ArrayView1, Axis};
use rand::distributions::{Distribution, Uniform};
use rand::Rng;

use super::subgraph::RelationalSubgraph;
use crate::error::{KgeError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TypingArchitecture {
    /// Message-passing rounds `K`.
    pub layers: usize,
    pub edge_dim: usize,
    pub node_dim: usize,
    pub relation_count: usize,
}

impl TypingArchitecture {
    pub fn new(layers: usize, hidden: usize, relation_count: usize) -> Self {
        Self {
            layers,
            edge_dim: hidden,
            node_dim: hidden,
            relation_count,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers == 0 {
            return Err(KgeError::InvalidArgument("typing layers must be ≥ 1".into()));
        }
        if self.edge_dim == 0 {
            return Err(KgeError::InvalidArgument("typing hidden width must be ≥ 1".into()));
        }
        // Sum aggregation makes a node message an edge-state sum, so the two
        // widths cannot differ.
        if self.edge_dim != self.node_dim {
            return Err(KgeError::InvalidArgument(format!(
                "h_node ({}) must equal h_edge ({})",
                self.node_dim, self.edge_dim
            )));
        }
        if self.relation_count == 0 {
            return Err(KgeError::InvalidArgument("relation_count must be ≥ 1".into()));
        }
        Ok(())
    }

    pub fn type_count(&self) -> usize {
        2 * self.relation_count
    }
}

/// One edge-update layer: `s' = ReLU([m_src, m_dst, s] · W + b)`.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeLayer {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TypingNetwork {
    arch: TypingArchitecture,
    /// `2|R| × h` directed-type embedding.
    pub edge_embedding: Array2<f64>,
    /// `K − 1` layers; the K-th edge state would never reach the readout.
    pub layers: Vec<EdgeLayer>,
    /// `K·h × 2|R|`.
    pub output: Array2<f64>,
    pub output_bias: Array1<f64>,
}

/// Intermediate values kept for the backward pass.
#[derive(Debug)]
pub struct ForwardCache {
    messages: Vec<Array2<f64>>,
    inputs: Vec<Array2<f64>>,
    pre: Vec<Array2<f64>>,
    readout: Array1<f64>,
}

impl ForwardCache {
    pub fn readout(&self) -> ArrayView1<'_, f64> {
        self.readout.view()
    }
}

/// Gradients with the network's shapes.
#[derive(Clone, Debug, PartialEq)]
pub struct TypingGradients {
    pub edge_embedding: Array2<f64>,
    pub layers: Vec<EdgeLayer>,
    pub output: Array2<f64>,
    pub output_bias: Array1<f64>,
}

impl TypingGradients {
    pub fn zeros(net: &TypingNetwork) -> Self {
        Self {
            edge_embedding: Array2::zeros(net.edge_embedding.raw_dim()),
            layers: net
                .layers
                .iter()
                .map(|l| EdgeLayer {
                    weight: Array2::zeros(l.weight.raw_dim()),
                    bias: Array1::zeros(l.bias.raw_dim()),
                })
                .collect(),
            output: Array2::zeros(net.output.raw_dim()),
            output_bias: Array1::zeros(net.output_bias.raw_dim()),
        }
    }

    pub fn scale(&mut self, factor: f64) {
        self.blocks_mut().into_iter().for_each(|b| b.iter_mut().for_each(|g| *g *= factor));
    }

    pub fn add_assign(&mut self, other: &TypingGradients) {
        for (a, b) in self.blocks_mut().into_iter().zip(other.blocks()) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
    }

    /// Parameter blocks in declaration order.
    pub fn blocks(&self) -> Vec<&[f64]> {
        let mut out = vec![self.edge_embedding.as_slice().expect("standard layout")];
        for l in &self.layers {
            out.push(l.weight.as_slice().expect("standard layout"));
            out.push(l.bias.as_slice().expect("standard layout"));
        }
        out.push(self.output.as_slice().expect("standard layout"));
        out.push(self.output_bias.as_slice().expect("standard layout"));
        out
    }

    pub fn blocks_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = vec![self.edge_embedding.as_slice_mut().expect("standard layout")];
        for l in &mut self.layers {
            out.push(l.weight.as_slice_mut().expect("standard layout"));
            out.push(l.bias.as_slice_mut().expect("standard layout"));
        }
        out.push(self.output.as_slice_mut().expect("standard layout"));
        out.push(self.output_bias.as_slice_mut().expect("standard layout"));
        out
    }
}

fn glorot(rows: usize, cols: usize, rng: &mut impl Rng) -> Array2<f64> {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    let dist = Uniform::new_inclusive(-bound, bound);
    Array2::from_shape_fn((rows, cols), |_| dist.sample(rng) as f32 as f64)
}

impl TypingNetwork {
    /// Glorot-uniform weights, zero biases. Values are representable in f32.
    pub fn new(arch: TypingArchitecture, rng: &mut impl Rng) -> Result<Self> {
        arch.validate()?;
        let h = arch.edge_dim;
        let types = arch.type_count();
        let edge_embedding = glorot(types, h, rng);
        let layers = (1..arch.layers)
            .map(|_| EdgeLayer {
                weight: glorot(3 * h, h, rng),
                bias: Array1::zeros(h),
            })
            .collect();
        let output = glorot(arch.layers * h, types, rng);
        Ok(Self {
            arch,
            edge_embedding,
            layers,
            output,
            output_bias: Array1::zeros(types),
        })
    }

    /// Builds a network from explicit parameters, checking every shape.
    pub fn from_parts(
        arch: TypingArchitecture,
        edge_embedding: Array2<f64>,
        layers: Vec<EdgeLayer>,
        output: Array2<f64>,
        output_bias: Array1<f64>,
    ) -> Result<Self> {
        arch.validate()?;
        let h = arch.edge_dim;
        let types = arch.type_count();
        let bad = |what: &str| Err(KgeError::InvalidArgument(format!("typing parameter {what} has the wrong shape")));
        if edge_embedding.dim() != (types, h) {
            return bad("edge_embedding");
        }
        if layers.len() != arch.layers - 1 {
            return bad("layers");
        }
        if layers.iter().any(|l| l.weight.dim() != (3 * h, h) || l.bias.len() != h) {
            return bad("layer");
        }
        if output.dim() != (arch.layers * h, types) || output_bias.len() != types {
            return bad("output");
        }
        Ok(Self {
            arch,
            edge_embedding: edge_embedding.as_standard_layout().to_owned(),
            layers,
            output: output.as_standard_layout().to_owned(),
            output_bias,
        })
    }

    pub fn architecture(&self) -> TypingArchitecture {
        self.arch
    }

    pub fn type_count(&self) -> usize {
        self.arch.type_count()
    }

    pub fn param_count(&self) -> usize {
        self.blocks().iter().map(|b| b.len()).sum()
    }

    pub fn blocks(&self) -> Vec<&[f64]> {
        let mut out = vec![self.edge_embedding.as_slice().expect("standard layout")];
        for l in &self.layers {
            out.push(l.weight.as_slice().expect("standard layout"));
            out.push(l.bias.as_slice().expect("standard layout"));
        }
        out.push(self.output.as_slice().expect("standard layout"));
        out.push(self.output_bias.as_slice().expect("standard layout"));
        out
    }

    pub fn blocks_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = vec![self.edge_embedding.as_slice_mut().expect("standard layout")];
        for l in &mut self.layers {
            out.push(l.weight.as_slice_mut().expect("standard layout"));
            out.push(l.bias.as_slice_mut().expect("standard layout"));
        }
        out.push(self.output.as_slice_mut().expect("standard layout"));
        out.push(self.output_bias.as_slice_mut().expect("standard layout"));
        out
    }

    fn check_types(&self, sub: &RelationalSubgraph) -> Result<()> {
        let types = self.type_count() as u32;
        match sub.edges.iter().find(|e| e.dtype >= types) {
            Some(e) => Err(KgeError::OutOfRange {
                kind: "directed type",
                id: e.dtype as u64,
                count: types as u64,
            }),
            None => Ok(()),
        }
    }

    /// Logits over the `2|R|` directed types. Errors on a subgraph without
    /// edges, where the target representation is undefined.
    pub fn forward(&self, sub: &RelationalSubgraph) -> Result<Array1<f64>> {
        if sub.is_empty() {
            return Err(KgeError::EmptySubgraph(sub.target));
        }
        Ok(self.forward_cached(sub)?.1)
    }

    /// Like [`forward`](Self::forward), but an edgeless subgraph yields the
    /// bias-only logits of a zero target representation.
    pub fn infer(&self, sub: &RelationalSubgraph) -> Result<Array1<f64>> {
        Ok(self.forward_cached(sub)?.1)
    }

    pub fn forward_cached(&self, sub: &RelationalSubgraph) -> Result<(ForwardCache, Array1<f64>)> {
        self.check_types(sub)?;
        let h = self.arch.edge_dim;
        let k = self.arch.layers;
        let n = sub.node_count().max(1);
        let edges = &sub.edges;
        let ne = edges.len();

        let mut state = Array2::zeros((ne, h));
        for (i, e) in edges.iter().enumerate() {
            state.row_mut(i).assign(&self.edge_embedding.row(e.dtype as usize));
        }
        let mut messages = Vec::with_capacity(k);
        let mut inputs = Vec::with_capacity(k - 1);
        let mut pre = Vec::with_capacity(k - 1);
        for i in 0..k {
            let mut m = Array2::<f64>::zeros((n, h));
            for (j, e) in edges.iter().enumerate() {
                let mut row = m.row_mut(e.src as usize);
                row += &state.row(j);
            }
            if i + 1 < k {
                let layer = &self.layers[i];
                let mut input = Array2::<f64>::zeros((ne, 3 * h));
                for (j, e) in edges.iter().enumerate() {
                    input.slice_mut(s![j, 0..h]).assign(&m.row(e.src as usize));
                    input.slice_mut(s![j, h..2 * h]).assign(&m.row(e.dst as usize));
                    input.slice_mut(s![j, 2 * h..]).assign(&state.row(j));
                }
                let mut z = input.dot(&layer.weight);
                z += &layer.bias;
                let next = z.mapv(|v| v.max(0.0));
                inputs.push(input);
                pre.push(z);
                state = next;
            }
            messages.push(m);
        }
        let mut readout = Array1::zeros(k * h);
        for (i, m) in messages.iter().enumerate() {
            readout.slice_mut(s![i * h..(i + 1) * h]).assign(&m.row(0));
        }
        let logits = readout.dot(&self.output) + &self.output_bias;
        if logits.iter().any(|v| !v.is_finite()) {
            return Err(KgeError::NonFinite(format!("typing logits for entity {}", sub.target)));
        }
        Ok((
            ForwardCache {
                messages,
                inputs,
                pre,
                readout,
            },
            logits,
        ))
    }

    /// Accumulates `∂L/∂θ` into `grads` given `∂L/∂logits`.
    pub fn backward(&self, sub: &RelationalSubgraph, cache: &ForwardCache, d_logits: &[f64], grads: &mut TypingGradients) {
        let h = self.arch.edge_dim;
        let k = self.arch.layers;
        let edges = &sub.edges;
        let g = ArrayView1::from(d_logits);

        general_mat_mul(
            1.0,
            &cache.readout.view().insert_axis(Axis(1)),
            &g.insert_axis(Axis(0)),
            1.0,
            &mut grads.output,
        );
        grads.output_bias += &g;
        let d_readout = self.output.dot(&g);

        let n = cache.messages[0].nrows();
        let mut d_msg = Array2::<f64>::zeros((n, h));
        d_msg.row_mut(0).assign(&d_readout.slice(s![(k - 1) * h..]));
        let mut d_state = Array2::<f64>::zeros((edges.len(), h));
        for i in (0..k).rev() {
            for (j, e) in edges.iter().enumerate() {
                let mut row = d_state.row_mut(j);
                row += &d_msg.row(e.src as usize);
            }
            if i == 0 {
                break;
            }
            let layer = &self.layers[i - 1];
            let mut d_pre = d_state;
            ndarray::Zip::from(&mut d_pre).and(&cache.pre[i - 1]).for_each(|d, &z| {
                if z <= 0.0 {
                    *d = 0.0;
                }
            });
            let gl = &mut grads.layers[i - 1];
            general_mat_mul(1.0, &cache.inputs[i - 1].t(), &d_pre, 1.0, &mut gl.weight);
            gl.bias += &d_pre.sum_axis(Axis(0));
            let d_input = d_pre.dot(&layer.weight.t());

            d_msg = Array2::zeros((n, h));
            d_msg
                .row_mut(0)
                .assign(&d_readout.slice(s![(i - 1) * h..i * h]));
            for (j, e) in edges.iter().enumerate() {
                let mut src = d_msg.row_mut(e.src as usize);
                src += &d_input.slice(s![j, 0..h]);
                let mut dst = d_msg.row_mut(e.dst as usize);
                dst += &d_input.slice(s![j, h..2 * h]);
            }
            d_state = d_input.slice(s![.., 2 * h..]).to_owned();
        }
        for (j, e) in edges.iter().enumerate() {
            let mut row = grads.edge_embedding.row_mut(e.dtype as usize);
            row += &d_state.row(j);
        }
    }
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = logits.iter().map(|&v| (v - max).exp()).collect();
    let total: f64 = exp.iter().sum();
    exp.into_iter().map(|v| v / total).collect()
}
