//! The EdgeConv layer: each node's output is the sum over incoming edges of
//! an MLP applied to (target features, source minus target features).
//! Nodes with no incoming edges produce zeros (empty sum).

use super::mlp::{empty_cache, Mlp, MlpCache, MlpGrads};
use super::tensor::Tensor2;
use crate::graph_encode::Edge;

#[derive(Clone, Debug)]
pub struct EdgeConv {
    /// Input width is 2x the node feature width.
    pub mlp: Mlp,
}

pub struct EdgeConvCache {
    pub mlp_cache: MlpCache,
    pub n_nodes: usize,
    pub in_dim: usize,
}

impl EdgeConv {
    pub fn node_input_dim(&self) -> usize {
        self.mlp.input_dim / 2
    }

    pub fn output_dim(&self) -> usize {
        self.mlp.output_dim()
    }

    /// `h`: `n_nodes x d`; each edge `(target, source)` contributes
    /// `mlp(h[target], h[source] - h[target])` to row `target`.
    pub fn forward(
        &self,
        h: &Tensor2,
        edges: &[Edge],
        mut cache: Option<&mut EdgeConvCache>,
    ) -> Tensor2 {
        let d = h.cols;
        debug_assert_eq!(2 * d, self.mlp.input_dim);
        let mut edge_in = Tensor2::zeros(edges.len(), 2 * d);
        for (row, &(t, s)) in edges.iter().enumerate() {
            let (t, s) = (t as usize, s as usize);
            let dst = edge_in.row_mut(row);
            for j in 0..d {
                dst[j] = h.data[t * d + j];
                dst[d + j] = h.data[s * d + j] - h.data[t * d + j];
            }
        }
        let mut mlp_cache = cache.as_deref_mut().map(|_| empty_cache());
        let messages = self.mlp.forward(&edge_in, mlp_cache.as_mut());

        let mut out = Tensor2::zeros(h.rows, self.output_dim());
        for (row, &(t, _)) in edges.iter().enumerate() {
            let src = messages.row(row);
            let dst = out.row_mut(t as usize);
            for (o, m) in dst.iter_mut().zip(src) {
                *o += m;
            }
        }
        if let Some(c) = cache {
            c.mlp_cache = mlp_cache.unwrap();
            c.n_nodes = h.rows;
            c.in_dim = d;
        }
        out
    }

    /// Backpropagates `d_out` (`n_nodes x out_dim`), accumulating MLP
    /// gradients and returning the gradient w.r.t. the input features.
    pub fn backward(
        &self,
        edges: &[Edge],
        cache: &EdgeConvCache,
        d_out: &Tensor2,
        grads: &mut MlpGrads,
    ) -> Tensor2 {
        let out_dim = self.output_dim();
        let mut d_messages = Tensor2::zeros(edges.len(), out_dim);
        for (row, &(t, _)) in edges.iter().enumerate() {
            d_messages
                .row_mut(row)
                .copy_from_slice(d_out.row(t as usize));
        }
        let d_edge_in = self.mlp.backward(&cache.mlp_cache, &d_messages, grads);

        let d = cache.in_dim;
        let mut d_h = Tensor2::zeros(cache.n_nodes, d);
        for (row, &(t, s)) in edges.iter().enumerate() {
            let (t, s) = (t as usize, s as usize);
            let src = d_edge_in.row(row);
            for j in 0..d {
                // input was (h_t, h_s - h_t)
                d_h.data[t * d + j] += src[j] - src[d + j];
                d_h.data[s * d + j] += src[d + j];
            }
        }
        d_h
    }
}

/// Per-graph elementwise sum of node rows.
pub fn readout_sum(h: &Tensor2, graph_of_node: &[usize], n_graphs: usize) -> Tensor2 {
    let mut out = Tensor2::zeros(n_graphs, h.cols);
    for (node, &g) in graph_of_node.iter().enumerate() {
        let src = h.row(node);
        let dst = out.row_mut(g);
        for (o, v) in dst.iter_mut().zip(src) {
            *o += v;
        }
    }
    out
}

/// Gradient of [`readout_sum`] w.r.t. the node features.
pub fn readout_sum_backward(
    d_out: &Tensor2,
    graph_of_node: &[usize],
    n_nodes: usize,
) -> Tensor2 {
    let mut d_h = Tensor2::zeros(n_nodes, d_out.cols);
    for (node, &g) in graph_of_node.iter().enumerate() {
        d_h.row_mut(node).copy_from_slice(d_out.row(g));
    }
    d_h
}
