//! Exact analytic gradients of the masked mean BCE loss with respect to
//! every trainable tensor, reusing the intermediates cached by the
//! forward pass (including dropout masks).

use ndarray::Array2;

use super::forward::{propagate_transpose, sigmoid, FullForward, HeadCache, SageCache};
use super::{ClassifierHead, Gradients, ModelParams, SageLayer};
use crate::graph::PersonaGraph;

/// d(loss)/d(logits) for the mean BCE over `rows`: `(sigmoid(z) - y) / m`
/// on contributing entries, zero elsewhere.
fn loss_grad(z: &Array2<f64>, y: &Array2<f64>, rows: &[usize]) -> Array2<f64> {
    let mut dz = Array2::zeros(z.dim());
    if rows.is_empty() {
        return dz;
    }
    let scale = 1.0 / (rows.len() * z.ncols()) as f64;
    for &r in rows {
        for c in 0..z.ncols() {
            dz[[r, c]] = (sigmoid(z[[r, c]]) - y[[r, c]]) * scale;
        }
    }
    dz
}

/// Accumulate head gradients for upstream logit gradient `d_z_enc`.
/// `x` must be the same matrix the forward pass saw.
pub fn head_backward_into(
    x: &Array2<f64>,
    head: &ClassifierHead,
    cache: &HeadCache,
    d_z_enc: &Array2<f64>,
    grads: &mut Gradients,
) {
    grads.head_proj_w += &cache.dropped.t().dot(d_z_enc);
    grads.head_proj_b += &d_z_enc.sum_axis(ndarray::Axis(0));
    let mut d_hidden = d_z_enc.dot(&head.proj_w.t());
    if let Some(mask) = &cache.mask {
        d_hidden *= mask;
    }
    // ReLU gate from the cached pre-activation.
    ndarray::Zip::from(&mut d_hidden)
        .and(&cache.preact)
        .for_each(|d, &pre| {
            if pre <= 0.0 {
                *d = 0.0;
            }
        });
    grads.dense_w += &x.t().dot(&d_hidden);
    grads.dense_b += &d_hidden.sum_axis(ndarray::Axis(0));
}

/// Accumulate GNN-branch gradients for upstream logit gradient `d_z_gnn`.
fn sage_backward_into(
    graph: &PersonaGraph,
    layers: &[SageLayer],
    proj_w: &Array2<f64>,
    cache: &SageCache,
    d_z_gnn: &Array2<f64>,
    grads: &mut Gradients,
) {
    grads.gnn_proj_w += &cache.hidden.t().dot(d_z_gnn);
    grads.gnn_proj_b += &d_z_gnn.sum_axis(ndarray::Axis(0));
    let mut d_out = d_z_gnn.dot(&proj_w.t());
    for (idx, layer) in layers.iter().enumerate().rev() {
        let mut d_pre = d_out;
        ndarray::Zip::from(&mut d_pre)
            .and(&cache.preacts[idx])
            .for_each(|d, &pre| {
                if pre <= 0.0 {
                    *d = 0.0;
                }
            });
        grads.gnn_layers[idx].bias += &d_pre.sum_axis(ndarray::Axis(0));
        grads.gnn_layers[idx].w_self += &cache.inputs[idx].t().dot(&d_pre);
        grads.gnn_layers[idx].w_neigh += &cache.aggs[idx].t().dot(&d_pre);
        if idx > 0 {
            d_out = d_pre.dot(&layer.w_self.t())
                + propagate_transpose(graph, &d_pre.dot(&layer.w_neigh.t()));
        } else {
            d_out = Array2::zeros((0, 0));
        }
    }
}

/// Gradients of the mean BCE loss over `loss_rows` for every trainable
/// tensor, routed through both branches of the lambda-weighted fusion.
pub fn backward(
    x: &Array2<f64>,
    graph: &PersonaGraph,
    params: &ModelParams,
    fwd: &FullForward,
    y: &Array2<f64>,
    loss_rows: &[usize],
) -> Gradients {
    let mut grads = Gradients::zeros_like(params);
    let dz = loss_grad(&fwd.z, y, loss_rows);
    let d_z_gnn = &dz * params.lambda;
    let d_z_enc = &dz * (1.0 - params.lambda);
    sage_backward_into(
        graph,
        &params.gnn_layers,
        &params.gnn_proj_w,
        &fwd.sage,
        &d_z_gnn,
        &mut grads,
    );
    head_backward_into(x, &params.head, &fwd.head, &d_z_enc, &mut grads);
    grads
}
