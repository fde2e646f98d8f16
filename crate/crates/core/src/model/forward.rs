//! Forward pass: weighted-mean neighbor aggregation, the SAGE layer stack,
//! the classifier head with inverted dropout, logit fusion, and the
//! numerically stable BCE-with-logits loss.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{ClassifierHead, ModelError, ModelParams, SageLayer};
use crate::graph::PersonaGraph;

/// Numerically stable logistic function.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Weighted-mean aggregation: row v of the result is
/// `sum_u w_uv h_u / sum_u w_uv` over the neighbors u of v, and zero for
/// isolated nodes or all-zero incident weights.
pub fn propagate(graph: &PersonaGraph, h: &Array2<f64>) -> Array2<f64> {
    let mut out = Array2::zeros(h.dim());
    for v in 0..graph.n_nodes() {
        let neighbors = graph.neighbors(v);
        let total: f64 = neighbors.iter().map(|&(_, w)| w).sum();
        if total == 0.0 {
            continue;
        }
        let mut row = out.row_mut(v);
        for &(u, w) in neighbors {
            row.scaled_add(w, &h.row(u));
        }
        row.mapv_inplace(|x| x / total);
    }
    out
}

/// Transpose of the aggregation operator: scatters each row v of `g`,
/// scaled by `w_uv / sum_u w_uv`, onto the rows of v's neighbors.
pub fn propagate_transpose(graph: &PersonaGraph, g: &Array2<f64>) -> Array2<f64> {
    let mut out = Array2::zeros(g.dim());
    for v in 0..graph.n_nodes() {
        let neighbors = graph.neighbors(v);
        let total: f64 = neighbors.iter().map(|&(_, w)| w).sum();
        if total == 0.0 {
            continue;
        }
        let scaled = g.row(v).mapv(|x| x / total);
        for &(u, w) in neighbors {
            out.row_mut(u).scaled_add(w, &scaled);
        }
    }
    out
}

/// Intermediates cached by [`sage_forward`] for the backward pass.
#[derive(Debug, Clone)]
pub struct SageCache {
    /// Input of each layer (`inputs[0]` is the feature matrix).
    pub inputs: Vec<Array2<f64>>,
    /// Aggregated neighbor means fed to each layer's `w_neigh`.
    pub aggs: Vec<Array2<f64>>,
    /// Pre-activation of each layer.
    pub preacts: Vec<Array2<f64>>,
    /// Output of the last layer (input of the projection).
    pub hidden: Array2<f64>,
}

fn check_finite(m: &Array2<f64>, context: &'static str) -> Result<(), ModelError> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(ModelError::NonFinite(context));
    }
    Ok(())
}

/// GNN branch logits: per layer `relu(h W_self + (D h) W_neigh + b)` with
/// `D` the row-normalized weighted adjacency, then a linear projection.
pub fn sage_forward(
    x: &Array2<f64>,
    graph: &PersonaGraph,
    layers: &[SageLayer],
    proj_w: &Array2<f64>,
    proj_b: &Array1<f64>,
) -> Result<(Array2<f64>, SageCache), ModelError> {
    if x.nrows() != graph.n_nodes() {
        return Err(ModelError::DimensionMismatch {
            context: "sage_forward node count",
            expected: graph.n_nodes(),
            found: x.nrows(),
        });
    }
    let mut cache = SageCache {
        inputs: Vec::with_capacity(layers.len()),
        aggs: Vec::with_capacity(layers.len()),
        preacts: Vec::with_capacity(layers.len()),
        hidden: Array2::zeros((0, 0)),
    };
    let mut h = x.clone();
    for layer in layers {
        if h.ncols() != layer.w_self.nrows() {
            return Err(ModelError::DimensionMismatch {
                context: "sage layer input",
                expected: layer.w_self.nrows(),
                found: h.ncols(),
            });
        }
        let agg = propagate(graph, &h);
        let mut pre = h.dot(&layer.w_self) + agg.dot(&layer.w_neigh);
        pre += &layer.bias;
        check_finite(&pre, "sage layer pre-activation")?;
        let out = pre.mapv(|v| v.max(0.0));
        cache.inputs.push(h);
        cache.aggs.push(agg);
        cache.preacts.push(pre);
        h = out;
    }
    if h.ncols() != proj_w.nrows() {
        return Err(ModelError::DimensionMismatch {
            context: "gnn projection input",
            expected: proj_w.nrows(),
            found: h.ncols(),
        });
    }
    let mut z = h.dot(proj_w);
    z += proj_b;
    check_finite(&z, "gnn logits")?;
    cache.hidden = h;
    Ok((z, cache))
}

/// Intermediates cached by [`head_forward`] for the backward pass.
#[derive(Debug, Clone)]
pub struct HeadCache {
    /// Dense pre-activation.
    pub preact: Array2<f64>,
    /// ReLU output after dropout (input of the projection).
    pub dropped: Array2<f64>,
    /// Inverted-dropout scale factors (0 or 1/(1-p)); `None` in eval mode
    /// or at rate 0.
    pub mask: Option<Array2<f64>>,
}

/// Head branch logits: dense, ReLU, inverted dropout (training only),
/// projection. Pass `None` for evaluation mode.
pub fn head_forward(
    x: &Array2<f64>,
    head: &ClassifierHead,
    dropout_rng: Option<&mut ChaCha8Rng>,
) -> Result<(Array2<f64>, HeadCache), ModelError> {
    if x.ncols() != head.dense_w.nrows() {
        return Err(ModelError::DimensionMismatch {
            context: "head dense input",
            expected: head.dense_w.nrows(),
            found: x.ncols(),
        });
    }
    let mut pre = x.dot(&head.dense_w);
    pre += &head.dense_b;
    check_finite(&pre, "head pre-activation")?;
    let hidden = pre.mapv(|v| v.max(0.0));
    let (dropped, mask) = match dropout_rng {
        Some(rng) if head.dropout_rate > 0.0 => {
            let keep = 1.0 - head.dropout_rate;
            let mask = Array2::from_shape_fn(hidden.dim(), |_| {
                if rng.random::<f64>() < head.dropout_rate {
                    0.0
                } else {
                    1.0 / keep
                }
            });
            (&hidden * &mask, Some(mask))
        }
        _ => (hidden, None),
    };
    let mut z = dropped.dot(&head.proj_w);
    z += &head.proj_b;
    check_finite(&z, "head logits")?;
    Ok((z, HeadCache { preact: pre, dropped, mask }))
}

/// `lambda * z_gnn + (1 - lambda) * z_enc`. The endpoints return the
/// corresponding branch bitwise.
pub fn combined_logits(
    z_gnn: &Array2<f64>,
    z_enc: &Array2<f64>,
    lambda: f64,
) -> Result<Array2<f64>, ModelError> {
    if z_gnn.dim() != z_enc.dim() {
        return Err(ModelError::DimensionMismatch {
            context: "combined_logits shape",
            expected: z_gnn.len(),
            found: z_enc.len(),
        });
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(ModelError::LambdaOutOfRange(lambda));
    }
    if lambda == 0.0 {
        return Ok(z_enc.clone());
    }
    if lambda == 1.0 {
        return Ok(z_gnn.clone());
    }
    Ok(z_gnn * lambda + z_enc * (1.0 - lambda))
}

fn bce_term(z: f64, y: f64) -> f64 {
    z.max(0.0) - z * y + (-z.abs()).exp().ln_1p()
}

/// Mean BCE-with-logits over all entries, in the numerically stable form
/// `max(z, 0) - z y + ln(1 + exp(-|z|))`.
pub fn bce_with_logits(z: &Array2<f64>, y: &Array2<f64>) -> Result<f64, ModelError> {
    if z.dim() != y.dim() {
        return Err(ModelError::DimensionMismatch {
            context: "bce shapes",
            expected: y.len(),
            found: z.len(),
        });
    }
    check_finite(z, "bce logits")?;
    if z.is_empty() {
        return Ok(0.0);
    }
    let sum: f64 = z.iter().zip(y.iter()).map(|(&z, &y)| bce_term(z, y)).sum();
    Ok(sum / z.len() as f64)
}

/// Mean BCE-with-logits restricted to the given rows.
pub fn bce_with_logits_rows(
    z: &Array2<f64>,
    y: &Array2<f64>,
    rows: &[usize],
) -> Result<f64, ModelError> {
    if z.dim() != y.dim() {
        return Err(ModelError::DimensionMismatch {
            context: "bce shapes",
            expected: y.len(),
            found: z.len(),
        });
    }
    if rows.is_empty() {
        return Ok(0.0);
    }
    let mut sum = 0.0;
    for &r in rows {
        for c in 0..z.ncols() {
            let term = bce_term(z[[r, c]], y[[r, c]]);
            if !term.is_finite() {
                return Err(ModelError::NonFinite("bce loss"));
            }
            sum += term;
        }
    }
    Ok(sum / (rows.len() * z.ncols()) as f64)
}

/// Both branches plus the fused logits, with all cached intermediates.
#[derive(Debug, Clone)]
pub struct FullForward {
    pub z_gnn: Array2<f64>,
    pub z_enc: Array2<f64>,
    pub z: Array2<f64>,
    pub sage: SageCache,
    pub head: HeadCache,
}

/// Run both branches over every node and fuse. Pass a dropout RNG for
/// training mode, `None` for evaluation.
pub fn forward_full(
    x: &Array2<f64>,
    graph: &PersonaGraph,
    params: &ModelParams,
    dropout_rng: Option<&mut ChaCha8Rng>,
) -> Result<FullForward, ModelError> {
    let (z_gnn, sage) = sage_forward(
        x,
        graph,
        &params.gnn_layers,
        &params.gnn_proj_w,
        &params.gnn_proj_b,
    )?;
    let (z_enc, head) = head_forward(x, &params.head, dropout_rng)?;
    let z = combined_logits(&z_gnn, &z_enc, params.lambda)?;
    Ok(FullForward {
        z_gnn,
        z_enc,
        z,
        sage,
        head,
    })
}
