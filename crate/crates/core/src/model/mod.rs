//! The trainable network: GraphSAGE layers with weighted-mean neighbor
//! aggregation, a dense classifier head, logit fusion, BCE-with-logits,
//! exact analytic gradients, and Adam.
//!
//! Everything runs in f64 so that analytic gradients can be verified
//! against central finite differences to tight tolerances.

mod adam;
mod backward;
mod checkpoint;
mod forward;

pub use adam::{adam_step, AdamState};
pub use backward::{backward, head_backward_into};
pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointMeta, CHECKPOINT_MAGIC};
pub use forward::{
    bce_with_logits, bce_with_logits_rows, combined_logits, forward_full, head_forward,
    propagate, propagate_transpose, sage_forward, sigmoid, FullForward, HeadCache, SageCache,
};

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Label;

/// Output dimension of every classifier branch.
pub const N_CLASSES: usize = Label::COUNT;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("non-finite values produced in {0}")]
    NonFinite(&'static str),
    #[error("lambda {0} out of range [0, 1]")]
    LambdaOutOfRange(f64),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("failed to access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid checkpoint: {0}")]
    InvalidCheckpoint(String),
}

/// One GraphSAGE layer: separate learned transforms for a node's own
/// representation and for the weighted mean of its neighbors.
#[derive(Debug, Clone, PartialEq)]
pub struct SageLayer {
    pub w_self: Array2<f64>,
    pub w_neigh: Array2<f64>,
    pub bias: Array1<f64>,
}

/// Dense layer, dropout, and output projection acting on the raw features.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierHead {
    pub dense_w: Array2<f64>,
    pub dense_b: Array1<f64>,
    pub proj_w: Array2<f64>,
    pub proj_b: Array1<f64>,
    pub dropout_rate: f64,
}

/// Every trained tensor: the GraphSAGE stack with its output projection,
/// the classifier head, and the fusion weight lambda.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub gnn_layers: Vec<SageLayer>,
    pub gnn_proj_w: Array2<f64>,
    pub gnn_proj_b: Array1<f64>,
    pub head: ClassifierHead,
    pub lambda: f64,
}

/// Which learning rate a tensor follows in [`adam_step`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamGroup {
    Gnn,
    Head,
}

pub(crate) enum TensorRef<'a> {
    Mat(&'a Array2<f64>),
    Vec(&'a Array1<f64>),
}

pub(crate) enum TensorMut<'a> {
    Mat(&'a mut Array2<f64>),
    Vec(&'a mut Array1<f64>),
}

impl TensorRef<'_> {
    pub(crate) fn iter(&self) -> Box<dyn Iterator<Item = &f64> + '_> {
        match self {
            TensorRef::Mat(m) => Box::new(m.iter()),
            TensorRef::Vec(v) => Box::new(v.iter()),
        }
    }

    pub(crate) fn len(&self) -> usize {
        match self {
            TensorRef::Mat(m) => m.len(),
            TensorRef::Vec(v) => v.len(),
        }
    }
}

impl TensorMut<'_> {
    pub(crate) fn iter_mut(&mut self) -> Box<dyn Iterator<Item = &mut f64> + '_> {
        match self {
            TensorMut::Mat(m) => Box::new(m.iter_mut()),
            TensorMut::Vec(v) => Box::new(v.iter_mut()),
        }
    }
}

fn glorot(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(-bound..bound))
}

impl ModelParams {
    /// Glorot-uniform weights, zero biases, seeded draw order: SAGE layers
    /// front to back (w_self then w_neigh), GNN projection, head dense,
    /// head projection.
    pub fn init(
        in_dim: usize,
        hidden_dim: usize,
        n_layers: usize,
        lambda: f64,
        dropout_rate: f64,
        seed: u64,
    ) -> Result<ModelParams, ModelError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ModelParams::init_with_rng(in_dim, hidden_dim, n_layers, lambda, dropout_rate, &mut rng)
    }

    pub fn init_with_rng(
        in_dim: usize,
        hidden_dim: usize,
        n_layers: usize,
        lambda: f64,
        dropout_rate: f64,
        rng: &mut ChaCha8Rng,
    ) -> Result<ModelParams, ModelError> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(ModelError::LambdaOutOfRange(lambda));
        }
        if n_layers == 0 {
            return Err(ModelError::InvalidConfig("n_layers must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&dropout_rate) {
            return Err(ModelError::InvalidConfig(format!(
                "dropout_rate {dropout_rate} outside [0, 1)"
            )));
        }
        if in_dim == 0 || hidden_dim == 0 {
            return Err(ModelError::InvalidConfig("zero-sized layer".into()));
        }
        let mut gnn_layers = Vec::with_capacity(n_layers);
        let mut d_in = in_dim;
        for _ in 0..n_layers {
            gnn_layers.push(SageLayer {
                w_self: glorot(rng, d_in, hidden_dim),
                w_neigh: glorot(rng, d_in, hidden_dim),
                bias: Array1::zeros(hidden_dim),
            });
            d_in = hidden_dim;
        }
        Ok(ModelParams {
            gnn_layers,
            gnn_proj_w: glorot(rng, hidden_dim, N_CLASSES),
            gnn_proj_b: Array1::zeros(N_CLASSES),
            head: ClassifierHead {
                dense_w: glorot(rng, in_dim, in_dim),
                dense_b: Array1::zeros(in_dim),
                proj_w: glorot(rng, in_dim, N_CLASSES),
                proj_b: Array1::zeros(N_CLASSES),
                dropout_rate,
            },
            lambda,
        })
    }

    pub fn in_dim(&self) -> usize {
        self.gnn_layers[0].w_self.nrows()
    }

    pub fn hidden_dim(&self) -> usize {
        self.gnn_layers[0].w_self.ncols()
    }

    pub fn n_layers(&self) -> usize {
        self.gnn_layers.len()
    }

    /// Tensors in checkpoint order, paired with their parameter group.
    pub(crate) fn tensors(&self) -> Vec<(TensorRef<'_>, ParamGroup)> {
        let mut out = Vec::new();
        for layer in &self.gnn_layers {
            out.push((TensorRef::Mat(&layer.w_self), ParamGroup::Gnn));
            out.push((TensorRef::Mat(&layer.w_neigh), ParamGroup::Gnn));
            out.push((TensorRef::Vec(&layer.bias), ParamGroup::Gnn));
        }
        out.push((TensorRef::Mat(&self.gnn_proj_w), ParamGroup::Gnn));
        out.push((TensorRef::Vec(&self.gnn_proj_b), ParamGroup::Gnn));
        out.push((TensorRef::Mat(&self.head.dense_w), ParamGroup::Head));
        out.push((TensorRef::Vec(&self.head.dense_b), ParamGroup::Head));
        out.push((TensorRef::Mat(&self.head.proj_w), ParamGroup::Head));
        out.push((TensorRef::Vec(&self.head.proj_b), ParamGroup::Head));
        out
    }

    pub(crate) fn tensors_mut(&mut self) -> Vec<(TensorMut<'_>, ParamGroup)> {
        let mut out = Vec::new();
        for layer in &mut self.gnn_layers {
            out.push((TensorMut::Mat(&mut layer.w_self), ParamGroup::Gnn));
            out.push((TensorMut::Mat(&mut layer.w_neigh), ParamGroup::Gnn));
            out.push((TensorMut::Vec(&mut layer.bias), ParamGroup::Gnn));
        }
        out.push((TensorMut::Mat(&mut self.gnn_proj_w), ParamGroup::Gnn));
        out.push((TensorMut::Vec(&mut self.gnn_proj_b), ParamGroup::Gnn));
        out.push((TensorMut::Mat(&mut self.head.dense_w), ParamGroup::Head));
        out.push((TensorMut::Vec(&mut self.head.dense_b), ParamGroup::Head));
        out.push((TensorMut::Mat(&mut self.head.proj_w), ParamGroup::Head));
        out.push((TensorMut::Vec(&mut self.head.proj_b), ParamGroup::Head));
        out
    }

    /// Total number of scalar parameters.
    pub fn param_count(&self) -> usize {
        self.tensors().iter().map(|(t, _)| t.len()).sum()
    }

    /// Flatten all tensors in checkpoint order.
    pub fn to_flat_vec(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for (tensor, _) in self.tensors() {
            out.extend(tensor.iter().copied());
        }
        out
    }

    /// Overwrite all tensors from a flat vector in checkpoint order.
    pub fn set_from_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.param_count(), "flat parameter length");
        let mut cursor = flat.iter();
        for (mut tensor, _) in self.tensors_mut() {
            for v in tensor.iter_mut() {
                *v = *cursor.next().expect("length checked");
            }
        }
    }
}

/// Gradient (or moment) storage mirroring every trainable tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGradients {
    pub w_self: Array2<f64>,
    pub w_neigh: Array2<f64>,
    pub bias: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub gnn_layers: Vec<LayerGradients>,
    pub gnn_proj_w: Array2<f64>,
    pub gnn_proj_b: Array1<f64>,
    pub dense_w: Array2<f64>,
    pub dense_b: Array1<f64>,
    pub head_proj_w: Array2<f64>,
    pub head_proj_b: Array1<f64>,
}

impl Gradients {
    pub fn zeros_like(params: &ModelParams) -> Gradients {
        Gradients {
            gnn_layers: params
                .gnn_layers
                .iter()
                .map(|l| LayerGradients {
                    w_self: Array2::zeros(l.w_self.dim()),
                    w_neigh: Array2::zeros(l.w_neigh.dim()),
                    bias: Array1::zeros(l.bias.len()),
                })
                .collect(),
            gnn_proj_w: Array2::zeros(params.gnn_proj_w.dim()),
            gnn_proj_b: Array1::zeros(params.gnn_proj_b.len()),
            dense_w: Array2::zeros(params.head.dense_w.dim()),
            dense_b: Array1::zeros(params.head.dense_b.len()),
            head_proj_w: Array2::zeros(params.head.proj_w.dim()),
            head_proj_b: Array1::zeros(params.head.proj_b.len()),
        }
    }

    pub(crate) fn tensors(&self) -> Vec<(TensorRef<'_>, ParamGroup)> {
        let mut out = Vec::new();
        for layer in &self.gnn_layers {
            out.push((TensorRef::Mat(&layer.w_self), ParamGroup::Gnn));
            out.push((TensorRef::Mat(&layer.w_neigh), ParamGroup::Gnn));
            out.push((TensorRef::Vec(&layer.bias), ParamGroup::Gnn));
        }
        out.push((TensorRef::Mat(&self.gnn_proj_w), ParamGroup::Gnn));
        out.push((TensorRef::Vec(&self.gnn_proj_b), ParamGroup::Gnn));
        out.push((TensorRef::Mat(&self.dense_w), ParamGroup::Head));
        out.push((TensorRef::Vec(&self.dense_b), ParamGroup::Head));
        out.push((TensorRef::Mat(&self.head_proj_w), ParamGroup::Head));
        out.push((TensorRef::Vec(&self.head_proj_b), ParamGroup::Head));
        out
    }

    pub(crate) fn tensors_mut(&mut self) -> Vec<(TensorMut<'_>, ParamGroup)> {
        let mut out = Vec::new();
        for layer in &mut self.gnn_layers {
            out.push((TensorMut::Mat(&mut layer.w_self), ParamGroup::Gnn));
            out.push((TensorMut::Mat(&mut layer.w_neigh), ParamGroup::Gnn));
            out.push((TensorMut::Vec(&mut layer.bias), ParamGroup::Gnn));
        }
        out.push((TensorMut::Mat(&mut self.gnn_proj_w), ParamGroup::Gnn));
        out.push((TensorMut::Vec(&mut self.gnn_proj_b), ParamGroup::Gnn));
        out.push((TensorMut::Mat(&mut self.dense_w), ParamGroup::Head));
        out.push((TensorMut::Vec(&mut self.dense_b), ParamGroup::Head));
        out.push((TensorMut::Mat(&mut self.head_proj_w), ParamGroup::Head));
        out.push((TensorMut::Vec(&mut self.head_proj_b), ParamGroup::Head));
        out
    }

    /// Flatten in the same order as [`ModelParams::to_flat_vec`].
    pub fn to_flat_vec(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (tensor, _) in self.tensors() {
            out.extend(tensor.iter().copied());
        }
        out
    }
}

/// Hyperparameters of one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr_head: f64,
    pub lr_gnn: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub dropout_rate: f64,
    pub hidden_dim: usize,
    pub n_layers: usize,
    pub lambda: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> TrainConfig {
        TrainConfig {
            lr_head: 2e-4,
            lr_gnn: 2e-3,
            epochs: 20,
            batch_size: 32,
            dropout_rate: 0.1,
            hidden_dim: 64,
            n_layers: 2,
            lambda: 0.7,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.lr_head <= 0.0 || self.lr_gnn <= 0.0 {
            return Err(ModelError::InvalidConfig(
                "learning rates must be positive".into(),
            ));
        }
        if self.epochs < 1 {
            return Err(ModelError::InvalidConfig("epochs must be >= 1".into()));
        }
        if self.batch_size < 1 {
            return Err(ModelError::InvalidConfig("batch_size must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(ModelError::InvalidConfig(format!(
                "dropout_rate {} outside [0, 1)",
                self.dropout_rate
            )));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(ModelError::LambdaOutOfRange(self.lambda));
        }
        if self.n_layers == 0 || self.hidden_dim == 0 {
            return Err(ModelError::InvalidConfig("zero-sized model".into()));
        }
        Ok(())
    }
}
