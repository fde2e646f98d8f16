//! Adam with bias correction and per-group learning rates: the classifier
//! head follows `lr_head`, the GNN stack (layers plus projection) follows
//! `lr_gnn`.

use super::{Gradients, ModelParams, ParamGroup};

/// First/second-moment accumulators mirroring the parameter shapes.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub m: Gradients,
    pub v: Gradients,
    pub step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    pub fn new(params: &ModelParams) -> AdamState {
        AdamState {
            m: Gradients::zeros_like(params),
            v: Gradients::zeros_like(params),
            step: 0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// One Adam update. Moments are updated in place and the step counter
/// advances even for all-zero gradients.
pub fn adam_step(
    params: &mut ModelParams,
    grads: &Gradients,
    state: &mut AdamState,
    lr_head: f64,
    lr_gnn: f64,
) {
    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - state.beta1.powi(t);
    let bc2 = 1.0 - state.beta2.powi(t);
    let (beta1, beta2, eps) = (state.beta1, state.beta2, state.epsilon);

    let mut p_tensors = params.tensors_mut();
    let g_tensors = grads.tensors();
    let mut m_tensors = state.m.tensors_mut();
    let mut v_tensors = state.v.tensors_mut();
    debug_assert_eq!(p_tensors.len(), g_tensors.len());

    for (((p, g), m), v) in p_tensors
        .iter_mut()
        .zip(g_tensors.iter())
        .zip(m_tensors.iter_mut())
        .zip(v_tensors.iter_mut())
    {
        let lr = match p.1 {
            ParamGroup::Head => lr_head,
            ParamGroup::Gnn => lr_gnn,
        };
        for ((p, &g), (m, v)) in p
            .0
            .iter_mut()
            .zip(g.0.iter())
            .zip(m.0.iter_mut().zip(v.0.iter_mut()))
        {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *p -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
}
