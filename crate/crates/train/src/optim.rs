//! Decoupled-weight-decay Adam.

use semrel_core::Scalar;

#[derive(Debug, Clone, Copy)]
pub struct AdamWConfig<T> {
    pub lr: T,
    pub beta1: T,
    pub beta2: T,
    pub eps: T,
    pub weight_decay: T,
}

impl<T: Scalar> AdamWConfig<T> {
    pub fn new(lr: T) -> Self {
        Self {
            lr,
            beta1: T::from_f64_lossy(0.9),
            beta2: T::from_f64_lossy(0.999),
            eps: T::from_f64_lossy(1e-8),
            weight_decay: T::from_f64_lossy(0.01),
        }
    }
}

/// First/second moment estimates plus the step counter.
#[derive(Debug, Clone)]
pub struct AdamWState<T> {
    pub m: Vec<T>,
    pub v: Vec<T>,
    pub t: usize,
}

impl<T: Scalar> AdamWState<T> {
    pub fn new(param_count: usize) -> Self {
        Self {
            m: vec![T::zero(); param_count],
            v: vec![T::zero(); param_count],
            t: 0,
        }
    }
}

/// One update with bias-corrected moments and decay applied directly to
/// the parameters (not through the gradient).
pub fn adamw_step<T: Scalar>(
    params: &mut [T],
    grads: &[T],
    state: &mut AdamWState<T>,
    cfg: &AdamWConfig<T>,
) {
    assert_eq!(params.len(), grads.len(), "adamw: grads length");
    assert_eq!(params.len(), state.m.len(), "adamw: state length");
    state.t += 1;
    let t = state.t as i32;
    let bias1 = T::one() - cfg.beta1.powi(t);
    let bias2 = T::one() - cfg.beta2.powi(t);
    for i in 0..params.len() {
        let g = grads[i];
        state.m[i] = cfg.beta1 * state.m[i] + (T::one() - cfg.beta1) * g;
        state.v[i] = cfg.beta2 * state.v[i] + (T::one() - cfg.beta2) * g * g;
        let m_hat = state.m[i] / bias1;
        let v_hat = state.v[i] / bias2;
        params[i] = params[i]
            - cfg.lr * (m_hat / (v_hat.sqrt() + cfg.eps) + cfg.weight_decay * params[i]);
    }
}
