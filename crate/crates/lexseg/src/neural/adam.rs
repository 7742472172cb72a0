use super::params::ModelParams;
use crate::error::{Error, Result};

/// Bias-corrected Adam moments and hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: ModelParams,
    pub v: ModelParams,
    pub t: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    pub fn new(params: &ModelParams, lr: f64) -> Self {
        AdamState {
            m: params.zeros_like(),
            v: params.zeros_like(),
            t: 0,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// One Adam update in place. Non-finite gradients are rejected before any
/// state changes.
pub fn adam_step(params: &mut ModelParams, grads: &ModelParams, state: &mut AdamState) -> Result<()> {
    if !params.same_shape(grads) || !params.same_shape(&state.m) {
        return Err(Error::Shape("gradient or moment shapes differ from parameters".into()));
    }
    if !grads.is_finite() {
        return Err(Error::NonFinite("gradient".into()));
    }
    state.t += 1;
    let (b1, b2, eps, lr) = (state.beta1, state.beta2, state.epsilon, state.lr);
    let correction1 = 1.0 - b1.powi(state.t as i32);
    let correction2 = 1.0 - b2.powi(state.t as i32);
    let tensors = params
        .tensors_mut()
        .into_iter()
        .zip(grads.tensors())
        .zip(state.m.tensors_mut())
        .zip(state.v.tensors_mut());
    for (((theta, g), m), v) in tensors {
        for k in 0..theta.len() {
            m[k] = b1 * m[k] + (1.0 - b1) * g[k];
            v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
            let m_hat = m[k] / correction1;
            let v_hat = v[k] / correction2;
            theta[k] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::{init_params, ModelConfig};

    fn tiny() -> ModelConfig {
        ModelConfig { input_dim: 2, hidden_units: 1, num_classes: 2, ..ModelConfig::default() }
    }

    #[test]
    fn first_step_closed_form() {
        let config = tiny();
        let mut params = ModelParams::zeros(&config);
        let mut grads = params.zeros_like();
        grads.tensors_mut().into_iter().for_each(|t| t.fill(1.0));
        let mut state = AdamState::new(&params, 0.001);
        adam_step(&mut params, &grads, &mut state).unwrap();
        let expected = -0.001 / (1.0 + 1e-8);
        for x in params.flatten() {
            assert!((x - expected).abs() < 1e-18);
            assert!((x + 0.00099999999).abs() < 1e-16);
        }
        assert_eq!(state.t, 1);
    }

    #[test]
    fn zero_gradient_keeps_params_and_decays_moments() {
        let config = tiny();
        let params = init_params(&config, 3);
        let zero = params.zeros_like();

        let mut p = params.clone();
        let mut fresh = AdamState::new(&p, 0.01);
        adam_step(&mut p, &zero, &mut fresh).unwrap();
        assert_eq!(p, params);

        let mut half = params.zeros_like();
        half.tensors_mut().into_iter().for_each(|t| t.fill(0.5));
        let mut state = AdamState::new(&p, 0.01);
        adam_step(&mut p, &half, &mut state).unwrap();
        let (m_before, v_before) = (state.m.flatten(), state.v.flatten());
        adam_step(&mut p, &zero, &mut state).unwrap();
        for (a, b) in state.m.flatten().iter().zip(&m_before) {
            assert!((a - 0.9 * b).abs() < 1e-18);
        }
        for (a, b) in state.v.flatten().iter().zip(&v_before) {
            assert!((a - 0.999 * b).abs() < 1e-18);
        }
    }

    #[test]
    fn deterministic_and_rejects_nan() {
        let config = tiny();
        let params = init_params(&config, 3);
        let grads = init_params(&config, 4);
        let run = || {
            let mut p = params.clone();
            let mut s = AdamState::new(&p, 4e-3);
            adam_step(&mut p, &grads, &mut s).unwrap();
            adam_step(&mut p, &grads, &mut s).unwrap();
            (p, s)
        };
        assert_eq!(run(), run());
        let mut bad = grads.clone();
        bad.b_out[0] = f64::NAN;
        let mut p = params.clone();
        let mut s = AdamState::new(&p, 4e-3);
        assert!(matches!(adam_step(&mut p, &bad, &mut s), Err(Error::NonFinite(_))));
        assert_eq!(p, params);
        assert_eq!(s.t, 0);
    }
}
