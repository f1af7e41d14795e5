//! Trainable parameters and the Adam optimizer.

use alloc::string::String;
use alloc::vec::Vec;

use crate::tensor::Tensor;

/// A named weight tensor with its gradient buffer and Adam moments.
#[derive(Debug, Clone)]
pub struct Parameter {
    pub name: String,
    pub value: Tensor,
    pub grad: Tensor,
    adam_m: Tensor,
    adam_v: Tensor,
    step_count: u64,
}

impl Parameter {
    pub fn new(name: String, value: Tensor) -> Self {
        let shape = value.shape().to_vec();
        Parameter {
            name,
            value,
            grad: Tensor::zeros(&shape),
            adam_m: Tensor::zeros(&shape),
            adam_v: Tensor::zeros(&shape),
            step_count: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn zero_grad(&mut self) {
        for g in self.grad.data_mut() {
            *g = 0.0;
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamConfig {
    pub fn with_learning_rate(learning_rate: f64) -> Self {
        AdamConfig {
            learning_rate,
            ..AdamConfig::default()
        }
    }
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// One bias-corrected Adam update over `params`; consumes and zeroes the
/// gradients. A parameter whose gradient is all zero keeps its value
/// unchanged for any step count.
pub fn adam_step<'a>(params: impl IntoIterator<Item = &'a mut Parameter>, cfg: &AdamConfig) {
    for p in params {
        p.step_count += 1;
        let t = p.step_count as i32;
        let bc1 = 1.0 - libm::pow(cfg.beta1, f64::from(t));
        let bc2 = 1.0 - libm::pow(cfg.beta2, f64::from(t));
        for i in 0..p.value.len() {
            let g = p.grad.data()[i];
            let m = cfg.beta1 * p.adam_m.data()[i] + (1.0 - cfg.beta1) * g;
            let v = cfg.beta2 * p.adam_v.data()[i] + (1.0 - cfg.beta2) * g * g;
            p.adam_m.data_mut()[i] = m;
            p.adam_v.data_mut()[i] = v;
            let m_hat = m / bc1;
            let v_hat = v / bc2;
            p.value.data_mut()[i] -= cfg.learning_rate * m_hat / (libm::sqrt(v_hat) + cfg.epsilon);
        }
        p.zero_grad();
    }
}

/// Glorot-style uniform init in `±sqrt(6 / (fan_in + fan_out))`, drawn from
/// the stream `(seed, "init/<name>")` so values do not depend on creation
/// order.
pub fn init_uniform(name: &str, shape: &[usize], fan_in: usize, fan_out: usize, seed: u64) -> Parameter {
    let bound = libm::sqrt(6.0 / (fan_in + fan_out) as f64);
    let mut rng = crate::rng::StreamRng::new(seed, &crate::rng::tagged("init", name));
    let n: usize = shape.iter().product();
    let data: Vec<f64> = (0..n).map(|_| rng.uniform(-bound, bound)).collect();
    Parameter::new(String::from(name), Tensor::new(shape, data))
}
