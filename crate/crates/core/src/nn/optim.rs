use serde::{Deserialize, Serialize};

use super::{Real, Tensor};

/// Optimizer selector carried in run configurations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

impl std::str::FromStr for OptimizerKind {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "sgd" => Ok(OptimizerKind::Sgd),
            "adam" => Ok(OptimizerKind::Adam),
            other => Err(crate::Error::config(format!("unknown optimizer: {other}"))),
        }
    }
}

/// SGD with momentum or Adam, with per-parameter state tensors.
///
/// SGD: v <- mu*v + g; p <- p - lr*v.
/// Adam: bias-corrected first/second moments, p <- p - lr * m_hat/(sqrt(v_hat)+eps).
#[derive(Debug, Clone)]
pub enum Optimizer<F: Real> {
    Sgd {
        lr: F,
        momentum: F,
        velocity: Vec<Tensor<F>>,
    },
    Adam {
        lr: F,
        beta1: F,
        beta2: F,
        eps: F,
        t: u64,
        m: Vec<Tensor<F>>,
        v: Vec<Tensor<F>>,
    },
}

impl<F: Real> Optimizer<F> {
    pub fn sgd(lr: f64, momentum: f64) -> Self {
        Optimizer::Sgd {
            lr: F::from_f64(lr),
            momentum: F::from_f64(momentum),
            velocity: Vec::new(),
        }
    }

    /// Adam with the conventional beta1=0.9, beta2=0.999, eps=1e-8.
    pub fn adam(lr: f64) -> Self {
        Optimizer::Adam {
            lr: F::from_f64(lr),
            beta1: F::from_f64(0.9),
            beta2: F::from_f64(0.999),
            eps: F::from_f64(1e-8),
            t: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    /// Apply one update step. `pairs` must come from the same model in the
    /// same order on every call; state tensors are allocated on first use.
    pub fn step(&mut self, pairs: &mut [(&mut Tensor<F>, &mut Tensor<F>)]) {
        match self {
            Optimizer::Sgd {
                lr,
                momentum,
                velocity,
            } => {
                if velocity.is_empty() {
                    *velocity = pairs.iter().map(|(p, _)| Tensor::zeros(p.shape())).collect();
                }
                for ((param, grad), vel) in pairs.iter_mut().zip(velocity.iter_mut()) {
                    for ((p, g), v) in param
                        .data_mut()
                        .iter_mut()
                        .zip(grad.data())
                        .zip(vel.data_mut())
                    {
                        *v = *momentum * *v + *g;
                        *p = *p - *lr * *v;
                    }
                }
            }
            Optimizer::Adam {
                lr,
                beta1,
                beta2,
                eps,
                t,
                m,
                v,
            } => {
                if m.is_empty() {
                    *m = pairs.iter().map(|(p, _)| Tensor::zeros(p.shape())).collect();
                    *v = pairs.iter().map(|(p, _)| Tensor::zeros(p.shape())).collect();
                }
                *t += 1;
                let tf = *t as i32;
                let bc1 = F::one() - beta1.powi(tf);
                let bc2 = F::one() - beta2.powi(tf);
                for (i, (param, grad)) in pairs.iter_mut().enumerate() {
                    let (ms, vs) = (m[i].data_mut(), v[i].data_mut());
                    for (((p, g), mi), vi) in param
                        .data_mut()
                        .iter_mut()
                        .zip(grad.data())
                        .zip(ms.iter_mut())
                        .zip(vs.iter_mut())
                    {
                        *mi = *beta1 * *mi + (F::one() - *beta1) * *g;
                        *vi = *beta2 * *vi + (F::one() - *beta2) * *g * *g;
                        let m_hat = *mi / bc1;
                        let v_hat = *vi / bc2;
                        *p = *p - *lr * m_hat / (v_hat.sqrt() + *eps);
                    }
                }
            }
        }
    }
}
