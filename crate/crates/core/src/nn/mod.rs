//! Minimal neural-network kernels: tensors, five layer kinds with explicit
//! forward/backward passes, weighted losses, two optimizers, and a
//! finite-difference gradient checker.
//!
//! Everything is generic over [`Real`] so the same kernels run in f32 for
//! training and in f64 for gradient verification.

mod gradcheck;
mod layer;
mod loss;
mod optim;
mod tensor;

pub use gradcheck::{grad_check, CheckLoss};
pub use layer::{Activation, BatchNorm, Conv2d, Dense, Flatten, Layer, MaxPool, Model};
pub use loss::{binary_cross_entropy, softmax, weighted_cross_entropy};
pub use optim::{Optimizer, OptimizerKind};
pub use tensor::Tensor;

use rand::distributions::uniform::SampleUniform;

/// Floating-point scalar used by the kernels. Implemented for f32 and f64.
pub trait Real:
    num_traits::Float
    + num_traits::NumAssignOps
    + SampleUniform
    + std::fmt::Debug
    + std::fmt::Display
    + Default
    + Send
    + Sync
    + 'static
{
    fn from_f64(v: f64) -> Self;
    fn into_f64(self) -> f64;
}

impl Real for f32 {
    fn from_f64(v: f64) -> Self {
        v as f32
    }
    fn into_f64(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }
    fn into_f64(self) -> f64 {
        self
    }
}

/// Activation function selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Act {
    Tanh,
    Sigmoid,
}

impl Act {
    pub fn apply<F: Real>(self, x: F) -> F {
        match self {
            Act::Tanh => x.tanh(),
            Act::Sigmoid => F::one() / (F::one() + (-x).exp()),
        }
    }

    /// Derivative expressed in terms of the activation output y.
    pub fn deriv_from_output<F: Real>(self, y: F) -> F {
        match self {
            Act::Tanh => F::one() - y * y,
            Act::Sigmoid => y * (F::one() - y),
        }
    }
}

impl std::str::FromStr for Act {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "tanh" => Ok(Act::Tanh),
            "sigmoid" => Ok(Act::Sigmoid),
            other => Err(crate::Error::config(format!("unknown activation: {other}"))),
        }
    }
}

impl std::fmt::Display for Act {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Act::Tanh => write!(f, "tanh"),
            Act::Sigmoid => write!(f, "sigmoid"),
        }
    }
}
