//! Numeric kernels: dilated causal convolution, activations, dropout, the
//! regression head, MSE loss and Adam. Every kernel is a pure function of its
//! arguments; backward passes return exact gradients.

mod activation;
mod adam;
mod conv;
mod dropout;
mod linear;
mod loss;
mod tensor;

pub use activation::{relu, relu_backward, relu_inplace};
pub use adam::{adam_step, AdamConfig, AdamState};
pub use conv::{causal_conv_backward, causal_conv_forward, ConvGrads, ConvParams};
pub use dropout::{dropout, dropout_backward, DropoutMask, Mode};
pub use linear::{linear_head_backward, linear_head_forward, HeadGrads, LinearHead};
pub use loss::mse_loss;
pub use tensor::{Shape3, Tensor3};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NnError {
    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: Shape3, found: Shape3 },
    #[error("input has {found} channels but the layer expects {expected} (input shape {input})")]
    ChannelMismatch {
        expected: usize,
        found: usize,
        input: Shape3,
    },
    #[error("tensor {shape} needs {} values, got {len}", shape.len())]
    DataLength { shape: Shape3, len: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("empty series")]
    Empty,
    #[error("invalid {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
}
