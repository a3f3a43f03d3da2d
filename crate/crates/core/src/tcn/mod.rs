//! Residual TCN: stacks of dilated causal residual blocks with a per-step
//! regression head, plus the `TCN1` model file format.

mod config;
mod format;
mod model;

pub use config::{parameter_count, receptive_field, TcnConfig};
pub use format::{
    deserialize, from_bytes, load_model, save_model, serialize, to_bytes, FormatError, FORMAT_VERSION, MAGIC,
};
pub use model::{build_model, BlockGrads, ForwardCache, ModelGrads, ResidualBlock, TcnModel};

use thiserror::Error;

use crate::nn::{NnError, Shape3};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid config field `{field}`: {reason}")]
    InvalidConfig { field: &'static str, reason: String },
    #[error("window {found} does not fit the model, which expects (batch x {channels} x {window})")]
    WindowShape {
        found: Shape3,
        channels: usize,
        window: usize,
    },
    #[error("parameter vector has {found} values, the model has {expected}")]
    ParameterCount { expected: usize, found: usize },
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Format(#[from] FormatError),
}
