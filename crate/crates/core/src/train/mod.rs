//! Training loop, evaluation metrics, latency timing and the stacks x window
//! sweep that produces the accuracy/latency/memory table.

mod eval;
mod latency;
mod report;
mod sweep;
mod trainer;

pub use eval::{closed_loop, compute_metrics, evaluate, evaluate_with, EvalMetrics, EvalMode, EvalOptions, Evaluation, LabelProbe, TracePoint};
pub use latency::{measure_latency, synthetic_window, LatencyStats};
pub use report::{format_report_table, write_history_csv, write_report_csv, write_trace_csv, HISTORY_HEADER, REPORT_HEADER, TRACE_HEADER};
pub use sweep::{cell_seed, model_file_name, run_sweep, Protocol, RowMetrics, SweepConfig, SweepReport, SweepRow};
pub use trainer::{predict_samples, train, EpochRecord, TrainConfig, TrainHistory};

use thiserror::Error;

use crate::data::DataError;
use crate::nn::NnError;
use crate::tcn::{FormatError, ModelError};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("dataset windows have {dataset} steps but the model expects {model}")]
    WindowMismatch { model: usize, dataset: usize },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("cycle `{name}` has {len} steps, fewer than the model window {window}")]
    CycleTooShort { name: String, len: usize, window: usize },
    #[error("invalid {name}: {reason}")]
    InvalidConfig { name: &'static str, reason: String },
    #[error("training diverged at epoch {epoch}: loss is not finite")]
    Diverged { epoch: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}
