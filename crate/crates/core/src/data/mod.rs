//! Drive-cycle data: CSV ingestion, coulomb-counted SOC labels, min-max
//! normalization, sliding windows, and a synthetic equivalent-circuit cell.

mod coulomb;
mod csv_io;
mod ecm;
mod normalize;
mod profile;
mod record;
mod window;

pub use coulomb::{coulomb_count, label_by_coulomb_counting};
pub use csv_io::{load_csv, read_csv, write_csv, write_csv_to, CSV_HEADER};
pub use ecm::{simulate_ecm, EcmConfig, OcvCurve, Simulation, SimulationSettings, ThermalParams, Truncation};
pub use normalize::{apply_normalization, fit_normalization, Feature, FeatureRange, NormalizationParams};
pub use profile::{generate_profile, ProfileKind};
pub use record::{BatterySpec, DriveCycle, DriveCycleRecord};
pub use window::{build_hybrid, make_windows, NormalizedCycle, WindowSample, WindowedDataset, INPUT_FEATURES};

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{source_name}: missing column `{column}`")]
    MissingColumn { source_name: String, column: &'static str },
    #[error("{source_name}: unknown column `{column}`")]
    UnknownColumn { source_name: String, column: String },
    /// `line` counts the header; `record` is the 1-based data row.
    #[error("{source_name}, line {line} (record {record}): {message}")]
    Parse {
        source_name: String,
        line: u64,
        record: u64,
        message: String,
    },
    #[error("{source_name}, line {line} (record {record}): timestamp {time} does not increase (previous {previous})")]
    NonMonotoneTime {
        source_name: String,
        line: u64,
        record: u64,
        time: f64,
        previous: f64,
    },
    #[error("cycle `{0}` has no records")]
    EmptyCycle(String),
    #[error("cycle `{0}` has no SOC labels; derive them by coulomb counting")]
    MissingSoc(String),
    #[error("coulomb counting reached SOC {soc} at step {index}, outside [-0.01, 1.01]; inputs are inconsistent")]
    InconsistentSoc { index: usize, soc: f64 },
    #[error("feature `{0}` is constant over the training data; min-max normalization is undefined")]
    DegenerateFeature(&'static str),
    #[error("cycle `{name}` has {len} steps, shorter than the window length {window}")]
    CycleTooShort { name: String, len: usize, window: usize },
    #[error("no cycles given")]
    NoCycles,
    #[error("invalid {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
}

fn invalid(name: &'static str, reason: impl Into<String>) -> DataError {
    DataError::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
