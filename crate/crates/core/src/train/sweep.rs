use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use super::{evaluate_with, measure_latency, synthetic_window, train, EvalMode, EvalOptions, TrainConfig, TrainError};
use crate::data::{build_hybrid, fit_normalization, DriveCycle, NormalizedCycle};
use crate::rng::derive_seed;
use crate::tcn::{build_model, save_model, to_bytes, TcnConfig, TcnModel};

/// Which cycles a sweep cell trains on and which it is scored on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Protocol {
    /// One model per held-out cycle, trained on the others; metrics are
    /// averaged over the held-out cycles.
    #[default]
    LeaveOneCycleOut,
    /// One model trained on the hybrid of all cycles and scored on each of
    /// them.
    Hybrid,
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Protocol::LeaveOneCycleOut => "leave-one-cycle-out",
            Protocol::Hybrid => "hybrid",
        })
    }
}

impl FromStr for Protocol {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "leave-one-cycle-out" | "loco" => Ok(Protocol::LeaveOneCycleOut),
            "hybrid" => Ok(Protocol::Hybrid),
            other => Err(format!("unknown protocol `{other}` (valid: leave-one-cycle-out, hybrid)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub stacks: Vec<usize>,
    pub windows: Vec<usize>,
    /// Everything but `stacks` and `window` is taken from here.
    pub template: TcnConfig,
    pub train: TrainConfig,
    pub protocol: Protocol,
    pub train_stride: usize,
    pub eval_stride: usize,
    pub eval_mode: EvalMode,
    pub latency_warmup: usize,
    pub latency_iterations: usize,
    /// Where `tcn_s{S}_w{L}.bin` files go; without it file sizes come from
    /// the in-memory encoding.
    pub out_dir: Option<PathBuf>,
    /// Cells trained concurrently. Latency is always timed one cell at a time.
    pub jobs: usize,
    pub master_seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            stacks: vec![2, 4, 8],
            windows: vec![100, 500],
            template: TcnConfig::default(),
            train: TrainConfig::default(),
            protocol: Protocol::default(),
            train_stride: 1,
            eval_stride: 1,
            eval_mode: EvalMode::TeacherForced,
            latency_warmup: 100,
            latency_iterations: 1000,
            out_dir: None,
            jobs: 1,
            master_seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RowMetrics {
    /// Mean over evaluated cycles.
    pub mse: f64,
    /// Mean over evaluated cycles.
    pub accuracy_pct: f64,
    pub file_size_bytes: u64,
    pub latency_ms_mean: f64,
    pub latency_ms_std: f64,
    pub cycles_evaluated: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub stacks: usize,
    pub window: usize,
    pub parameters: usize,
    /// The diagnostic on failure.
    pub result: Result<RowMetrics, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub protocol: Protocol,
    pub eval_mode: EvalMode,
    /// Grid order: windows outer, stacks inner, each as requested.
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    pub fn failed(&self) -> usize {
        self.rows.iter().filter(|r| r.result.is_err()).count()
    }
}

/// Seed for the `(stacks, window)` cell, shared by its weight init and its
/// training run.
pub fn cell_seed(master: u64, stacks: usize, window: usize) -> u64 {
    derive_seed(master, ((stacks as u64) << 32) | window as u64)
}

pub fn model_file_name(stacks: usize, window: usize) -> String {
    format!("tcn_s{stacks}_w{window}.bin")
}

struct Trained {
    model: TcnModel,
    mse: f64,
    accuracy_pct: f64,
    cycles: usize,
}

/// Trains, scores, saves and times one model per grid cell. Only invalid
/// arguments fail the whole sweep; a failing cell yields a failed row.
pub fn run_sweep(cycles: &[DriveCycle], config: &SweepConfig) -> Result<SweepReport, TrainError> {
    validate(cycles, config)?;
    let mut grid = Vec::new();
    for &window in &config.windows {
        for &stacks in &config.stacks {
            grid.push(TcnConfig {
                stacks,
                window,
                ..config.template
            });
        }
    }
    let trained: Vec<Result<Trained, TrainError>> = if config.jobs > 1 {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.jobs)
            .build()
            .map_err(|e| TrainError::InvalidConfig {
                name: "jobs",
                reason: e.to_string(),
            })?;
        pool.install(|| grid.par_iter().map(|c| train_cell(cycles, c, config)).collect())
    } else {
        grid.iter().map(|c| train_cell(cycles, c, config)).collect()
    };
    let rows = grid
        .iter()
        .zip(trained)
        .map(|(cell, t)| SweepRow {
            stacks: cell.stacks,
            window: cell.window,
            parameters: crate::tcn::parameter_count(cell),
            result: t.and_then(|t| finish_cell(t, config)).map_err(|e| e.to_string()),
        })
        .collect();
    Ok(SweepReport {
        protocol: config.protocol,
        eval_mode: config.eval_mode,
        rows,
    })
}

fn validate(cycles: &[DriveCycle], config: &SweepConfig) -> Result<(), TrainError> {
    let invalid = |name, reason: &str| {
        Err(TrainError::InvalidConfig {
            name,
            reason: reason.into(),
        })
    };
    if config.stacks.is_empty() {
        return invalid("stacks", "grid is empty");
    }
    if config.windows.is_empty() {
        return invalid("windows", "grid is empty");
    }
    if cycles.is_empty() {
        return invalid("cycles", "no data");
    }
    if config.protocol == Protocol::LeaveOneCycleOut && cycles.len() < 2 {
        return invalid("cycles", "leave-one-cycle-out needs at least two cycles");
    }
    if config.train_stride == 0 || config.eval_stride == 0 {
        return invalid("stride", "must be >= 1");
    }
    if config.latency_iterations == 0 {
        return invalid("latency_iterations", "must be >= 1");
    }
    config.train.validate()
}

fn fit(train_cycles: &[DriveCycle], cell: &TcnConfig, config: &SweepConfig, seed: u64) -> Result<TcnModel, TrainError> {
    let params = fit_normalization(train_cycles)?;
    let normalized = train_cycles
        .iter()
        .map(|c| NormalizedCycle::new(c, &params))
        .collect::<Result<Vec<_>, _>>()?;
    let dataset = build_hybrid(normalized, cell.window, config.train_stride, seed)?;
    let model = build_model(*cell, seed)?;
    let train_config = TrainConfig { seed, ..config.train };
    Ok(train(&model, &dataset, &train_config)?.0)
}

fn score(model: &TcnModel, cycle: &DriveCycle, config: &SweepConfig) -> Result<(f64, f64), TrainError> {
    let options = EvalOptions {
        mode: config.eval_mode,
        stride: config.eval_stride,
    };
    let m = evaluate_with(model, cycle, options)?.metrics;
    Ok((m.mse, m.accuracy_percent))
}

fn train_cell(cycles: &[DriveCycle], cell: &TcnConfig, config: &SweepConfig) -> Result<Trained, TrainError> {
    let seed = cell_seed(config.master_seed, cell.stacks, cell.window);
    let mut scores = Vec::new();
    let mut kept = None;
    match config.protocol {
        Protocol::Hybrid => {
            let model = fit(cycles, cell, config, seed)?;
            for c in cycles {
                scores.push(score(&model, c, config)?);
            }
            kept = Some(model);
        }
        Protocol::LeaveOneCycleOut => {
            for (i, held_out) in cycles.iter().enumerate() {
                let rest: Vec<DriveCycle> = cycles
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, c)| c.clone())
                    .collect();
                let model = fit(&rest, cell, config, derive_seed(seed, i as u64))?;
                scores.push(score(&model, held_out, config)?);
                kept.get_or_insert(model);
            }
        }
    }
    let n = scores.len() as f64;
    Ok(Trained {
        model: kept.expect("at least one cycle"),
        mse: scores.iter().map(|s| s.0).sum::<f64>() / n,
        accuracy_pct: scores.iter().map(|s| s.1).sum::<f64>() / n,
        cycles: scores.len(),
    })
}

fn finish_cell(t: Trained, config: &SweepConfig) -> Result<RowMetrics, TrainError> {
    let cfg = &t.model.config;
    let file_size_bytes = match &config.out_dir {
        Some(dir) => {
            let path = dir.join(model_file_name(cfg.stacks, cfg.window));
            save_model(&t.model, &path)?;
            std::fs::metadata(&path)?.len()
        }
        None => to_bytes(&t.model).len() as u64,
    };
    let window = synthetic_window(&t.model, t.model.seed);
    let latency = measure_latency(&t.model, &window, config.latency_warmup, config.latency_iterations)?;
    Ok(RowMetrics {
        mse: t.mse,
        accuracy_pct: t.accuracy_pct,
        file_size_bytes,
        latency_ms_mean: latency.mean_ms(),
        latency_ms_std: latency.std_ms(),
        cycles_evaluated: t.cycles,
    })
}
