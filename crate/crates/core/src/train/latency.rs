use std::hint::black_box;
use std::time::Instant;

use super::TrainError;
use crate::data::INPUT_FEATURES;
use crate::nn::Tensor3;
use crate::rng::SeededRng;
use crate::tcn::TcnModel;

/// A deterministic pseudo-random input window in `[0, 1]` for timing runs.
pub fn synthetic_window(model: &TcnModel, seed: u64) -> Tensor3 {
    let mut rng = SeededRng::new(seed);
    Tensor3::from_fn(1, INPUT_FEATURES, model.config.window, |_, _, _| rng.next_f64())
}

/// Wall-clock time of one single-window forward pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatencyStats {
    pub mean_s: f64,
    /// Sample standard deviation.
    pub std_s: f64,
    pub iterations: usize,
}

impl LatencyStats {
    pub fn mean_ms(&self) -> f64 {
        self.mean_s * 1e3
    }

    pub fn std_ms(&self) -> f64 {
        self.std_s * 1e3
    }
}

/// Times `iterations` eval-mode forward passes of `window` (batch 1) after
/// `warmup` untimed ones.
pub fn measure_latency(model: &TcnModel, window: &Tensor3, warmup: usize, iterations: usize) -> Result<LatencyStats, TrainError> {
    if iterations == 0 {
        return Err(TrainError::InvalidConfig {
            name: "iterations",
            reason: "must be >= 1".into(),
        });
    }
    if window.batch() != 1 {
        return Err(TrainError::InvalidConfig {
            name: "window",
            reason: format!("expected a single window, got batch {}", window.batch()),
        });
    }
    let x = window;
    for _ in 0..warmup {
        black_box(model.predict_last(black_box(x))?);
    }
    let mut samples = Vec::with_capacity(iterations);
    for _ in 0..iterations {
        let start = Instant::now();
        black_box(model.predict_last(black_box(x))?);
        samples.push(start.elapsed().as_secs_f64());
    }
    let n = samples.len() as f64;
    let mean_s = samples.iter().sum::<f64>() / n;
    let std_s = if samples.len() > 1 {
        (samples.iter().map(|s| (s - mean_s).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Ok(LatencyStats {
        mean_s,
        std_s,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tcn::{build_model, TcnConfig};

    fn small() -> TcnModel {
        let cfg = TcnConfig {
            stacks: 1,
            window: 32,
            ..TcnConfig::default()
        };
        build_model(cfg, 1).unwrap()
    }

    #[test]
    fn reports_positive_times() {
        let m = small();
        let s = measure_latency(&m, &synthetic_window(&m, 3), 2, 10).unwrap();
        assert_eq!(s.iterations, 10);
        assert!(s.mean_s > 0.0 && s.std_s >= 0.0);
        assert_eq!(s.mean_ms(), s.mean_s * 1e3);
    }

    #[test]
    fn zero_iterations_rejected() {
        let m = small();
        assert!(measure_latency(&m, &synthetic_window(&m, 3), 0, 0).is_err());
        let batch = Tensor3::zeros(2, 4, 32);
        assert!(measure_latency(&m, &batch, 0, 1).is_err());
    }
}
