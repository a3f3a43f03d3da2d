use std::cell::Cell;
use std::fmt;
use std::str::FromStr;

use super::TrainError;
use crate::data::{DriveCycle, Feature, NormalizedCycle, INPUT_FEATURES};
use crate::nn::{NnError, Tensor3};
use crate::tcn::TcnModel;

const EVAL_BATCH: usize = 64;

/// Source of the past-SOC input channel during evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EvalMode {
    /// Ground-truth labels, as in training.
    #[default]
    TeacherForced,
    /// The model's own earlier estimates, seeded by the first window's labels.
    ClosedLoop,
}

impl fmt::Display for EvalMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EvalMode::TeacherForced => "teacher",
            EvalMode::ClosedLoop => "closed-loop",
        })
    }
}

impl FromStr for EvalMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "teacher" | "teacher-forced" => Ok(EvalMode::TeacherForced),
            "closed-loop" | "closed" => Ok(EvalMode::ClosedLoop),
            other => Err(format!("unknown mode `{other}` (valid: teacher, closed-loop)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOptions {
    pub mode: EvalMode,
    /// Spacing of evaluated windows. Closed-loop evaluation always uses 1.
    pub stride: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            mode: EvalMode::TeacherForced,
            stride: 1,
        }
    }
}

/// SOC fractions throughout; `accuracy_percent = 100 - 100 * mae`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalMetrics {
    pub count: usize,
    pub mse: f64,
    pub mae: f64,
    pub accuracy_percent: f64,
    pub max_error: f64,
    /// Predictions outside `[0, 1]`.
    pub out_of_range: usize,
}

pub fn compute_metrics(pred: &[f64], truth: &[f64]) -> Result<EvalMetrics, TrainError> {
    if pred.len() != truth.len() {
        return Err(NnError::LengthMismatch {
            left: pred.len(),
            right: truth.len(),
        }
        .into());
    }
    if pred.is_empty() {
        return Err(NnError::Empty.into());
    }
    let (mut sq, mut abs, mut max_error, mut out_of_range) = (0.0, 0.0, 0.0f64, 0);
    let mut saw_nan = false;
    for (p, t) in pred.iter().zip(truth) {
        let e = p - t;
        sq += e * e;
        abs += e.abs();
        saw_nan |= e.is_nan();
        if e.abs() > max_error {
            max_error = e.abs();
        }
        if !(0.0..=1.0).contains(p) {
            out_of_range += 1;
        }
    }
    let n = pred.len() as f64;
    let mae = abs / n;
    Ok(EvalMetrics {
        count: pred.len(),
        mse: sq / n,
        mae,
        accuracy_percent: 100.0 - 100.0 * mae,
        max_error: if saw_nan { f64::NAN } else { max_error },
        out_of_range,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub time_s: f64,
    pub soc_true: f64,
    pub soc_pred: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub metrics: EvalMetrics,
    pub trace: Vec<TracePoint>,
}

/// Counts reads of the label-derived SOC channel.
#[derive(Debug)]
pub struct LabelProbe<'a> {
    values: &'a [f64],
    reads: Cell<usize>,
    last_read_window: Cell<Option<usize>>,
    current_window: Cell<usize>,
}

impl<'a> LabelProbe<'a> {
    pub fn new(values: &'a [f64]) -> Self {
        Self {
            values,
            reads: Cell::new(0),
            last_read_window: Cell::new(None),
            current_window: Cell::new(0),
        }
    }

    fn read(&self, i: usize) -> f64 {
        self.reads.set(self.reads.get() + 1);
        self.last_read_window.set(Some(self.current_window.get()));
        self.values[i]
    }

    fn enter_window(&self, w: usize) {
        self.current_window.set(w);
    }

    pub fn reads(&self) -> usize {
        self.reads.get()
    }

    /// Index of the last window during which a label was read.
    pub fn last_read_window(&self) -> Option<usize> {
        self.last_read_window.get()
    }
}

/// [`evaluate_with`] at stride 1.
pub fn evaluate(model: &TcnModel, cycle: &DriveCycle, mode: EvalMode) -> Result<Evaluation, TrainError> {
    evaluate_with(model, cycle, EvalOptions { mode, stride: 1 })
}

/// Slides the model window over a labeled cycle and scores every window's
/// final-step estimate against the label at that step.
pub fn evaluate_with(model: &TcnModel, cycle: &DriveCycle, options: EvalOptions) -> Result<Evaluation, TrainError> {
    let norm = NormalizedCycle::new(cycle, &model.normalization)?;
    let window = model.config.window;
    if norm.len() < window {
        return Err(TrainError::CycleTooShort {
            name: cycle.name.clone(),
            len: norm.len(),
            window,
        });
    }
    if options.stride == 0 {
        return Err(TrainError::InvalidConfig {
            name: "stride",
            reason: "must be >= 1".into(),
        });
    }
    let (starts, pred) = match options.mode {
        EvalMode::TeacherForced => {
            let starts: Vec<usize> = (0..=norm.len() - window).step_by(options.stride).collect();
            let pred = teacher_forced(model, &norm, &starts)?;
            (starts, pred)
        }
        EvalMode::ClosedLoop => {
            let probe = LabelProbe::new(&norm.features[Feature::Soc as usize]);
            let pred = closed_loop(model, &norm, &probe)?;
            ((0..=norm.len() - window).collect(), pred)
        }
    };
    let truth: Vec<f64> = starts.iter().map(|s| norm.soc[s + window - 1]).collect();
    let metrics = compute_metrics(&pred, &truth)?;
    let trace = starts
        .iter()
        .zip(&pred)
        .zip(&truth)
        .map(|((s, &p), &t)| TracePoint {
            time_s: norm.time_s[s + window - 1],
            soc_true: t,
            soc_pred: p,
        })
        .collect();
    Ok(Evaluation { metrics, trace })
}

fn teacher_forced(model: &TcnModel, norm: &NormalizedCycle, starts: &[usize]) -> Result<Vec<f64>, TrainError> {
    let window = model.config.window;
    let per = INPUT_FEATURES * window;
    let mut pred = Vec::with_capacity(starts.len());
    for chunk in starts.chunks(EVAL_BATCH) {
        let mut data = vec![0.0; chunk.len() * per];
        for (slot, &s) in data.chunks_exact_mut(per).zip(chunk) {
            norm.fill_window(s, window, slot);
        }
        let x = Tensor3::from_vec(chunk.len(), INPUT_FEATURES, window, data)?;
        pred.extend(model.predict_last(&x)?);
    }
    Ok(pred)
}

/// Closed-loop rollout. Only the first window reads labels (its `L - 1`
/// lagged SOC values, or the single current one when `L == 1`); every later
/// SOC input is an earlier estimate, normalized like the training labels.
pub fn closed_loop(model: &TcnModel, norm: &NormalizedCycle, probe: &LabelProbe<'_>) -> Result<Vec<f64>, TrainError> {
    let window = model.config.window;
    let n = norm.len();
    let soc_range = model.normalization.range(Feature::Soc);
    let seeded = (window - 1).max(1);
    let mut feed = vec![0.0; n];
    probe.enter_window(0);
    for (t, slot) in feed.iter_mut().enumerate().take(seeded) {
        *slot = probe.read(t);
    }
    let mut x = Tensor3::zeros(1, INPUT_FEATURES, window);
    let mut pred = Vec::with_capacity(n - window + 1);
    for s in 0..=n - window {
        probe.enter_window(s);
        for c in 0..3 {
            x.row_mut(0, c).copy_from_slice(&norm.features[c][s..s + window]);
        }
        let soc = x.row_mut(0, 3);
        soc[0] = if window >= 2 || s == 0 { feed[s] } else { feed[s - 1] };
        for i in 1..window {
            soc[i] = feed[s + i - 1];
        }
        let p = model.predict_last(&x)?[0];
        feed[s + window - 1] = soc_range.apply(p);
        pred.push(p);
    }
    Ok(pred)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{DriveCycleRecord, FeatureRange, NormalizationParams};
    use crate::rng::SeededRng;
    use crate::tcn::{build_model, TcnConfig};

    fn cycle(n: usize, soc: impl Fn(usize) -> f64) -> DriveCycle {
        DriveCycle::new(
            "c",
            (0..n)
                .map(|i| DriveCycleRecord {
                    time_s: i as f64,
                    voltage_v: 3.7,
                    current_a: 1.0,
                    temperature_c: 25.0,
                    soc: Some(soc(i)),
                })
                .collect(),
        )
    }

    fn constant_model(window: usize, bias: f64) -> TcnModel {
        let cfg = TcnConfig {
            stacks: 1,
            kernel_size: 2,
            filters: 2,
            window,
            ..TcnConfig::default()
        };
        let mut m = build_model(cfg, 0).unwrap();
        m.set_flat_params(&vec![0.0; m.parameter_count()]).unwrap();
        m.head.bias = bias;
        m.normalization = NormalizationParams {
            ranges: [
                FeatureRange { min: 2.5, max: 4.2 },
                FeatureRange { min: -3.0, max: 6.0 },
                FeatureRange { min: 20.0, max: 30.0 },
                FeatureRange { min: 0.0, max: 1.0 },
            ],
        };
        m
    }

    #[test]
    fn perfect_predictor_scores_100() {
        let m = constant_model(5, 0.5);
        let e = evaluate(&m, &cycle(40, |_| 0.5), EvalMode::TeacherForced).unwrap();
        assert_eq!(e.metrics.mse, 0.0);
        assert_eq!(e.metrics.accuracy_percent, 100.0);
        assert_eq!(e.trace.len(), 40 - 5 + 1);
    }

    #[test]
    fn constant_half_on_uniform_labels() {
        let n = 10_001;
        let m = constant_model(1, 0.5);
        let e = evaluate(&m, &cycle(n, |i| i as f64 / (n - 1) as f64), EvalMode::TeacherForced).unwrap();
        assert!((e.metrics.mae - 0.25).abs() < 0.0025, "{:?}", e.metrics);
        assert!((e.metrics.accuracy_percent - 75.0).abs() < 0.75);
    }

    #[test]
    fn metrics_match_single_pass_oracle() {
        let mut rng = SeededRng::new(12);
        let p: Vec<f64> = (0..5000).map(|_| rng.uniform(-0.1, 1.1)).collect();
        let t: Vec<f64> = (0..5000).map(|_| rng.next_f64()).collect();
        let m = compute_metrics(&p, &t).unwrap();
        let (mut s2, mut s1, mut oor) = (0.0, 0.0, 0);
        for i in 0..p.len() {
            s2 += (p[i] - t[i]) * (p[i] - t[i]);
            s1 += (p[i] - t[i]).abs();
            if p[i] < 0.0 || p[i] > 1.0 {
                oor += 1;
            }
        }
        assert!((m.mse - s2 / 5000.0).abs() <= 1e-12);
        assert!((m.mae - s1 / 5000.0).abs() <= 1e-12);
        assert_eq!(m.out_of_range, oor);
        assert_eq!(m.accuracy_percent + 100.0 * m.mae, 100.0);
    }

    #[test]
    fn too_short_cycle_rejected() {
        let m = constant_model(50, 0.5);
        assert!(matches!(
            evaluate(&m, &cycle(20, |_| 0.5), EvalMode::TeacherForced),
            Err(TrainError::CycleTooShort { .. })
        ));
    }

    #[test]
    fn closed_loop_reads_labels_only_for_the_first_window() {
        let mut m = constant_model(6, 0.0);
        m.blocks[0].downsample.as_mut().unwrap().weights[3] = 1.0; // soc channel -> filter 0
        m.head.weights[0] = 1.0;
        let c = cycle(60, |i| 1.0 - i as f64 * 0.01);
        let norm = NormalizedCycle::new(&c, &m.normalization).unwrap();
        let probe = LabelProbe::new(&norm.features[3]);
        let pred = closed_loop(&m, &norm, &probe).unwrap();
        assert_eq!(pred.len(), 55);
        assert_eq!(probe.reads(), 5);
        assert_eq!(probe.last_read_window(), Some(0));
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("teacher".parse::<EvalMode>(), Ok(EvalMode::TeacherForced));
        assert_eq!("closed-loop".parse::<EvalMode>(), Ok(EvalMode::ClosedLoop));
        assert!("open".parse::<EvalMode>().is_err());
    }
}
