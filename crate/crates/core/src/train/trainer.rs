use super::TrainError;
use crate::data::WindowedDataset;
use crate::nn::{adam_step, mse_loss, AdamConfig, AdamState, Mode, Tensor3};
use crate::rng::SeededRng;
use crate::tcn::TcnModel;

const EVAL_BATCH: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Share of samples held out for validation, in `[0, 0.5]`.
    pub validation_fraction: f64,
    pub seed: u64,
    /// Epochs without validation improvement before stopping; 0 disables.
    pub patience: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            batch_size: 32,
            epochs: 50,
            validation_fraction: 0.1,
            seed: 0,
            patience: 10,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if self.batch_size == 0 {
            return Err(TrainError::InvalidConfig {
                name: "batch_size",
                reason: "must be >= 1".into(),
            });
        }
        if !(0.0..=0.5).contains(&self.validation_fraction) {
            return Err(TrainError::InvalidConfig {
                name: "validation_fraction",
                reason: format!("{} is outside [0, 0.5]", self.validation_fraction),
            });
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(TrainError::InvalidConfig {
                name: "learning_rate",
                reason: format!("{} must be positive", self.learning_rate),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Sample-weighted mean mini-batch loss seen by the optimizer (dropout on).
    pub train_loss: f64,
    /// Evaluation-mode MSE of the training split after the epoch.
    pub train_mse: f64,
    /// Evaluation-mode MSE of the validation split after the epoch.
    pub val_mse: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    /// Epoch whose weights were kept (restored from the best validation MSE).
    pub best_epoch: Option<usize>,
    pub stopped_early: bool,
}

/// Final-step predictions for the given samples, evaluation mode.
pub fn predict_samples(model: &TcnModel, dataset: &WindowedDataset, indices: &[usize]) -> Result<Vec<f64>, TrainError> {
    let mut out = Vec::with_capacity(indices.len());
    for chunk in indices.chunks(EVAL_BATCH) {
        let (x, _) = dataset.batch(chunk);
        out.extend(model.predict_last(&x)?);
    }
    Ok(out)
}

fn split_mse(model: &TcnModel, dataset: &WindowedDataset, indices: &[usize]) -> Result<f64, TrainError> {
    let pred = predict_samples(model, dataset, indices)?;
    let target: Vec<f64> = indices.iter().map(|&i| dataset.samples()[i].target).collect();
    Ok(mse_loss(&pred, &target)?.0)
}

/// Mini-batch Adam on the MSE of each window's final-step estimate.
///
/// Samples are split once into training and validation sets, the training set
/// is reshuffled every epoch, and every random draw derives from
/// `config.seed`. When a validation split exists the weights of the best
/// validation epoch are kept. The returned model carries the dataset's
/// normalization and `f32`-rounded weights.
pub fn train(model: &TcnModel, dataset: &WindowedDataset, config: &TrainConfig) -> Result<(TcnModel, TrainHistory), TrainError> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    if dataset.window() != model.config.window {
        return Err(TrainError::WindowMismatch {
            model: model.config.window,
            dataset: dataset.window(),
        });
    }
    let mut model = model.clone();
    model.normalization = *dataset.normalization();
    let mut history = TrainHistory::default();
    if config.epochs == 0 {
        return Ok((model, history));
    }

    let root = SeededRng::new(config.seed);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    root.fork(0).shuffle(&mut order);
    let n_val = ((dataset.len() as f64) * config.validation_fraction).round() as usize;
    let n_val = n_val.min(dataset.len() - 1);
    let (val_idx, train_idx) = order.split_at(n_val);
    let mut train_idx = train_idx.to_vec();
    let val_idx = val_idx.to_vec();

    let window = model.config.window;
    let mut params = model.flat_params();
    let mut adam = AdamState::new(
        params.len(),
        AdamConfig {
            learning_rate: config.learning_rate,
            ..AdamConfig::default()
        },
    );
    let mut best: Option<(f64, usize, Vec<f64>)> = None;
    let mut since_best = 0;

    for epoch in 1..=config.epochs {
        let mut epoch_rng = root.fork(epoch as u64);
        epoch_rng.shuffle(&mut train_idx);
        let mut loss_sum = 0.0;
        for batch in train_idx.chunks(config.batch_size) {
            let (x, targets) = dataset.batch(batch);
            let (y, cache) = model.forward_cached(&x, Mode::Train, &mut epoch_rng)?;
            let last: Vec<f64> = (0..y.batch()).map(|b| y.get(b, 0, window - 1)).collect();
            let (loss, grad_last) = mse_loss(&last, &targets)?;
            loss_sum += loss * batch.len() as f64;
            let mut grad_out = Tensor3::zeros(y.batch(), 1, window);
            for (b, g) in grad_last.iter().enumerate() {
                grad_out.set(b, 0, window - 1, *g);
            }
            let grads = model.backward(&cache, &grad_out)?.flatten();
            adam_step(&mut params, &grads, &mut adam)?;
            model.set_flat_params(&params)?;
        }

        let train_loss = loss_sum / train_idx.len() as f64;
        let train_mse = split_mse(&model, dataset, &train_idx)?;
        let val_mse = if val_idx.is_empty() {
            None
        } else {
            Some(split_mse(&model, dataset, &val_idx)?)
        };
        if !train_loss.is_finite() || !train_mse.is_finite() || val_mse.is_some_and(|v| !v.is_finite()) {
            return Err(TrainError::Diverged { epoch });
        }
        history.epochs.push(EpochRecord {
            epoch,
            train_loss,
            train_mse,
            val_mse,
        });

        if let Some(v) = val_mse {
            if best.as_ref().is_none_or(|(b, _, _)| v < *b) {
                best = Some((v, epoch, params.clone()));
                since_best = 0;
            } else {
                since_best += 1;
                if config.patience > 0 && since_best >= config.patience {
                    history.stopped_early = true;
                    break;
                }
            }
        }
    }

    match best {
        Some((_, epoch, p)) => {
            model.set_flat_params(&p)?;
            history.best_epoch = Some(epoch);
        }
        None => history.best_epoch = history.epochs.last().map(|e| e.epoch),
    }
    model.snap_to_f32();
    Ok((model, history))
}
