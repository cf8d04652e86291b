//! Mini-batch Adam training and batch prediction.

use std::io::Write;

use rand::seq::SliceRandom;

use crate::arch::Model;
use crate::corpus::Sentiment;
use crate::ensemble::ProbMatrix;
use crate::error::{Error, Result};
use crate::metrics::weighted_f1;
use crate::nn::init::rng_from_seed;
use crate::nn::{optimizer_step, AdamConfig, AdamState, Tensor};
use crate::scalar::Scalar;
use crate::vocab::IdSequence;

/// Epochs for the four ensemble members.
pub const ENSEMBLE_EPOCHS: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainHyper {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Seeds the per-epoch shuffle.
    pub seed: u64,
    pub shuffle: bool,
}

impl Default for TrainHyper {
    fn default() -> Self {
        TrainHyper { epochs: 200, batch_size: 128, learning_rate: 0.01, seed: 0, shuffle: true }
    }
}

impl TrainHyper {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidArgument("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch size must be at least 1".into()));
        }
        // zero is allowed: it freezes the parameters
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "learning rate must be finite and non-negative, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    /// Mean per-example training loss over the epoch.
    pub loss: f64,
    pub accuracy: f64,
    /// Weighted F1 on the validation set, when one was given.
    pub val_f1: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainHistory {
    pub records: Vec<EpochRecord>,
}

impl TrainHistory {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&EpochRecord> {
        self.records.last()
    }

    /// `epoch loss accuracy val_f1` as tab-separated lines with a header;
    /// a missing validation score is written as `-`.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "epoch\tloss\taccuracy\tval_f1")?;
        for r in &self.records {
            let val = r.val_f1.map_or_else(|| "-".to_string(), |v| v.to_string());
            writeln!(out, "{}\t{}\t{}\t{val}", r.epoch, r.loss, r.accuracy)?;
        }
        Ok(())
    }
}

fn labels(set: &[IdSequence], what: &str) -> Result<Vec<Sentiment>> {
    set.iter()
        .enumerate()
        .map(|(i, s)| s.label.ok_or_else(|| Error::InvalidArgument(format!("{what} example {i} has no label"))))
        .collect()
}

/// Trains with [`train_with`] and no per-epoch callback.
pub fn train<T: Scalar>(
    model: Model<T>,
    train_set: &[IdSequence],
    val_set: &[IdSequence],
    hyper: &TrainHyper,
) -> Result<(Model<T>, TrainHistory)> {
    train_with(model, train_set, val_set, hyper, |_| {})
}

/// Each epoch shuffles the training set (seeded), walks it in
/// consecutive batches including the final short one, and applies one
/// Adam step per batch to the mean-loss gradient. `on_epoch` sees every
/// record as it is appended.
pub fn train_with<T: Scalar>(
    mut model: Model<T>,
    train_set: &[IdSequence],
    val_set: &[IdSequence],
    hyper: &TrainHyper,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<(Model<T>, TrainHistory)> {
    hyper.validate()?;
    if train_set.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let gold = labels(train_set, "training")?;
    let val_gold = labels(val_set, "validation")?;
    let adam = AdamConfig { learning_rate: hyper.learning_rate, ..AdamConfig::default() };
    let mut state = AdamState::default();
    let mut grads = model.zeros_like();
    let mut rng = rng_from_seed(hyper.seed);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut history = TrainHistory::default();

    for epoch in 1..=hyper.epochs {
        if hyper.shuffle {
            order.shuffle(&mut rng);
        }
        let mut loss_sum = 0.0;
        let mut correct = 0;
        for (b, chunk) in order.chunks(hyper.batch_size).enumerate() {
            let batch: Vec<&[usize]> = chunk.iter().map(|&i| train_set[i].ids.as_slice()).collect();
            let batch_gold: Vec<Sentiment> = chunk.iter().map(|&i| gold[i]).collect();
            grads.zero();
            let diverged = |loss: f64| Error::Diverged { epoch, batch: b + 1, loss };
            let outcome = match model.accumulate_gradients(&batch, &batch_gold, &mut grads) {
                Err(Error::NonFinite(_)) => return Err(diverged(f64::NAN)),
                other => other?,
            };
            let loss = outcome.loss.as_f64();
            if !loss.is_finite() {
                return Err(diverged(loss));
            }
            loss_sum += loss * chunk.len() as f64;
            correct += outcome.correct;

            let grad_refs: Vec<&Tensor<T>> = grads.parameters().into_iter().map(|(_, t)| t).collect();
            let mut params = model.parameters_mut();
            optimizer_step(&mut params, &grad_refs, &mut state, &adam)?;
        }
        let val_f1 = if val_set.is_empty() {
            None
        } else {
            let pred = predict_proba(&model, val_set, "validation")?.argmax();
            Some(weighted_f1(&val_gold, &pred)?)
        };
        let record = EpochRecord {
            epoch,
            loss: loss_sum / train_set.len() as f64,
            accuracy: correct as f64 / train_set.len() as f64,
            val_f1,
        };
        on_epoch(&record);
        history.records.push(record);
    }
    Ok((model, history))
}

/// Softmax output for every sequence, as `f64`.
pub fn predict_proba<T: Scalar>(model: &Model<T>, dataset: &[IdSequence], tag: &str) -> Result<ProbMatrix> {
    let rows = model.forward(dataset)?.into_iter().map(|r| r.map(Scalar::as_f64)).collect();
    ProbMatrix::new(tag, rows)
}
