use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, decayed_learning_rate, AdamState};
use super::metrics::MetricsReport;
use super::{TrainConfig, TrainError};
use crate::dataset::Sample;
use crate::numcore::Tensor;
use crate::sstgcn::{self, ModelParams, PARAM_NAMES};

/// Anything the training loop can optimize.
pub trait Trainable: Clone + Send + Sync {
    fn param_names(&self) -> Vec<String>;
    fn tensors(&self) -> Vec<&Tensor>;
    fn tensors_mut(&mut self) -> Vec<&mut Tensor>;
    fn predict(&self, sample: &Sample) -> Result<f64, TrainError>;
    /// Per-sample loss and its gradient for every tensor, in `tensors()` order.
    fn loss_and_grads(&self, sample: &Sample) -> Result<(f64, Vec<Vec<f64>>), TrainError>;
}

impl Trainable for ModelParams {
    fn param_names(&self) -> Vec<String> {
        PARAM_NAMES.iter().map(|s| s.to_string()).collect()
    }

    fn tensors(&self) -> Vec<&Tensor> {
        ModelParams::tensors(self)
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        ModelParams::tensors_mut(self)
    }

    fn predict(&self, sample: &Sample) -> Result<f64, TrainError> {
        Ok(sstgcn::predict(self, sample)?)
    }

    fn loss_and_grads(&self, sample: &Sample) -> Result<(f64, Vec<Vec<f64>>), TrainError> {
        Ok(sstgcn::loss_and_grads(self, sample)?)
    }
}

/// One row of the training history.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_auc: f64,
    pub val_precision: f64,
    pub val_recall: f64,
    pub val_f1: f64,
    pub val_binary_accuracy: f64,
    pub learning_rate: f64,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome<M> {
    /// Parameters from the epoch with the best validation AUC.
    pub model: M,
    pub history: Vec<EpochRecord>,
    /// 1-based.
    pub best_epoch: usize,
    pub best_val_auc: f64,
    pub stopped_early: bool,
}

impl<M> TrainOutcome<M> {
    pub fn best_record(&self) -> &EpochRecord {
        &self.history[self.best_epoch - 1]
    }
}

/// Scores every sample (in order) and summarizes them.
pub fn evaluate<M: Trainable>(model: &M, samples: &[Sample]) -> Result<(Vec<f64>, MetricsReport), TrainError> {
    let scores: Vec<f64> = samples
        .par_iter()
        .map(|s| model.predict(s))
        .collect::<Result<_, _>>()?;
    let labels: Vec<f64> = samples.iter().map(Sample::target).collect();
    let report = MetricsReport::from_scores(&scores, &labels)?;
    Ok((scores, report))
}

fn check_both_classes(samples: &[Sample], which: &str) -> Result<(), TrainError> {
    let pos = samples.iter().filter(|s| s.label == 1).count();
    if pos == 0 || pos == samples.len() {
        return Err(TrainError::InvalidData(format!(
            "{which} set needs both classes ({pos} positives of {})",
            samples.len()
        )));
    }
    Ok(())
}

/// Mini-batch Adam with early stopping on validation AUC.
pub fn train<M: Trainable>(
    model: M,
    train_set: &[Sample],
    val_set: &[Sample],
    cfg: &TrainConfig,
) -> Result<TrainOutcome<M>, TrainError> {
    check_both_classes(val_set, "validation")?;
    train_with_validator(model, train_set, cfg, |_, m| Ok(evaluate(m, val_set)?.1))
}

/// [`train`] with a caller-supplied validation step, called once per epoch
/// with the 1-based epoch number.
pub fn train_with_validator<M, V>(
    mut model: M,
    train_set: &[Sample],
    cfg: &TrainConfig,
    mut validate: V,
) -> Result<TrainOutcome<M>, TrainError>
where
    M: Trainable,
    V: FnMut(usize, &M) -> Result<MetricsReport, TrainError>,
{
    cfg.validate()?;
    check_both_classes(train_set, "training")?;
    let names = model.param_names();
    let name_refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let mut adam = AdamState::new(&model.tensors());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..train_set.len()).collect();

    let mut history = Vec::new();
    let mut best: Option<(usize, f64, M)> = None;
    let mut wait = 0;
    let mut stopped_early = false;

    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        let mut loss_total = 0.0;
        for (batch_no, batch) in order.chunks(cfg.batch_size).enumerate() {
            let results: Vec<(f64, Vec<Vec<f64>>)> = batch
                .par_iter()
                .map(|&i| model.loss_and_grads(&train_set[i]))
                .collect::<Result<_, _>>()?;
            let mut mean: Vec<Vec<f64>> = results[0].1.iter().map(|g| vec![0.0; g.len()]).collect();
            for (k, (loss, grads)) in results.iter().enumerate() {
                if !loss.is_finite() {
                    return Err(non_finite_loss(&model, &names, epoch, batch_no, &train_set[batch[k]], *loss));
                }
                loss_total += loss;
                for (acc, g) in mean.iter_mut().zip(grads) {
                    for (a, v) in acc.iter_mut().zip(g) {
                        *a += v;
                    }
                }
            }
            let scale = 1.0 / batch.len() as f64;
            mean.iter_mut().flatten().for_each(|v| *v *= scale);
            adam_step(&mut model.tensors_mut(), &name_refs, &mean, &mut adam, cfg)?;
        }

        let report = validate(epoch, &model)?;
        let record = EpochRecord {
            epoch,
            train_loss: loss_total / train_set.len() as f64,
            val_loss: report.loss,
            val_auc: report.auc,
            val_precision: report.precision,
            val_recall: report.recall,
            val_f1: report.f1,
            val_binary_accuracy: report.binary_accuracy,
            learning_rate: decayed_learning_rate(cfg, adam.step),
        };
        log::info!(
            "epoch {epoch}: train_loss {:.4} val_loss {:.4} val_auc {:.4}",
            record.train_loss,
            record.val_loss,
            record.val_auc
        );
        history.push(record);

        if best.as_ref().is_none_or(|(_, auc, _)| report.auc > *auc) {
            best = Some((epoch, report.auc, model.clone()));
            wait = 0;
        } else {
            wait += 1;
            if wait >= cfg.patience {
                stopped_early = epoch < cfg.max_epochs;
                break;
            }
        }
    }

    let (best_epoch, best_val_auc, model) = best.ok_or_else(|| TrainError::Contract("no epochs were run".into()))?;
    Ok(TrainOutcome {
        model,
        history,
        best_epoch,
        best_val_auc,
        stopped_early,
    })
}

fn non_finite_loss<M: Trainable>(
    model: &M,
    names: &[String],
    epoch: usize,
    batch: usize,
    sample: &Sample,
    loss: f64,
) -> TrainError {
    let mut dump = format!(
        "epoch {epoch}, batch {batch}: loss {loss} on sample (center {}, t {}, label {})\n",
        sample.center, sample.t, sample.label
    );
    for (name, t) in names.iter().zip(model.tensors()) {
        let max = t.data().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let finite = t.all_finite();
        let _ = writeln!(dump, "  {name}: max|x| = {max:e}, finite = {finite}");
    }
    TrainError::NonFiniteLoss(dump)
}

pub fn write_history_csv(path: &Path, history: &[EpochRecord]) -> Result<(), TrainError> {
    let mut w = csv::Writer::from_path(path)?;
    for r in history {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_history_json(path: &Path, history: &[EpochRecord]) -> Result<(), TrainError> {
    std::fs::write(path, serde_json::to_vec_pretty(history)?)?;
    Ok(())
}
