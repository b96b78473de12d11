use super::metrics::MetricsReport;
use super::trainer::{evaluate, train, Trainable};
use super::{TrainConfig, TrainError};
use crate::dataset::schema::{NODE_FEATURES, STATIC_FEATURES};
use crate::dataset::Sample;
use crate::numcore::{Tape, Tensor};

pub const LOGISTIC_INPUTS: usize = NODE_FEATURES + STATIC_FEATURES;

/// Logistic regression on the center road's last slice and the last static vector.
#[derive(Clone, Debug, PartialEq)]
pub struct LogisticModel {
    pub w: Tensor,
    pub b: Tensor,
}

impl Default for LogisticModel {
    fn default() -> Self {
        Self {
            w: Tensor::zeros(LOGISTIC_INPUTS, 1).with_requires_grad(true),
            b: Tensor::zeros(1, 1).with_requires_grad(true),
        }
    }
}

/// `1 x 39` input: center row of the final slice, then the final static vector.
pub fn logistic_features(sample: &Sample) -> Result<Tensor, TrainError> {
    let (Some(v), Some(s)) = (sample.slices.last(), sample.statics.last()) else {
        return Err(TrainError::InvalidData("sample without slices".into()));
    };
    if v.cols() != NODE_FEATURES || s.len() != STATIC_FEATURES || v.rows() == 0 {
        return Err(TrainError::InvalidData("unexpected feature widths".into()));
    }
    let mut x = v.row(0).to_vec();
    x.extend_from_slice(s.data());
    Ok(Tensor::row_vector(&x))
}

impl LogisticModel {
    fn forward(&self, sample: &Sample, trainable: bool) -> Result<(Tape, [crate::numcore::Var; 3]), TrainError> {
        let mut tape = Tape::new();
        let (w, b) = if trainable {
            (tape.leaf(self.w.clone().with_requires_grad(true)), tape.leaf(self.b.clone().with_requires_grad(true)))
        } else {
            (tape.constant(self.w.clone()), tape.constant(self.b.clone()))
        };
        let x = tape.constant(logistic_features(sample)?);
        let xw = tape.matmul(x, w)?;
        let z = tape.add_bias(xw, b)?;
        let p = tape.sigmoid(z);
        Ok((tape, [w, b, p]))
    }
}

impl Trainable for LogisticModel {
    fn param_names(&self) -> Vec<String> {
        vec!["w".into(), "b".into()]
    }

    fn tensors(&self) -> Vec<&Tensor> {
        vec![&self.w, &self.b]
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        vec![&mut self.w, &mut self.b]
    }

    fn predict(&self, sample: &Sample) -> Result<f64, TrainError> {
        let (tape, [_, _, p]) = self.forward(sample, false)?;
        Ok(tape.value(p).data()[0])
    }

    fn loss_and_grads(&self, sample: &Sample) -> Result<(f64, Vec<Vec<f64>>), TrainError> {
        let (mut tape, [w, b, p]) = self.forward(sample, true)?;
        let loss = tape.bce_loss(p, &[sample.target()])?;
        tape.backward(loss)?;
        let grads = [w, b]
            .iter()
            .map(|v| tape.grad(*v).map(<[f64]>::to_vec).unwrap_or_default())
            .collect();
        Ok((tape.value(loss).data()[0], grads))
    }
}

/// Trains the logistic baseline with the same loop (early stopping on
/// `val_set`) and reports its metrics on `test_set`.
pub fn logistic_baseline(
    train_set: &[Sample],
    val_set: &[Sample],
    test_set: &[Sample],
    cfg: &TrainConfig,
) -> Result<(LogisticModel, MetricsReport), TrainError> {
    if test_set.is_empty() {
        return Err(TrainError::InvalidData("empty test set".into()));
    }
    let outcome = train(LogisticModel::default(), train_set, val_set, cfg)?;
    let (_, report) = evaluate(&outcome.model, test_set)?;
    Ok((outcome.model, report))
}
