use super::params::{BoundParams, ModelParams};
use super::{tape_activation, ActivationKind, ModelConfig, ModelError};
use crate::dataset::Sample;
use crate::numcore::{NumError, Tape, Tensor, Var};

fn activate(tape: &mut Tape, x: Var, kind: ActivationKind, alpha: Option<Var>) -> Result<Var, NumError> {
    match tape_activation(kind, alpha) {
        Some(a) => tape.activation(x, a),
        None => Ok(x),
    }
}

/// `act(x·W + b)`.
pub fn dense(tape: &mut Tape, x: Var, w: Var, b: Var, kind: ActivationKind) -> Result<Var, NumError> {
    let xw = tape.matmul(x, w)?;
    let z = tape.add_bias(xw, b)?;
    activate(tape, z, kind, None)
}

/// `PReLU(L·V·W + b)`; `alpha` is the layer slope (ignored for other kinds).
pub fn gcn_layer(
    tape: &mut Tape,
    v: Var,
    l: Var,
    w: Var,
    b: Var,
    alpha: Var,
    kind: ActivationKind,
) -> Result<Var, NumError> {
    let lv = tape.matmul(l, v)?;
    let lvw = tape.matmul(lv, w)?;
    let z = tape.add_bias(lvw, b)?;
    activate(tape, z, kind, Some(alpha))
}

/// Softmax attention over the rows of `v2` with scores `v2·a`, then the
/// weighted row sum (`1 x c`).
pub fn global_attention_sum_pool(tape: &mut Tape, v2: Var, a: Var) -> Result<Var, NumError> {
    if tape.value(v2).rows() == 0 {
        return Err(NumError::Contract("attention pooling needs at least one node".into()));
    }
    let logits = tape.matmul(v2, a)?;
    let row = tape.transpose(logits);
    let weights = tape.softmax_rows(row);
    tape.matmul(weights, v2)
}

pub fn static_embed(tape: &mut Tape, s: Var, p: &BoundParams, cfg: &ModelConfig) -> Result<Var, NumError> {
    let h = dense(tape, s, p.static_fc1_w, p.static_fc1_b, cfg.dense_activation)?;
    dense(tape, h, p.static_fc2_w, p.static_fc2_b, cfg.dense_activation)
}

/// Graph branch and static branch for one time slice, merged to a
/// `1 x concat_units[1]` vector.
pub fn slice_embed(
    tape: &mut Tape,
    v: Var,
    l: Var,
    s: Var,
    p: &BoundParams,
    cfg: &ModelConfig,
) -> Result<Var, NumError> {
    let h1 = gcn_layer(tape, v, l, p.gcn1_w, p.gcn1_b, p.gcn1_alpha, cfg.gcn_activation)?;
    let h2 = gcn_layer(tape, h1, l, p.gcn2_w, p.gcn2_b, p.gcn2_alpha, cfg.gcn_activation)?;
    let pooled = global_attention_sum_pool(tape, h2, p.attn_a)?;
    let st = static_embed(tape, s, p, cfg)?;
    let cat = tape.concat_cols(pooled, st)?;
    let x = dense(tape, cat, p.concat_fc1_w, p.concat_fc1_b, cfg.dense_activation)?;
    dense(tape, x, p.concat_fc2_w, p.concat_fc2_b, cfg.dense_activation)
}

/// LSTM weights (`[h, x]` rows by hidden columns) and gate biases.
#[derive(Clone, Copy, Debug)]
pub struct LstmVars {
    pub wi: Var,
    pub bi: Var,
    pub wf: Var,
    pub bf: Var,
    pub wo: Var,
    pub bo: Var,
    pub wc: Var,
    pub bc: Var,
}

impl From<&BoundParams> for LstmVars {
    fn from(p: &BoundParams) -> Self {
        Self {
            wi: p.lstm_wi,
            bi: p.lstm_bi,
            wf: p.lstm_wf,
            bf: p.lstm_bf,
            wo: p.lstm_wo,
            bo: p.lstm_bo,
            wc: p.lstm_wc,
            bc: p.lstm_bc,
        }
    }
}

/// Runs the LSTM over `seq` from zero state and returns the last hidden state.
pub fn lstm_forward(tape: &mut Tape, seq: &[Var], lstm: &LstmVars) -> Result<Var, NumError> {
    if seq.is_empty() {
        return Err(NumError::Contract("lstm_forward: empty sequence".into()));
    }
    let units = tape.value(lstm.bi).cols();
    let mut h = tape.constant(Tensor::zeros(1, units));
    let mut c = tape.constant(Tensor::zeros(1, units));
    for &x in seq {
        let hx = tape.concat_cols(h, x)?;
        let i = dense(tape, hx, lstm.wi, lstm.bi, ActivationKind::Sigmoid)?;
        let f = dense(tape, hx, lstm.wf, lstm.bf, ActivationKind::Sigmoid)?;
        let o = dense(tape, hx, lstm.wo, lstm.bo, ActivationKind::Sigmoid)?;
        let cand = dense(tape, hx, lstm.wc, lstm.bc, ActivationKind::Tanh)?;
        let keep = tape.mul(f, c)?;
        let write = tape.mul(i, cand)?;
        c = tape.add(keep, write)?;
        let squashed = tape.tanh(c);
        h = tape.mul(o, squashed)?;
    }
    Ok(h)
}

fn check_sample(sample: &Sample, cfg: &ModelConfig) -> Result<(), NumError> {
    if sample.slices.is_empty() || sample.slices.len() != sample.statics.len() {
        return Err(NumError::Contract(format!(
            "sample has {} slices and {} static vectors",
            sample.slices.len(),
            sample.statics.len()
        )));
    }
    if let Some(s) = sample.slices.iter().find(|s| s.cols() != cfg.node_features) {
        return Err(NumError::Shape {
            op: "node features",
            left: s.shape(),
            right: (s.rows(), cfg.node_features),
        });
    }
    if let Some(s) = sample.statics.iter().find(|s| s.shape() != (1, cfg.static_features)) {
        return Err(NumError::Shape {
            op: "static features",
            left: s.shape(),
            right: (1, cfg.static_features),
        });
    }
    Ok(())
}

/// Records the full forward pass for `sample` and returns the `1 x 1` probability.
/// The graph branch shares its weights across time slices.
pub fn predict_on_tape(tape: &mut Tape, p: &BoundParams, cfg: &ModelConfig, sample: &Sample) -> Result<Var, NumError> {
    check_sample(sample, cfg)?;
    let l = tape.constant(sample.laplacian.clone());
    let mut seq = Vec::with_capacity(sample.slices.len());
    for (v, s) in sample.slices.iter().zip(&sample.statics) {
        let v = tape.constant(v.clone());
        let s = tape.constant(s.clone());
        seq.push(slice_embed(tape, v, l, s, p, cfg)?);
    }
    let h = lstm_forward(tape, &seq, &LstmVars::from(p))?;
    let z = dense(tape, h, p.out_fc1_w, p.out_fc1_b, cfg.dense_activation)?;
    let logit = dense(tape, z, p.out_fc2_w, p.out_fc2_b, ActivationKind::Linear)?;
    Ok(tape.sigmoid(logit))
}

/// Accident probability for one sample.
pub fn predict(params: &ModelParams, sample: &Sample) -> Result<f64, ModelError> {
    let mut tape = Tape::new();
    let p = params.bind(&mut tape, false);
    let y = predict_on_tape(&mut tape, &p, &params.config, sample)?;
    Ok(tape.value(y).data()[0])
}

/// Binary cross-entropy of one sample and its gradient for every parameter,
/// in canonical order.
pub fn loss_and_grads(params: &ModelParams, sample: &Sample) -> Result<(f64, Vec<Vec<f64>>), ModelError> {
    let mut tape = Tape::new();
    let p = params.bind(&mut tape, true);
    let y = predict_on_tape(&mut tape, &p, &params.config, sample)?;
    let loss = tape.bce_loss(y, &[sample.target()])?;
    tape.backward(loss)?;
    let grads = p
        .vars()
        .into_iter()
        .map(|v| tape.grad(v).map(<[f64]>::to_vec).unwrap_or_default())
        .collect();
    Ok((tape.value(loss).data()[0], grads))
}
