//! Shared fixtures and a plain-loop reference model for the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sstgcn_core::dataset::schema::{NODE_FEATURES, STATIC_FEATURES};
use sstgcn_core::dataset::Sample;
use sstgcn_core::numcore::Tensor;
use sstgcn_core::roadgraph::{normalized_laplacian, RoadId};
use sstgcn_core::sstgcn::{ModelConfig, ModelParams};

pub type Mat = Vec<Vec<f64>>;

pub fn mat(t: &Tensor) -> Mat {
    t.to_rows()
}

pub fn matmul(a: &Mat, b: &Mat) -> Mat {
    let inner = b.len();
    let cols = b[0].len();
    a.iter()
        .map(|row| {
            assert_eq!(row.len(), inner);
            (0..cols).map(|j| (0..inner).map(|k| row[k] * b[k][j]).sum()).collect()
        })
        .collect()
}

pub fn add_row(a: &Mat, bias: &Tensor) -> Mat {
    a.iter()
        .map(|row| row.iter().zip(bias.data()).map(|(x, b)| x + b).collect())
        .collect()
}

pub fn map(a: &Mat, f: impl Fn(f64) -> f64) -> Mat {
    a.iter().map(|r| r.iter().map(|&x| f(x)).collect()).collect()
}

pub fn sig(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub fn relu(x: f64) -> f64 {
    x.max(0.0)
}

/// `relu(x·W + b)`.
pub fn dense_relu(x: &Mat, w: &Tensor, b: &Tensor) -> Mat {
    map(&add_row(&matmul(x, &mat(w)), b), relu)
}

pub fn gcn(v: &Mat, l: &Mat, w: &Tensor, b: &Tensor, alpha: f64) -> Mat {
    let z = add_row(&matmul(&matmul(l, v), &mat(w)), b);
    map(&z, |x| if x > 0.0 { x } else { alpha * x })
}

pub fn attention_pool(v2: &Mat, a: &Tensor) -> Vec<f64> {
    let scores: Vec<f64> = v2
        .iter()
        .map(|row| row.iter().zip(a.data()).map(|(x, w)| x * w).sum())
        .collect();
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let z: f64 = e.iter().sum();
    (0..v2[0].len())
        .map(|c| v2.iter().zip(&e).map(|(row, w)| w / z * row[c]).sum())
        .collect()
}

pub fn static_ref(s: &Tensor, p: &ModelParams) -> Vec<f64> {
    let h = dense_relu(&mat(s), &p.static_fc1_w, &p.static_fc1_b);
    dense_relu(&h, &p.static_fc2_w, &p.static_fc2_b).remove(0)
}

pub fn slice_ref(v: &Tensor, l: &Tensor, s: &Tensor, p: &ModelParams) -> Vec<f64> {
    let l = mat(l);
    let h1 = gcn(&mat(v), &l, &p.gcn1_w, &p.gcn1_b, p.gcn1_alpha.data()[0]);
    let h2 = gcn(&h1, &l, &p.gcn2_w, &p.gcn2_b, p.gcn2_alpha.data()[0]);
    let mut cat = attention_pool(&h2, &p.attn_a);
    cat.extend(static_ref(s, p));
    let x = dense_relu(&vec![cat], &p.concat_fc1_w, &p.concat_fc1_b);
    dense_relu(&x, &p.concat_fc2_w, &p.concat_fc2_b).remove(0)
}

/// Gate pre-activation `[h, x]·W + b` for one unit.
fn gate(hx: &[f64], w: &Tensor, b: &Tensor, unit: usize) -> f64 {
    hx.iter().enumerate().map(|(r, v)| v * w.get(r, unit)).sum::<f64>() + b.data()[unit]
}

/// Last hidden state of the LSTM from zero state:
/// i, f, o = σ(W·[h, x] + b), C̃ = tanh(W_C·[h, x] + b_C),
/// C = f∘C + i∘C̃, h = o∘tanh(C).
pub fn lstm_ref(seq: &[Vec<f64>], p: &ModelParams) -> Vec<f64> {
    let units = p.lstm_bi.cols();
    let (mut h, mut c) = (vec![0.0; units], vec![0.0; units]);
    for x in seq {
        let hx: Vec<f64> = h.iter().chain(x).copied().collect();
        let mut nh = vec![0.0; units];
        for u in 0..units {
            let i = sig(gate(&hx, &p.lstm_wi, &p.lstm_bi, u));
            let f = sig(gate(&hx, &p.lstm_wf, &p.lstm_bf, u));
            let o = sig(gate(&hx, &p.lstm_wo, &p.lstm_bo, u));
            let cand = gate(&hx, &p.lstm_wc, &p.lstm_bc, u).tanh();
            c[u] = f * c[u] + i * cand;
            nh[u] = o * c[u].tanh();
        }
        h = nh;
    }
    h
}

pub fn predict_ref(p: &ModelParams, s: &Sample) -> f64 {
    let seq: Vec<Vec<f64>> = s
        .slices
        .iter()
        .zip(&s.statics)
        .map(|(v, st)| slice_ref(v, &s.laplacian, st, p))
        .collect();
    let h = lstm_ref(&seq, p);
    let z = dense_relu(&vec![h], &p.out_fc1_w, &p.out_fc1_b);
    let logit = add_row(&matmul(&z, &mat(&p.out_fc2_w)), &p.out_fc2_b)[0][0];
    sig(logit)
}

pub fn rand_tensor(rng: &mut ChaCha8Rng, rows: usize, cols: usize, lo: f64, hi: f64) -> Tensor {
    Tensor::from_vec(rows, cols, (0..rows * cols).map(|_| rng.random_range(lo..hi)).collect()).unwrap()
}

/// Random connected weighted graph on `n` nodes, normalized Laplacian filtered.
pub fn random_laplacian(rng: &mut ChaCha8Rng, n: usize) -> Tensor {
    let mut a = Tensor::identity(n);
    for i in 1..n {
        // a spanning path keeps every node attached
        let j = rng.random_range(0..i);
        let w = rng.random_range(0.1..1.0);
        a.set(i, j, w);
        a.set(j, i, w);
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if a.get(i, j) == 0.0 && rng.random_bool(0.2) {
                let w = rng.random_range(0.1..1.0);
                a.set(i, j, w);
                a.set(j, i, w);
            }
        }
    }
    normalized_laplacian(&a).unwrap()
}

/// Sample with `nodes` nodes and `n` slices; features uniform in `[0, 1]`,
/// node 0 is the focus.
pub fn random_sample(rng: &mut ChaCha8Rng, nodes: usize, n: usize) -> Sample {
    let laplacian = random_laplacian(rng, nodes);
    let slices = (0..n)
        .map(|_| {
            let mut v = rand_tensor(rng, nodes, NODE_FEATURES, 0.0, 1.0);
            for i in 0..nodes {
                v.set(i, NODE_FEATURES - 1, if i == 0 { 1.0 } else { 0.0 });
            }
            v
        })
        .collect();
    let statics = (0..n).map(|_| rand_tensor(rng, 1, STATIC_FEATURES, 0.0, 1.0)).collect();
    Sample {
        center: RoadId(0),
        t: 100,
        n,
        k: 5,
        label: rng.random_range(0..2),
        nodes: (0..nodes as u32).map(RoadId).collect(),
        laplacian,
        slices,
        statics,
    }
}

/// Glorot weights plus nonzero biases and slopes, so every term matters.
pub fn random_params(seed: u64) -> ModelParams {
    let mut p = ModelParams::init(&ModelConfig::default(), seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    for (name, t) in sstgcn_core::sstgcn::PARAM_NAMES.iter().zip(p.tensors_mut()) {
        if name.ends_with("_b") || name.ends_with("alpha") || name.starts_with("lstm_b") {
            for v in t.data_mut() {
                *v = rng.random_range(-0.3..0.3);
            }
        }
    }
    p
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
