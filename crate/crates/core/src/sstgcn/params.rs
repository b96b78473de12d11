use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ModelConfig, ModelError};
use crate::numcore::{Tape, Tensor, Var};

/// Initial PReLU slope.
pub const PRELU_INIT: f64 = 0.25;

macro_rules! model_params {
    ($($name:ident),* $(,)?) => {
        /// Trainable tensors. Weights are `in x out`, biases `1 x out`.
        #[derive(Clone, Debug, PartialEq)]
        pub struct ModelParams {
            pub config: ModelConfig,
            $(pub $name: Tensor,)*
        }

        /// Parameter names in canonical (checkpoint and optimizer) order.
        pub const PARAM_NAMES: &[&str] = &[$(stringify!($name)),*];

        /// Tape handles for every parameter.
        #[derive(Clone, Copy, Debug)]
        pub struct BoundParams {
            $(pub $name: Var,)*
        }

        impl ModelParams {
            pub fn tensors(&self) -> Vec<&Tensor> {
                vec![$(&self.$name),*]
            }

            pub fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
                vec![$(&mut self.$name),*]
            }

            fn from_tensors(config: ModelConfig, tensors: Vec<Tensor>) -> Self {
                let mut it = tensors.into_iter();
                Self {
                    config,
                    $($name: it.next().expect("one tensor per parameter"),)*
                }
            }

            /// Records every tensor on `tape`, as trainable leaves or as constants.
            pub fn bind(&self, tape: &mut Tape, trainable: bool) -> BoundParams {
                let mut put = |t: &Tensor| {
                    if trainable {
                        tape.leaf(t.clone().with_requires_grad(true))
                    } else {
                        tape.constant(t.clone())
                    }
                };
                BoundParams { $($name: put(&self.$name),)* }
            }
        }

        impl BoundParams {
            pub fn vars(&self) -> Vec<Var> {
                vec![$(self.$name),*]
            }

            /// Inverse of [`vars`](Self::vars).
            pub fn from_vars(vars: &[Var]) -> Self {
                let mut it = vars.iter().copied();
                Self { $($name: it.next().expect("one var per parameter"),)* }
            }
        }
    };
}

model_params!(
    gcn1_w,
    gcn1_b,
    gcn1_alpha,
    gcn2_w,
    gcn2_b,
    gcn2_alpha,
    attn_a,
    static_fc1_w,
    static_fc1_b,
    static_fc2_w,
    static_fc2_b,
    concat_fc1_w,
    concat_fc1_b,
    concat_fc2_w,
    concat_fc2_b,
    lstm_wi,
    lstm_bi,
    lstm_wf,
    lstm_bf,
    lstm_wo,
    lstm_bo,
    lstm_wc,
    lstm_bc,
    out_fc1_w,
    out_fc1_b,
    out_fc2_w,
    out_fc2_b,
);

#[derive(Clone, Copy, PartialEq)]
enum Role {
    Weight,
    Bias,
    Slope,
}

/// `(rows, cols, role)` of every parameter in canonical order.
fn layout(c: &ModelConfig) -> Vec<(usize, usize, Role)> {
    use Role::*;
    let [g1, g2] = c.gcn_channels;
    let [s1, s2] = c.static_units;
    let [c1, c2] = c.concat_units;
    let (h, gate_in, o) = (c.lstm_units, c.lstm_input_width(), c.output_units);
    let mut v = vec![
        (c.node_features, g1, Weight),
        (1, g1, Bias),
        (1, 1, Slope),
        (g1, g2, Weight),
        (1, g2, Bias),
        (1, 1, Slope),
        (g2, 1, Weight),
        (c.static_features, s1, Weight),
        (1, s1, Bias),
        (s1, s2, Weight),
        (1, s2, Bias),
        (c.concat_width(), c1, Weight),
        (1, c1, Bias),
        (c1, c2, Weight),
        (1, c2, Bias),
    ];
    for _ in 0..4 {
        v.push((gate_in, h, Weight));
        v.push((1, h, Bias));
    }
    v.extend([(h, o, Weight), (1, o, Bias), (o, 1, Weight), (1, 1, Bias)]);
    v
}

impl ModelParams {
    /// Glorot-uniform weights, zero biases, PReLU slopes at 0.25.
    pub fn init(config: &ModelConfig, seed: u64) -> Result<Self, ModelError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tensors = layout(config)
            .into_iter()
            .map(|(rows, cols, role)| {
                let t = match role {
                    Role::Weight => {
                        let limit = (6.0 / (rows + cols) as f64).sqrt();
                        let data = (0..rows * cols).map(|_| rng.random_range(-limit..=limit)).collect();
                        Tensor::from_vec(rows, cols, data).expect("layout shape")
                    }
                    Role::Bias => Tensor::zeros(rows, cols),
                    Role::Slope => Tensor::filled(rows, cols, PRELU_INIT),
                };
                t.with_requires_grad(true)
            })
            .collect();
        Ok(Self::from_tensors(config.clone(), tensors))
    }

    /// Every value zero, slopes included.
    pub fn zeros(config: &ModelConfig) -> Result<Self, ModelError> {
        config.validate()?;
        let tensors = layout(config)
            .into_iter()
            .map(|(r, c, _)| Tensor::zeros(r, c).with_requires_grad(true))
            .collect();
        Ok(Self::from_tensors(config.clone(), tensors))
    }

    /// Builds parameters from tensors in canonical order, checking every shape.
    pub fn from_named(config: &ModelConfig, tensors: Vec<(String, Tensor)>) -> Result<Self, ModelError> {
        config.validate()?;
        let expected = layout(config);
        if tensors.len() != expected.len() {
            return Err(ModelError::Checkpoint(format!(
                "expected {} tensors, found {}",
                expected.len(),
                tensors.len()
            )));
        }
        let mut out = Vec::with_capacity(tensors.len());
        for (((name, t), want), (rows, cols, _)) in tensors.into_iter().zip(PARAM_NAMES).zip(expected) {
            if name != *want {
                return Err(ModelError::Checkpoint(format!("expected tensor '{want}', found '{name}'")));
            }
            if t.shape() != (rows, cols) {
                return Err(ModelError::Checkpoint(format!(
                    "{name}: shape {}x{} does not match config ({rows}x{cols})",
                    t.rows(),
                    t.cols()
                )));
            }
            out.push(t.with_requires_grad(true));
        }
        Ok(Self::from_tensors(config.clone(), out))
    }

    pub fn param_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn named(&self) -> impl Iterator<Item = (&'static str, &Tensor)> {
        PARAM_NAMES.iter().copied().zip(self.tensors())
    }
}
