//! Stateless forward operations shared by the layers.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::NetError;
use crate::embedding::sigmoid;
use crate::tensor::{dot, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Linear,
    Tanh,
    Relu,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Linear => x,
            Activation::Tanh => x.tanh(),
            Activation::Relu => x.max(0.0),
        }
    }

    /// Derivative expressed through the activation's output `y`.
    pub fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Linear => 1.0,
            Activation::Tanh => 1.0 - y * y,
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// `activation(W x + bias)` for `W` of shape `out × in`.
pub fn dense_forward(x: &[f64], weights: &Tensor, bias: &[f64], activation: Activation) -> Result<Vec<f64>, NetError> {
    let out = bias.len();
    if weights.shape() != [out, x.len()] {
        return Err(NetError::Shape(format!(
            "dense weights {:?} do not map {} inputs to {} outputs",
            weights.shape(),
            x.len(),
            out
        )));
    }
    Ok((0..out)
        .map(|o| activation.apply(dot(weights.row(o), x) + bias[o]))
        .collect())
}

/// Exp-normalize with the maximum subtracted first.
pub fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = z.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

pub const PROBABILITY_FLOOR: f64 = 1e-12;

/// `-ln pred[gold]`, with `pred[gold]` floored at 1e-12.
pub fn cross_entropy(pred: &[f64], gold: usize) -> Result<f64, NetError> {
    let p = pred.get(gold).ok_or(NetError::LabelOutOfRange {
        gold,
        classes: pred.len(),
    })?;
    Ok(-p.max(PROBABILITY_FLOOR).ln())
}

/// Same-length 1-D convolution with zero padding.
///
/// `x` is `L × C`, `filters` is `F × width × C` (width odd), `bias` has `F`
/// entries. Output row `t` sees input rows `t - width/2 ..= t + width/2`.
pub fn conv1d_forward(x: &Tensor, filters: &Tensor, bias: &[f64], activation: Activation) -> Result<Tensor, NetError> {
    let (len, channels) = matrix_dims(x)?;
    let &[n_filters, width, filter_channels] = filters.shape() else {
        return Err(NetError::Shape(format!(
            "conv filters must be rank 3, got {:?}",
            filters.shape()
        )));
    };
    if filter_channels != channels || bias.len() != n_filters || width % 2 == 0 {
        return Err(NetError::Shape(format!(
            "conv filters {:?} with {} biases do not fit input {:?}",
            filters.shape(),
            bias.len(),
            x.shape()
        )));
    }
    let pad = width / 2;
    let w = filters.data();
    let mut out = Tensor::zeros(&[len, n_filters]);
    for t in 0..len {
        let row = out.row_mut(t);
        row.copy_from_slice(bias);
        for k in 0..width {
            let Some(src) = (t + k).checked_sub(pad).filter(|&s| s < len) else {
                continue;
            };
            let xs = x.row(src);
            for (f, acc) in row.iter_mut().enumerate() {
                let base = (f * width + k) * channels;
                *acc += dot(&w[base..base + channels], xs);
            }
        }
        for v in row.iter_mut() {
            *v = activation.apply(*v);
        }
    }
    Ok(out)
}

/// Non-overlapping max over windows of `pool` rows; the last window may be
/// short. Returns the pooled `ceil(L/pool) × F` tensor and, per output cell,
/// the input row that won (the first one on ties).
pub fn maxpool1d_with_argmax(x: &Tensor, pool: usize) -> Result<(Tensor, Vec<usize>), NetError> {
    let (len, features) = matrix_dims(x)?;
    if pool == 0 {
        return Err(NetError::InvalidSpec("pool size must be at least 1".into()));
    }
    let out_len = len.div_ceil(pool);
    let mut out = Tensor::zeros(&[out_len, features]);
    let mut argmax = vec![0; out_len * features];
    for j in 0..out_len {
        let start = j * pool;
        let end = (start + pool).min(len);
        for f in 0..features {
            let mut best = start;
            for i in start + 1..end {
                if x.row(i)[f] > x.row(best)[f] {
                    best = i;
                }
            }
            out.row_mut(j)[f] = x.row(best)[f];
            argmax[j * features + f] = best;
        }
    }
    Ok((out, argmax))
}

pub fn maxpool1d(x: &Tensor, pool: usize) -> Result<Tensor, NetError> {
    maxpool1d_with_argmax(x, pool).map(|(out, _)| out)
}

/// LSTM weights with gate blocks stacked in the order input, forget,
/// candidate, output.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    /// `4H × I`
    pub input_weights: Tensor,
    /// `4H × H`
    pub recurrent_weights: Tensor,
    /// `4H`
    pub bias: Tensor,
}

impl LstmParams {
    pub fn hidden(&self) -> usize {
        self.bias.len() / 4
    }
}

/// Gate activations and new state of one LSTM step.
#[derive(Debug, Clone)]
pub(crate) struct LstmStep {
    /// `[i, f, g, o]`, each `H` long, after their nonlinearities.
    pub gates: Vec<f64>,
    pub c: Vec<f64>,
    pub h: Vec<f64>,
}

pub(crate) fn lstm_step_full(x: &[f64], h_prev: &[f64], c_prev: &[f64], w: &[f64], u: &[f64], b: &[f64]) -> LstmStep {
    let hidden = h_prev.len();
    let inputs = x.len();
    let mut gates = Vec::with_capacity(4 * hidden);
    for r in 0..4 * hidden {
        let z = b[r] + dot(&w[r * inputs..(r + 1) * inputs], x) + dot(&u[r * hidden..(r + 1) * hidden], h_prev);
        gates.push(if (2 * hidden..3 * hidden).contains(&r) {
            z.tanh()
        } else {
            sigmoid(z)
        });
    }
    let mut c = Vec::with_capacity(hidden);
    let mut h = Vec::with_capacity(hidden);
    for j in 0..hidden {
        let (i, f, g, o) = (
            gates[j],
            gates[hidden + j],
            gates[2 * hidden + j],
            gates[3 * hidden + j],
        );
        let cj = f * c_prev[j] + i * g;
        c.push(cj);
        h.push(o * cj.tanh());
    }
    LstmStep { gates, c, h }
}

/// One LSTM step: `i, f, o = σ(·)`, `g = tanh(·)`, `c = f⊙c_prev + i⊙g`,
/// `h = o⊙tanh(c)`.
pub fn lstm_step(
    x: &[f64],
    h_prev: &[f64],
    c_prev: &[f64],
    params: &LstmParams,
) -> Result<(Vec<f64>, Vec<f64>), NetError> {
    let hidden = params.hidden();
    if params.bias.len() != 4 * hidden
        || params.input_weights.shape() != [4 * hidden, x.len()]
        || params.recurrent_weights.shape() != [4 * hidden, hidden]
        || h_prev.len() != hidden
        || c_prev.len() != hidden
    {
        return Err(NetError::Shape(format!(
            "lstm step with x {}, h {}, c {} against W {:?}, U {:?}, b {:?}",
            x.len(),
            h_prev.len(),
            c_prev.len(),
            params.input_weights.shape(),
            params.recurrent_weights.shape(),
            params.bias.shape()
        )));
    }
    let step = lstm_step_full(
        x,
        h_prev,
        c_prev,
        params.input_weights.data(),
        params.recurrent_weights.data(),
        params.bias.data(),
    );
    Ok((step.h, step.c))
}

/// Whether dropout is active.
#[derive(Debug)]
pub enum Mode<'r, R: Rng + ?Sized> {
    Train(&'r mut R),
    Eval,
}

/// Inverted dropout: in training each entry is zeroed with probability
/// `rate` and survivors are scaled by `1 / (1 - rate)`; evaluation is the
/// identity.
pub fn dropout<R: Rng + ?Sized>(x: &[f64], rate: f64, mode: Mode<'_, R>) -> Vec<f64> {
    match mode {
        Mode::Eval => x.to_vec(),
        Mode::Train(rng) => {
            let mask = dropout_mask(x.len(), rate, rng);
            x.iter().zip(&mask).map(|(a, m)| a * m).collect()
        }
    }
}

pub(crate) fn dropout_mask<R: Rng + ?Sized>(n: usize, rate: f64, rng: &mut R) -> Vec<f64> {
    if rate == 0.0 {
        return vec![1.0; n];
    }
    let keep = 1.0 / (1.0 - rate);
    (0..n)
        .map(|_| if rng.gen::<f64>() < rate { 0.0 } else { keep })
        .collect()
}

pub(crate) fn matrix_dims(x: &Tensor) -> Result<(usize, usize), NetError> {
    match *x.shape() {
        [rows, cols] => Ok((rows, cols)),
        _ => Err(NetError::Shape(format!("expected a matrix, got shape {:?}", x.shape()))),
    }
}
