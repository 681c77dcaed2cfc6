//! A small neural-network engine with hand-written backward passes.
//!
//! A [`Network`] is a chain of [`LayerSpec`]s, each owning zero or more
//! parameter tensors, ending in logits that feed a softmax + cross-entropy
//! loss. Forward passes record a [`Trace`]; [`Network::backward`] walks it in
//! reverse and accumulates into a [`NetworkParams`]-shaped gradient buffer.
//!
//! Parameter layouts:
//!
//! | layer            | tensors                                   |
//! |------------------|-------------------------------------------|
//! | embedding lookup | table `rows × dim`                        |
//! | dense            | weights `units × inputs`, bias `units`    |
//! | conv1d           | filters `F × width × C`, bias `F`         |
//! | lstm             | `W 4H × I`, `U 4H × H`, bias `4H`         |
//!
//! Dense layers flatten whatever they receive, so a dense layer after the
//! last pooling stage of a CNN sees `L'·F` inputs.

mod ops;

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use ops::{
    conv1d_forward, cross_entropy, dense_forward, dropout, lstm_step, maxpool1d, maxpool1d_with_argmax, softmax,
    Activation, LstmParams, Mode, PROBABILITY_FLOOR,
};

use crate::binio;
use crate::tensor::{axpy, ShapeError, Tensor};
use ops::{dropout_mask, lstm_step_full, matrix_dims};

#[derive(Debug, thiserror::Error)]
pub enum NetError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid layer spec: {0}")]
    InvalidSpec(String),
    #[error("gold label {gold} out of range for {classes} classes")]
    LabelOutOfRange { gold: usize, classes: usize },
    #[error("token id {id} out of range for an embedding table of {rows} rows")]
    TokenOutOfRange { id: usize, rows: usize },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

impl From<ShapeError> for NetError {
    fn from(e: ShapeError) -> Self {
        NetError::Shape(e.to_string())
    }
}

/// One layer of a network and its hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerSpec {
    /// Maps token ids to rows of a table. Rows in `pinned` are never updated.
    EmbeddingLookup {
        rows: usize,
        dim: usize,
        frozen: bool,
        pinned: Vec<usize>,
    },
    Dense {
        inputs: usize,
        units: usize,
        activation: Activation,
    },
    Conv1d {
        channels: usize,
        filters: usize,
        width: usize,
        activation: Activation,
    },
    MaxPool1d {
        pool: usize,
    },
    /// Runs over the whole sequence and emits the final hidden state.
    Lstm {
        inputs: usize,
        hidden: usize,
    },
    Dropout {
        rate: f64,
    },
    /// Mean over the rows of an `L × d` input; zeros when `L = 0`.
    MeanReduce,
}

impl LayerSpec {
    pub fn validate(&self) -> Result<(), NetError> {
        let bad = |m: &str| Err(NetError::InvalidSpec(m.to_owned()));
        match *self {
            LayerSpec::EmbeddingLookup {
                rows, dim, ref pinned, ..
            } => {
                if rows == 0 || dim == 0 {
                    return bad("embedding rows and dim must be at least 1");
                }
                if pinned.iter().any(|&r| r >= rows) {
                    return bad("pinned embedding row out of range");
                }
            }
            LayerSpec::Dense { inputs, units, .. } if inputs == 0 || units == 0 => {
                return bad("dense inputs and units must be at least 1")
            }
            LayerSpec::Conv1d {
                channels,
                filters,
                width,
                ..
            } => {
                if channels == 0 || filters == 0 || width == 0 {
                    return bad("conv channels, filters and width must be at least 1");
                }
                if width % 2 == 0 {
                    return bad("conv width must be odd for same padding");
                }
            }
            LayerSpec::MaxPool1d { pool: 0 } => return bad("pool size must be at least 1"),
            LayerSpec::Lstm { inputs, hidden } if inputs == 0 || hidden == 0 => {
                return bad("lstm inputs and hidden units must be at least 1")
            }
            LayerSpec::Dropout { rate } if !(0.0..1.0).contains(&rate) => return bad("dropout rate must be in [0, 1)"),
            _ => {}
        }
        Ok(())
    }

    fn param_shapes(&self) -> Vec<Vec<usize>> {
        match *self {
            LayerSpec::EmbeddingLookup { rows, dim, .. } => vec![vec![rows, dim]],
            LayerSpec::Dense { inputs, units, .. } => vec![vec![units, inputs], vec![units]],
            LayerSpec::Conv1d {
                channels,
                filters,
                width,
                ..
            } => vec![vec![filters, width, channels], vec![filters]],
            LayerSpec::Lstm { inputs, hidden } => {
                vec![vec![4 * hidden, inputs], vec![4 * hidden, hidden], vec![4 * hidden]]
            }
            LayerSpec::MaxPool1d { .. } | LayerSpec::Dropout { .. } | LayerSpec::MeanReduce => vec![],
        }
    }

    fn trainable(&self) -> bool {
        match self {
            LayerSpec::EmbeddingLookup { frozen, .. } => !frozen,
            _ => !self.param_shapes().is_empty(),
        }
    }

    /// Fresh parameters: Glorot-uniform weights and zero biases for dense and
    /// conv layers; LSTM weights uniform in ±0.08 with forget bias 1; an
    /// all-zero embedding table.
    fn init_params<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<Tensor> {
        match *self {
            LayerSpec::EmbeddingLookup { rows, dim, .. } => vec![Tensor::zeros(&[rows, dim])],
            LayerSpec::Dense { inputs, units, .. } => {
                let limit = (6.0 / (inputs + units) as f64).sqrt();
                vec![Tensor::uniform(&[units, inputs], limit, rng), Tensor::zeros(&[units])]
            }
            LayerSpec::Conv1d {
                channels,
                filters,
                width,
                ..
            } => {
                let limit = (6.0 / ((channels + filters) * width) as f64).sqrt();
                vec![
                    Tensor::uniform(&[filters, width, channels], limit, rng),
                    Tensor::zeros(&[filters]),
                ]
            }
            LayerSpec::Lstm { inputs, hidden } => {
                let w = Tensor::uniform(&[4 * hidden, inputs], 0.08, rng);
                let u = Tensor::uniform(&[4 * hidden, hidden], 0.08, rng);
                let mut b = Tensor::zeros(&[4 * hidden]);
                b.data_mut()[hidden..2 * hidden].fill(1.0);
                vec![w, u, b]
            }
            LayerSpec::MaxPool1d { .. } | LayerSpec::Dropout { .. } | LayerSpec::MeanReduce => vec![],
        }
    }
}

/// Per-layer parameter tensors, in layer order. Also used for gradients, where
/// a non-trainable layer has no tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    pub layers: Vec<Vec<Tensor>>,
}

impl NetworkParams {
    pub fn len(&self) -> usize {
        self.layers.iter().flatten().map(Tensor::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn fill(&mut self, value: f64) {
        self.layers.iter_mut().flatten().for_each(|t| t.fill(value));
    }
}

/// `p ← p − lr·g`, elementwise. Layers whose gradient entry is empty are left
/// untouched.
pub fn sgd_update(params: &mut NetworkParams, grads: &NetworkParams, lr: f64) -> Result<(), NetError> {
    if params.layers.len() != grads.layers.len() {
        return Err(NetError::Shape(format!(
            "{} parameter layers but {} gradient layers",
            params.layers.len(),
            grads.layers.len()
        )));
    }
    for (p, g) in params.layers.iter_mut().zip(&grads.layers) {
        if g.is_empty() {
            continue;
        }
        if p.len() != g.len() {
            return Err(NetError::Shape("gradient tensor count differs from parameters".into()));
        }
        for (pt, gt) in p.iter_mut().zip(g) {
            pt.add_scaled(gt, -lr)?;
        }
    }
    Ok(())
}

/// Network input: token ids for networks that start with an embedding
/// lookup, or a dense tensor otherwise.
#[derive(Debug, Clone, Copy)]
pub enum Input<'a> {
    Ids(&'a [usize]),
    Values(&'a Tensor),
}

enum Cache {
    None,
    Ids(Vec<usize>),
    PoolArgmax(Vec<usize>),
    Lstm(LstmCache),
    DropoutMask(Option<Vec<f64>>),
}

struct LstmCache {
    /// `h_0 = 0`, then one state per step.
    hs: Vec<Vec<f64>>,
    cs: Vec<Vec<f64>>,
    gates: Vec<Vec<f64>>,
}

/// Everything a forward pass recorded for the backward pass.
pub struct Trace {
    /// `values[i]` is the input of layer `i`; the last entry is the logits.
    values: Vec<Tensor>,
    caches: Vec<Cache>,
    probabilities: Vec<f64>,
}

impl Trace {
    pub fn logits(&self) -> &[f64] {
        self.values.last().expect("trace holds the logits").data()
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }
}

/// A chain of layers with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    specs: Vec<LayerSpec>,
    pub params: NetworkParams,
}

impl Network {
    /// Validates the chain and initializes parameters.
    pub fn new<R: Rng + ?Sized>(specs: Vec<LayerSpec>, rng: &mut R) -> Result<Self, NetError> {
        for s in &specs {
            s.validate()?;
        }
        let layers = specs.iter().map(|s| s.init_params(rng)).collect();
        Ok(Network {
            specs,
            params: NetworkParams { layers },
        })
    }

    /// Assembles a network from existing parameters, checking every shape.
    pub fn from_parts(specs: Vec<LayerSpec>, params: NetworkParams) -> Result<Self, NetError> {
        if specs.len() != params.layers.len() {
            return Err(NetError::Shape(format!(
                "{} layer specs but {} parameter groups",
                specs.len(),
                params.layers.len()
            )));
        }
        for (spec, tensors) in specs.iter().zip(&params.layers) {
            spec.validate()?;
            let expected = spec.param_shapes();
            let actual: Vec<Vec<usize>> = tensors.iter().map(|t| t.shape().to_vec()).collect();
            if expected != actual {
                return Err(NetError::Shape(format!(
                    "{spec:?} expects parameter shapes {expected:?}, got {actual:?}"
                )));
            }
        }
        Ok(Network { specs, params })
    }

    pub fn specs(&self) -> &[LayerSpec] {
        &self.specs
    }

    /// A zeroed gradient buffer: one tensor per trainable parameter, none for
    /// frozen or parameter-free layers.
    pub fn zero_gradients(&self) -> NetworkParams {
        NetworkParams {
            layers: self
                .specs
                .iter()
                .zip(&self.params.layers)
                .map(|(spec, ps)| {
                    if spec.trainable() {
                        ps.iter().map(|p| Tensor::zeros(p.shape())).collect()
                    } else {
                        Vec::new()
                    }
                })
                .collect(),
        }
    }

    pub fn forward<R: Rng + ?Sized>(&self, input: Input<'_>, mode: Mode<'_, R>) -> Result<Trace, NetError> {
        let mut rng = match mode {
            Mode::Train(rng) => Some(rng),
            Mode::Eval => None,
        };
        let mut values = Vec::with_capacity(self.specs.len() + 1);
        let mut caches = Vec::with_capacity(self.specs.len());

        let mut current = match input {
            Input::Values(t) => t.clone(),
            Input::Ids(ids) => match self.specs.first() {
                Some(LayerSpec::EmbeddingLookup { .. }) => Tensor::vector(ids.iter().map(|&i| i as f64).collect()),
                _ => {
                    return Err(NetError::Shape(
                        "token ids given to a network without an embedding layer".into(),
                    ))
                }
            },
        };

        for (i, spec) in self.specs.iter().enumerate() {
            let params = &self.params.layers[i];
            let (out, cache) = match *spec {
                LayerSpec::EmbeddingLookup { rows, dim, .. } => {
                    let Input::Ids(ids) = input else {
                        return Err(NetError::Shape("embedding layer needs token ids".into()));
                    };
                    if i != 0 {
                        return Err(NetError::InvalidSpec("embedding lookup must be the first layer".into()));
                    }
                    let table = &params[0];
                    let mut out = Tensor::zeros(&[ids.len(), dim]);
                    for (t, &id) in ids.iter().enumerate() {
                        if id >= rows {
                            return Err(NetError::TokenOutOfRange { id, rows });
                        }
                        out.row_mut(t).copy_from_slice(table.row(id));
                    }
                    (out, Cache::Ids(ids.to_vec()))
                }
                LayerSpec::Dense { units, activation, .. } => {
                    let y = dense_forward(current.data(), &params[0], params[1].data(), activation)?;
                    debug_assert_eq!(y.len(), units);
                    (Tensor::vector(y), Cache::None)
                }
                LayerSpec::Conv1d { activation, .. } => (
                    conv1d_forward(&current, &params[0], params[1].data(), activation)?,
                    Cache::None,
                ),
                LayerSpec::MaxPool1d { pool } => {
                    let (out, argmax) = maxpool1d_with_argmax(&current, pool)?;
                    (out, Cache::PoolArgmax(argmax))
                }
                LayerSpec::Lstm { inputs, hidden } => {
                    let (len, width) = matrix_dims(&current)?;
                    if width != inputs {
                        return Err(NetError::Shape(format!(
                            "lstm expects {inputs} inputs per step, got {width}"
                        )));
                    }
                    let (w, u, b) = (params[0].data(), params[1].data(), params[2].data());
                    let mut cache = LstmCache {
                        hs: vec![vec![0.0; hidden]],
                        cs: vec![vec![0.0; hidden]],
                        gates: Vec::with_capacity(len),
                    };
                    for t in 0..len {
                        let step = lstm_step_full(current.row(t), &cache.hs[t], &cache.cs[t], w, u, b);
                        cache.hs.push(step.h);
                        cache.cs.push(step.c);
                        cache.gates.push(step.gates);
                    }
                    let out = Tensor::vector(cache.hs[len].clone());
                    (out, Cache::Lstm(cache))
                }
                LayerSpec::Dropout { rate } => match rng.as_deref_mut() {
                    Some(r) => {
                        let mask = dropout_mask(current.len(), rate, r);
                        let mut out = current.clone();
                        out.data_mut().iter_mut().zip(&mask).for_each(|(x, m)| *x *= m);
                        (out, Cache::DropoutMask(Some(mask)))
                    }
                    None => (current.clone(), Cache::DropoutMask(None)),
                },
                LayerSpec::MeanReduce => {
                    let (len, dim) = matrix_dims(&current)?;
                    let mut mean = vec![0.0; dim];
                    if len > 0 {
                        for t in 0..len {
                            axpy(1.0, current.row(t), &mut mean);
                        }
                        let inv = 1.0 / len as f64;
                        mean.iter_mut().for_each(|m| *m *= inv);
                    }
                    (Tensor::vector(mean), Cache::None)
                }
            };
            values.push(std::mem::replace(&mut current, out));
            caches.push(cache);
        }
        let probabilities = softmax(current.data());
        values.push(current);
        Ok(Trace {
            values,
            caches,
            probabilities,
        })
    }

    /// Class probabilities with dropout disabled.
    pub fn predict_proba(&self, input: Input<'_>) -> Result<Vec<f64>, NetError> {
        let trace = self.forward::<crate::seeding::Rng>(input, Mode::Eval)?;
        Ok(trace.probabilities)
    }

    /// Cross-entropy of a recorded pass against `gold`.
    pub fn loss(trace: &Trace, gold: usize) -> Result<f64, NetError> {
        cross_entropy(&trace.probabilities, gold)
    }

    /// Back-propagates the softmax cross-entropy loss of `trace` against
    /// `gold`, adding `scale ×` every parameter gradient into `grads`.
    /// Returns the loss.
    pub fn backward(&self, trace: &Trace, gold: usize, grads: &mut NetworkParams, scale: f64) -> Result<f64, NetError> {
        let loss = cross_entropy(&trace.probabilities, gold)?;
        let mut delta: Vec<f64> = trace.probabilities.clone();
        delta[gold] -= 1.0;

        for i in (0..self.specs.len()).rev() {
            let input = &trace.values[i];
            let output = &trace.values[i + 1];
            let params = &self.params.layers[i];
            let grad = &mut grads.layers[i];
            let need_input_grad = i > 0;
            delta = match (&self.specs[i], &trace.caches[i]) {
                (LayerSpec::EmbeddingLookup { frozen, pinned, .. }, Cache::Ids(ids)) => {
                    if !frozen {
                        let table = &mut grad[0];
                        let dim = table.row_len();
                        for (t, &id) in ids.iter().enumerate() {
                            if !pinned.contains(&id) {
                                axpy(scale, &delta[t * dim..(t + 1) * dim], table.row_mut(id));
                            }
                        }
                    }
                    Vec::new()
                }
                (LayerSpec::Dense { inputs, activation, .. }, _) => {
                    let x = input.data();
                    let dz: Vec<f64> = delta
                        .iter()
                        .zip(output.data())
                        .map(|(d, &y)| d * activation.derivative_from_output(y))
                        .collect();
                    if let [gw, gb] = grad.as_mut_slice() {
                        for (o, &dzo) in dz.iter().enumerate() {
                            if dzo != 0.0 {
                                axpy(scale * dzo, x, gw.row_mut(o));
                            }
                        }
                        axpy(scale, &dz, gb.data_mut());
                    }
                    let mut dx = vec![0.0; *inputs];
                    if need_input_grad {
                        for (o, &dzo) in dz.iter().enumerate() {
                            if dzo != 0.0 {
                                axpy(dzo, params[0].row(o), &mut dx);
                            }
                        }
                    }
                    dx
                }
                (
                    LayerSpec::Conv1d {
                        channels,
                        filters,
                        width,
                        activation,
                    },
                    _,
                ) => conv1d_backward(
                    input,
                    output,
                    &delta,
                    &params[0],
                    grad,
                    scale,
                    (*channels, *filters, *width),
                    *activation,
                    need_input_grad,
                ),
                (LayerSpec::MaxPool1d { .. }, Cache::PoolArgmax(argmax)) => {
                    let features = input.row_len();
                    let mut dx = vec![0.0; input.len()];
                    for (cell, &src) in argmax.iter().enumerate() {
                        dx[src * features + cell % features] += delta[cell];
                    }
                    dx
                }
                (LayerSpec::Lstm { inputs, hidden }, Cache::Lstm(cache)) => lstm_backward(
                    input,
                    &delta,
                    params,
                    grad,
                    cache,
                    scale,
                    *inputs,
                    *hidden,
                    need_input_grad,
                ),
                (LayerSpec::Dropout { .. }, Cache::DropoutMask(mask)) => match mask {
                    Some(m) => delta.iter().zip(m).map(|(d, m)| d * m).collect(),
                    None => delta,
                },
                (LayerSpec::MeanReduce, _) => {
                    let (len, dim) = matrix_dims(input)?;
                    let mut dx = vec![0.0; len * dim];
                    if len > 0 {
                        let inv = 1.0 / len as f64;
                        for t in 0..len {
                            axpy(inv, &delta, &mut dx[t * dim..(t + 1) * dim]);
                        }
                    }
                    dx
                }
                _ => unreachable!("cache kind always matches its layer"),
            };
        }
        Ok(loss)
    }

    /// Loss and full parameter gradients for one example, dropout disabled.
    pub fn loss_and_gradients(&self, input: Input<'_>, gold: usize) -> Result<(f64, NetworkParams), NetError> {
        let trace = self.forward::<crate::seeding::Rng>(input, Mode::Eval)?;
        let mut grads = self.zero_gradients();
        let loss = self.backward(&trace, gold, &mut grads, 1.0)?;
        Ok((loss, grads))
    }

    /// Applies `grads` with plain SGD, skipping frozen layers and keeping
    /// pinned embedding rows fixed.
    pub fn apply_gradients(&mut self, grads: &NetworkParams, lr: f64) -> Result<(), NetError> {
        sgd_update(&mut self.params, grads, lr)
    }
}

#[allow(clippy::too_many_arguments)]
fn conv1d_backward(
    input: &Tensor,
    output: &Tensor,
    delta: &[f64],
    filters: &Tensor,
    grad: &mut [Tensor],
    scale: f64,
    (channels, n_filters, width): (usize, usize, usize),
    activation: Activation,
    need_input_grad: bool,
) -> Vec<f64> {
    let len = input.rows();
    let pad = width / 2;
    let dz: Vec<f64> = delta
        .iter()
        .zip(output.data())
        .map(|(d, &y)| d * activation.derivative_from_output(y))
        .collect();
    let w = filters.data();
    let mut dx = vec![0.0; input.len()];
    let (gw, gb) = match grad {
        [gw, gb] => (Some(gw), Some(gb)),
        _ => (None, None),
    };
    let mut gw = gw.map(|t| t.data_mut());
    if let Some(gb) = gb {
        for t in 0..len {
            axpy(scale, &dz[t * n_filters..(t + 1) * n_filters], gb.data_mut());
        }
    }
    for t in 0..len {
        let dzt = &dz[t * n_filters..(t + 1) * n_filters];
        for k in 0..width {
            let Some(src) = (t + k).checked_sub(pad).filter(|&s| s < len) else {
                continue;
            };
            let xs = input.row(src);
            for (f, &d) in dzt.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                let base = (f * width + k) * channels;
                if let Some(gw) = gw.as_deref_mut() {
                    axpy(scale * d, xs, &mut gw[base..base + channels]);
                }
                if need_input_grad {
                    axpy(
                        d,
                        &w[base..base + channels],
                        &mut dx[src * channels..(src + 1) * channels],
                    );
                }
            }
        }
    }
    dx
}

#[allow(clippy::too_many_arguments)]
fn lstm_backward(
    input: &Tensor,
    delta: &[f64],
    params: &[Tensor],
    grad: &mut [Tensor],
    cache: &LstmCache,
    scale: f64,
    inputs: usize,
    hidden: usize,
    need_input_grad: bool,
) -> Vec<f64> {
    let len = cache.gates.len();
    let (w, u) = (params[0].data(), params[1].data());
    let mut dx = vec![0.0; len * inputs];
    let mut dh = delta.to_vec();
    let mut dc = vec![0.0; hidden];
    let mut dz = vec![0.0; 4 * hidden];
    for t in (0..len).rev() {
        let gates = &cache.gates[t];
        let c = &cache.cs[t + 1];
        let c_prev = &cache.cs[t];
        let h_prev = &cache.hs[t];
        for j in 0..hidden {
            let (i, f, g, o) = (
                gates[j],
                gates[hidden + j],
                gates[2 * hidden + j],
                gates[3 * hidden + j],
            );
            let tc = c[j].tanh();
            let d_o = dh[j] * tc;
            dc[j] += dh[j] * o * (1.0 - tc * tc);
            dz[j] = dc[j] * g * i * (1.0 - i);
            dz[hidden + j] = dc[j] * c_prev[j] * f * (1.0 - f);
            dz[2 * hidden + j] = dc[j] * i * (1.0 - g * g);
            dz[3 * hidden + j] = d_o * o * (1.0 - o);
            dc[j] *= f;
        }
        let x = input.row(t);
        if let [gw, gu, gb] = grad {
            for (r, &d) in dz.iter().enumerate() {
                if d != 0.0 {
                    axpy(scale * d, x, gw.row_mut(r));
                    axpy(scale * d, h_prev, gu.row_mut(r));
                }
            }
            axpy(scale, &dz, gb.data_mut());
        }
        if need_input_grad {
            let dxt = &mut dx[t * inputs..(t + 1) * inputs];
            for (r, &d) in dz.iter().enumerate() {
                if d != 0.0 {
                    axpy(d, &w[r * inputs..(r + 1) * inputs], dxt);
                }
            }
        }
        for (j, dhj) in dh.iter_mut().enumerate() {
            *dhj = (0..4 * hidden).map(|r| u[r * hidden + j] * dz[r]).sum();
        }
    }
    dx
}

const CHECKPOINT_MAGIC: &[u8] = b"RMNET1";

/// Writes a `RMNET1` container: magic, a caller-supplied metadata string, the
/// layer chain as JSON, then every parameter tensor (shape, then values).
pub fn save_checkpoint(path: &Path, network: &Network, metadata: &str) -> Result<(), NetError> {
    let io = |source| NetError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    write_checkpoint(&mut w, network, metadata).map_err(io)?;
    w.flush().map_err(io)
}

fn write_checkpoint<W: Write>(w: &mut W, network: &Network, metadata: &str) -> std::io::Result<()> {
    w.write_all(CHECKPOINT_MAGIC)?;
    binio::write_str(w, metadata)?;
    binio::write_str(
        w,
        &serde_json::to_string(&network.specs).expect("layer specs serialize"),
    )?;
    for tensors in &network.params.layers {
        binio::write_u64(w, tensors.len() as u64)?;
        for t in tensors {
            binio::write_u64(w, t.shape().len() as u64)?;
            for &d in t.shape() {
                binio::write_u64(w, d as u64)?;
            }
            binio::write_f64s(w, t.data())?;
        }
    }
    Ok(())
}

/// Reads a `RMNET1` container, returning the network and its metadata string.
pub fn load_checkpoint(path: &Path) -> Result<(Network, String), NetError> {
    let file = File::open(path).map_err(|source| NetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_checkpoint(&mut BufReader::new(file))
}

fn read_checkpoint<R: Read>(r: &mut R) -> Result<(Network, String), NetError> {
    let ck = |e: std::io::Error| NetError::Checkpoint(e.to_string());
    binio::expect_magic(r, CHECKPOINT_MAGIC).map_err(ck)?;
    let metadata = binio::read_str(r).map_err(ck)?;
    let specs: Vec<LayerSpec> =
        serde_json::from_str(&binio::read_str(r).map_err(ck)?).map_err(|e| NetError::Checkpoint(e.to_string()))?;
    let mut layers = Vec::with_capacity(specs.len());
    for _ in &specs {
        let n = binio::read_len(r, 16).map_err(ck)?;
        let mut tensors = Vec::with_capacity(n);
        for _ in 0..n {
            let rank = binio::read_len(r, 8).map_err(ck)?;
            let shape = (0..rank)
                .map(|_| binio::read_len(r, 1 << 32))
                .collect::<std::io::Result<Vec<usize>>>()
                .map_err(ck)?;
            let data = binio::read_f64s(r, shape.iter().product()).map_err(ck)?;
            tensors.push(Tensor::from_vec(&shape, data)?);
        }
        layers.push(tensors);
    }
    let network = Network::from_parts(specs, NetworkParams { layers })?;
    Ok((network, metadata))
}
