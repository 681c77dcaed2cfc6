//! Skip-gram word vectors trained with negative sampling.
//!
//! Every vocabulary word owns two vectors: a center vector `v` used when the
//! word sits in the middle of a context window, and an outer vector `u` used
//! when it is the predicted neighbor. For a center word `c`, a true outer word
//! `o` and `k` noise words drawn from the unigram distribution, the per-pair
//! loss is
//!
//! ```text
//! loss = -log σ(u_o·v_c) - Σ_i log σ(-u_i·v_c)
//! ```
//!
//! and training runs plain SGD on it, one pair at a time. Exported vectors are
//! the center vectors.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::binio;
use crate::corpus::{smoothed_unigram_distribution, Sentence, Vocabulary};
use crate::seeding;
use crate::tensor::{axpy, dot, Tensor};

#[derive(Debug, thiserror::Error)]
pub enum EmbeddingError {
    #[error("invalid embedding config: {0}")]
    InvalidConfig(String),
    #[error("vocabulary is empty")]
    EmptyVocabulary,
    #[error("corpus yields no (center, outer) pairs")]
    NoTrainingPairs,
    #[error("cosine similarity is undefined for a zero vector")]
    ZeroVector,
    #[error("vector lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("token {0:?} is not in the vocabulary")]
    UnknownToken(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("duplicate token {0:?}")]
    DuplicateToken(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("training diverged in epoch {epoch} (non-finite loss); lower the learning rate or use batch_mean updates")]
    Diverged { epoch: usize },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> EmbeddingError + '_ {
    move |source| EmbeddingError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Skip-gram hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingConfig {
    /// Context half-width m.
    pub window: usize,
    pub dim: usize,
    /// Noise words per pair.
    pub negatives: usize,
    /// Pairs per loss-trace point.
    pub batch: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Exponent applied to counts in the noise distribution; 1 is the raw unigram.
    pub noise_power: f64,
    #[serde(default)]
    pub update: UpdateMode,
}

/// How gradients from a batch of pairs are applied.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateMode {
    /// One SGD step per pair, in order; the batch only groups the loss trace.
    Pair,
    /// One step per batch along the mean of its pair gradients, all taken at
    /// the batch-start parameters.
    #[default]
    BatchMean,
}

impl UpdateMode {
    pub fn as_str(self) -> &'static str {
        match self {
            UpdateMode::Pair => "pair",
            UpdateMode::BatchMean => "batch_mean",
        }
    }
}

impl std::fmt::Display for UpdateMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for UpdateMode {
    type Err = EmbeddingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pair" => Ok(UpdateMode::Pair),
            "batch_mean" => Ok(UpdateMode::BatchMean),
            _ => Err(EmbeddingError::InvalidConfig(format!("unknown update mode {s:?}"))),
        }
    }
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        EmbeddingConfig {
            window: 3,
            dim: 300,
            negatives: 64,
            batch: 128,
            learning_rate: 1.0,
            epochs: 15,
            seed: 0,
            noise_power: 1.0,
            update: UpdateMode::BatchMean,
        }
    }
}

impl EmbeddingConfig {
    pub fn validate(&self) -> Result<(), EmbeddingError> {
        let bad = |what: &str| Err(EmbeddingError::InvalidConfig(what.to_owned()));
        if self.window == 0 {
            return bad("window must be at least 1");
        }
        if self.dim == 0 {
            return bad("dim must be at least 1");
        }
        if self.negatives == 0 {
            return bad("negatives must be at least 1");
        }
        if self.batch == 0 {
            return bad("batch must be at least 1");
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be finite and non-negative");
        }
        if !(self.noise_power > 0.0 && self.noise_power.is_finite()) {
            return bad("noise_power must be positive");
        }
        Ok(())
    }
}

/// Both parameter matrices of a skip-gram model, each `V × d`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    pub vocab: Vocabulary,
    /// Outer (target) vectors `u_i`.
    pub outer: Tensor,
    /// Center vectors `v_i`.
    pub center: Tensor,
    pub config: EmbeddingConfig,
}

/// Mean loss per trace interval and per epoch.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LossTrace {
    /// `(pairs processed so far, mean loss over the interval)`.
    pub points: Vec<(u64, f64)>,
    pub epoch_means: Vec<f64>,
}

impl LossTrace {
    /// CSV with header `step,mean_loss`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,mean_loss\n");
        for (step, loss) in &self.points {
            out.push_str(&format!("{step},{loss}\n"));
        }
        out
    }
}

/// Fresh model with every entry of both matrices uniform in `[-1, 1]`.
pub fn init_model(vocab: Vocabulary, config: EmbeddingConfig) -> Result<EmbeddingModel, EmbeddingError> {
    config.validate()?;
    if vocab.is_empty() {
        return Err(EmbeddingError::EmptyVocabulary);
    }
    let mut rng = seeding::substream(config.seed, "embedding-init");
    let shape = [vocab.len(), config.dim];
    let center = Tensor::uniform(&shape, 1.0, &mut rng);
    let outer = Tensor::uniform(&shape, 1.0, &mut rng);
    Ok(EmbeddingModel {
        vocab,
        outer,
        center,
        config,
    })
}

/// One `(center, outer)` pair per in-vocabulary position, with the outer word
/// drawn uniformly from the in-vocabulary tokens within `window` positions on
/// either side in the same sentence.
pub fn generate_pairs<R: Rng + ?Sized>(
    sentences: &[Sentence],
    vocab: &Vocabulary,
    window: usize,
    rng: &mut R,
) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    let mut neighbors = Vec::with_capacity(2 * window);
    for sentence in sentences {
        let ids: Vec<Option<usize>> = sentence.tokens.iter().map(|t| vocab.id(t)).collect();
        for (i, center) in ids.iter().enumerate() {
            let Some(center) = *center else { continue };
            neighbors.clear();
            let lo = i.saturating_sub(window);
            let hi = (i + window).min(ids.len() - 1);
            neighbors.extend((lo..=hi).filter(|&j| j != i).filter_map(|j| ids[j]));
            if neighbors.is_empty() {
                continue;
            }
            pairs.push((center, neighbors[rng.gen_range(0..neighbors.len())]));
        }
    }
    pairs
}

/// Draws noise words from the (optionally smoothed) unigram distribution.
#[derive(Debug, Clone)]
pub struct NegativeSampler {
    dist: WeightedIndex<f64>,
}

impl NegativeSampler {
    pub fn new(vocab: &Vocabulary, power: f64) -> Self {
        let probs = smoothed_unigram_distribution(vocab, power);
        NegativeSampler {
            dist: WeightedIndex::new(probs).expect("vocabulary counts are positive"),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.dist.sample(rng)
    }

    pub fn sample_into<R: Rng + ?Sized>(&self, k: usize, rng: &mut R, out: &mut Vec<usize>) {
        out.clear();
        out.extend((0..k).map(|_| self.dist.sample(rng)));
    }
}

/// `1 / (1 + e^-x)`, evaluated without overflow for any finite `x`.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log σ(x)` without cancellation at large `|x|`.
pub fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

/// Negative-sampling loss of one pair: `-log σ(u_o·v_c) - Σ log σ(-u_i·v_c)`.
pub fn nce_loss(center: usize, outer: usize, negatives: &[usize], model: &EmbeddingModel) -> f64 {
    let v = model.center.row(center);
    let mut loss = -log_sigmoid(dot(model.outer.row(outer), v));
    for &n in negatives {
        loss -= log_sigmoid(-dot(model.outer.row(n), v));
    }
    loss
}

/// Gradients of [`nce_loss`] with respect to the vectors it touches.
#[derive(Debug, Clone, PartialEq)]
pub struct NceGradients {
    pub center_id: usize,
    /// ∂loss/∂v_c
    pub center: Vec<f64>,
    /// ∂loss/∂u for the outer word first, then each negative in draw order.
    /// A word drawn twice appears twice; see [`NceGradients::outer_rows`].
    pub outer: Vec<(usize, Vec<f64>)>,
}

impl NceGradients {
    /// Outer-vector gradients summed per row.
    pub fn outer_rows(&self) -> BTreeMap<usize, Vec<f64>> {
        let mut rows: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        for (id, g) in &self.outer {
            match rows.get_mut(id) {
                Some(acc) => axpy(1.0, g, acc),
                None => {
                    rows.insert(*id, g.clone());
                }
            }
        }
        rows
    }
}

/// ∂loss/∂v_c = (σ(u_o·v_c) − 1)·u_o + Σ σ(u_i·v_c)·u_i,
/// ∂loss/∂u_o = (σ(u_o·v_c) − 1)·v_c, ∂loss/∂u_i = σ(u_i·v_c)·v_c.
pub fn nce_gradients(center: usize, outer: usize, negatives: &[usize], model: &EmbeddingModel) -> NceGradients {
    let v = model.center.row(center);
    let mut grad_center = vec![0.0; v.len()];
    let mut grads = Vec::with_capacity(negatives.len() + 1);
    let targets = std::iter::once((outer, 1.0)).chain(negatives.iter().map(|&n| (n, 0.0)));
    for (id, label) in targets {
        let u = model.outer.row(id);
        let g = sigmoid(dot(u, v)) - label;
        axpy(g, u, &mut grad_center);
        grads.push((id, v.iter().map(|x| g * x).collect()));
    }
    NceGradients {
        center_id: center,
        center: grad_center,
        outer: grads,
    }
}

/// One SGD step on a single pair. Returns the loss before the update.
///
/// All gradients are taken at the current parameters before any of them is
/// applied, so repeated ids accumulate exactly as in [`nce_gradients`].
pub(crate) fn sgd_pair_step(
    model: &mut EmbeddingModel,
    center: usize,
    outer: usize,
    negatives: &[usize],
    lr: f64,
    scratch: &mut PairScratch,
) -> f64 {
    let d = model.config.dim;
    scratch.v.clear();
    scratch.v.extend_from_slice(model.center.row(center));
    scratch.grad_v.clear();
    scratch.grad_v.resize(d, 0.0);
    scratch.coeffs.clear();

    let mut loss = 0.0;
    let targets = std::iter::once((outer, 1.0)).chain(negatives.iter().map(|&n| (n, 0.0)));
    for (id, label) in targets {
        let u = model.outer.row(id);
        let score = dot(u, &scratch.v);
        loss -= if label > 0.0 {
            log_sigmoid(score)
        } else {
            log_sigmoid(-score)
        };
        let g = sigmoid(score) - label;
        axpy(g, u, &mut scratch.grad_v);
        scratch.coeffs.push((id, g));
    }
    for &(id, g) in &scratch.coeffs {
        axpy(-lr * g, &scratch.v, model.outer.row_mut(id));
    }
    axpy(-lr, &scratch.grad_v, model.center.row_mut(center));
    loss
}

#[derive(Default)]
pub(crate) struct PairScratch {
    v: Vec<f64>,
    grad_v: Vec<f64>,
    coeffs: Vec<(usize, f64)>,
}

/// Gradient sums over a batch, kept in dense `V × d` buffers that are reset
/// only on the rows a batch touched.
struct BatchAccumulator {
    grad_outer: Tensor,
    grad_center: Tensor,
    touched_outer: Vec<usize>,
    touched_center: Vec<usize>,
    seen_outer: Vec<bool>,
    seen_center: Vec<bool>,
}

impl BatchAccumulator {
    fn new(rows: usize, dim: usize) -> Self {
        BatchAccumulator {
            grad_outer: Tensor::zeros(&[rows, dim]),
            grad_center: Tensor::zeros(&[rows, dim]),
            touched_outer: Vec::new(),
            touched_center: Vec::new(),
            seen_outer: vec![false; rows],
            seen_center: vec![false; rows],
        }
    }

    /// Adds one pair's gradients, taken at the current parameters. Returns
    /// the pair's loss.
    fn add_pair(&mut self, model: &EmbeddingModel, center: usize, outer: usize, negatives: &[usize]) -> f64 {
        let v = model.center.row(center);
        if !std::mem::replace(&mut self.seen_center[center], true) {
            self.touched_center.push(center);
        }
        let mut loss = 0.0;
        let targets = std::iter::once((outer, true)).chain(negatives.iter().map(|&n| (n, false)));
        for (id, positive) in targets {
            let u = model.outer.row(id);
            let score = dot(u, v);
            loss -= if positive {
                log_sigmoid(score)
            } else {
                log_sigmoid(-score)
            };
            let g = sigmoid(score) - if positive { 1.0 } else { 0.0 };
            axpy(g, u, self.grad_center.row_mut(center));
            axpy(g, v, self.grad_outer.row_mut(id));
            if !std::mem::replace(&mut self.seen_outer[id], true) {
                self.touched_outer.push(id);
            }
        }
        loss
    }

    /// Applies `-scale ×` the sums and clears them.
    fn apply(&mut self, model: &mut EmbeddingModel, scale: f64) {
        for id in self.touched_outer.drain(..) {
            axpy(-scale, self.grad_outer.row(id), model.outer.row_mut(id));
            self.grad_outer.row_mut(id).fill(0.0);
            self.seen_outer[id] = false;
        }
        for id in self.touched_center.drain(..) {
            axpy(-scale, self.grad_center.row(id), model.center.row_mut(id));
            self.grad_center.row_mut(id).fill(0.0);
            self.seen_center[id] = false;
        }
    }
}

/// Trains a skip-gram model on `sentences`.
///
/// Each epoch draws a fresh outer word for every position and walks the
/// pairs in corpus order, drawing `k` fresh negatives per pair. With
/// [`UpdateMode::Pair`] every pair is one SGD step and `batch` only sets how
/// many pairs each trace point averages; with [`UpdateMode::BatchMean`] each
/// batch is one step along its mean gradient.
pub fn train_embeddings(
    sentences: &[Sentence],
    vocab: &Vocabulary,
    config: &EmbeddingConfig,
) -> Result<(EmbeddingModel, LossTrace), EmbeddingError> {
    let mut model = init_model(vocab.clone(), config.clone())?;
    let mut rng = seeding::substream(config.seed, seeding::EMBEDDING);
    let sampler = NegativeSampler::new(vocab, config.noise_power);
    let mut trace = LossTrace::default();
    let mut negatives = Vec::with_capacity(config.negatives);
    let mut scratch = PairScratch::default();
    let mut accumulator = match config.update {
        UpdateMode::Pair => None,
        UpdateMode::BatchMean => Some(BatchAccumulator::new(vocab.len(), config.dim)),
    };
    let mut step: u64 = 0;

    for epoch in 0..config.epochs {
        let pairs = generate_pairs(sentences, vocab, config.window, &mut rng);
        if pairs.is_empty() {
            return Err(EmbeddingError::NoTrainingPairs);
        }
        let mut epoch_loss = 0.0;
        for batch in pairs.chunks(config.batch) {
            let mut batch_loss = 0.0;
            for &(center, outer) in batch {
                sampler.sample_into(config.negatives, &mut rng, &mut negatives);
                batch_loss += match accumulator.as_mut() {
                    None => sgd_pair_step(
                        &mut model,
                        center,
                        outer,
                        &negatives,
                        config.learning_rate,
                        &mut scratch,
                    ),
                    Some(acc) => acc.add_pair(&model, center, outer, &negatives),
                };
            }
            if let Some(acc) = accumulator.as_mut() {
                acc.apply(&mut model, config.learning_rate / batch.len() as f64);
            }
            step += batch.len() as u64;
            epoch_loss += batch_loss;
            trace.points.push((step, batch_loss / batch.len() as f64));
        }
        let mean = epoch_loss / pairs.len() as f64;
        if !mean.is_finite() {
            return Err(EmbeddingError::Diverged { epoch: epoch + 1 });
        }
        log::info!("embedding epoch {}: mean loss {mean:.4}", epoch + 1);
        trace.epoch_means.push(mean);
    }
    Ok((model, trace))
}

/// Cosine of the angle between two vectors, clamped to `[-1, 1]`.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64, EmbeddingError> {
    if a.len() != b.len() {
        return Err(EmbeddingError::LengthMismatch(a.len(), b.len()));
    }
    let na = dot(a, a).sqrt();
    let nb = dot(b, b).sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(EmbeddingError::ZeroVector);
    }
    Ok((dot(a, b) / (na * nb)).clamp(-1.0, 1.0))
}

/// Token vectors for lookup and similarity queries.
#[derive(Debug, Clone, PartialEq)]
pub struct WordVectors {
    tokens: Vec<String>,
    ids: HashMap<String, usize>,
    vectors: Tensor,
}

impl WordVectors {
    /// Pairs `tokens[i]` with row `i` of the `n × d` matrix `vectors`.
    pub fn new(tokens: Vec<String>, vectors: Tensor) -> Result<Self, EmbeddingError> {
        if vectors.shape().len() != 2 || vectors.rows() != tokens.len() {
            return Err(EmbeddingError::Format {
                line: 0,
                message: format!("{} tokens for a matrix of shape {:?}", tokens.len(), vectors.shape()),
            });
        }
        let mut ids = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if ids.insert(t.clone(), i).is_some() {
                return Err(EmbeddingError::DuplicateToken(t.clone()));
            }
        }
        Ok(WordVectors { tokens, ids, vectors })
    }

    pub fn dim(&self) -> usize {
        self.vectors.shape()[1]
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn id(&self, token: &str) -> Option<usize> {
        self.ids.get(token).copied()
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.id(token).map(|i| self.vectors.row(i))
    }

    pub fn vector(&self, id: usize) -> &[f64] {
        self.vectors.row(id)
    }

    pub fn matrix(&self) -> &Tensor {
        &self.vectors
    }
}

impl EmbeddingModel {
    /// The center vectors, keyed by token.
    pub fn word_vectors(&self) -> WordVectors {
        WordVectors::new(self.vocab.tokens().to_vec(), self.center.clone()).expect("vocabulary tokens are unique")
    }
}

/// The `n` tokens most similar to `token`, excluding itself. Ties break by
/// token. Zero vectors score 0 against everything.
pub fn nearest_neighbors(vectors: &WordVectors, token: &str, n: usize) -> Result<Vec<(String, f64)>, EmbeddingError> {
    let query_id = vectors
        .id(token)
        .ok_or_else(|| EmbeddingError::UnknownToken(token.to_owned()))?;
    let query = vectors.vector(query_id);
    let mut scored: Vec<(String, f64)> = (0..vectors.len())
        .filter(|&i| i != query_id)
        .map(|i| {
            let sim = cosine_similarity(query, vectors.vector(i)).unwrap_or(0.0);
            (vectors.tokens[i].clone(), sim)
        })
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    scored.truncate(n);
    Ok(scored)
}

/// Writes `V d` followed by one `token x1 ... xd` line per word, every value
/// with 17 significant digits so that loading reproduces it bit for bit.
pub fn save_embeddings(vectors: &WordVectors, path: &Path) -> Result<(), EmbeddingError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    write_embeddings(vectors, &mut w).map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

fn write_embeddings<W: Write>(vectors: &WordVectors, w: &mut W) -> std::io::Result<()> {
    writeln!(w, "{} {}", vectors.len(), vectors.dim())?;
    for (i, token) in vectors.tokens.iter().enumerate() {
        w.write_all(token.as_bytes())?;
        for x in vectors.vector(i) {
            write!(w, " {x:.16e}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

pub fn load_embeddings(path: &Path) -> Result<WordVectors, EmbeddingError> {
    let file = File::open(path).map_err(io_err(path))?;
    read_embeddings(BufReader::new(file)).map_err(|e| match e {
        EmbeddingError::Io { source, .. } => EmbeddingError::Io {
            path: path.to_path_buf(),
            source,
        },
        other => other,
    })
}

pub fn read_embeddings<R: BufRead>(reader: R) -> Result<WordVectors, EmbeddingError> {
    let mut lines = reader.lines();
    let header = lines
        .next()
        .transpose()
        .map_err(io_err(Path::new("")))?
        .ok_or_else(|| EmbeddingError::Format {
            line: 1,
            message: "missing header".into(),
        })?;
    let malformed = || EmbeddingError::Format {
        line: 1,
        message: format!("malformed header {header:?}, expected \"V d\""),
    };
    let fields: Vec<&str> = header.split_whitespace().collect();
    let [rows, dim] = fields.as_slice() else {
        return Err(malformed());
    };
    let rows: usize = rows.parse().map_err(|_| malformed())?;
    let dim: usize = dim.parse().map_err(|_| malformed())?;

    let mut tokens = Vec::with_capacity(rows);
    let mut data = Vec::with_capacity(rows * dim);
    let mut seen = HashMap::with_capacity(rows);
    for (i, line) in lines.enumerate() {
        let line = line.map_err(io_err(Path::new("")))?;
        let line_no = i + 2;
        if line.trim().is_empty() {
            continue;
        }
        if tokens.len() == rows {
            return Err(EmbeddingError::Format {
                line: line_no,
                message: format!("more than the {rows} rows declared in the header"),
            });
        }
        let mut parts = line.split_whitespace();
        let token = parts.next().expect("line is not blank").to_owned();
        let start = data.len();
        for part in parts {
            let x: f64 = part.parse().map_err(|_| EmbeddingError::Format {
                line: line_no,
                message: format!("bad number {part:?}"),
            })?;
            data.push(x);
        }
        if data.len() - start != dim {
            return Err(EmbeddingError::Format {
                line: line_no,
                message: format!("expected {dim} values, found {}", data.len() - start),
            });
        }
        if seen.insert(token.clone(), tokens.len()).is_some() {
            return Err(EmbeddingError::DuplicateToken(token));
        }
        tokens.push(token);
    }
    if tokens.len() != rows {
        return Err(EmbeddingError::Format {
            line: tokens.len() + 2,
            message: format!("header declares {rows} rows, found {}", tokens.len()),
        });
    }
    let vectors = Tensor::from_vec(&[rows, dim], data).expect("row lengths checked");
    Ok(WordVectors {
        tokens,
        ids: seen,
        vectors,
    })
}

const CHECKPOINT_MAGIC: &[u8] = b"RMEMB1";

impl EmbeddingModel {
    /// Binary checkpoint holding the config, vocabulary counts and both matrices.
    ///
    /// Layout (little-endian): magic `RMEMB1`; window, dim, negatives, batch,
    /// epochs, seed as u64; learning_rate, noise_power as f64; update mode
    /// as u64 (0 pair, 1 batch mean); V as u64; V
    /// length-prefixed tokens each followed by its u64 count; then the outer
    /// and center matrices as length-prefixed f64 runs.
    pub fn save_checkpoint(&self, path: &Path) -> Result<(), EmbeddingError> {
        let file = File::create(path).map_err(io_err(path))?;
        let mut w = BufWriter::new(file);
        self.write_checkpoint(&mut w).map_err(io_err(path))?;
        w.flush().map_err(io_err(path))
    }

    fn write_checkpoint<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        let c = &self.config;
        w.write_all(CHECKPOINT_MAGIC)?;
        for v in [c.window, c.dim, c.negatives, c.batch, c.epochs] {
            binio::write_u64(w, v as u64)?;
        }
        binio::write_u64(w, c.seed)?;
        binio::write_f64(w, c.learning_rate)?;
        binio::write_f64(w, c.noise_power)?;
        binio::write_u64(w, c.update as u64)?;
        binio::write_u64(w, self.vocab.len() as u64)?;
        for (token, &count) in self.vocab.tokens().iter().zip(self.vocab.counts()) {
            binio::write_str(w, token)?;
            binio::write_u64(w, count)?;
        }
        binio::write_f64s(w, self.outer.data())?;
        binio::write_f64s(w, self.center.data())
    }

    pub fn load_checkpoint(path: &Path) -> Result<Self, EmbeddingError> {
        let file = File::open(path).map_err(io_err(path))?;
        Self::read_checkpoint(&mut BufReader::new(file)).map_err(|e| EmbeddingError::Checkpoint(e.to_string()))
    }

    fn read_checkpoint<R: std::io::Read>(r: &mut R) -> std::io::Result<Self> {
        binio::expect_magic(r, CHECKPOINT_MAGIC)?;
        let mut next = || binio::read_u64(r).map(|v| v as usize);
        let (window, dim, negatives, batch, epochs) = (next()?, next()?, next()?, next()?, next()?);
        let seed = binio::read_u64(r)?;
        let learning_rate = binio::read_f64(r)?;
        let noise_power = binio::read_f64(r)?;
        let update = match binio::read_u64(r)? {
            0 => UpdateMode::Pair,
            1 => UpdateMode::BatchMean,
            other => {
                return Err(std::io::Error::new(
                    std::io::ErrorKind::InvalidData,
                    format!("unknown update mode {other}"),
                ))
            }
        };
        let config = EmbeddingConfig {
            window,
            dim,
            negatives,
            batch,
            learning_rate,
            epochs,
            seed,
            noise_power,
            update,
        };
        let n = binio::read_len(r, 1 << 28)?;
        let mut counts = Vec::with_capacity(n);
        for _ in 0..n {
            let token = binio::read_str(r)?;
            counts.push((token, binio::read_u64(r)?));
        }
        let vocab = Vocabulary::from_counts(counts);
        let invalid = |m: String| std::io::Error::new(std::io::ErrorKind::InvalidData, m);
        if vocab.len() != n {
            return Err(invalid("duplicate tokens in checkpoint".into()));
        }
        let limit = n.saturating_mul(dim);
        let outer = Tensor::from_vec(&[n, dim], binio::read_f64s(r, limit)?).map_err(|e| invalid(e.to_string()))?;
        let center = Tensor::from_vec(&[n, dim], binio::read_f64s(r, limit)?).map_err(|e| invalid(e.to_string()))?;
        Ok(EmbeddingModel {
            vocab,
            outer,
            center,
            config,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_vocabulary, tokenize};
    use rand::SeedableRng;

    fn sentences(lines: &[&str]) -> Vec<Sentence> {
        lines.iter().map(|l| Sentence::from_tokens(tokenize(l))).collect()
    }

    fn small_config(dim: usize, k: usize) -> EmbeddingConfig {
        EmbeddingConfig {
            dim,
            negatives: k,
            epochs: 1,
            ..EmbeddingConfig::default()
        }
    }

    fn zero_model(words: &[&str], dim: usize) -> EmbeddingModel {
        let vocab = Vocabulary::from_counts(words.iter().map(|w| (w.to_string(), 1)));
        let shape = [vocab.len(), dim];
        EmbeddingModel {
            vocab,
            outer: Tensor::zeros(&shape),
            center: Tensor::zeros(&shape),
            config: small_config(dim, 2),
        }
    }

    #[test]
    fn init_is_seeded_and_in_range() {
        let vocab = build_vocabulary(&sentences(&["a b"]), 1).unwrap();
        let a = init_model(vocab.clone(), small_config(3, 1)).unwrap();
        let b = init_model(vocab, small_config(3, 1)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.center.shape(), &[2, 3]);
        assert_eq!(a.outer.shape(), &[2, 3]);
        assert!(a
            .center
            .data()
            .iter()
            .chain(a.outer.data())
            .all(|x| (-1.0..=1.0).contains(x)));
    }

    #[test]
    fn init_mean_is_near_zero() {
        let words: Vec<(String, u64)> = (0..1000).map(|i| (format!("w{i}"), 1)).collect();
        let model = init_model(Vocabulary::from_counts(words), small_config(300, 1)).unwrap();
        for m in [&model.center, &model.outer] {
            let mean = m.data().iter().sum::<f64>() / m.len() as f64;
            assert!(mean.abs() < 0.02, "mean {mean}");
        }
    }

    #[test]
    fn config_validation() {
        assert!(EmbeddingConfig::default().validate().is_ok());
        for bad in [
            EmbeddingConfig {
                window: 0,
                ..Default::default()
            },
            EmbeddingConfig {
                dim: 0,
                ..Default::default()
            },
            EmbeddingConfig {
                negatives: 0,
                ..Default::default()
            },
            EmbeddingConfig {
                batch: 0,
                ..Default::default()
            },
            EmbeddingConfig {
                epochs: 0,
                ..Default::default()
            },
            EmbeddingConfig {
                learning_rate: -1.0,
                ..Default::default()
            },
            EmbeddingConfig {
                learning_rate: f64::NAN,
                ..Default::default()
            },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }

    #[test]
    fn pairs_forced_cases() {
        let mut rng = seeding::Rng::seed_from_u64(1);
        let corpus = sentences(&["a"]);
        let vocab = build_vocabulary(&corpus, 1).unwrap();
        assert!(generate_pairs(&corpus, &vocab, 3, &mut rng).is_empty());

        let corpus = sentences(&["a b"]);
        let vocab = build_vocabulary(&corpus, 1).unwrap();
        let (a, b) = (vocab.id("a").unwrap(), vocab.id("b").unwrap());
        assert_eq!(generate_pairs(&corpus, &vocab, 3, &mut rng), [(a, b), (b, a)]);
    }

    #[test]
    fn pairs_skip_out_of_vocabulary_tokens() {
        let mut rng = seeding::Rng::seed_from_u64(1);
        let vocab = build_vocabulary(&sentences(&["a b"]), 1).unwrap();
        let pairs = generate_pairs(&sentences(&["a zzz b"]), &vocab, 1, &mut rng);
        // "a" and "b" are two apart, so with m=1 neither has an in-vocab neighbor.
        assert!(pairs.is_empty());
        let pairs = generate_pairs(&sentences(&["a zzz b"]), &vocab, 2, &mut rng);
        assert_eq!(pairs.len(), 2);
    }

    #[test]
    fn sigmoid_anchors() {
        assert_eq!(sigmoid(0.0), 0.5);
        for x in [-700.0, -37.0, -3.5, -1e-3, 0.2, 5.0, 37.0, 700.0] {
            assert!((sigmoid(x) + sigmoid(-x) - 1.0).abs() < 1e-15, "{x}");
            assert!(sigmoid(x).is_finite());
        }
        assert!((sigmoid(37.0) - (1.0 - sigmoid(-37.0))).abs() <= 1e-15);
        // σ(-37) = 8.53304762574406506615e-17 (mpmath, 50 digits)
        assert!((sigmoid(-37.0) / 8.533_047_625_744_065e-17 - 1.0).abs() < 1e-14);
        assert!((log_sigmoid(-700.0) + 700.0).abs() < 1e-12);
        assert_eq!(log_sigmoid(700.0), -(-700.0f64).exp());
    }

    #[test]
    fn zero_model_loss_is_k_plus_one_ln2() {
        let m = zero_model(&["a", "b", "c"], 4);
        let ln2 = std::f64::consts::LN_2;
        assert!((nce_loss(0, 1, &[1, 2], &m) - 3.0 * ln2).abs() < 1e-15);
        let negs = vec![2; 64];
        assert!((nce_loss(0, 1, &negs, &m) - 65.0 * ln2).abs() < 1e-12);
    }

    #[test]
    fn zero_model_center_gradient_vanishes() {
        let m = zero_model(&["a", "b", "c"], 4);
        let g = nce_gradients(0, 1, &[2, 2], &m);
        assert!(g.center.iter().all(|&x| x == 0.0));
        assert_eq!(g.outer.len(), 3);
    }

    #[test]
    fn untouched_rows_have_no_gradient() {
        let words: Vec<String> = (0..6).map(|i| format!("w{i}")).collect();
        let vocab = Vocabulary::from_counts(words.iter().map(|w| (w.clone(), 1)));
        let m = init_model(vocab, small_config(5, 2)).unwrap();
        let g = nce_gradients(0, 1, &[2, 3], &m);
        let rows = g.outer_rows();
        assert_eq!(rows.keys().copied().collect::<Vec<_>>(), [1, 2, 3]);
    }

    #[test]
    fn lr_zero_leaves_model_at_init() {
        let corpus = sentences(&["a b c a b", "c b a"]);
        let vocab = build_vocabulary(&corpus, 1).unwrap();
        let config = EmbeddingConfig {
            learning_rate: 0.0,
            ..small_config(4, 2)
        };
        let (trained, trace) = train_embeddings(&corpus, &vocab, &config).unwrap();
        let init = init_model(vocab, config).unwrap();
        assert_eq!(trained.center, init.center);
        assert_eq!(trained.outer, init.outer);
        assert!(!trace.points.is_empty());
    }

    #[test]
    fn training_without_pairs_fails() {
        let corpus = sentences(&["a", "b"]);
        let vocab = build_vocabulary(&corpus, 1).unwrap();
        assert!(matches!(
            train_embeddings(&corpus, &vocab, &small_config(4, 2)),
            Err(EmbeddingError::NoTrainingPairs)
        ));
    }

    #[test]
    fn trace_steps_increase_and_losses_are_finite() {
        let corpus = sentences(&["a b c d e f", "f e d c b a", "a c e b d f"]);
        let vocab = build_vocabulary(&corpus, 1).unwrap();
        let config = EmbeddingConfig {
            batch: 4,
            epochs: 3,
            ..small_config(8, 3)
        };
        let (_, trace) = train_embeddings(&corpus, &vocab, &config).unwrap();
        assert_eq!(trace.epoch_means.len(), 3);
        assert!(trace.points.windows(2).all(|w| w[0].0 < w[1].0));
        assert!(trace.points.iter().all(|&(_, l)| l.is_finite() && l >= 0.0));
        assert!(trace.to_csv().starts_with("step,mean_loss\n"));
    }

    #[test]
    fn cosine_examples() {
        let v = [0.3, -1.2, 4.0];
        assert!((cosine_similarity(&v, &v).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert!((cosine_similarity(&[1.0, 2.0], &[2.0, 4.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(
            cosine_similarity(&[0.0, 0.0], &[1.0, 0.0]),
            Err(EmbeddingError::ZeroVector)
        ));
    }

    fn constructed_vectors() -> WordVectors {
        let data = vec![1.0, 0.0, 1.0, 0.0, 0.0, 1.0];
        WordVectors::new(
            vec!["a".into(), "b".into(), "c".into()],
            Tensor::from_vec(&[3, 2], data).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn neighbors_on_constructed_geometry() {
        let wv = constructed_vectors();
        assert!(nearest_neighbors(&wv, "a", 0).unwrap().is_empty());
        let nn = nearest_neighbors(&wv, "a", 2).unwrap();
        assert_eq!(nn[0], ("b".to_string(), 1.0));
        assert_eq!(nn[1].0, "c");
        assert!(nn[1].1.abs() < 1e-15);
        assert!(matches!(
            nearest_neighbors(&wv, "zz", 1),
            Err(EmbeddingError::UnknownToken(_))
        ));
    }

    #[test]
    fn text_roundtrip_is_bit_exact() {
        let vocab = build_vocabulary(&sentences(&["remarks remark remarks: circ"]), 1).unwrap();
        let model = init_model(vocab, small_config(7, 1)).unwrap();
        let wv = model.word_vectors();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vec.txt");
        save_embeddings(&wv, &path).unwrap();
        let back = load_embeddings(&path).unwrap();
        assert_eq!(back.tokens(), wv.tokens());
        let bits = |m: &Tensor| m.data().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(back.matrix()), bits(wv.matrix()));
    }

    #[test]
    fn malformed_files() {
        let read = |s: &str| read_embeddings(s.as_bytes());
        assert!(matches!(read("2 3\na 1 2 3\n"), Err(EmbeddingError::Format { .. })));
        assert!(matches!(read("two 3\n"), Err(EmbeddingError::Format { line: 1, .. })));
        assert!(matches!(read(""), Err(EmbeddingError::Format { line: 1, .. })));
        assert!(matches!(
            read("1 3\na 1 2\n"),
            Err(EmbeddingError::Format { line: 2, .. })
        ));
        assert!(matches!(
            read("1 1\na x\n"),
            Err(EmbeddingError::Format { line: 2, .. })
        ));
        match read("2 1\ndup 1\ndup 2\n") {
            Err(EmbeddingError::DuplicateToken(t)) => assert_eq!(t, "dup"),
            other => panic!("{other:?}"),
        }
        assert!(read("1 2\nok 0.5 -1e-3\n").is_ok());
    }

    #[test]
    fn checkpoint_roundtrip() {
        let corpus = sentences(&["a b c a", "b c"]);
        let vocab = build_vocabulary(&corpus, 1).unwrap();
        let (model, _) = train_embeddings(&corpus, &vocab, &small_config(3, 2)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        model.save_checkpoint(&path).unwrap();
        assert_eq!(EmbeddingModel::load_checkpoint(&path).unwrap(), model);

        let bogus = dir.path().join("bogus.ckpt");
        std::fs::write(&bogus, b"RMNET1....").unwrap();
        assert!(matches!(
            EmbeddingModel::load_checkpoint(&bogus),
            Err(EmbeddingError::Checkpoint(_))
        ));
    }
}
