//! Sentence classifiers over the EVENT / SYMPTOM / ACTION label set.
//!
//! Three architectures share one input convention. Token ids index a
//! `(V + 2) × d` table holding the pre-trained vectors in rows `0..V`, then
//! a zero PAD row (`V`) and a zero UNK row (`V + 1`) for out-of-vocabulary
//! tokens. Both extra rows are pinned. The table is frozen unless fine-tuning
//! is enabled.
//!
//! - `avg`: mean of the token vectors, then `dense(20, tanh)` and a 3-way
//!   softmax layer. It sees the unpadded sentence.
//! - `cnn`: two `conv1d(128, width 3, relu) → maxpool(2)` stages, then
//!   `dense(128, relu)` and softmax. Input is padded or truncated to `L`.
//! - `lstm`: `lstm(100)` over the padded sequence, dropout 0.5 on the final
//!   hidden state, then softmax.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::corpus::{clean_text, tokenize, Sentence};
use crate::embedding::WordVectors;
use crate::neuralnet::{self, Activation, Input, LayerSpec, Mode, NetError, Network};
use crate::seeding;

#[derive(Debug, thiserror::Error)]
pub enum ClassifierError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("line {line}: unknown label {label:?}")]
    UnknownLabel { line: usize, label: String },
    #[error("line {line}: expected `label<TAB>sentence`")]
    Malformed { line: usize },
    #[error("unknown architecture {0:?}")]
    UnknownArchitecture(String),
    #[error("empty data set")]
    Empty,
    #[error("class {label} has {count} member(s); at least {needed} required")]
    ClassTooSmall { label: Label, count: usize, needed: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("embedding table is empty")]
    EmptyEmbedding,
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Net(#[from] NetError),
}

/// Sentence label. The discriminant is the dense class id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Label {
    Event = 0,
    Symptom = 1,
    Action = 2,
}

impl Label {
    pub const ALL: [Label; 3] = [Label::Event, Label::Symptom, Label::Action];
    pub const COUNT: usize = 3;

    pub fn id(self) -> usize {
        self as usize
    }

    pub fn from_id(id: usize) -> Option<Label> {
        Label::ALL.get(id).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Event => "EVENT",
            Label::Symptom => "SYMPTOM",
            Label::Action => "ACTION",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Label::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| s.to_owned())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledSentence {
    pub sentence: Sentence,
    pub label: Label,
}

impl LabeledSentence {
    pub fn new(tokens: Vec<String>, label: Label) -> Self {
        LabeledSentence {
            sentence: Sentence::from_tokens(tokens),
            label,
        }
    }
}

/// Records read from a labeled TSV file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledSet {
    pub records: Vec<LabeledSentence>,
    /// Records dropped because nothing survived cleaning.
    pub skipped_empty: usize,
}

/// Reads `label<TAB>sentence` lines, cleaning each sentence. Blank lines are
/// ignored. Any unknown label fails the whole load.
pub fn load_labeled(path: &Path) -> Result<LabeledSet, ClassifierError> {
    let text = fs::read_to_string(path).map_err(|source| ClassifierError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_labeled(&text)
}

pub fn parse_labeled(text: &str) -> Result<LabeledSet, ClassifierError> {
    let mut records = Vec::new();
    let mut skipped_empty = 0;
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let (label, sentence) = line
            .split_once('\t')
            .ok_or(ClassifierError::Malformed { line: line_no })?;
        let label: Label = label
            .trim()
            .parse()
            .map_err(|label| ClassifierError::UnknownLabel { line: line_no, label })?;
        let tokens = tokenize(&clean_text(sentence));
        if tokens.is_empty() {
            skipped_empty += 1;
            continue;
        }
        records.push(LabeledSentence::new(tokens, label));
    }
    if skipped_empty > 0 {
        log::warn!("skipped {skipped_empty} labeled record(s) that were empty after cleaning");
    }
    Ok(LabeledSet { records, skipped_empty })
}

/// Right-pads with `pad` or truncates on the right to exactly `len` ids.
pub fn pad_sentence(ids: &[usize], len: usize, pad: usize) -> Vec<usize> {
    let mut out: Vec<usize> = ids.iter().copied().take(len).collect();
    out.resize(len, pad);
    out
}

/// Mean of the token vectors; unknown tokens count as zero vectors and an
/// empty sentence gives the zero vector.
pub fn sentence_feature_avg(tokens: &[String], vectors: &WordVectors) -> Vec<f64> {
    let mut sum = vec![0.0; vectors.dim()];
    if tokens.is_empty() {
        return sum;
    }
    for v in tokens.iter().filter_map(|t| vectors.get(t)) {
        sum.iter_mut().zip(v).for_each(|(s, x)| *s += x);
    }
    let inv = 1.0 / tokens.len() as f64;
    sum.iter_mut().for_each(|s| *s *= inv);
    sum
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Architecture {
    Avg,
    Cnn,
    Lstm,
}

impl Architecture {
    pub const ALL: [Architecture; 3] = [Architecture::Avg, Architecture::Cnn, Architecture::Lstm];

    pub fn as_str(self) -> &'static str {
        match self {
            Architecture::Avg => "avg",
            Architecture::Cnn => "cnn",
            Architecture::Lstm => "lstm",
        }
    }

    fn uses_padding(self) -> bool {
        self != Architecture::Avg
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Architecture {
    type Err = ClassifierError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Architecture::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| ClassifierError::UnknownArchitecture(s.to_owned()))
    }
}

/// Layer sizes. Defaults are the published sizes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArchConfig {
    pub avg_hidden: usize,
    pub cnn_filters: usize,
    pub cnn_width: usize,
    pub cnn_dense: usize,
    pub lstm_hidden: usize,
    pub lstm_dropout: f64,
}

impl Default for ArchConfig {
    fn default() -> Self {
        ArchConfig {
            avg_hidden: 20,
            cnn_filters: 128,
            cnn_width: 3,
            cnn_dense: 128,
            lstm_hidden: 100,
            lstm_dropout: 0.5,
        }
    }
}

/// Length after `stages` ceil-halvings.
pub fn pooled_length(len: usize, pool: usize, stages: usize) -> usize {
    (0..stages).fold(len, |l, _| l.div_ceil(pool))
}

/// Builds the network for `kind`, copying `vectors` into its embedding table.
pub fn build_architecture(
    kind: Architecture,
    vectors: &WordVectors,
    pad_length: usize,
    arch: &ArchConfig,
    fine_tune: bool,
    seed: u64,
) -> Result<Network, ClassifierError> {
    if vectors.is_empty() {
        return Err(ClassifierError::EmptyEmbedding);
    }
    if kind.uses_padding() && pad_length == 0 {
        return Err(ClassifierError::InvalidConfig("pad length must be at least 1".into()));
    }
    let v = vectors.len();
    let d = vectors.dim();
    let classes = Label::COUNT;
    let embedding = LayerSpec::EmbeddingLookup {
        rows: v + 2,
        dim: d,
        frozen: !fine_tune,
        pinned: vec![v, v + 1],
    };
    let linear = |inputs| LayerSpec::Dense {
        inputs,
        units: classes,
        activation: Activation::Linear,
    };
    let specs = match kind {
        Architecture::Avg => vec![
            embedding,
            LayerSpec::MeanReduce,
            LayerSpec::Dense {
                inputs: d,
                units: arch.avg_hidden,
                activation: Activation::Tanh,
            },
            linear(arch.avg_hidden),
        ],
        Architecture::Cnn => {
            let f = arch.cnn_filters;
            let conv = |channels| LayerSpec::Conv1d {
                channels,
                filters: f,
                width: arch.cnn_width,
                activation: Activation::Relu,
            };
            vec![
                embedding,
                conv(d),
                LayerSpec::MaxPool1d { pool: 2 },
                conv(f),
                LayerSpec::MaxPool1d { pool: 2 },
                LayerSpec::Dense {
                    inputs: pooled_length(pad_length, 2, 2) * f,
                    units: arch.cnn_dense,
                    activation: Activation::Relu,
                },
                linear(arch.cnn_dense),
            ]
        }
        Architecture::Lstm => vec![
            embedding,
            LayerSpec::Lstm {
                inputs: d,
                hidden: arch.lstm_hidden,
            },
            LayerSpec::Dropout {
                rate: arch.lstm_dropout,
            },
            linear(arch.lstm_hidden),
        ],
    };
    let mut rng = seeding::substream(seed, seeding::INIT);
    let mut net = Network::new(specs, &mut rng)?;
    let table = &mut net.params.layers[0][0];
    for i in 0..v {
        table.row_mut(i).copy_from_slice(vectors.vector(i));
    }
    Ok(net)
}

/// Classifier training hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Update the embedding table as well.
    pub fine_tune: bool,
    /// Pad length; `None` uses the longest training sentence.
    pub pad_length: Option<usize>,
    pub arch: ArchConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.1,
            epochs: 50,
            batch_size: 32,
            seed: 0,
            fine_tune: false,
            pad_length: None,
            arch: ArchConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ClassifierError> {
        let bad = |m: &str| Err(ClassifierError::InvalidConfig(m.to_owned()));
        if !self.learning_rate.is_finite() || self.learning_rate < 0.0 {
            return bad("learning rate must be finite and non-negative");
        }
        if self.batch_size == 0 {
            return bad("batch size must be at least 1");
        }
        if self.pad_length == Some(0) {
            return bad("pad length must be at least 1");
        }
        Ok(())
    }
}

/// A trained network plus the token mapping needed to feed it.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedClassifier {
    pub architecture: Architecture,
    pub network: Network,
    pub pad_length: usize,
    /// Where the embedding vectors were loaded from, if known.
    pub embedding_path: Option<String>,
    tokens: Vec<String>,
    ids: HashMap<String, usize>,
    /// Mean training loss per epoch.
    pub epoch_losses: Vec<f64>,
}

impl TrainedClassifier {
    fn new(
        architecture: Architecture,
        network: Network,
        pad_length: usize,
        tokens: Vec<String>,
        embedding_path: Option<String>,
    ) -> Self {
        let ids = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        TrainedClassifier {
            architecture,
            network,
            pad_length,
            embedding_path,
            tokens,
            ids,
            epoch_losses: Vec::new(),
        }
    }

    /// Id of the padding row, one past the vocabulary.
    pub fn pad_id(&self) -> usize {
        self.tokens.len()
    }

    pub fn unk_id(&self) -> usize {
        self.tokens.len() + 1
    }

    pub fn vocabulary(&self) -> &[String] {
        &self.tokens
    }

    /// Network input ids for `tokens`, padded for the CNN and LSTM.
    pub fn encode(&self, tokens: &[String]) -> Vec<usize> {
        let ids: Vec<usize> = tokens
            .iter()
            .map(|t| self.ids.get(t).copied().unwrap_or(self.unk_id()))
            .collect();
        if self.architecture.uses_padding() {
            pad_sentence(&ids, self.pad_length, self.pad_id())
        } else {
            ids
        }
    }

    /// The argmax label (lowest id on ties) and the class probabilities.
    pub fn predict(&self, tokens: &[String]) -> Result<(Label, Vec<f64>), ClassifierError> {
        let probs = self.network.predict_proba(Input::Ids(&self.encode(tokens)))?;
        Ok((Label::ALL[argmax(&probs)], probs))
    }

    /// Saves the network and its token list. Vectors travel inside the
    /// embedding table, so the checkpoint is self-contained.
    pub fn save(&self, path: &Path) -> Result<(), ClassifierError> {
        let meta = CheckpointMeta {
            kind: self.architecture,
            pad_length: self.pad_length,
            pad_token: PAD_TOKEN.to_owned(),
            unk_token: UNK_TOKEN.to_owned(),
            embedding_path: self.embedding_path.clone(),
            tokens: self.tokens.clone(),
        };
        let json = serde_json::to_string(&meta).map_err(|e| ClassifierError::Checkpoint(e.to_string()))?;
        neuralnet::save_checkpoint(path, &self.network, &json)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ClassifierError> {
        let (network, json) = neuralnet::load_checkpoint(path)?;
        let meta: CheckpointMeta =
            serde_json::from_str(&json).map_err(|e| ClassifierError::Checkpoint(e.to_string()))?;
        match network.specs().first() {
            Some(LayerSpec::EmbeddingLookup { rows, .. }) if *rows == meta.tokens.len() + 2 => {}
            _ => {
                return Err(ClassifierError::Checkpoint(
                    "embedding table does not match the stored token list".into(),
                ))
            }
        }
        Ok(TrainedClassifier::new(
            meta.kind,
            network,
            meta.pad_length,
            meta.tokens,
            meta.embedding_path,
        ))
    }
}

const PAD_TOKEN: &str = "<PAD>";
const UNK_TOKEN: &str = "<UNK>";

#[derive(Serialize, Deserialize)]
struct CheckpointMeta {
    kind: Architecture,
    pad_length: usize,
    pad_token: String,
    unk_token: String,
    embedding_path: Option<String>,
    tokens: Vec<String>,
}

fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

fn class_counts(data: &[LabeledSentence]) -> [usize; Label::COUNT] {
    let mut counts = [0; Label::COUNT];
    for r in data {
        counts[r.label.id()] += 1;
    }
    counts
}

/// Trains `kind` with mini-batch SGD on the mean cross-entropy of each batch.
pub fn train_classifier(
    train: &[LabeledSentence],
    kind: Architecture,
    vectors: &WordVectors,
    config: &TrainConfig,
) -> Result<TrainedClassifier, ClassifierError> {
    config.validate()?;
    if train.is_empty() {
        return Err(ClassifierError::Empty);
    }
    for (label, count) in Label::ALL.iter().zip(class_counts(train)) {
        if count == 0 {
            log::warn!("no {label} examples in training data");
        }
    }
    let pad_length = config
        .pad_length
        .unwrap_or_else(|| train.iter().map(|r| r.sentence.tokens.len()).max().unwrap_or(1).max(1));
    let network = build_architecture(kind, vectors, pad_length, &config.arch, config.fine_tune, config.seed)?;
    let mut model = TrainedClassifier::new(kind, network, pad_length, vectors.tokens().to_vec(), None);

    let encoded: Vec<Vec<usize>> = train.iter().map(|r| model.encode(&r.sentence.tokens)).collect();
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut shuffle_rng = seeding::substream(config.seed, seeding::SHUFFLE);
    let mut dropout_rng = seeding::substream(config.seed, seeding::DROPOUT);
    let mut grads = model.network.zero_gradients();

    for epoch in 0..config.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut total = 0.0;
        for batch in order.chunks(config.batch_size) {
            grads.fill(0.0);
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                let trace = model
                    .network
                    .forward(Input::Ids(&encoded[i]), Mode::Train(&mut dropout_rng))?;
                total += model.network.backward(&trace, train[i].label.id(), &mut grads, scale)?;
            }
            model.network.apply_gradients(&grads, config.learning_rate)?;
        }
        let mean = total / train.len() as f64;
        log::debug!("{kind} epoch {}: mean loss {mean:.6}", epoch + 1);
        model.epoch_losses.push(mean);
    }
    Ok(model)
}

/// Gold-by-predicted counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConfusionMatrix(pub [[u64; Label::COUNT]; Label::COUNT]);

impl ConfusionMatrix {
    pub fn record(&mut self, gold: Label, predicted: Label) {
        self.0[gold.id()][predicted.id()] += 1;
    }

    pub fn total(&self) -> u64 {
        self.0.iter().flatten().sum()
    }

    pub fn correct(&self) -> u64 {
        (0..Label::COUNT).map(|i| self.0[i][i]).sum()
    }

    pub fn row_sum(&self, gold: Label) -> u64 {
        self.0[gold.id()].iter().sum()
    }

    /// `trace / total`, or 0 when empty.
    pub fn accuracy(&self) -> f64 {
        match self.total() {
            0 => 0.0,
            n => self.correct() as f64 / n as f64,
        }
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        for (a, b) in self.0.iter_mut().flatten().zip(other.0.iter().flatten()) {
            *a += b;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub fold_accuracies: Vec<f64>,
    pub confusion: ConfusionMatrix,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub cv_mean_accuracy: Option<f64>,
}

pub fn evaluate(classifier: &TrainedClassifier, test: &[LabeledSentence]) -> Result<EvalReport, ClassifierError> {
    if test.is_empty() {
        return Err(ClassifierError::Empty);
    }
    let mut confusion = ConfusionMatrix::default();
    for r in test {
        let (predicted, _) = classifier.predict(&r.sentence.tokens)?;
        confusion.record(r.label, predicted);
    }
    Ok(EvalReport {
        accuracy: confusion.accuracy(),
        fold_accuracies: Vec::new(),
        confusion,
        cv_mean_accuracy: None,
    })
}

/// Splits `round(fraction · N)` records into train, stratified by label.
/// Per-class train counts are apportioned by largest remainder, so each
/// class lands within one record of its exact share.
pub fn split_train_test(
    data: &[LabeledSentence],
    fraction: f64,
    seed: u64,
) -> Result<(Vec<LabeledSentence>, Vec<LabeledSentence>), ClassifierError> {
    if data.is_empty() {
        return Err(ClassifierError::Empty);
    }
    if !(0.0..=1.0).contains(&fraction) {
        return Err(ClassifierError::InvalidConfig(
            "train fraction must be in [0, 1]".into(),
        ));
    }
    let counts = class_counts(data);
    for (label, count) in Label::ALL.into_iter().zip(counts) {
        if count == 1 {
            return Err(ClassifierError::ClassTooSmall {
                label,
                count,
                needed: 2,
            });
        }
    }
    let target = (fraction * data.len() as f64).round() as usize;
    let exact: Vec<f64> = counts.iter().map(|&c| c as f64 * fraction).collect();
    let mut quota: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut by_remainder: Vec<usize> = (0..Label::COUNT).filter(|&c| counts[c] > quota[c]).collect();
    by_remainder.sort_by(|&a, &b| {
        (exact[b] - exact[b].floor())
            .total_cmp(&(exact[a] - exact[a].floor()))
            .then(a.cmp(&b))
    });
    let mut missing = target.saturating_sub(quota.iter().sum());
    for c in by_remainder {
        if missing == 0 {
            break;
        }
        quota[c] += 1;
        missing -= 1;
    }

    let mut rng = seeding::substream(seed, seeding::SPLIT);
    let mut train = Vec::with_capacity(target);
    let mut test = Vec::with_capacity(data.len() - target);
    for label in Label::ALL {
        let mut members: Vec<&LabeledSentence> = data.iter().filter(|r| r.label == label).collect();
        members.shuffle(&mut rng);
        let (a, b) = members.split_at(quota[label.id()]);
        train.extend(a.iter().map(|r| (*r).clone()));
        test.extend(b.iter().map(|r| (*r).clone()));
    }
    train.shuffle(&mut rng);
    test.shuffle(&mut rng);
    Ok((train, test))
}

/// Stratified fold assignment: records are grouped by label, shuffled within
/// each group, and dealt round-robin, so fold sizes differ by at most one.
pub fn kfold_assignment(data: &[LabeledSentence], k: usize, seed: u64) -> Result<Vec<usize>, ClassifierError> {
    if k < 2 {
        return Err(ClassifierError::InvalidConfig("k must be at least 2".into()));
    }
    if data.is_empty() {
        return Err(ClassifierError::Empty);
    }
    for (label, count) in Label::ALL.into_iter().zip(class_counts(data)) {
        if count > 0 && count < k {
            return Err(ClassifierError::ClassTooSmall {
                label,
                count,
                needed: k,
            });
        }
    }
    let mut rng = seeding::substream(seed, seeding::FOLDS);
    let mut fold = vec![0; data.len()];
    let mut next = 0;
    for label in Label::ALL {
        let mut members: Vec<usize> = (0..data.len()).filter(|&i| data[i].label == label).collect();
        members.shuffle(&mut rng);
        for i in members {
            fold[i] = next % k;
            next += 1;
        }
    }
    Ok(fold)
}

/// Stratified k-fold cross-validation. `accuracy` and `confusion` pool all
/// held-out predictions; `cv_mean_accuracy` is the mean of the fold
/// accuracies.
pub fn kfold_cv(
    data: &[LabeledSentence],
    k: usize,
    kind: Architecture,
    vectors: &WordVectors,
    config: &TrainConfig,
) -> Result<EvalReport, ClassifierError> {
    let fold = kfold_assignment(data, k, config.seed)?;
    let mut fold_accuracies = Vec::with_capacity(k);
    let mut confusion = ConfusionMatrix::default();
    for f in 0..k {
        let (train, test): (Vec<_>, Vec<_>) = data.iter().zip(&fold).partition(|(_, &g)| g != f);
        let train: Vec<LabeledSentence> = train.into_iter().map(|(r, _)| r.clone()).collect();
        let test: Vec<LabeledSentence> = test.into_iter().map(|(r, _)| r.clone()).collect();
        let fold_config = TrainConfig {
            seed: seeding::child_seed(config.seed, f as u64),
            ..*config
        };
        let model = train_classifier(&train, kind, vectors, &fold_config)?;
        let report = evaluate(&model, &test)?;
        log::info!("{kind} fold {}/{k}: accuracy {:.4}", f + 1, report.accuracy);
        fold_accuracies.push(report.accuracy);
        confusion.merge(&report.confusion);
    }
    let mean = fold_accuracies.iter().sum::<f64>() / k as f64;
    Ok(EvalReport {
        accuracy: confusion.accuracy(),
        fold_accuracies,
        confusion,
        cv_mean_accuracy: Some(mean),
    })
}
