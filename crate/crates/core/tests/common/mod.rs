//! Shared test support: finite-difference checkers, random instances and
//! brute-force oracles written without reference to the library's own
//! implementations.
#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use reportminer_core::classifier::{build_architecture, pad_sentence, ArchConfig, Architecture, Label};
use reportminer_core::embedding::{init_model, nce_gradients, nce_loss, EmbeddingConfig, EmbeddingModel};
use reportminer_core::mining::{LabelFilter, SequencePattern, WellTimeline};
use reportminer_core::neuralnet::{Input, LayerSpec, Network};
use reportminer_core::seeding;
use reportminer_core::{Tensor, Vocabulary, WordVectors};

pub const FD_STEP: f64 = 1e-5;

pub fn rng(seed: u64) -> seeding::Rng {
    seeding::Rng::seed_from_u64(seed)
}

/// `(input, expected)` pairs of the cleaning fixture, generated by Python's `re`.
pub fn golden_cases() -> Vec<(String, String)> {
    include_str!("../fixtures/clean_golden.jsonl")
        .lines()
        .map(|line| {
            let v: serde_json::Value = serde_json::from_str(line).expect("fixture line is JSON");
            (
                v["input"].as_str().expect("input").to_owned(),
                v["expected"].as_str().expect("expected").to_owned(),
            )
        })
        .collect()
}

/// `‖a − b‖ / max(‖a‖, ‖b‖)`, or 0 when both norms are below `1e-10`.
pub fn relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = analytic.iter().zip(numeric).map(|(a, n)| a - n).collect();
    let scale = norm(analytic).max(norm(numeric));
    if scale < 1e-10 {
        0.0
    } else {
        norm(&diff) / scale
    }
}

fn central_difference(x: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
    let up = f(x + FD_STEP);
    let down = f(x - FD_STEP);
    (up - down) / (2.0 * FD_STEP)
}

pub struct NceInstance {
    pub model: EmbeddingModel,
    pub center: usize,
    pub outer: usize,
    pub negatives: Vec<usize>,
}

/// Random skip-gram model with `V ≤ 20`, `d ≤ 16`, `k ≤ 8`; negatives may
/// repeat and may coincide with the center or outer word.
pub fn random_nce_instance(r: &mut seeding::Rng) -> NceInstance {
    let v = r.gen_range(2..=20);
    let vocab = Vocabulary::from_counts((0..v).map(|i| (format!("w{i}"), r.gen_range(1..50))));
    let config = EmbeddingConfig {
        dim: r.gen_range(1..=16),
        negatives: r.gen_range(1..=8),
        seed: r.gen(),
        ..EmbeddingConfig::default()
    };
    let k = config.negatives;
    let model = init_model(vocab, config).expect("valid config");
    NceInstance {
        center: r.gen_range(0..v),
        outer: r.gen_range(0..v),
        negatives: (0..k).map(|_| r.gen_range(0..v)).collect(),
        model,
    }
}

/// Worst per-vector relative error of the skip-gram gradients.
pub fn nce_fd_error(inst: &mut NceInstance) -> f64 {
    let (c, o) = (inst.center, inst.outer);
    let negs = inst.negatives.clone();
    let g = nce_gradients(c, o, &negs, &inst.model);
    let mut worst: f64 = 0.0;

    let d = inst.model.config.dim;
    let mut numeric = vec![0.0; d];
    for (k, slot) in numeric.iter_mut().enumerate() {
        let x = inst.model.center.row(c)[k];
        *slot = central_difference(x, |val| {
            inst.model.center.row_mut(c)[k] = val;
            nce_loss(c, o, &negs, &inst.model)
        });
        inst.model.center.row_mut(c)[k] = x;
    }
    worst = worst.max(relative_error(&g.center, &numeric));

    let rows = g.outer_rows();
    for id in 0..inst.model.vocab.len() {
        let mut numeric = vec![0.0; d];
        for (k, slot) in numeric.iter_mut().enumerate() {
            let x = inst.model.outer.row(id)[k];
            *slot = central_difference(x, |val| {
                inst.model.outer.row_mut(id)[k] = val;
                nce_loss(c, o, &negs, &inst.model)
            });
            inst.model.outer.row_mut(id)[k] = x;
        }
        let analytic = rows.get(&id).cloned().unwrap_or_else(|| vec![0.0; d]);
        worst = worst.max(relative_error(&analytic, &numeric));
    }
    worst
}

pub struct NetInstance {
    pub network: Network,
    pub ids: Vec<usize>,
    pub gold: usize,
}

/// A small fine-tunable classifier of `kind` with every non-embedding
/// parameter redrawn, so no ReLU sits exactly at its kink.
pub fn random_net_instance(kind: Architecture, r: &mut seeding::Rng) -> NetInstance {
    let v = r.gen_range(3..=10);
    let d = r.gen_range(2..=8);
    let tokens: Vec<String> = (0..v).map(|i| format!("t{i}")).collect();
    let vectors = WordVectors::new(tokens, Tensor::uniform(&[v, d], 1.0, r)).expect("distinct tokens");
    let pad = r.gen_range(3..=8);
    let arch = ArchConfig {
        avg_hidden: r.gen_range(2..=6),
        cnn_filters: r.gen_range(2..=5),
        cnn_width: *[1, 3, 5].choose(r).expect("widths"),
        cnn_dense: r.gen_range(2..=6),
        lstm_hidden: r.gen_range(2..=6),
        lstm_dropout: 0.5,
    };
    let mut network = build_architecture(kind, &vectors, pad, &arch, true, r.gen()).expect("valid architecture");
    for layer in network.params.layers.iter_mut().skip(1) {
        for t in layer.iter_mut() {
            *t = Tensor::uniform(t.shape(), 0.5, r);
        }
    }
    let len = r.gen_range(1..=pad + 2);
    // UNK (id v + 1) is a valid input; PAD (id v) only arrives via padding.
    let raw: Vec<usize> = (0..len)
        .map(|_| if r.gen_bool(0.1) { v + 1 } else { r.gen_range(0..v) })
        .collect();
    let ids = match kind {
        Architecture::Avg => raw,
        _ => pad_sentence(&raw, pad, v),
    };
    NetInstance {
        network,
        ids,
        gold: r.gen_range(0..Label::COUNT),
    }
}

/// Worst per-tensor relative error over every trainable parameter, dropout
/// off. Pinned embedding rows are constants and are skipped.
pub fn network_fd_error(inst: &mut NetInstance) -> f64 {
    let ids = inst.ids.clone();
    let gold = inst.gold;
    let (pinned, dim) = match &inst.network.specs()[0] {
        LayerSpec::EmbeddingLookup { pinned, dim, .. } => (pinned.clone(), *dim),
        _ => (Vec::new(), 1),
    };
    let (_, grads) = inst
        .network
        .loss_and_gradients(Input::Ids(&ids), gold)
        .expect("forward pass");
    let mut worst: f64 = 0.0;
    for l in 0..grads.layers.len() {
        for p in 0..grads.layers[l].len() {
            let n = inst.network.params.layers[l][p].len();
            let mut numeric = vec![0.0; n];
            for (k, slot) in numeric.iter_mut().enumerate() {
                if l == 0 && pinned.contains(&(k / dim)) {
                    continue;
                }
                let x = inst.network.params.layers[l][p].data()[k];
                let net = &mut inst.network;
                *slot = central_difference(x, |val| {
                    net.params.layers[l][p].data_mut()[k] = val;
                    net.loss_and_gradients(Input::Ids(&ids), gold).expect("forward pass").0
                });
                inst.network.params.layers[l][p].data_mut()[k] = x;
            }
            worst = worst.max(relative_error(grads.layers[l][p].data(), &numeric));
        }
    }
    worst
}

pub fn oracle_rank(timelines: &[WellTimeline], top_n: usize) -> Vec<(String, usize)> {
    let mut all: Vec<(String, usize)> = Vec::new();
    for t in timelines {
        let mut events = 0;
        for e in &t.entries {
            if e.label == Label::Event {
                events += 1;
            }
        }
        all.push((t.well_id.clone(), events));
    }
    // Selection sort: repeatedly take the best remaining well.
    let mut out = Vec::new();
    while out.len() < top_n && !all.is_empty() {
        let mut best = 0;
        for i in 1..all.len() {
            let (a, b) = (&all[i], &all[best]);
            if a.1 > b.1 || (a.1 == b.1 && a.0 < b.0) {
                best = i;
            }
        }
        out.push(all.remove(best));
    }
    out
}

/// `(operator, sentences, proportions)` sorted by operator id.
pub fn oracle_operator_behavior(timelines: &[WellTimeline], well: &str) -> Option<Vec<(String, usize, [f64; 3])>> {
    let t = timelines.iter().find(|t| t.well_id == well)?;
    let mut operators: Vec<String> = t.entries.iter().map(|e| e.operator_id.clone()).collect();
    operators.sort();
    operators.dedup();
    Some(
        operators
            .into_iter()
            .map(|op| {
                let mine: Vec<_> = t.entries.iter().filter(|e| e.operator_id == op).collect();
                let n = mine.len();
                let share = |label| mine.iter().filter(|e| e.label == label).count() as f64 / n as f64;
                (
                    op,
                    n,
                    [share(Label::Event), share(Label::Symptom), share(Label::Action)],
                )
            })
            .collect(),
    )
}

pub fn oracle_label_distribution(timelines: &[WellTimeline]) -> Option<[f64; 3]> {
    let all: Vec<Label> = timelines
        .iter()
        .flat_map(|t| t.entries.iter().map(|e| e.label))
        .collect();
    if all.is_empty() {
        return None;
    }
    let share = |label| all.iter().filter(|&&l| l == label).count() as f64 / all.len() as f64;
    Some([share(Label::Event), share(Label::Symptom), share(Label::Action)])
}

fn filter_matches(f: &LabelFilter, label: Label, sentence: &str) -> bool {
    f.label == label
        && match &f.contains {
            None => true,
            Some(s) => sentence.contains(s.as_str()),
        }
}

/// `(well, i, j, outcome indices)` for every qualifying pair, by brute force
/// over all index pairs.
pub fn oracle_sequences(
    timelines: &[WellTimeline],
    pattern: &SequencePattern,
) -> Vec<(String, usize, usize, Vec<usize>)> {
    let mut out = Vec::new();
    let mut wells: BTreeMap<&str, &WellTimeline> = BTreeMap::new();
    for t in timelines {
        wells.insert(&t.well_id, t);
    }
    for (well, t) in wells {
        let n = t.entries.len();
        for i in 0..n {
            for j in 0..n {
                let (a, c) = (&t.entries[i], &t.entries[j]);
                if j > i
                    && j - i <= pattern.horizon
                    && filter_matches(&pattern.antecedent, a.label, &a.sentence)
                    && filter_matches(&pattern.consequent, c.label, &c.sentence)
                {
                    let outcome: Vec<usize> = (j + 1..n).take(pattern.horizon).collect();
                    out.push((well.to_owned(), i, j, outcome));
                }
            }
        }
    }
    out
}

/// Slope, intercept and Pearson r from the 2×2 normal equations on raw sums.
pub fn normal_equations(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let syy: f64 = ys.iter().map(|y| y * y).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    // [n sx; sx sxx] [b; a] = [sy; sxy]
    let det = n * sxx - sx * sx;
    let slope = (n * sxy - sx * sy) / det;
    let intercept = (sxx * sy - sx * sxy) / det;
    let r = (n * sxy - sx * sy) / (det * (n * syy - sy * sy)).sqrt();
    (slope, intercept, r)
}
