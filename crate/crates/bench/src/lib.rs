//! Fixtures shared by the benchmarks.

use reportminer_core::classifier::{build_architecture, pad_sentence, ArchConfig, Architecture};
use reportminer_core::corpus::{build_vocabulary, segment_all};
use reportminer_core::embedding::{init_model, EmbeddingConfig, EmbeddingModel};
use reportminer_core::seeding;
use reportminer_core::synthetic::{generate_field, FieldConfig};
use reportminer_core::{Network, Report, Sentence, Tensor, Vocabulary, WordVectors};

pub fn field_reports(wells: usize) -> Vec<Report> {
    generate_field(&FieldConfig {
        wells,
        ..FieldConfig::default()
    })
    .reports
}

pub fn field_corpus(wells: usize) -> (Vec<Sentence>, Vocabulary) {
    let sentences = segment_all(&field_reports(wells));
    let vocab = build_vocabulary(&sentences, 1).expect("synthetic field is non-empty");
    (sentences, vocab)
}

pub fn embedding_model(dim: usize, negatives: usize) -> EmbeddingModel {
    let (_, vocab) = field_corpus(5);
    let config = EmbeddingConfig {
        dim,
        negatives,
        ..EmbeddingConfig::default()
    };
    init_model(vocab, config).expect("valid config")
}

/// A default-sized classifier over `vocab` random vectors plus an encoded
/// sentence of `len` tokens padded to `pad`.
pub fn classifier(kind: Architecture, vocab: usize, dim: usize, pad: usize, len: usize) -> (Network, Vec<usize>) {
    let mut rng = seeding::substream(0, "bench");
    let tokens = (0..vocab).map(|i| format!("t{i}")).collect();
    let vectors = WordVectors::new(tokens, Tensor::uniform(&[vocab, dim], 1.0, &mut rng)).expect("distinct tokens");
    let net = build_architecture(kind, &vectors, pad, &ArchConfig::default(), false, 0).expect("valid architecture");
    let ids: Vec<usize> = (0..len).map(|i| (i * 7) % vocab).collect();
    let ids = match kind {
        Architecture::Avg => ids,
        _ => pad_sentence(&ids, pad, vocab),
    };
    (net, ids)
}
