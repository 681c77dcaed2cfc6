mod common;

use reportminer_core::corpus::{build_vocabulary, segment_all, smoothed_unigram_distribution};
use reportminer_core::embedding::{
    generate_pairs, nearest_neighbors, train_embeddings, EmbeddingConfig, EmbeddingError, NegativeSampler, UpdateMode,
};
use reportminer_core::synthetic::{generate_field, FieldConfig, Lexicon};
use reportminer_core::{Sentence, Vocabulary};

fn field_corpus() -> (Vec<Sentence>, Vocabulary) {
    let field = generate_field(&FieldConfig::default());
    let sentences = segment_all(&field.reports);
    let vocab = build_vocabulary(&sentences, 1).unwrap();
    (sentences, vocab)
}

#[test]
fn negative_sampling_rates_match_the_noise_distribution() {
    let vocab = Vocabulary::from_counts((0..12).map(|i| (format!("w{i}"), 1 + (i * i) as u64)));
    const DRAWS: usize = 1_000_000;
    for power in [1.0, 0.75] {
        let sampler = NegativeSampler::new(&vocab, power);
        let mut r = common::rng(7);
        let mut counts = vec![0usize; vocab.len()];
        for _ in 0..DRAWS {
            counts[sampler.sample(&mut r)] += 1;
        }
        for (id, &p) in smoothed_unigram_distribution(&vocab, power).iter().enumerate() {
            let rate = counts[id] as f64 / DRAWS as f64;
            let se = (p * (1.0 - p) / DRAWS as f64).sqrt();
            assert!((rate - p).abs() <= 3.0 * se, "power {power} id {id}: {rate} vs {p}");
        }
    }
}

#[test]
fn epoch_losses_never_rise_by_more_than_five_percent() {
    let (sentences, vocab) = field_corpus();
    let config = EmbeddingConfig {
        dim: 20,
        epochs: 12,
        ..EmbeddingConfig::default()
    };
    let (_, trace) = train_embeddings(&sentences, &vocab, &config).unwrap();
    assert_eq!(trace.epoch_means.len(), 12);
    for w in trace.epoch_means.windows(2) {
        assert!(w[1] <= 1.05 * w[0], "{:?}", trace.epoch_means);
    }
    assert!(trace.epoch_means[11] < trace.epoch_means[0]);
}

#[test]
fn training_is_deterministic_per_seed() {
    let (sentences, vocab) = field_corpus();
    for update in [UpdateMode::Pair, UpdateMode::BatchMean] {
        let config = EmbeddingConfig {
            dim: 8,
            epochs: 2,
            learning_rate: 0.05,
            update,
            seed: 3,
            ..EmbeddingConfig::default()
        };
        let a = train_embeddings(&sentences, &vocab, &config).unwrap();
        let b = train_embeddings(&sentences, &vocab, &config).unwrap();
        assert_eq!(a, b);
        let other = EmbeddingConfig { seed: 4, ..config };
        assert_ne!(
            a.0.center,
            train_embeddings(&sentences, &vocab, &other).unwrap().0.center
        );
    }
}

#[test]
fn small_rate_per_pair_updates_lower_the_loss() {
    let (sentences, vocab) = field_corpus();
    let config = EmbeddingConfig {
        dim: 16,
        epochs: 5,
        learning_rate: 0.05,
        update: UpdateMode::Pair,
        ..EmbeddingConfig::default()
    };
    let (_, trace) = train_embeddings(&sentences, &vocab, &config).unwrap();
    assert!(trace.epoch_means[4] < trace.epoch_means[0]);
}

#[test]
fn per_pair_updates_at_unit_rate_diverge() {
    let (sentences, vocab) = field_corpus();
    let config = EmbeddingConfig {
        dim: 50,
        epochs: 3,
        update: UpdateMode::Pair,
        ..EmbeddingConfig::default()
    };
    let err = train_embeddings(&sentences, &vocab, &config).unwrap_err();
    assert!(matches!(err, EmbeddingError::Diverged { .. }), "{err}");
}

#[test]
fn outer_words_are_uniform_over_the_window() {
    let corpus = vec![Sentence::from_tokens(["a", "b", "c"].map(String::from).to_vec())];
    let vocab = build_vocabulary(&corpus, 1).unwrap();
    let id = |t: &str| vocab.id(t).unwrap();
    let (a, b, c) = (id("a"), id("b"), id("c"));
    const DRAWS: usize = 100_000;
    let mut r = common::rng(5);
    let mut b_to_a = 0usize;
    for _ in 0..DRAWS {
        let pairs = generate_pairs(&corpus, &vocab, 1, &mut r);
        // Edge words have one neighbor; the middle word picks one of two.
        assert_eq!(pairs.len(), 3);
        assert_eq!((pairs[0], pairs[2]), ((a, b), (c, b)));
        assert_eq!(pairs[1].0, b);
        b_to_a += usize::from(pairs[1].1 == a);
    }
    let sigma = (0.25 / DRAWS as f64).sqrt();
    assert!((b_to_a as f64 / DRAWS as f64 - 0.5).abs() <= 3.0 * sigma);
}

#[test]
fn interchangeable_tokens_are_top_three_neighbors() {
    let (sentences, vocab) = field_corpus();
    let config = EmbeddingConfig {
        dim: 50,
        epochs: 40,
        learning_rate: 0.05,
        update: UpdateMode::Pair,
        ..EmbeddingConfig::default()
    };
    let (model, _) = train_embeddings(&sentences, &vocab, &config).unwrap();
    let vectors = model.word_vectors();
    for (x, y) in Lexicon::new().interchangeable_pairs() {
        let top: Vec<String> = nearest_neighbors(&vectors, &x, 3)
            .unwrap()
            .into_iter()
            .map(|(t, _)| t)
            .collect();
        assert!(top.contains(&y), "{x}: {top:?}");
    }
}
