//! Inputs shared by the criterion benchmarks in `benches/`.

use propcascade::corpus::build_instances;
use propcascade::synth::{repetition_corpus, RepetitionCorpusConfig};
use propcascade::{ContextPolicy, Instance};

/// Instances of a small seeded repetition corpus, whole-article context.
pub fn repetition_instances(articles: usize) -> Vec<Instance> {
    let corpus = repetition_corpus(&RepetitionCorpusConfig {
        articles,
        ..Default::default()
    });
    build_instances(&corpus.articles, &corpus.labels, ContextPolicy::WholeArticle).expect("generated labels are valid")
}

/// Deterministic pseudo-text of `len` characters over a small alphabet.
pub fn pseudo_text(len: usize, seed: u64) -> String {
    let mut state = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
    (0..len)
        .map(|_| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            b"abcde fghij"[(state % 11) as usize] as char
        })
        .collect()
}
