//! Seeded synthetic data: 2-D Gaussian clusters for the minority ensembles
//! and an article corpus with planted, lightly edited repetitions.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Normal};

use crate::corpus::{Article, Label, Span};
use crate::featurizer::FeatureVector;
use crate::technique::Technique;

/// One Gaussian blob per technique.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterLayout {
    pub centers: [(f64, f64); 14],
    pub sigma: f64,
}

impl ClusterLayout {
    /// `center` sits at the origin; the other thirteen techniques are spread
    /// evenly on a circle of `radius`.
    pub fn ring_around(center: Technique, radius: f64, sigma: f64) -> Self {
        let mut centers = [(0.0, 0.0); 14];
        let mut k = 0;
        for t in Technique::ALL {
            if t == center {
                continue;
            }
            let angle = k as f64 * std::f64::consts::TAU / 13.0;
            centers[t.index()] = (radius * angle.cos(), radius * angle.sin());
            k += 1;
        }
        ClusterLayout { centers, sigma }
    }

    /// Draws `counts[t]` points per technique, shuffled.
    pub fn sample(&self, counts: &[usize; 14], seed: u64) -> (Vec<Technique>, Vec<FeatureVector>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, self.sigma).expect("sigma must be finite and positive");
        let mut points = Vec::new();
        for t in Technique::ALL {
            let (cx, cy) = self.centers[t.index()];
            for _ in 0..counts[t.index()] {
                let p = vec![cx + noise.sample(&mut rng), cy + noise.sample(&mut rng)];
                points.push((t, FeatureVector::new(p)));
            }
        }
        points.shuffle(&mut rng);
        points.into_iter().unzip()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RepetitionCorpusConfig {
    pub articles: usize,
    /// Edit rates cycled over the planted repetitions.
    pub edit_rates: Vec<f64>,
    /// Fragment length range in characters (inclusive).
    pub fragment_len: (usize, usize),
    /// Filler sentences per article.
    pub filler_sentences: usize,
    /// Label given to the non-repeated distractor fragments.
    pub distractor: Technique,
    pub seed: u64,
}

impl Default for RepetitionCorpusConfig {
    fn default() -> Self {
        RepetitionCorpusConfig {
            articles: 200,
            edit_rates: vec![0.0, 0.10, 0.25],
            fragment_len: (130, 170),
            filler_sentences: 12,
            distractor: Technique::LoadedLanguage,
            seed: 0,
        }
    }
}

/// Articles with their labels and, per label, the edit rate of the planted
/// copy (`None` for distractors).
#[derive(Debug, Clone, PartialEq)]
pub struct RepetitionCorpus {
    pub articles: Vec<Article>,
    pub labels: Vec<Label>,
    pub edit_rates: Vec<Option<f64>>,
}

const LETTERS: &[u8] = b"abcdefghijklmnopqrstuvwxyz";

struct Words {
    vocab: Vec<String>,
}

impl Words {
    fn new(rng: &mut ChaCha8Rng, size: usize) -> Self {
        let vocab = (0..size)
            .map(|_| {
                let len = rng.gen_range(2..=9);
                (0..len)
                    .map(|_| LETTERS[rng.gen_range(0..LETTERS.len())] as char)
                    .collect()
            })
            .collect();
        Words { vocab }
    }

    /// Words joined by spaces until at least `target` characters.
    fn phrase(&self, rng: &mut ChaCha8Rng, target: usize) -> String {
        let mut s = String::new();
        while s.len() < target {
            if !s.is_empty() {
                s.push(' ');
            }
            s.push_str(self.vocab.choose(rng).unwrap());
        }
        s
    }

    fn sentence(&self, rng: &mut ChaCha8Rng) -> String {
        let target = rng.gen_range(40..120);
        let mut s = self.phrase(rng, target);
        s.push('.');
        s
    }
}

/// Substitutes, deletes or inserts a random letter at each position with
/// probability `rate`.
fn edit(text: &str, rate: f64, rng: &mut ChaCha8Rng) -> String {
    let mut out = String::with_capacity(text.len() + 8);
    for c in text.chars() {
        if rng.gen_bool(rate) {
            let letter = LETTERS[rng.gen_range(0..LETTERS.len())] as char;
            match rng.gen_range(0..3) {
                0 => out.push(letter),
                1 => {}
                _ => {
                    out.push(c);
                    out.push(letter);
                }
            }
        } else {
            out.push(c);
        }
    }
    out
}

/// Each article holds one planted repetition (a fragment plus an edited
/// copy elsewhere) and one distractor fragment that occurs only once.
pub fn repetition_corpus(config: &RepetitionCorpusConfig) -> RepetitionCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let words = Words::new(&mut rng, 400);
    let mut corpus = RepetitionCorpus {
        articles: Vec::new(),
        labels: Vec::new(),
        edit_rates: Vec::new(),
    };
    for a in 0..config.articles {
        let id = 1000 + a as u64;
        let rate = config.edit_rates[a % config.edit_rates.len()];
        let (lo, hi) = config.fragment_len;
        let target = rng.gen_range(lo..=hi);
        let planted = words.phrase(&mut rng, target);
        let copy = edit(&planted, rate, &mut rng);
        let target = rng.gen_range(lo..=hi);
        let distractor = words.phrase(&mut rng, target);

        // Sentence slots: filler, two repetition slots and the distractor. The
        // earlier repetition slot holds the labeled fragment, the later its copy.
        let mut kinds: Vec<u8> = vec![0; config.filler_sentences];
        kinds.extend([1, 1, 3]);
        kinds.shuffle(&mut rng);
        let mut seen_repeat = false;
        let pieces: Vec<(u8, String)> = kinds
            .into_iter()
            .map(|k| match k {
                1 if !seen_repeat => {
                    seen_repeat = true;
                    (1, format!("{planted}."))
                }
                1 => (2, format!("{copy}.")),
                3 => (3, format!("{distractor}.")),
                _ => (0, words.sentence(&mut rng)),
            })
            .collect();

        let mut text = String::new();
        let mut offset = 0;
        let mut planted_span = Span::new(0, 0);
        let mut distractor_span = Span::new(0, 0);
        for (kind, piece) in &pieces {
            if !text.is_empty() {
                text.push(' ');
                offset += 1;
            }
            let body = piece.chars().count() - 1;
            match kind {
                1 => planted_span = Span::new(offset, offset + body),
                3 => distractor_span = Span::new(offset, offset + body),
                _ => {}
            }
            text.push_str(piece);
            offset += piece.chars().count();
        }
        corpus.articles.push(Article { id, text });
        corpus.labels.push(Label {
            article_id: id,
            technique: Technique::Repetition,
            span: planted_span,
        });
        corpus.edit_rates.push(Some(rate));
        corpus.labels.push(Label {
            article_id: id,
            technique: config.distractor,
            span: distractor_span,
        });
        corpus.edit_rates.push(None);
    }
    corpus
}
