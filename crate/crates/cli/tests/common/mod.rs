#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use propcascade::corpus::{format_labels, Label, Span};
use propcascade::Technique;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_propcascade"))
}

pub fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub struct TinyCorpus {
    pub dir: tempfile::TempDir,
    pub labels: Vec<Label>,
    /// Span of the fragment that is repeated verbatim later in its article.
    pub repeated: Label,
}

impl TinyCorpus {
    pub fn articles(&self) -> PathBuf {
        self.dir.path().join("articles")
    }

    pub fn labels_path(&self) -> PathBuf {
        self.dir.path().join("labels.tsv")
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

fn word(rng: &mut ChaCha8Rng) -> String {
    let len = rng.gen_range(3..8);
    (0..len).map(|_| (b'a' + rng.gen_range(0..26)) as char).collect()
}

/// One article per technique, each with four labeled sentences drawn from a
/// technique-specific vocabulary. The Repetition article also repeats its
/// first fragment verbatim in a closing sentence.
pub fn tiny_corpus(seed: u64) -> TinyCorpus {
    let dir = tempfile::tempdir().unwrap();
    let articles = dir.path().join("articles");
    fs::create_dir(&articles).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels = Vec::new();
    let mut repeated = None;
    for t in Technique::ALL {
        let id = 7000 + t.index() as u64;
        let vocab: Vec<String> = (0..10).map(|_| word(&mut rng)).collect();
        let mut text = String::new();
        let mut first_fragment = None;
        for _ in 0..4 {
            let filler: Vec<&str> = (0..3).map(|_| vocab.choose(&mut rng).unwrap().as_str()).collect();
            let fragment: Vec<&str> = (0..4).map(|_| vocab.choose(&mut rng).unwrap().as_str()).collect();
            let fragment = fragment.join(" ");
            text.push_str("Then ");
            let start = text.chars().count();
            text.push_str(&fragment);
            let end = text.chars().count();
            text.push(' ');
            text.push_str(&filler.join(" "));
            text.push_str(". ");
            let label = Label {
                article_id: id,
                technique: t,
                span: Span::new(start, end),
            };
            labels.push(label);
            first_fragment.get_or_insert((fragment, label));
        }
        if t == Technique::Repetition {
            let (fragment, label) = first_fragment.unwrap();
            text.push_str(&format!("Again: {fragment}!"));
            repeated = Some(label);
        }
        fs::write(articles.join(format!("article{id}.txt")), text).unwrap();
    }
    fs::write(dir.path().join("labels.tsv"), format_labels(&labels)).unwrap();
    TinyCorpus {
        dir,
        labels,
        repeated: repeated.unwrap(),
    }
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// `train` on the tiny corpus with small settings.
pub fn train_args(corpus: &TinyCorpus, models: &str) -> Vec<String> {
    vec![
        "train".into(),
        "--articles".into(),
        path_str(&corpus.articles()).into(),
        "--labels".into(),
        path_str(&corpus.labels_path()).into(),
        "--models".into(),
        models.into(),
        "--ngram-dim".into(),
        "1024".into(),
        "--epochs".into(),
        "10".into(),
        "--seed".into(),
        "3".into(),
    ]
}
