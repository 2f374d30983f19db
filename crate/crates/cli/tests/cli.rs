mod common;

use std::fs;

use common::*;
use propcascade::corpus::load_labels;
use propcascade::Technique;

fn ok(out: &std::process::Output) {
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn trained(seed: u64) -> (TinyCorpus, String) {
    let corpus = tiny_corpus(seed);
    let models = path_str(&corpus.path("models")).to_string();
    let out = bin().args(train_args(&corpus, &models)).output().unwrap();
    ok(&out);
    (corpus, models)
}

#[test]
fn train_populates_model_dir() {
    let (_corpus, models) = trained(1);
    for f in ["base.model", "minority.model", "featurizer.conf"] {
        assert!(std::path::Path::new(&models).join(f).exists(), "{f} missing");
    }
}

#[test]
fn train_reports_missing_article() {
    let corpus = tiny_corpus(2);
    fs::write(corpus.labels_path(), "999\tDoubt\t0\t4\n").unwrap();
    let models = path_str(&corpus.path("models")).to_string();
    let out = bin().args(train_args(&corpus, &models)).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("article 999 not found"));
}

#[test]
fn predict_marks_planted_repetition() {
    let (corpus, models) = trained(3);
    let pred = corpus.path("pred.tsv");
    let prov = corpus.path("prov.tsv");
    let out = run(&[
        "predict",
        "--articles",
        path_str(&corpus.articles()),
        "--labels",
        path_str(&corpus.labels_path()),
        "--models",
        &models,
        "--out",
        path_str(&pred),
        "--provenance",
        path_str(&prov),
    ]);
    ok(&out);
    let predictions = load_labels(&pred).unwrap();
    assert_eq!(predictions.len(), corpus.labels.len());
    let hit = predictions.iter().find(|p| p.key() == corpus.repeated.key()).unwrap();
    assert_eq!(hit.technique, Technique::Repetition);

    let prov = fs::read_to_string(&prov).unwrap();
    let line = prov
        .lines()
        .find(|l| l.starts_with(&format!("{}\t", corpus.repeated.key())))
        .unwrap();
    let cols: Vec<&str> = line.split('\t').collect();
    assert_eq!(cols[1], "Repetition");
    assert_eq!(cols[2], "repetition");
    assert!(prov.lines().all(|l| l.split('\t').count() == 11));
}

#[test]
fn predict_without_models_or_scores_fails() {
    let corpus = tiny_corpus(4);
    let empty = corpus.path("empty-models");
    fs::create_dir(&empty).unwrap();
    let out = run(&[
        "predict",
        "--articles",
        path_str(&corpus.articles()),
        "--labels",
        path_str(&corpus.labels_path()),
        "--models",
        path_str(&empty),
        "--out",
        path_str(&corpus.path("pred.tsv")),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("configuration"));
}

#[test]
fn predict_accepts_unlabeled_spans_and_external_scores() {
    let (corpus, models) = trained(5);
    // Same spans, technique column replaced by `?`.
    let spans: String = corpus
        .labels
        .iter()
        .map(|l| format!("{}\t?\t{}\t{}\n", l.article_id, l.span.start, l.span.end))
        .collect();
    let spans_path = corpus.path("spans.tsv");
    fs::write(&spans_path, spans).unwrap();
    let target = corpus.labels[0];
    let mut row = vec!["0".to_string(); 14];
    row[Technique::Slogans.index()] = "1".into();
    let scores = corpus.path("scores.txt");
    fs::write(&scores, format!("dim=14\n{}\t{}\n", target.key(), row.join(","))).unwrap();
    let pred = corpus.path("pred.tsv");
    let out = run(&[
        "predict",
        "--articles",
        path_str(&corpus.articles()),
        "--labels",
        path_str(&spans_path),
        "--models",
        &models,
        "--base-scores",
        path_str(&scores),
        "--theta",
        "1.0",
        "--out",
        path_str(&pred),
    ]);
    ok(&out);
    let predictions = load_labels(&pred).unwrap();
    assert_eq!(predictions[0].technique, Technique::Slogans);
}

#[test]
fn evaluate_reports() {
    let corpus = tiny_corpus(6);
    let report = corpus.path("report.tsv");
    let labels = corpus.labels_path();
    let out = run(&[
        "evaluate",
        "--labels",
        path_str(&labels),
        "--predictions",
        path_str(&labels),
        "--out",
        path_str(&report),
    ]);
    ok(&out);
    assert!(String::from_utf8_lossy(&out.stdout).contains("micro-F1 1.000000"));
    let text = fs::read_to_string(&report).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 14 + 1);
    assert!(rows[14].starts_with("Total\t"));

    let other = corpus.path("other.tsv");
    fs::write(&other, "1\tDoubt\t0\t3\n").unwrap();
    let out = run(&[
        "evaluate",
        "--labels",
        path_str(&labels),
        "--predictions",
        path_str(&other),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("alignment"));
}

#[test]
fn sweep_grid_and_usage_errors() {
    let (corpus, models) = trained(7);
    let csv = corpus.path("sweep.csv");
    let args = |step: &str| {
        run(&[
            "sweep",
            "--articles",
            path_str(&corpus.articles()),
            "--labels",
            path_str(&corpus.labels_path()),
            "--models",
            &models,
            "--out",
            path_str(&csv),
            "--m-min",
            "0.0",
            "--m-max",
            "0.5",
            "--step",
            step,
        ])
    };
    ok(&args("0.1"));
    let text = fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "m,micro_f1");
    assert_eq!(lines.len(), 1 + 6);
    assert_eq!(lines[3].split(',').next(), Some("0.200000"));

    for bad in ["0", "-0.1"] {
        let out = args(bad);
        assert_eq!(out.status.code(), Some(2));
        assert!(String::from_utf8_lossy(&out.stderr).contains("usage"));
    }
}

#[test]
fn flags_override_config_file() {
    let corpus = tiny_corpus(8);
    let conf = corpus.path("run.conf");
    fs::write(
        &conf,
        format!(
            "# evaluation run\nlabels = {}\npredictions = /does/not/exist\n",
            path_str(&corpus.labels_path())
        ),
    )
    .unwrap();
    let out = run(&["evaluate", "--config", path_str(&conf)]);
    assert!(!out.status.success());
    let out = run(&[
        "evaluate",
        "--config",
        path_str(&conf),
        "--predictions",
        path_str(&corpus.labels_path()),
    ]);
    ok(&out);
}

#[test]
fn bad_flag_value_is_rejected() {
    let out = run(&["evaluate", "--aggregation", "median"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("aggregation"));
}
