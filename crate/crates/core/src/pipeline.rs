//! The train / predict / evaluate / sweep workflows behind the CLI.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::base_model::{load_external_scores, train_softmax, BaseSources, TrainReport};
use crate::cascade::{Cascade, CascadeDecision, CascadeInput, InstanceError};
use crate::config::{require, RunConfig};
use crate::corpus::{
    build_span_instances, load_articles, load_labels, load_spans, write_predictions, Article, Instance, Label,
    SpanRecord,
};
use crate::error::{Error, Result};
use crate::eval::{format_sweep_csv, per_class_f1, slope_grid, sweep_slope, ScoreReport, SweepItem};
use crate::featurizer::{featurize, load_embeddings, FeatureSource, FeatureVector, NgramConfig};
use crate::minority::train_bank;
use crate::persist::{
    format_ngram_config, load_bank, load_softmax, parse_ngram_config, write_bank, write_softmax, BASE_MODEL_FILE,
    FEATURIZER_FILE, MINORITY_MODEL_FILE,
};
use crate::technique::Technique;

/// Two views of each span: one with the featurization context, one with the
/// context the repetition detector scans.
pub struct Dataset {
    pub records: Vec<SpanRecord>,
    pub feature_view: Vec<Instance>,
    pub repetition_view: Vec<Instance>,
}

pub fn load_dataset(cfg: &RunConfig) -> Result<Dataset> {
    let articles: Vec<Article> = load_articles(require(&cfg.articles, "articles")?)?;
    let records = load_spans(require(&cfg.labels, "labels")?)?;
    dataset_from(&articles, records, cfg)
}

pub fn dataset_from(articles: &[Article], records: Vec<SpanRecord>, cfg: &RunConfig) -> Result<Dataset> {
    let feature_view = build_span_instances(articles, &records, cfg.context)?;
    let repetition_view = build_span_instances(articles, &records, cfg.repetition_context)?;
    Ok(Dataset {
        records,
        feature_view,
        repetition_view,
    })
}

/// Features for every instance, plus how many fell back to hashing because
/// the embedding table lacked their row.
pub fn featurize_all(
    instances: &[Instance],
    cfg: &RunConfig,
    ngram: &NgramConfig,
) -> Result<(Vec<FeatureVector>, usize)> {
    let table = cfg.embeddings.as_deref().map(load_embeddings).transpose()?;
    let featurized: Vec<_> = instances
        .par_iter()
        .map(|i| featurize(i, table.as_ref(), ngram))
        .collect();
    let fallbacks = featurized
        .iter()
        .filter(|f| f.source == FeatureSource::HashedFallback)
        .count();
    let vectors: Vec<FeatureVector> = featurized.into_iter().map(|f| f.vector).collect();
    if let Some(v) = vectors.iter().find(|v| v.dim() != vectors[0].dim()) {
        return Err(Error::Config(format!(
            "mixed feature dimensions {} and {}: the embedding table is missing rows \
             ({fallbacks} instances fell back to hashed n-grams)",
            vectors[0].dim(),
            v.dim()
        )));
    }
    Ok((vectors, fallbacks))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSummary {
    pub instances: usize,
    pub feature_dim: usize,
    pub hashed_fallbacks: usize,
    /// `None` when external scores cover every instance.
    pub base: Option<TrainReport>,
    pub minority_classifiers: usize,
}

impl std::fmt::Display for TrainSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "instances: {}", self.instances)?;
        writeln!(f, "feature dim: {}", self.feature_dim)?;
        if self.hashed_fallbacks > 0 {
            writeln!(f, "hashed fallbacks: {}", self.hashed_fallbacks)?;
        }
        match &self.base {
            Some(r) => writeln!(
                f,
                "base softmax: {} epochs, final loss {:.6}",
                r.epoch_losses.len(),
                r.epoch_losses.last().copied().unwrap_or(f64::NAN)
            )?,
            None => writeln!(f, "base softmax: skipped, external scores cover all instances")?,
        }
        write!(f, "minority classifiers: {}", self.minority_classifiers)
    }
}

fn golds(dataset: &Dataset) -> Result<Vec<Technique>> {
    dataset
        .records
        .iter()
        .map(|r| {
            r.gold
                .ok_or_else(|| Error::TrainingData(format!("instance {} has no gold technique", r.key)))
        })
        .collect()
}

pub fn train(cfg: &RunConfig) -> Result<TrainSummary> {
    let models = require(&cfg.models, "models")?;
    let dataset = load_dataset(cfg)?;
    let golds = golds(&dataset)?;
    let (features, fallbacks) = featurize_all(&dataset.feature_view, cfg, &cfg.ngram)?;

    let scores = cfg.base_scores.as_deref().map(load_external_scores).transpose()?;
    let covered = scores
        .as_ref()
        .is_some_and(|s| dataset.records.iter().all(|r| s.contains_key(&r.key)));

    fs::create_dir_all(models).map_err(|e| Error::io(models, e))?;
    let featurizer_path = models.join(FEATURIZER_FILE);
    fs::write(&featurizer_path, format_ngram_config(&cfg.ngram)).map_err(|e| Error::io(&featurizer_path, e))?;

    let base_path = models.join(BASE_MODEL_FILE);
    let base = if covered {
        if base_path.exists() {
            fs::remove_file(&base_path).map_err(|e| Error::io(&base_path, e))?;
        }
        None
    } else {
        let (model, report) = train_softmax(&golds, &features, &cfg.train)?;
        write_softmax(&base_path, &model)?;
        Some(report)
    };

    let bank = train_bank(&golds, &features, &cfg.minority())?;
    write_bank(models.join(MINORITY_MODEL_FILE), &bank)?;

    Ok(TrainSummary {
        instances: golds.len(),
        feature_dim: features.first().map_or(0, |f| f.dim()),
        hashed_fallbacks: fallbacks,
        base,
        minority_classifiers: bank.ensembles().iter().map(|e| e.members().len()).sum(),
    })
}

/// Loads trained components and external scores into a cascade, along with
/// the featurizer settings used at training time.
pub fn load_cascade(cfg: &RunConfig) -> Result<(Cascade, NgramConfig)> {
    let models = require(&cfg.models, "models")?;
    let base_path = models.join(BASE_MODEL_FILE);
    let model = if base_path.exists() {
        Some(load_softmax(&base_path)?)
    } else {
        None
    };
    let scores = cfg.base_scores.as_deref().map(load_external_scores).transpose()?;
    let base = BaseSources { scores, model };
    if base.is_empty() {
        return Err(Error::Config(format!(
            "no base model in {} and no --base-scores given",
            models.display()
        )));
    }
    let bank_path = models.join(MINORITY_MODEL_FILE);
    if !bank_path.exists() {
        return Err(Error::Config(format!(
            "no minority models in {}; run `train` first",
            models.display()
        )));
    }
    let bank = load_bank(&bank_path, cfg.theta, cfg.aggregation)?;
    let featurizer_path = models.join(FEATURIZER_FILE);
    let ngram = match fs::read_to_string(&featurizer_path) {
        Ok(data) => parse_ngram_config(&data, &featurizer_path)?,
        Err(_) => cfg.ngram,
    };
    Ok((
        Cascade {
            base,
            bank,
            repetition: cfg.repetition(),
        },
        ngram,
    ))
}

pub struct PredictOutcome {
    pub decisions: Vec<std::result::Result<CascadeDecision, InstanceError>>,
    pub predictions: Vec<Label>,
}

impl PredictOutcome {
    pub fn errors(&self) -> impl Iterator<Item = &InstanceError> {
        self.decisions.iter().filter_map(|d| d.as_ref().err())
    }
}

fn provenance_line(out: &mut String, record: &SpanRecord, d: &CascadeDecision) {
    let base = d.base_dist.argmax();
    let (mt, mc) = match d.minority_hit {
        Some((t, c)) => (t.wire_name(), format!("{c:.6}")),
        None => ("-", "-".to_string()),
    };
    let r = &d.repetition_report;
    let _ = writeln!(
        out,
        "{}\t{}\t{}\t{}\t{:.6}\t{}\t{}\t{}\t{:.6}\t{:.6}\t{}:{}",
        record.key,
        d.technique,
        d.stage.as_str(),
        base,
        d.base_dist.prob(base),
        mt,
        mc,
        r.fired,
        r.best_percent,
        r.tau,
        r.best_window.start,
        r.best_window.end
    );
}

const PROVENANCE_HEADER: &str =
    "key\ttechnique\tstage\tbase_argmax\tbase_prob\tminority\tminority_conf\trepetition_fired\tbest_percent\ttau\tbest_window\n";

pub fn predict(cfg: &RunConfig) -> Result<PredictOutcome> {
    let out = require(&cfg.out, "out")?;
    let (cascade, ngram) = load_cascade(cfg)?;
    let dataset = load_dataset(cfg)?;
    let (features, _) = featurize_all(&dataset.feature_view, cfg, &ngram)?;
    let inputs: Vec<CascadeInput<'_>> = dataset
        .repetition_view
        .iter()
        .zip(&features)
        .map(|(instance, feature)| CascadeInput { instance, feature })
        .collect();
    let decisions = cascade.classify_batch(&inputs)?;

    let mut predictions = Vec::new();
    let mut provenance = String::from(PROVENANCE_HEADER);
    for (record, decision) in dataset.records.iter().zip(&decisions) {
        if let Ok(d) = decision {
            predictions.push(Label {
                article_id: record.key.article_id,
                technique: d.technique,
                span: record.key.span,
            });
            provenance_line(&mut provenance, record, d);
        }
    }
    write_predictions(out, &predictions)?;
    if let Some(p) = &cfg.provenance {
        fs::write(p, provenance).map_err(|e| Error::io(p, e))?;
    }
    Ok(PredictOutcome { decisions, predictions })
}

/// Scores `--predictions` against the gold `--labels`, writing the report
/// to `--out` when given.
pub fn evaluate(cfg: &RunConfig) -> Result<ScoreReport> {
    let predictions = load_labels(require(&cfg.predictions, "predictions")?)?;
    let golds = load_labels(require(&cfg.labels, "labels")?)?;
    let report = per_class_f1(&predictions, &golds)?;
    if let Some(out) = &cfg.out {
        report.write_tsv(out)?;
    }
    Ok(report)
}

/// Computes the slope-independent stage outputs once.
pub fn sweep_items(cascade: &Cascade, dataset: &Dataset, features: &[FeatureVector]) -> Result<Vec<SweepItem>> {
    let golds = golds(dataset)?;
    dataset
        .repetition_view
        .par_iter()
        .zip(features)
        .zip(&golds)
        .map(|((instance, feature), gold)| {
            let input = CascadeInput { instance, feature };
            let (base_dist, _) = cascade.base_stage(input)?;
            Ok(SweepItem {
                instance: instance.clone(),
                base_dist,
                minority_hit: cascade.bank.predict(feature)?,
                gold: *gold,
            })
        })
        .collect()
}

pub fn sweep(cfg: &RunConfig) -> Result<Vec<(f64, f64)>> {
    let out = require(&cfg.out, "out")?;
    let grid = slope_grid(cfg.m_min, cfg.m_max, cfg.step)?;
    let (cascade, ngram) = load_cascade(cfg)?;
    let dataset = load_dataset(cfg)?;
    let (features, _) = featurize_all(&dataset.feature_view, cfg, &ngram)?;
    let items = sweep_items(&cascade, &dataset, &features)?;
    let rows = sweep_slope(&items, &cascade.repetition, &grid)?;
    write_text(out, &format_sweep_csv(&rows))?;
    Ok(rows)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
