//! Stage one: a distribution over all fourteen techniques, from an external
//! score file or a built-in linear softmax model trained by SGD.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::corpus::InstanceKey;
use crate::error::{Error, Result};
use crate::featurizer::{format_row, parse_row_file, FeatureVector};
use crate::linear::{softmax, sparse, EpochOrder, ScaledWeights};
use crate::technique::{Technique, NUM_TECHNIQUES};

const SIMPLEX_TOLERANCE: f64 = 1e-6;
/// Score rows whose sum is this close to one are renormalized, not rejected.
pub const RENORMALIZE_TOLERANCE: f64 = 1e-3;

/// Probabilities over techniques in canonical order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Distribution {
    probs: [f64; NUM_TECHNIQUES],
}

impl Distribution {
    pub fn new(probs: [f64; NUM_TECHNIQUES]) -> Result<Self> {
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0 || *p > 1.0) {
            return Err(Error::Contract(format!("probabilities out of [0,1]: {probs:?}")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(Error::Contract(format!("probabilities sum to {sum}")));
        }
        Ok(Distribution { probs })
    }

    pub fn uniform() -> Self {
        Distribution {
            probs: [1.0 / NUM_TECHNIQUES as f64; NUM_TECHNIQUES],
        }
    }

    /// All mass on one technique.
    pub fn one_hot(t: Technique) -> Self {
        let mut probs = [0.0; NUM_TECHNIQUES];
        probs[t.index()] = 1.0;
        Distribution { probs }
    }

    /// Accepts non-negative scores summing to within
    /// [`RENORMALIZE_TOLERANCE`] of one and rescales them onto the simplex.
    /// Rows whose floating-point sum is exactly one are kept bit for bit.
    pub fn renormalized(scores: [f64; NUM_TECHNIQUES]) -> std::result::Result<Self, String> {
        if let Some(v) = scores.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(format!("score {v} is negative or not finite"));
        }
        let sum: f64 = scores.iter().sum();
        if (sum - 1.0).abs() > RENORMALIZE_TOLERANCE {
            return Err(format!("scores sum to {sum}, not 1"));
        }
        let mut probs = scores;
        if sum != 1.0 {
            probs.iter_mut().for_each(|p| *p /= sum);
        }
        Ok(Distribution { probs })
    }

    pub fn probs(&self) -> &[f64; NUM_TECHNIQUES] {
        &self.probs
    }

    pub fn prob(&self, t: Technique) -> f64 {
        self.probs[t.index()]
    }

    /// Most probable technique; ties go to the lowest canonical index.
    pub fn argmax(&self) -> Technique {
        let mut best = 0;
        for i in 1..NUM_TECHNIQUES {
            if self.probs[i] > self.probs[best] {
                best = i;
            }
        }
        Technique::ALL[best]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
    pub seed: u64,
    pub shuffle: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.1,
            epochs: 30,
            l2: 1e-4,
            seed: 0,
            shuffle: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate {} must be > 0",
                self.learning_rate
            )));
        }
        if self.epochs < 1 {
            return Err(Error::Config("epochs must be >= 1".into()));
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return Err(Error::Config(format!("l2 penalty {} must be >= 0", self.l2)));
        }
        Ok(())
    }
}

/// Per-epoch objective values recorded during training.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainReport {
    pub epoch_losses: Vec<f64>,
}

/// `softmax(W x + b)` over the fourteen techniques.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSoftmaxModel {
    pub dim: usize,
    /// Row-major `14 x dim`, one row per technique.
    pub weights: Vec<f64>,
    pub bias: [f64; NUM_TECHNIQUES],
}

impl LinearSoftmaxModel {
    pub fn zeros(dim: usize) -> Self {
        LinearSoftmaxModel {
            dim,
            weights: vec![0.0; NUM_TECHNIQUES * dim],
            bias: [0.0; NUM_TECHNIQUES],
        }
    }

    pub fn row(&self, t: Technique) -> &[f64] {
        &self.weights[t.index() * self.dim..(t.index() + 1) * self.dim]
    }

    pub fn logits(&self, feature: &FeatureVector) -> Result<[f64; NUM_TECHNIQUES]> {
        if feature.dim() != self.dim {
            return Err(Error::Contract(format!(
                "feature dim {} does not match model dim {}",
                feature.dim(),
                self.dim
            )));
        }
        let mut logits = self.bias;
        for (k, logit) in logits.iter_mut().enumerate() {
            let row = &self.weights[k * self.dim..(k + 1) * self.dim];
            *logit += row.iter().zip(&feature.values).map(|(w, x)| w * x).sum::<f64>();
        }
        Ok(logits)
    }

    pub fn predict_dist(&self, feature: &FeatureVector) -> Result<Distribution> {
        let logits = self.logits(feature)?;
        let mut probs = [0.0; NUM_TECHNIQUES];
        softmax(&logits, &mut probs);
        Ok(Distribution { probs })
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().chain(&self.bias).all(|v| v.is_finite())
    }
}

pub fn predict_dist(model: &LinearSoftmaxModel, feature: &FeatureVector) -> Result<Distribution> {
    model.predict_dist(feature)
}

fn check_training_set(golds: &[Technique], features: &[FeatureVector]) -> Result<usize> {
    if golds.is_empty() {
        return Err(Error::TrainingData("training set is empty".into()));
    }
    if golds.len() != features.len() {
        return Err(Error::Contract(format!(
            "{} labels but {} feature vectors",
            golds.len(),
            features.len()
        )));
    }
    let dim = features[0].dim();
    if let Some(f) = features.iter().find(|f| f.dim() != dim) {
        return Err(Error::Contract(format!("feature dims disagree: {dim} and {}", f.dim())));
    }
    let mut present = [false; NUM_TECHNIQUES];
    golds.iter().for_each(|t| present[t.index()] = true);
    if present.iter().filter(|p| **p).count() < 2 {
        return Err(Error::TrainingData("need instances of at least two techniques".into()));
    }
    Ok(dim)
}

/// Trains by SGD on cross-entropy plus `l2/2 * |W|^2` (bias unpenalized).
pub fn train_softmax(
    golds: &[Technique],
    features: &[FeatureVector],
    config: &TrainConfig,
) -> Result<(LinearSoftmaxModel, TrainReport)> {
    config.validate()?;
    let dim = check_training_set(golds, features)?;
    let rows: Vec<_> = features.iter().map(sparse).collect();
    let mut weights: Vec<ScaledWeights> = (0..NUM_TECHNIQUES).map(|_| ScaledWeights::zeros(dim)).collect();
    let mut bias = [0.0; NUM_TECHNIQUES];
    let decay = 1.0 - config.learning_rate * config.l2;
    let mut order = EpochOrder::new(rows.len(), config.seed, config.shuffle);
    let mut report = TrainReport::default();
    let mut logits = [0.0; NUM_TECHNIQUES];
    let mut probs = [0.0; NUM_TECHNIQUES];

    for _ in 0..config.epochs {
        for &i in order.next_epoch() {
            let x = &rows[i];
            for k in 0..NUM_TECHNIQUES {
                logits[k] = weights[k].dot(x) + bias[k];
            }
            softmax(&logits, &mut probs);
            let gold = golds[i].index();
            for k in 0..NUM_TECHNIQUES {
                let g = probs[k] - if k == gold { 1.0 } else { 0.0 };
                weights[k].decay(decay);
                weights[k].add(x, -config.learning_rate * g);
                bias[k] -= config.learning_rate * g;
            }
        }
        let mut loss = 0.0;
        for (x, gold) in rows.iter().zip(golds) {
            for k in 0..NUM_TECHNIQUES {
                logits[k] = weights[k].dot(x) + bias[k];
            }
            softmax(&logits, &mut probs);
            loss -= probs[gold.index()].max(f64::MIN_POSITIVE).ln();
        }
        loss /= rows.len() as f64;
        loss += 0.5 * config.l2 * weights.iter().map(ScaledWeights::squared_norm).sum::<f64>();
        report.epoch_losses.push(loss);
    }

    let weights = weights.into_iter().flat_map(ScaledWeights::into_dense).collect();
    Ok((LinearSoftmaxModel { dim, weights, bias }, report))
}

/// Parses a base-score file: the embedding row format with `dim=14`,
/// columns in canonical technique order.
pub fn parse_external_scores(data: &str, origin: &Path) -> Result<HashMap<InstanceKey, Distribution>> {
    let file = parse_row_file(data, origin)?;
    if file.dim != NUM_TECHNIQUES {
        return Err(Error::format(
            origin,
            1,
            format!("score files need dim={NUM_TECHNIQUES}, found dim={}", file.dim),
        ));
    }
    if let Some(labels) = &file.labels {
        let canonical: Vec<&str> = Technique::ALL.iter().map(|t| t.wire_name()).collect();
        if *labels != canonical {
            return Err(Error::format(
                origin,
                2,
                format!("column labels {labels:?} are not in canonical order {canonical:?}"),
            ));
        }
    }
    let mut out = HashMap::with_capacity(file.rows.len());
    for (line, key, values) in file.rows {
        let scores: [f64; NUM_TECHNIQUES] = values.try_into().expect("dim checked");
        let dist = Distribution::renormalized(scores).map_err(|e| Error::format(origin, line, e))?;
        out.insert(key, dist);
    }
    Ok(out)
}

pub fn load_external_scores(path: impl AsRef<Path>) -> Result<HashMap<InstanceKey, Distribution>> {
    let path = path.as_ref();
    let data = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_external_scores(&data, path)
}

/// Serializes scores sorted by key, with the canonical `labels=` line.
pub fn format_external_scores(scores: &HashMap<InstanceKey, Distribution>) -> String {
    let mut out = format!("dim={NUM_TECHNIQUES}\nlabels=");
    let names: Vec<&str> = Technique::ALL.iter().map(|t| t.wire_name()).collect();
    out.push_str(&names.join("\t"));
    out.push('\n');
    let mut keys: Vec<_> = scores.keys().collect();
    keys.sort();
    for key in keys {
        out.push_str(&format_row(key, scores[key].probs()));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaseSource {
    ExternalScores,
    Model,
}

/// Whatever stage-one sources are configured. External scores win.
#[derive(Debug, Clone, Default)]
pub struct BaseSources {
    pub scores: Option<HashMap<InstanceKey, Distribution>>,
    pub model: Option<LinearSoftmaxModel>,
}

impl BaseSources {
    pub fn is_empty(&self) -> bool {
        self.scores.is_none() && self.model.is_none()
    }

    pub fn covers(&self, key: &InstanceKey) -> bool {
        self.model.is_some() || self.scores.as_ref().is_some_and(|s| s.contains_key(key))
    }

    pub fn predict(&self, key: &InstanceKey, feature: &FeatureVector) -> Result<(Distribution, BaseSource)> {
        if let Some(dist) = self.scores.as_ref().and_then(|s| s.get(key)) {
            return Ok((*dist, BaseSource::ExternalScores));
        }
        match &self.model {
            Some(model) => Ok((model.predict_dist(feature)?, BaseSource::Model)),
            None => Err(Error::Config(format!(
                "no base score row and no trained model for instance {key}"
            ))),
        }
    }
}

pub fn base_predict(
    key: &InstanceKey,
    sources: &BaseSources,
    feature: &FeatureVector,
) -> Result<(Distribution, BaseSource)> {
    sources.predict(key, feature)
}
