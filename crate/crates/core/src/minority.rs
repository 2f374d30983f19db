//! Stage two: one level-1 ensemble per minority technique, each made of
//! thirteen one-versus-one logistic classifiers (level 2) whose aggregated
//! confidence must clear a gate before the base prediction is overruled.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::base_model::TrainConfig;
use crate::error::{Error, Result};
use crate::featurizer::FeatureVector;
use crate::linear::{derive_seed, sigmoid, sparse, EpochOrder, ScaledWeights};
use crate::technique::Technique;

/// Number of opponents each minority technique is paired against.
pub const ENSEMBLE_SIZE: usize = 13;
pub const DEFAULT_THETA: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Aggregation {
    #[default]
    Mean,
    Min,
}

impl FromStr for Aggregation {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "mean" => Ok(Aggregation::Mean),
            "min" => Ok(Aggregation::Min),
            _ => Err(format!("aggregation {s:?} is not `mean` or `min`")),
        }
    }
}

impl fmt::Display for Aggregation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Aggregation::Mean => "mean",
            Aggregation::Min => "min",
        })
    }
}

/// Binary logistic classifier: minority (positive) versus one opponent.
#[derive(Debug, Clone, PartialEq)]
pub struct Level2Classifier {
    pub minority: Technique,
    pub opponent: Technique,
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl Level2Classifier {
    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// Probability that `feature` is the minority rather than the opponent.
    pub fn confidence(&self, feature: &FeatureVector) -> Result<f64> {
        if feature.dim() != self.dim() {
            return Err(Error::Contract(format!(
                "feature dim {} does not match {}-vs-{} classifier dim {}",
                feature.dim(),
                self.minority,
                self.opponent,
                self.dim()
            )));
        }
        let z: f64 = self.weights.iter().zip(&feature.values).map(|(w, x)| w * x).sum();
        Ok(sigmoid(z + self.bias))
    }
}

pub fn level2_confidence(classifier: &Level2Classifier, feature: &FeatureVector) -> Result<f64> {
    classifier.confidence(feature)
}

pub fn aggregate_confidence(confidences: &[f64], mode: Aggregation) -> Result<f64> {
    if confidences.len() != ENSEMBLE_SIZE {
        return Err(Error::Contract(format!(
            "expected {ENSEMBLE_SIZE} confidences, got {}",
            confidences.len()
        )));
    }
    Ok(match mode {
        Aggregation::Mean => confidences.iter().sum::<f64>() / ENSEMBLE_SIZE as f64,
        Aggregation::Min => confidences.iter().copied().fold(f64::INFINITY, f64::min),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Level1Ensemble {
    minority: Technique,
    /// Sorted by opponent canonical index.
    members: Vec<Level2Classifier>,
    pub theta: f64,
    pub aggregation: Aggregation,
}

impl Level1Ensemble {
    pub fn new(
        minority: Technique,
        mut members: Vec<Level2Classifier>,
        theta: f64,
        aggregation: Aggregation,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&theta) {
            return Err(Error::Config(format!("theta {theta} outside [0,1]")));
        }
        members.sort_by_key(|m| m.opponent);
        let opponents: Vec<Technique> = members.iter().map(|m| m.opponent).collect();
        let expected: Vec<Technique> = Technique::ALL.iter().copied().filter(|t| *t != minority).collect();
        if opponents != expected {
            return Err(Error::Contract(format!(
                "{minority} ensemble must cover each of the other 13 techniques once, got {opponents:?}"
            )));
        }
        if let Some(m) = members.iter().find(|m| m.minority != minority) {
            return Err(Error::Contract(format!(
                "{} classifier placed in the {minority} ensemble",
                m.minority
            )));
        }
        let dim = members[0].dim();
        if members.iter().any(|m| m.dim() != dim) {
            return Err(Error::Contract(format!("{minority} ensemble members disagree on dim")));
        }
        if members
            .iter()
            .any(|m| !m.bias.is_finite() || m.weights.iter().any(|w| !w.is_finite()))
        {
            return Err(Error::Contract(format!(
                "{minority} ensemble has non-finite parameters"
            )));
        }
        Ok(Level1Ensemble {
            minority,
            members,
            theta,
            aggregation,
        })
    }

    pub fn minority(&self) -> Technique {
        self.minority
    }

    pub fn members(&self) -> &[Level2Classifier] {
        &self.members
    }

    pub fn dim(&self) -> usize {
        self.members[0].dim()
    }

    pub fn confidences(&self, feature: &FeatureVector) -> Result<Vec<f64>> {
        self.members.iter().map(|m| m.confidence(feature)).collect()
    }

    pub fn confidence(&self, feature: &FeatureVector) -> Result<f64> {
        aggregate_confidence(&self.confidences(feature)?, self.aggregation)
    }
}

/// The five level-1 ensembles, in canonical minority order.
#[derive(Debug, Clone, PartialEq)]
pub struct MinorityBank {
    ensembles: Vec<Level1Ensemble>,
}

impl MinorityBank {
    pub fn new(mut ensembles: Vec<Level1Ensemble>) -> Result<Self> {
        ensembles.sort_by_key(|e| e.minority);
        let got: Vec<Technique> = ensembles.iter().map(|e| e.minority).collect();
        if got != Technique::MINORITY {
            return Err(Error::Contract(format!(
                "bank must hold one ensemble per minority technique, got {got:?}"
            )));
        }
        Ok(MinorityBank { ensembles })
    }

    pub fn ensembles(&self) -> &[Level1Ensemble] {
        &self.ensembles
    }

    /// Applies one gate and aggregation rule to every ensemble.
    pub fn with_gate(mut self, theta: f64, aggregation: Aggregation) -> Result<Self> {
        if !(0.0..=1.0).contains(&theta) {
            return Err(Error::Config(format!("theta {theta} outside [0,1]")));
        }
        for e in &mut self.ensembles {
            e.theta = theta;
            e.aggregation = aggregation;
        }
        Ok(self)
    }

    /// Aggregated confidence of each ensemble, in canonical minority order.
    pub fn scores(&self, feature: &FeatureVector) -> Result<Vec<(Technique, f64)>> {
        self.ensembles
            .iter()
            .map(|e| Ok((e.minority, e.confidence(feature)?)))
            .collect()
    }

    /// The most confident ensemble clearing its gate, if any. Ties go to the
    /// lower canonical index.
    pub fn predict(&self, feature: &FeatureVector) -> Result<Option<(Technique, f64)>> {
        let mut best: Option<(Technique, f64)> = None;
        for (e, (t, conf)) in self.ensembles.iter().zip(self.scores(feature)?) {
            if conf >= e.theta && best.is_none_or(|(_, b)| conf > b) {
                best = Some((t, conf));
            }
        }
        Ok(best)
    }
}

pub fn minority_predict(bank: &MinorityBank, feature: &FeatureVector) -> Result<Option<(Technique, f64)>> {
    bank.predict(feature)
}

/// Pads `positives` with draws (with replacement) from itself until it is
/// as large as `negatives`. Larger positive sets are returned unchanged.
pub fn balance_with_oversampling<T: Clone>(positives: &[T], negatives: &[T], seed: u64) -> Result<(Vec<T>, Vec<T>)> {
    if positives.is_empty() {
        return Err(Error::TrainingData("no positive examples to oversample".into()));
    }
    if negatives.is_empty() {
        return Err(Error::TrainingData("no negative examples".into()));
    }
    let mut balanced = positives.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while balanced.len() < negatives.len() {
        balanced.push(positives[rng.gen_range(0..positives.len())].clone());
    }
    Ok((balanced, negatives.to_vec()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinorityConfig {
    pub theta: f64,
    pub aggregation: Aggregation,
    pub train: TrainConfig,
}

impl Default for MinorityConfig {
    fn default() -> Self {
        MinorityConfig {
            theta: DEFAULT_THETA,
            aggregation: Aggregation::Mean,
            train: TrainConfig::default(),
        }
    }
}

fn pair_seed(seed: u64, minority: Technique, opponent: Technique) -> u64 {
    derive_seed(seed, minority.index() as u64 + 1, opponent.index() as u64 + 1)
}

/// Trains the minority-versus-opponent classifier on the oversampled pair
/// subset of `(golds, features)`. The RNG depends only on the config seed
/// and the pair, so members can be trained in any order.
pub fn train_level2(
    golds: &[Technique],
    features: &[FeatureVector],
    minority: Technique,
    opponent: Technique,
    config: &TrainConfig,
) -> Result<Level2Classifier> {
    if minority == opponent {
        return Err(Error::Contract(format!("{minority} cannot be its own opponent")));
    }
    if golds.len() != features.len() {
        return Err(Error::Contract(format!(
            "{} labels but {} feature vectors",
            golds.len(),
            features.len()
        )));
    }
    config.validate()?;
    let pick = |t: Technique| -> Vec<usize> {
        golds
            .iter()
            .enumerate()
            .filter(|(_, g)| **g == t)
            .map(|(i, _)| i)
            .collect()
    };
    let (pos, neg) = (pick(minority), pick(opponent));
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::TrainingData(format!(
            "{minority} vs {opponent}: {} and {} examples, need at least one of each",
            pos.len(),
            neg.len()
        )));
    }
    let dim = features[pos[0]].dim();
    if let Some(&i) = pos.iter().chain(&neg).find(|&&i| features[i].dim() != dim) {
        return Err(Error::Contract(format!(
            "feature dims disagree: {dim} and {}",
            features[i].dim()
        )));
    }

    let seed = pair_seed(config.seed, minority, opponent);
    let (pos, neg) = balance_with_oversampling(&pos, &neg, seed)?;
    let samples: Vec<(Vec<(usize, f64)>, f64)> = pos
        .iter()
        .map(|&i| (sparse(&features[i]), 1.0))
        .chain(neg.iter().map(|&i| (sparse(&features[i]), 0.0)))
        .collect();

    let mut w = ScaledWeights::zeros(dim);
    let mut bias = 0.0;
    let decay = 1.0 - config.learning_rate * config.l2;
    let mut order = EpochOrder::new(samples.len(), seed.wrapping_add(1), config.shuffle);
    for _ in 0..config.epochs {
        for &i in order.next_epoch() {
            let (x, y) = &samples[i];
            let g = sigmoid(w.dot(x) + bias) - y;
            w.decay(decay);
            w.add(x, -config.learning_rate * g);
            bias -= config.learning_rate * g;
        }
    }
    Ok(Level2Classifier {
        minority,
        opponent,
        weights: w.into_dense(),
        bias,
    })
}

/// Trains all 5 x 13 level-2 classifiers in parallel.
pub fn train_bank(golds: &[Technique], features: &[FeatureVector], config: &MinorityConfig) -> Result<MinorityBank> {
    let pairs: Vec<(Technique, Technique)> = Technique::MINORITY
        .iter()
        .flat_map(|&m| Technique::ALL.iter().filter(move |&&o| o != m).map(move |&o| (m, o)))
        .collect();
    let members: Vec<Level2Classifier> = pairs
        .par_iter()
        .map(|&(m, o)| train_level2(golds, features, m, o, &config.train))
        .collect::<Result<_>>()?;
    let ensembles = members
        .chunks(ENSEMBLE_SIZE)
        .map(|chunk| Level1Ensemble::new(chunk[0].minority, chunk.to_vec(), config.theta, config.aggregation))
        .collect::<Result<Vec<_>>>()?;
    MinorityBank::new(ensembles)
}
