//! Precedence: repetition overrides minority, which overrides the base
//! prediction.

use rayon::prelude::*;

use crate::base_model::{BaseSource, BaseSources, Distribution};
use crate::corpus::{Instance, InstanceKey};
use crate::error::{Error, Result};
use crate::featurizer::FeatureVector;
use crate::minority::MinorityBank;
use crate::repetition::{detect_repetition, MatchReport, RepetitionConfig};
use crate::technique::Technique;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Base,
    Minority,
    Repetition,
}

impl Stage {
    pub fn as_str(&self) -> &'static str {
        match self {
            Stage::Base => "base",
            Stage::Minority => "minority",
            Stage::Repetition => "repetition",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CascadeDecision {
    pub technique: Technique,
    pub stage: Stage,
    pub base_dist: Distribution,
    pub minority_hit: Option<(Technique, f64)>,
    pub repetition_report: MatchReport,
}

impl CascadeDecision {
    /// Checks the provenance invariants; returns the first violation.
    pub fn check(&self) -> std::result::Result<(), String> {
        let rep = self.repetition_report.fired;
        match self.stage {
            Stage::Repetition if !rep || self.technique != Technique::Repetition => {
                Err("repetition stage without a fired repetition report".into())
            }
            Stage::Minority => match self.minority_hit {
                Some((t, _)) if !rep && t == self.technique => Ok(()),
                _ => Err("minority stage inconsistent with minority hit or repetition report".into()),
            },
            Stage::Base if rep || self.minority_hit.is_some() || self.technique != self.base_dist.argmax() => {
                Err("base stage although an override fired or technique is not the base argmax".into())
            }
            _ => Ok(()),
        }
    }
}

/// Applies the precedence rule to already computed stage outputs.
pub fn resolve(
    base_dist: Distribution,
    minority_hit: Option<(Technique, f64)>,
    repetition_report: MatchReport,
) -> CascadeDecision {
    let (technique, stage) = if repetition_report.fired {
        (Technique::Repetition, Stage::Repetition)
    } else if let Some((t, _)) = minority_hit {
        (t, Stage::Minority)
    } else {
        (base_dist.argmax(), Stage::Base)
    };
    CascadeDecision {
        technique,
        stage,
        base_dist,
        minority_hit,
        repetition_report,
    }
}

/// Everything stages two and three need, trained or configured once.
#[derive(Debug, Clone)]
pub struct Cascade {
    pub base: BaseSources,
    pub bank: MinorityBank,
    pub repetition: RepetitionConfig,
}

/// One instance to classify. `instance` provides the repetition context;
/// `feature` feeds the base model and the minority bank.
#[derive(Debug, Clone, Copy)]
pub struct CascadeInput<'a> {
    pub instance: &'a Instance,
    pub feature: &'a FeatureVector,
}

#[derive(Debug, thiserror::Error)]
#[error("instance {key}: {source}")]
pub struct InstanceError {
    pub key: InstanceKey,
    #[source]
    pub source: Error,
}

impl Cascade {
    pub fn base_stage(&self, input: CascadeInput<'_>) -> Result<(Distribution, BaseSource)> {
        self.base.predict(&input.instance.key(), input.feature)
    }

    pub fn classify(&self, input: CascadeInput<'_>) -> Result<CascadeDecision> {
        let (base_dist, _) = self.base_stage(input)?;
        let minority_hit = self.bank.predict(input.feature)?;
        let report = detect_repetition(input.instance, &self.repetition);
        Ok(resolve(base_dist, minority_hit, report))
    }

    /// Classifies in parallel, keeping input order. Per-instance failures
    /// stay in their slot; the batch only fails when every instance does.
    pub fn classify_batch(
        &self,
        inputs: &[CascadeInput<'_>],
    ) -> Result<Vec<std::result::Result<CascadeDecision, InstanceError>>> {
        let results: Vec<_> = inputs
            .par_iter()
            .map(|input| {
                self.classify(*input).map_err(|source| InstanceError {
                    key: input.instance.key(),
                    source,
                })
            })
            .collect();
        if !results.is_empty() && results.iter().all(|r| r.is_err()) {
            let first = results.into_iter().find_map(|r| r.err()).unwrap();
            return Err(Error::Config(format!("every instance failed, first: {first}")));
        }
        Ok(results)
    }
}

pub fn classify(
    instance: &Instance,
    feature: &FeatureVector,
    base: &BaseSources,
    bank: &MinorityBank,
    rep_config: &RepetitionConfig,
) -> Result<CascadeDecision> {
    let (base_dist, _) = base.predict(&instance.key(), feature)?;
    let minority_hit = bank.predict(feature)?;
    Ok(resolve(
        base_dist,
        minority_hit,
        detect_repetition(instance, rep_config),
    ))
}
