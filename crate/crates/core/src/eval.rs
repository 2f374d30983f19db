//! Micro-F1 and per-technique precision, recall and F1.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::corpus::{InstanceKey, Label};
use crate::error::{Error, Result};
use crate::technique::{Technique, NUM_TECHNIQUES};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
    /// Predicted count, kept so totals can be recomputed.
    pub predicted: usize,
}

impl ClassScore {
    pub fn zero_support(&self) -> bool {
        self.support == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreReport {
    pub micro_f1: f64,
    pub per_class: [ClassScore; NUM_TECHNIQUES],
}

impl ScoreReport {
    pub fn class(&self, t: Technique) -> &ClassScore {
        &self.per_class[t.index()]
    }

    pub fn total_support(&self) -> usize {
        self.per_class.iter().map(|c| c.support).sum()
    }

    /// Header, one row per technique in canonical order, then a total row
    /// carrying micro-averaged values.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("technique\tprecision\trecall\tf1\tsupport\n");
        for t in Technique::ALL {
            let c = self.class(t);
            out.push_str(&format!(
                "{}\t{:.6}\t{:.6}\t{:.6}\t{}\n",
                t.display_name(),
                c.precision,
                c.recall,
                c.f1,
                c.support
            ));
        }
        out.push_str(&format!(
            "Total\t{0:.6}\t{0:.6}\t{0:.6}\t{1}\n",
            self.micro_f1,
            self.total_support()
        ));
        out
    }

    pub fn write_tsv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_tsv()).map_err(|e| Error::io(path, e))
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Pairs predictions with golds by instance key. Repeated keys (several
/// labels on one span) pair up in order of occurrence.
pub fn align(predictions: &[Label], golds: &[Label]) -> Result<Vec<(Technique, Technique)>> {
    if predictions.len() != golds.len() {
        return Err(Error::Alignment(format!(
            "{} predictions for {} gold labels",
            predictions.len(),
            golds.len()
        )));
    }
    let mut pending: HashMap<InstanceKey, std::collections::VecDeque<Technique>> = HashMap::new();
    for p in predictions {
        pending.entry(p.key()).or_default().push_back(p.technique);
    }
    golds
        .iter()
        .map(|g| {
            pending
                .get_mut(&g.key())
                .and_then(|q| q.pop_front())
                .map(|p| (p, g.technique))
                .ok_or_else(|| Error::Alignment(format!("no prediction for gold instance {}", g.key())))
        })
        .collect()
}

fn check_pairs(pairs: &[(Technique, Technique)]) -> Result<()> {
    if pairs.is_empty() {
        return Err(Error::Contract("metrics are undefined for an empty set".into()));
    }
    Ok(())
}

/// `(predicted, gold)` pairs. With one label each side this is accuracy.
pub fn micro_f1_pairs(pairs: &[(Technique, Technique)]) -> Result<f64> {
    check_pairs(pairs)?;
    let tp = pairs.iter().filter(|(p, g)| p == g).count();
    // Pooled precision and recall share the denominator here.
    let precision = ratio(tp, pairs.len());
    let recall = ratio(tp, pairs.len());
    Ok(harmonic(precision, recall))
}

pub fn per_class_pairs(pairs: &[(Technique, Technique)]) -> Result<ScoreReport> {
    check_pairs(pairs)?;
    let mut tp = [0usize; NUM_TECHNIQUES];
    let mut predicted = [0usize; NUM_TECHNIQUES];
    let mut support = [0usize; NUM_TECHNIQUES];
    for (p, g) in pairs {
        predicted[p.index()] += 1;
        support[g.index()] += 1;
        if p == g {
            tp[p.index()] += 1;
        }
    }
    let per_class = std::array::from_fn(|k| {
        let precision = ratio(tp[k], predicted[k]);
        let recall = ratio(tp[k], support[k]);
        ClassScore {
            precision,
            recall,
            f1: harmonic(precision, recall),
            support: support[k],
            predicted: predicted[k],
        }
    });
    Ok(ScoreReport {
        micro_f1: micro_f1_pairs(pairs)?,
        per_class,
    })
}

pub fn micro_f1(predictions: &[Label], golds: &[Label]) -> Result<f64> {
    micro_f1_pairs(&align(predictions, golds)?)
}

pub fn per_class_f1(predictions: &[Label], golds: &[Label]) -> Result<ScoreReport> {
    per_class_pairs(&align(predictions, golds)?)
}

/// Stage outputs that do not depend on the repetition slope, computed once
/// per instance and reused across a sweep.
#[derive(Debug, Clone)]
pub struct SweepItem {
    pub instance: crate::corpus::Instance,
    pub base_dist: crate::base_model::Distribution,
    pub minority_hit: Option<(Technique, f64)>,
    pub gold: Technique,
}

/// Cascade micro-F1 for each slope in `m_values`, in the given order.
pub fn sweep_slope(
    items: &[SweepItem],
    rep_config: &crate::repetition::RepetitionConfig,
    m_values: &[f64],
) -> Result<Vec<(f64, f64)>> {
    use rayon::prelude::*;
    if m_values.is_empty() {
        return Err(Error::Usage("slope sweep needs at least one value".into()));
    }
    m_values
        .par_iter()
        .map(|&m| {
            let cfg = crate::repetition::RepetitionConfig {
                slope_m: m,
                ..*rep_config
            };
            cfg.validate()?;
            let pairs: Vec<(Technique, Technique)> = items
                .iter()
                .map(|it| {
                    let report = crate::repetition::detect_repetition(&it.instance, &cfg);
                    let decision = crate::cascade::resolve(it.base_dist, it.minority_hit, report);
                    (decision.technique, it.gold)
                })
                .collect();
            Ok((m, micro_f1_pairs(&pairs)?))
        })
        .collect()
}

/// `m_min, m_min + step, ...` up to `m_max` inclusive (with a small
/// allowance for accumulated rounding).
pub fn slope_grid(m_min: f64, m_max: f64, step: f64) -> Result<Vec<f64>> {
    if step.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) || !step.is_finite() {
        return Err(Error::Usage(format!("step {step} must be > 0")));
    }
    if !(m_min.is_finite() && m_max.is_finite()) || m_max < m_min {
        return Err(Error::Usage(format!("empty slope range {m_min}..{m_max}")));
    }
    let n = ((m_max - m_min) / step + 1e-9).floor() as usize + 1;
    Ok((0..n).map(|i| m_min + i as f64 * step).collect())
}

/// `m,micro_f1` CSV with six decimals.
pub fn format_sweep_csv(rows: &[(f64, f64)]) -> String {
    let mut out = String::from("m,micro_f1\n");
    for (m, f1) in rows {
        out.push_str(&format!("{m:.6},{f1:.6}\n"));
    }
    out
}
