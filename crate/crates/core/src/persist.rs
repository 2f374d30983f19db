//! Text formats for trained models.
//!
//! Floats are written in scientific notation with 17 significant digits,
//! which reads back to the identical `f64`.

use std::fs;
use std::path::Path;

use crate::base_model::LinearSoftmaxModel;
use crate::error::{Error, Result};
use crate::featurizer::NgramConfig;
use crate::minority::{Aggregation, Level1Ensemble, Level2Classifier, MinorityBank};
use crate::technique::{Technique, NUM_TECHNIQUES};

pub const BASE_MODEL_FILE: &str = "base.model";
pub const MINORITY_MODEL_FILE: &str = "minority.model";
pub const FEATURIZER_FILE: &str = "featurizer.conf";

fn float(v: f64) -> String {
    format!("{v:.16e}")
}

fn floats(values: &[f64]) -> String {
    values.iter().map(|v| float(*v)).collect::<Vec<_>>().join(",")
}

fn parse_floats(s: &str, origin: &Path, line: usize) -> Result<Vec<f64>> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|v| {
            v.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Error::format(origin, line, format!("bad number {v:?}")))
        })
        .collect()
}

fn parse_technique(s: &str, origin: &Path, line: usize) -> Result<Technique> {
    s.parse()
        .map_err(|e: crate::technique::UnknownTechnique| Error::format(origin, line, e.to_string()))
}

/// One block per classifier: `minority<TAB>opponent<TAB>dim`, the weights,
/// then the bias. Blocks are separated by a blank line.
pub fn format_bank(bank: &MinorityBank) -> String {
    let mut out = String::new();
    for e in bank.ensembles() {
        for c in e.members() {
            out.push_str(&format!("{}\t{}\t{}\n", c.minority, c.opponent, c.dim()));
            out.push_str(&floats(&c.weights));
            out.push('\n');
            out.push_str(&float(c.bias));
            out.push_str("\n\n");
        }
    }
    out
}

/// Reads a bank. Gates are not stored; `theta` and `aggregation` apply to
/// every ensemble.
pub fn parse_bank(data: &str, origin: &Path, theta: f64, aggregation: Aggregation) -> Result<MinorityBank> {
    let mut lines = data
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty());
    let mut classifiers: Vec<Level2Classifier> = Vec::new();
    while let Some((hline, header)) = lines.next() {
        let cols: Vec<&str> = header.split('\t').collect();
        if cols.len() != 3 {
            return Err(Error::format(origin, hline, "expected `minority<TAB>opponent<TAB>dim`"));
        }
        let minority = parse_technique(cols[0], origin, hline)?;
        let opponent = parse_technique(cols[1], origin, hline)?;
        let dim: usize = cols[2]
            .parse()
            .map_err(|_| Error::format(origin, hline, format!("bad dim {:?}", cols[2])))?;
        let (wline, weights) = lines
            .next()
            .ok_or_else(|| Error::format(origin, hline, "block ends before the weights line"))?;
        let weights = parse_floats(weights, origin, wline)?;
        if weights.len() != dim {
            return Err(Error::format(
                origin,
                wline,
                format!("{} weights, header declares dim {dim}", weights.len()),
            ));
        }
        let (bline, bias) = lines
            .next()
            .ok_or_else(|| Error::format(origin, wline, "block ends before the bias line"))?;
        let bias = match parse_floats(bias, origin, bline)?.as_slice() {
            [b] => *b,
            _ => return Err(Error::format(origin, bline, "expected a single bias value")),
        };
        classifiers.push(Level2Classifier {
            minority,
            opponent,
            weights,
            bias,
        });
    }
    let mut ensembles = Vec::new();
    for m in Technique::MINORITY {
        let members: Vec<_> = classifiers.iter().filter(|c| c.minority == m).cloned().collect();
        if members.is_empty() {
            return Err(Error::format(origin, 0, format!("no classifiers for {m}")));
        }
        ensembles.push(Level1Ensemble::new(m, members, theta, aggregation)?);
    }
    if let Some(c) = classifiers.iter().find(|c| !c.minority.is_minority()) {
        return Err(Error::format(
            origin,
            0,
            format!("{} is not a minority technique", c.minority),
        ));
    }
    MinorityBank::new(ensembles)
}

pub fn write_bank(path: impl AsRef<Path>, bank: &MinorityBank) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_bank(bank)).map_err(|e| Error::io(path, e))
}

pub fn load_bank(path: impl AsRef<Path>, theta: f64, aggregation: Aggregation) -> Result<MinorityBank> {
    let path = path.as_ref();
    let data = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_bank(&data, path, theta, aggregation)
}

/// `dim=<D>` then one `technique<TAB>bias<TAB>weights` line per technique.
pub fn format_softmax(model: &LinearSoftmaxModel) -> String {
    let mut out = format!("dim={}\n", model.dim);
    for t in Technique::ALL {
        out.push_str(&format!(
            "{}\t{}\t{}\n",
            t,
            float(model.bias[t.index()]),
            floats(model.row(t))
        ));
    }
    out
}

pub fn parse_softmax(data: &str, origin: &Path) -> Result<LinearSoftmaxModel> {
    let mut lines = data.lines().enumerate().map(|(i, l)| (i + 1, l));
    let dim = lines
        .next()
        .and_then(|(_, h)| h.strip_prefix("dim="))
        .and_then(|d| d.parse::<usize>().ok())
        .ok_or_else(|| Error::format(origin, 1, "expected `dim=<D>` header"))?;
    let mut model = LinearSoftmaxModel::zeros(dim);
    let mut count = 0;
    for (lineno, line) in lines.filter(|(_, l)| !l.trim().is_empty()) {
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 3 {
            return Err(Error::format(
                origin,
                lineno,
                "expected `technique<TAB>bias<TAB>weights`",
            ));
        }
        let t = parse_technique(cols[0], origin, lineno)?;
        if t.index() != count {
            return Err(Error::format(origin, lineno, format!("{t} out of canonical order")));
        }
        let bias = match parse_floats(cols[1], origin, lineno)?.as_slice() {
            [b] => *b,
            _ => return Err(Error::format(origin, lineno, "bad bias")),
        };
        let weights = parse_floats(cols[2], origin, lineno)?;
        if weights.len() != dim {
            return Err(Error::format(
                origin,
                lineno,
                format!("{} weights, expected {dim}", weights.len()),
            ));
        }
        model.bias[t.index()] = bias;
        model.weights[t.index() * dim..(t.index() + 1) * dim].copy_from_slice(&weights);
        count += 1;
    }
    if count != NUM_TECHNIQUES {
        return Err(Error::format(
            origin,
            0,
            format!("{count} technique rows, expected {NUM_TECHNIQUES}"),
        ));
    }
    Ok(model)
}

pub fn write_softmax(path: impl AsRef<Path>, model: &LinearSoftmaxModel) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_softmax(model)).map_err(|e| Error::io(path, e))
}

pub fn load_softmax(path: impl AsRef<Path>) -> Result<LinearSoftmaxModel> {
    let path = path.as_ref();
    let data = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_softmax(&data, path)
}

pub fn format_ngram_config(c: &NgramConfig) -> String {
    format!(
        "ngram-min = {}\nngram-max = {}\nngram-dim = {}\nngram-seed = {}\n",
        c.n_min, c.n_max, c.dim, c.seed
    )
}

pub fn parse_ngram_config(data: &str, origin: &Path) -> Result<NgramConfig> {
    let map = crate::config::parse_kv(data, origin)?;
    let get = |k: &str| -> Result<u64> {
        let (line, v) = map
            .get(k)
            .ok_or_else(|| Error::format(origin, 0, format!("missing key {k}")))?;
        v.parse()
            .map_err(|_| Error::format(origin, *line, format!("bad value for {k}: {v:?}")))
    };
    let config = NgramConfig {
        n_min: get("ngram-min")? as usize,
        n_max: get("ngram-max")? as usize,
        dim: get("ngram-dim")? as usize,
        seed: get("ngram-seed")?,
    };
    config.validate()?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bank(seed_weights: &[f64]) -> MinorityBank {
        let mut k = 0;
        let ensembles = Technique::MINORITY
            .iter()
            .map(|&m| {
                let members = Technique::ALL
                    .iter()
                    .filter(|&&o| o != m)
                    .map(|&o| {
                        k += 1;
                        let w = seed_weights[k % seed_weights.len()];
                        Level2Classifier {
                            minority: m,
                            opponent: o,
                            weights: vec![w, -w / 3.0, w * 1e-7],
                            bias: w / 7.0,
                        }
                    })
                    .collect();
                Level1Ensemble::new(m, members, 0.9, Aggregation::Min).unwrap()
            })
            .collect();
        MinorityBank::new(ensembles).unwrap()
    }

    #[test]
    fn bank_text_shape() {
        let text = format_bank(&bank(&[1.0]));
        let first: Vec<&str> = text.lines().take(4).collect();
        assert_eq!(first[0], "Appeal_to_Authority\tLoaded_Language\t3");
        assert_eq!(first[2].parse::<f64>().unwrap(), 1.0 / 7.0);
        assert_eq!(first[3], "");
        assert_eq!(text.matches('\n').count(), 65 * 4);
    }

    #[test]
    fn bank_rejects_malformed() {
        let p = Path::new("m");
        assert!(parse_bank("", p, 0.95, Aggregation::Mean).is_err());
        let text = format_bank(&bank(&[1.0]));
        let truncated: String = text.lines().take(10).map(|l| format!("{l}\n")).collect();
        assert!(parse_bank(&truncated, p, 0.95, Aggregation::Mean).is_err());
        let bad_dim = text.replacen("Loaded_Language\t3", "Loaded_Language\t4", 1);
        assert!(matches!(
            parse_bank(&bad_dim, p, 0.95, Aggregation::Mean),
            Err(Error::Format { line: 2, .. })
        ));
        let bad_name = text.replacen("Loaded_Language", "Loaded", 1);
        assert!(matches!(
            parse_bank(&bad_name, p, 0.95, Aggregation::Mean),
            Err(Error::Format { line: 1, .. })
        ));
    }

    #[test]
    fn softmax_rejects_malformed() {
        let p = Path::new("b");
        let model = LinearSoftmaxModel::zeros(2);
        let text = format_softmax(&model);
        assert_eq!(parse_softmax(&text, p).unwrap(), model);
        let short: String = text.lines().take(5).map(|l| format!("{l}\n")).collect();
        assert!(parse_softmax(&short, p).is_err());
        assert!(parse_softmax("dim=x\n", p).is_err());
    }

    #[test]
    fn ngram_config_round_trip() {
        let c = NgramConfig {
            n_min: 1,
            n_max: 4,
            dim: 1024,
            seed: 17,
        };
        assert_eq!(parse_ngram_config(&format_ngram_config(&c), Path::new("f")).unwrap(), c);
    }

    proptest! {
        #[test]
        fn bank_round_trips_exactly(ws in proptest::collection::vec(
            prop_oneof![any::<f64>().prop_filter("finite", |v| v.is_finite()), -1e3f64..1e3], 1..8)) {
            let b = bank(&ws);
            let back = parse_bank(&format_bank(&b), Path::new("m"), 0.9, Aggregation::Min).unwrap();
            prop_assert_eq!(back, b);
        }

        #[test]
        fn softmax_round_trips_exactly(ws in proptest::collection::vec(-1e6f64..1e6, 14 * 3), bias in proptest::array::uniform14(-10.0f64..10.0)) {
            let model = LinearSoftmaxModel { dim: 3, weights: ws, bias };
            prop_assert_eq!(parse_softmax(&format_softmax(&model), Path::new("b")).unwrap(), model);
        }
    }
}
