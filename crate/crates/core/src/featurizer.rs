//! Fixed-dimension feature vectors: rows from an external embedding table,
//! or signed hashed character n-grams when no row exists.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::corpus::{Instance, InstanceKey};
use crate::error::{Error, Result};
use crate::text::normalize;

/// Dense feature values. The dimension is the length.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Self {
        FeatureVector { values }
    }

    pub fn zeros(dim: usize) -> Self {
        FeatureVector { values: vec![0.0; dim] }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NgramConfig {
    pub n_min: usize,
    pub n_max: usize,
    /// Number of hash buckets, a power of two.
    pub dim: usize,
    pub seed: u64,
}

impl Default for NgramConfig {
    fn default() -> Self {
        NgramConfig {
            n_min: 2,
            n_max: 5,
            dim: 32768,
            seed: 0,
        }
    }
}

impl NgramConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_min < 1 || self.n_min > self.n_max {
            return Err(Error::Config(format!(
                "n-gram range {}..={} must satisfy 1 <= n_min <= n_max",
                self.n_min, self.n_max
            )));
        }
        if self.dim < 2 || !self.dim.is_power_of_two() {
            return Err(Error::Config(format!(
                "n-gram dimension {} must be a power of two >= 2",
                self.dim
            )));
        }
        Ok(())
    }
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv_feed(mut h: u64, c: char) -> u64 {
    let mut buf = [0u8; 4];
    for &b in c.encode_utf8(&mut buf).as_bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// Signed hashed counts of the character n-grams of the normalized text,
/// L2-normalized. Empty text gives the zero vector.
pub fn hash_ngram_features(text: &str, config: &NgramConfig) -> FeatureVector {
    let mut values = vec![0.0; config.dim];
    let chars: Vec<char> = normalize(text).chars().collect();
    let mask = (config.dim - 1) as u64;
    let basis = FNV_OFFSET ^ splitmix64(config.seed);
    for start in 0..chars.len() {
        let mut h = basis;
        for (k, &c) in chars[start..].iter().take(config.n_max).enumerate() {
            h = fnv_feed(h, c);
            if k + 1 >= config.n_min {
                let mixed = splitmix64(h ^ (k as u64 + 1));
                let sign = if mixed >> 63 == 0 { 1.0 } else { -1.0 };
                values[(mixed & mask) as usize] += sign;
            }
        }
    }
    let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        values.iter_mut().for_each(|v| *v /= norm);
    }
    FeatureVector { values }
}

/// Rows of externally computed vectors keyed by instance.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EmbeddingTable {
    pub dim: usize,
    pub rows: BTreeMap<InstanceKey, FeatureVector>,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Self {
        EmbeddingTable {
            dim,
            rows: BTreeMap::new(),
        }
    }

    pub fn get(&self, key: &InstanceKey) -> Option<&FeatureVector> {
        self.rows.get(key)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Contents of a `dim=` row file before any semantic validation.
#[derive(Debug, Clone, PartialEq)]
pub struct RowFile {
    pub dim: usize,
    /// Optional column names from a `labels=` line following the header.
    pub labels: Option<Vec<String>>,
    /// `(line number, key, values)`.
    pub rows: Vec<(usize, InstanceKey, Vec<f64>)>,
}

/// Parses the shared row format used by embedding and base-score files.
pub fn parse_row_file(data: &str, origin: &Path) -> Result<RowFile> {
    let mut lines = data.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r')));
    let dim = match lines.next() {
        Some((_, header)) => header
            .strip_prefix("dim=")
            .and_then(|d| d.trim().parse::<usize>().ok())
            .filter(|&d| d > 0)
            .ok_or_else(|| Error::format(origin, 1, format!("expected `dim=<D>` header, found {header:?}")))?,
        None => return Err(Error::format(origin, 1, "missing `dim=<D>` header")),
    };
    let mut labels = None;
    let mut rows = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (lineno, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        if let Some(names) = line.strip_prefix("labels=") {
            if lineno != 2 {
                return Err(Error::format(
                    origin,
                    lineno,
                    "`labels=` must directly follow the header",
                ));
            }
            labels = Some(names.split('\t').map(str::to_string).collect());
            continue;
        }
        let (key, values) = line
            .split_once('\t')
            .ok_or_else(|| Error::format(origin, lineno, "expected `<key><TAB><values>`"))?;
        let key: InstanceKey = key.parse().map_err(|e: String| Error::format(origin, lineno, e))?;
        let values = values
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| Error::format(origin, lineno, format!("bad value {v:?}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if values.len() != dim {
            return Err(Error::format(
                origin,
                lineno,
                format!("row has {} values, header declares dim={dim}", values.len()),
            ));
        }
        if !seen.insert(key) {
            return Err(Error::format(origin, lineno, format!("duplicate instance key {key}")));
        }
        rows.push((lineno, key, values));
    }
    Ok(RowFile { dim, labels, rows })
}

pub(crate) fn format_row(key: &InstanceKey, values: &[f64]) -> String {
    let joined: Vec<String> = values.iter().map(|v| v.to_string()).collect();
    format!("{key}\t{}\n", joined.join(","))
}

pub fn parse_embeddings(data: &str, origin: &Path) -> Result<EmbeddingTable> {
    let file = parse_row_file(data, origin)?;
    let mut table = EmbeddingTable::new(file.dim);
    for (_, key, values) in file.rows {
        table.rows.insert(key, FeatureVector::new(values));
    }
    Ok(table)
}

pub fn load_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingTable> {
    let path = path.as_ref();
    let data = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_embeddings(&data, path)
}

/// Serializes the table; `{}` float formatting round-trips exactly.
pub fn format_embeddings(table: &EmbeddingTable) -> String {
    let mut out = format!("dim={}\n", table.dim);
    for (key, row) in &table.rows {
        out.push_str(&format_row(key, &row.values));
    }
    out
}

pub fn write_embeddings(path: impl AsRef<Path>, table: &EmbeddingTable) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_embeddings(table)).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureSource {
    Embedding,
    Hashed,
    /// A table was supplied but had no row for the instance.
    HashedFallback,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Featurized {
    pub vector: FeatureVector,
    pub source: FeatureSource,
}

/// The text hashed for an instance when no embedding row is used.
pub fn pair_text(instance: &Instance) -> String {
    format!("{} [SEP] {}", instance.fragment, instance.context)
}

pub fn featurize(instance: &Instance, table: Option<&EmbeddingTable>, config: &NgramConfig) -> Featurized {
    let source = match table {
        Some(t) => match t.get(&instance.key()) {
            Some(row) => {
                return Featurized {
                    vector: row.clone(),
                    source: FeatureSource::Embedding,
                }
            }
            None => FeatureSource::HashedFallback,
        },
        None => FeatureSource::Hashed,
    };
    Featurized {
        vector: hash_ngram_features(&pair_text(instance), config),
        source,
    }
}
