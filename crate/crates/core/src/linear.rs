//! Pieces shared by the softmax and logistic SGD trainers.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::featurizer::FeatureVector;

pub(crate) type SparseRow = Vec<(usize, f64)>;

pub(crate) fn sparse(x: &FeatureVector) -> SparseRow {
    x.values
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(i, v)| (i, *v))
        .collect()
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Softmax over `logits`, written into `out`.
pub(crate) fn softmax(logits: &[f64], out: &mut [f64]) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for (o, &l) in out.iter_mut().zip(logits) {
        *o = (l - max).exp();
        total += *o;
    }
    out.iter_mut().for_each(|o| *o /= total);
}

/// Weight vector stored as `scale * raw` so an L2 decay step costs O(1).
pub(crate) struct ScaledWeights {
    raw: Vec<f64>,
    scale: f64,
}

impl ScaledWeights {
    pub(crate) fn zeros(dim: usize) -> Self {
        ScaledWeights {
            raw: vec![0.0; dim],
            scale: 1.0,
        }
    }

    pub(crate) fn dot(&self, x: &[(usize, f64)]) -> f64 {
        self.scale * x.iter().map(|&(i, v)| self.raw[i] * v).sum::<f64>()
    }

    pub(crate) fn decay(&mut self, factor: f64) {
        self.scale *= factor;
        if self.scale < 1e-9 {
            self.raw.iter_mut().for_each(|r| *r *= self.scale);
            self.scale = 1.0;
        }
    }

    /// `w += coef * x`
    pub(crate) fn add(&mut self, x: &[(usize, f64)], coef: f64) {
        let c = coef / self.scale;
        for &(i, v) in x {
            self.raw[i] += c * v;
        }
    }

    pub(crate) fn squared_norm(&self) -> f64 {
        self.scale * self.scale * self.raw.iter().map(|r| r * r).sum::<f64>()
    }

    pub(crate) fn into_dense(self) -> Vec<f64> {
        let scale = self.scale;
        self.raw.into_iter().map(|r| r * scale).collect()
    }
}

/// Visiting order for each epoch; identity when `shuffle` is off.
pub(crate) struct EpochOrder {
    order: Vec<usize>,
    rng: ChaCha8Rng,
    shuffle: bool,
}

impl EpochOrder {
    pub(crate) fn new(n: usize, seed: u64, shuffle: bool) -> Self {
        EpochOrder {
            order: (0..n).collect(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            shuffle,
        }
    }

    pub(crate) fn next_epoch(&mut self) -> &[usize] {
        if self.shuffle {
            self.order.shuffle(&mut self.rng);
        }
        &self.order
    }
}

/// Derives an independent stream seed from a base seed and a tag pair.
pub(crate) fn derive_seed(seed: u64, a: u64, b: u64) -> u64 {
    let mut z = seed ^ a.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ b.wrapping_mul(0xc2b2_ae3d_27d4_eb4f);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
