//! Datasets, train/valid/test splitting, and seeded mini-batch streams.

pub mod idx;

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, DenseVector};
use crate::rng::{derive_seed, SeededRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskKind {
    Classification,
    Regression,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Targets {
    Classes { labels: Vec<usize>, n_classes: usize },
    Regression(DenseVector),
}

impl Targets {
    pub fn len(&self) -> usize {
        match self {
            Targets::Classes { labels, .. } => labels.len(),
            Targets::Regression(y) => y.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn select(&self, indices: &[usize]) -> Targets {
        match self {
            Targets::Classes { labels, n_classes } => {
                Targets::Classes { labels: indices.iter().map(|&i| labels[i]).collect(), n_classes: *n_classes }
            }
            Targets::Regression(y) => {
                Targets::Regression(DenseVector::from_vec_unchecked(indices.iter().map(|&i| y[i]).collect()))
            }
        }
    }
}

/// Feature matrix (one row per example) with matching targets.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: DenseMatrix,
    targets: Targets,
}

impl Dataset {
    pub fn new(features: DenseMatrix, targets: Targets) -> Result<Self> {
        if features.rows() != targets.len() {
            return Err(Error::shape("Dataset::new", features.rows(), targets.len()));
        }
        if let Targets::Classes { labels, n_classes } = &targets {
            if let Some(bad) = labels.iter().find(|&&l| l >= *n_classes) {
                return Err(Error::config("labels", format!("class id {bad} >= n_classes {n_classes}")));
            }
        }
        Ok(Self { features, targets })
    }

    pub fn features(&self) -> &DenseMatrix {
        &self.features
    }

    pub fn targets(&self) -> &Targets {
        &self.targets
    }

    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn n_features(&self) -> usize {
        self.features.cols()
    }

    pub fn kind(&self) -> TaskKind {
        match self.targets {
            Targets::Classes { .. } => TaskKind::Classification,
            Targets::Regression(_) => TaskKind::Regression,
        }
    }

    /// Copies the listed examples, in order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset { features: self.features.select_rows(indices), targets: self.targets.select(indices) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSpec {
    pub n_train: usize,
    pub n_valid: usize,
    #[serde(default)]
    pub n_test: usize,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct Splits {
    pub train: Dataset,
    pub valid: Dataset,
    pub test: Dataset,
}

impl SplitSpec {
    /// Shuffles example indices with `seed` and carves out disjoint partitions.
    pub fn apply(&self, data: &Dataset) -> Result<Splits> {
        let needed = self.n_train + self.n_valid + self.n_test;
        if needed > data.len() {
            return Err(Error::config(
                "split",
                format!("n_train + n_valid + n_test = {needed} exceeds dataset size {}", data.len()),
            ));
        }
        let mut order: Vec<usize> = (0..data.len()).collect();
        SeededRng::new(self.seed).shuffle(&mut order);
        let (train, rest) = order.split_at(self.n_train);
        let (valid, rest) = rest.split_at(self.n_valid);
        let test = &rest[..self.n_test];
        Ok(Splits { train: data.subset(train), valid: data.subset(valid), test: data.subset(test) })
    }
}

/// Draws shuffled mini-batches without replacement; every epoch is a fresh
/// permutation seeded from `(seed, epoch)`.
#[derive(Debug, Clone)]
pub struct BatchStream {
    batch_size: usize,
    seed: u64,
    epoch: u64,
    order: Vec<usize>,
    pos: usize,
}

impl BatchStream {
    pub fn new(split_len: usize, batch_size: usize, seed: u64) -> Result<Self> {
        if split_len == 0 {
            return Err(Error::config("batch_size", "cannot batch an empty split"));
        }
        if batch_size == 0 || batch_size > split_len {
            return Err(Error::config("batch_size", format!("must be in 1..={split_len}, got {batch_size}")));
        }
        let mut s = Self { batch_size, seed, epoch: 0, order: (0..split_len).collect(), pos: 0 };
        s.reshuffle();
        Ok(s)
    }

    fn reshuffle(&mut self) {
        self.order.sort_unstable();
        SeededRng::new(derive_seed(self.seed, self.epoch)).shuffle(&mut self.order);
        self.pos = 0;
    }

    pub fn batch_size(&self) -> usize {
        self.batch_size
    }

    /// Completed epochs so far.
    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    /// Indices of the next batch. A batch that crosses an epoch boundary
    /// finishes the old permutation before starting the new one.
    pub fn next_indices(&mut self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.batch_size);
        while out.len() < self.batch_size {
            if self.pos == self.order.len() {
                self.epoch += 1;
                self.reshuffle();
            }
            let take = (self.batch_size - out.len()).min(self.order.len() - self.pos);
            out.extend_from_slice(&self.order[self.pos..self.pos + take]);
            self.pos += take;
        }
        out
    }

    pub fn next_batch(&mut self, data: &Dataset) -> Result<Dataset> {
        if data.len() != self.order.len() {
            return Err(Error::shape("next_batch", self.order.len(), data.len()));
        }
        let idx = self.next_indices();
        Ok(data.subset(&idx))
    }
}

/// Noisy linear-regression data with a known generating weight vector.
#[derive(Debug, Clone)]
pub struct RidgeSynthetic {
    pub dataset: Dataset,
    pub true_weights: DenseVector,
}

/// `X ~ N(0, 1)^{n×d}`, `w* ~ N(0, 1)^d`, `y = X w* + noise_sd · ε`.
pub fn make_ridge_synthetic(n: usize, d: usize, noise_sd: f64, seed: u64) -> Result<RidgeSynthetic> {
    if n == 0 || d == 0 {
        return Err(Error::config("ridge", "n and d must be at least 1"));
    }
    if !(noise_sd >= 0.0) {
        return Err(Error::config("noise_sd", "must be non-negative"));
    }
    let mut rng = SeededRng::new(seed);
    let w: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
    let x: Vec<f64> = (0..n * d).map(|_| rng.normal()).collect();
    let features = DenseMatrix::from_vec_unchecked(n, d, x);
    let y: Vec<f64> = (0..n).map(|i| crate::linalg::dot(features.row(i), &w) + noise_sd * rng.normal()).collect();
    let dataset = Dataset::new(features, Targets::Regression(DenseVector::from_vec_unchecked(y)))?;
    Ok(RidgeSynthetic { dataset, true_weights: DenseVector::from_vec_unchecked(w) })
}
