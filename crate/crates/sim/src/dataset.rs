//! In-memory labelled datasets: synthetic Gaussian blobs or IDX files.

use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::idx;
use crate::rng::{stream, Stream};

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<Vec<f64>>,
    labels: Vec<usize>,
    dim: usize,
    n_classes: usize,
}

impl Dataset {
    pub fn new(features: Vec<Vec<f64>>, labels: Vec<usize>, n_classes: usize) -> Result<Self> {
        if features.len() != labels.len() {
            return Err(SimError::Config(format!(
                "{} feature rows but {} labels",
                features.len(),
                labels.len()
            )));
        }
        let dim = features.first().map_or(0, Vec::len);
        if features.iter().any(|row| row.len() != dim) {
            return Err(SimError::Config("feature rows have differing lengths".into()));
        }
        if let Some(&bad) = labels.iter().find(|&&y| y >= n_classes) {
            return Err(SimError::Config(format!(
                "label {bad} out of range for {n_classes} classes"
            )));
        }
        Ok(Self {
            features,
            labels,
            dim,
            n_classes,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn features(&self) -> &[Vec<f64>] {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn feature(&self, i: usize) -> &[f64] {
        &self.features[i]
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    /// New dataset made of the given rows, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            features: indices.iter().map(|&i| self.features[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            dim: self.dim,
            n_classes: self.n_classes,
        }
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for &y in &self.labels {
            counts[y] += 1;
        }
        counts
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetKind {
    SyntheticGaussianBlobs {
        n_classes: usize,
        dim: usize,
        separation: f64,
        samples: usize,
    },
    FromIdxFiles {
        images_path: PathBuf,
        labels_path: PathBuf,
        /// Keep only the first `subsample` examples, if set.
        #[serde(default)]
        subsample: Option<usize>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    #[serde(flatten)]
    pub kind: DatasetKind,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
}

fn default_test_fraction() -> f64 {
    0.2
}

impl Default for DatasetSpec {
    fn default() -> Self {
        Self {
            kind: DatasetKind::SyntheticGaussianBlobs {
                n_classes: 4,
                dim: 10,
                separation: 4.0,
                samples: 12_500,
            },
            test_fraction: default_test_fraction(),
        }
    }
}

impl DatasetSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(SimError::Config(format!(
                "test_fraction {} must lie in (0, 1)",
                self.test_fraction
            )));
        }
        if let DatasetKind::SyntheticGaussianBlobs {
            n_classes,
            dim,
            separation,
            samples,
        } = &self.kind
        {
            if *n_classes < 2 {
                return Err(SimError::Config("blobs need at least 2 classes".into()));
            }
            if *dim == 0 || (*n_classes > *dim && *dim < 2) {
                return Err(SimError::Config(format!(
                    "dim {dim} cannot separate {n_classes} classes"
                )));
            }
            if !(separation.is_finite() && *separation > 0.0) {
                return Err(SimError::Config(format!("separation {separation} must be positive")));
            }
            if *samples < 2 {
                return Err(SimError::Config("blobs need at least 2 samples".into()));
            }
        }
        Ok(())
    }

    /// Generates or loads the data and splits it into (train, test).
    pub fn load(&self, seed: u64) -> Result<(Dataset, Dataset)> {
        self.validate()?;
        let full = match &self.kind {
            DatasetKind::SyntheticGaussianBlobs {
                n_classes,
                dim,
                separation,
                samples,
            } => gaussian_blobs(*n_classes, *dim, *separation, *samples, seed),
            DatasetKind::FromIdxFiles {
                images_path,
                labels_path,
                subsample,
            } => idx::load_dataset(images_path, labels_path, *subsample)?,
        };
        Ok(train_test_split(&full, self.test_fraction, seed))
    }
}

/// Class means: `separation·e_c` when there are enough dimensions,
/// otherwise evenly spaced on a circle of that radius in the first two.
pub fn blob_means(n_classes: usize, dim: usize, separation: f64) -> Vec<Vec<f64>> {
    (0..n_classes)
        .map(|c| {
            let mut mean = vec![0.0; dim];
            if n_classes <= dim {
                mean[c] = separation;
            } else {
                let angle = std::f64::consts::TAU * c as f64 / n_classes as f64;
                mean[0] = separation * angle.cos();
                mean[1] = separation * angle.sin();
            }
            mean
        })
        .collect()
}

/// Balanced classes, unit isotropic Gaussian noise around each class mean.
pub fn gaussian_blobs(n_classes: usize, dim: usize, separation: f64, samples: usize, seed: u64) -> Dataset {
    let means = blob_means(n_classes, dim, separation);
    let mut rng = stream(seed, Stream::Dataset, 0, 0);
    let mut labels: Vec<usize> = (0..samples).map(|i| i % n_classes).collect();
    labels.shuffle(&mut rng);
    let features = labels
        .iter()
        .map(|&y| {
            means[y]
                .iter()
                .map(|m| m + rng.sample::<f64, _>(StandardNormal))
                .collect()
        })
        .collect();
    Dataset {
        features,
        labels,
        dim,
        n_classes,
    }
}

/// Seeded shuffle, then the first `round(test_fraction·n)` rows (at least
/// one, and leaving at least one) form the test set.
pub fn train_test_split(data: &Dataset, test_fraction: f64, seed: u64) -> (Dataset, Dataset) {
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.shuffle(&mut stream(seed, Stream::Split, 0, 0));
    let n_test = ((test_fraction * data.len() as f64).round() as usize).clamp(1, data.len().saturating_sub(1));
    let (test, train) = order.split_at(n_test);
    (data.subset(train), data.subset(test))
}
