//! In-memory datasets, synthetic generators, fold splitting, and
//! normalization.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::{Error, Result};

/// Per-feature normalization statistics, fitted on a training split.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStats {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

/// A labeled classification dataset: `n()` samples of dimension `dim()`
/// with integer labels in `[0, k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub k: usize,
    /// Statistics the features were normalized with, if any.
    pub stats: Option<FeatureStats>,
}

impl Dataset {
    pub fn new(features: Vec<Vec<f64>>, labels: Vec<usize>, k: usize) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::validation("dataset has no samples"));
        }
        if features.len() != labels.len() {
            return Err(Error::shape(alloc::format!(
                "{} feature rows but {} labels",
                features.len(),
                labels.len()
            )));
        }
        if k == 0 {
            return Err(Error::validation("class count must be positive"));
        }
        let dim = features[0].len();
        for (i, row) in features.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::shape(alloc::format!(
                    "row {i} has {} features, expected {dim}",
                    row.len()
                )));
            }
            if row.iter().any(|x| !x.is_finite()) {
                return Err(Error::validation(alloc::format!(
                    "row {i} contains a non-finite feature value"
                )));
            }
        }
        for (i, &y) in labels.iter().enumerate() {
            if y >= k {
                return Err(Error::validation(alloc::format!(
                    "label {y} at row {i} out of range for k={k}"
                )));
            }
        }
        Ok(Dataset {
            features,
            labels,
            k,
            stats: None,
        })
    }

    pub fn n(&self) -> usize {
        self.features.len()
    }

    pub fn dim(&self) -> usize {
        self.features[0].len()
    }

    /// Gathers the rows at `indices` (duplicates allowed) into a new dataset.
    pub fn subset(&self, indices: &[usize]) -> Result<Dataset> {
        let mut features = Vec::with_capacity(indices.len());
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            if i >= self.n() {
                return Err(Error::validation(alloc::format!(
                    "index {i} out of range for {} samples",
                    self.n()
                )));
            }
            features.push(self.features[i].clone());
            labels.push(self.labels[i]);
        }
        let mut ds = Dataset::new(features, labels, self.k)?;
        ds.stats = self.stats.clone();
        Ok(ds)
    }
}

/// A partition of `0..N` into `n` disjoint, exhaustive, near-equal folds.
#[derive(Debug, Clone)]
pub struct FoldSplit {
    pub fold_indices: Vec<Vec<usize>>,
}

impl FoldSplit {
    /// Concatenates the folds named in `which`, in order.
    pub fn gather(&self, which: &[usize]) -> Vec<usize> {
        let mut out = Vec::new();
        for &f in which {
            out.extend_from_slice(&self.fold_indices[f]);
        }
        out
    }
}

/// Seed-deterministic shuffled partition into `n` folds whose sizes differ
/// by at most one.
pub fn fold_split(dataset: &Dataset, n: usize, seed: u64) -> Result<FoldSplit> {
    let total = dataset.n();
    if n == 0 || n > total {
        return Err(Error::validation(alloc::format!(
            "cannot split {total} samples into {n} folds"
        )));
    }
    let mut order: Vec<usize> = (0..total).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let base = total / n;
    let extra = total % n;
    let mut folds = Vec::with_capacity(n);
    let mut cursor = 0;
    for f in 0..n {
        let size = base + usize::from(f < extra);
        folds.push(order[cursor..cursor + size].to_vec());
        cursor += size;
    }
    Ok(FoldSplit {
        fold_indices: folds,
    })
}

/// Generates `k` Gaussian clusters of `n_per_class` points each in `d`
/// dimensions. Cluster centers are seed-deterministic; `spread` is the
/// per-coordinate standard deviation around each center.
pub fn make_blobs(
    n_per_class: usize,
    k: usize,
    d: usize,
    spread: f64,
    seed: u64,
) -> Result<Dataset> {
    if n_per_class == 0 || k == 0 || d == 0 {
        return Err(Error::validation("make_blobs arguments must be positive"));
    }
    if !(spread >= 0.0) {
        return Err(Error::validation("spread must be nonnegative"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers: Vec<Vec<f64>> = (0..k)
        .map(|_| (0..d).map(|_| rng.random_range(-4.0..4.0)).collect())
        .collect();

    let normal = StandardNormal;
    let mut features = Vec::with_capacity(n_per_class * k);
    let mut labels = Vec::with_capacity(n_per_class * k);
    for (class, center) in centers.iter().enumerate() {
        for _ in 0..n_per_class {
            let row: Vec<f64> = center
                .iter()
                .map(|&c| {
                    let z: f64 = normal.sample(&mut rng);
                    c + spread * z
                })
                .collect();
            features.push(row);
            labels.push(class);
        }
    }
    Dataset::new(features, labels, k)
}

/// Fits per-feature mean/std on `dataset`. Standard deviations are floored
/// at 1e-12 so constant features normalize to zero instead of NaN.
pub fn feature_stats(dataset: &Dataset) -> FeatureStats {
    let d = dataset.dim();
    let n = dataset.n() as f64;
    let mut means = vec![0.0; d];
    for row in &dataset.features {
        for (m, x) in means.iter_mut().zip(row) {
            *m += x;
        }
    }
    for m in &mut means {
        *m /= n;
    }
    let mut vars = vec![0.0; d];
    for row in &dataset.features {
        for ((v, x), m) in vars.iter_mut().zip(row).zip(&means) {
            let c = x - m;
            *v += c * c;
        }
    }
    let stds = vars
        .iter()
        .map(|v| libm::sqrt(v / n).max(1e-12))
        .collect();
    FeatureStats { means, stds }
}

/// Applies `(x - mean) / std` per feature, using statistics fitted
/// elsewhere (on the training split only).
pub fn normalize(dataset: &Dataset, stats: &FeatureStats) -> Result<Dataset> {
    if stats.means.len() != dataset.dim() || stats.stds.len() != dataset.dim() {
        return Err(Error::shape(alloc::format!(
            "stats dimension {} does not match dataset dimension {}",
            stats.means.len(),
            dataset.dim()
        )));
    }
    let features = dataset
        .features
        .iter()
        .map(|row| {
            row.iter()
                .zip(&stats.means)
                .zip(&stats.stds)
                .map(|((x, m), s)| (x - m) / s)
                .collect()
        })
        .collect();
    let mut out = Dataset::new(features, dataset.labels.clone(), dataset.k)?;
    out.stats = Some(stats.clone());
    Ok(out)
}

/// One-hot encoding `e_label` of length `k`.
pub fn one_hot(label: usize, k: usize) -> Result<Vec<f64>> {
    if label >= k {
        return Err(Error::validation(alloc::format!(
            "label {label} out of range for k={k}"
        )));
    }
    let mut v = vec![0.0; k];
    v[label] = 1.0;
    Ok(v)
}
