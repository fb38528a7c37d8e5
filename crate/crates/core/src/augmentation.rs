//! Interpolation-based training-set augmentation.
//!
//! For every training sample `p` a same-class neighbour `q` is drawn from its
//! `k` most EROS-similar peers, and one synthetic sample `α·p + (1-α)·q` is
//! appended with `α ~ U[alpha_min, alpha_max)`. Neighbours are found on the
//! raw time series; interpolation happens on the masked feature vectors.
//!
//! Sample `i` draws from ChaCha substream `i` of `seed`, so the output does
//! not depend on thread count.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eros::{self, EigenSummary, ErosWeights};
use crate::error::{Error, Result};
use crate::ingest::{Label, RoiTimeSeries};
use crate::seeding;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AugmentationConfig {
    pub k_neighbors: usize,
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub eigen_rank: usize,
    pub seed: u64,
}

impl Default for AugmentationConfig {
    fn default() -> Self {
        Self {
            k_neighbors: 5,
            alpha_min: 0.5,
            alpha_max: 1.0,
            eigen_rank: eros::DEFAULT_RANK,
            seed: 0,
        }
    }
}

impl AugmentationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 <= self.alpha_min && self.alpha_min <= self.alpha_max && self.alpha_max <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "need 0 <= alpha_min <= alpha_max <= 1, got [{}, {}]",
                self.alpha_min, self.alpha_max
            )));
        }
        if self.k_neighbors == 0 {
            return Err(Error::InvalidArgument("k_neighbors must be at least 1".into()));
        }
        if self.eigen_rank == 0 {
            return Err(Error::InvalidArgument("eigen_rank must be at least 1".into()));
        }
        Ok(())
    }
}

pub fn interpolate(p: &[f64], q: &[f64], alpha: f64) -> Result<Vec<f64>> {
    if p.len() != q.len() {
        return Err(Error::Dimension {
            context: "interpolate",
            expected: p.len(),
            found: q.len(),
        });
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidArgument(format!("alpha {alpha} outside [0, 1]")));
    }
    Ok(p.iter().zip(q).map(|(a, b)| alpha * a + (1.0 - alpha) * b).collect())
}

/// Provenance of one synthetic sample.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticOrigin {
    pub parent: usize,
    pub neighbour: usize,
    pub alpha: f64,
}

/// The original samples followed by the synthetic ones.
#[derive(Clone, Debug, PartialEq)]
pub struct AugmentedSet {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<Label>,
    /// `None` for original samples.
    pub origin: Vec<Option<SyntheticOrigin>>,
    pub eros_weights: ErosWeights,
}

impl AugmentedSet {
    pub fn is_synthetic(&self, i: usize) -> bool {
        self.origin[i].is_some()
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }
}

pub fn augment_training_set(
    features: &[Vec<f64>],
    labels: &[Label],
    subjects: &[&RoiTimeSeries],
    config: &AugmentationConfig,
) -> Result<AugmentedSet> {
    if subjects.len() != features.len() {
        return Err(Error::Dimension {
            context: "augmentation subjects",
            expected: features.len(),
            found: subjects.len(),
        });
    }
    config.validate()?;
    let summaries = subjects
        .par_iter()
        .map(|s| eros::eigen_summary(s, config.eigen_rank))
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&EigenSummary> = summaries.iter().collect();
    let weights = if refs.is_empty() {
        ErosWeights::uniform(config.eigen_rank)
    } else {
        eros::eros_weights(&refs)?
    };
    augment_with_summaries(features, labels, &summaries, weights, config)
}

/// Augmentation given precomputed eigen-summaries and EROS weights.
pub fn augment_with_summaries(
    features: &[Vec<f64>],
    labels: &[Label],
    summaries: &[EigenSummary],
    weights: ErosWeights,
    config: &AugmentationConfig,
) -> Result<AugmentedSet> {
    config.validate()?;
    let n = features.len();
    if n == 0 {
        return Err(Error::InvalidArgument("cannot augment an empty training set".into()));
    }
    if labels.len() != n || summaries.len() != n {
        return Err(Error::Dimension {
            context: "augmentation inputs",
            expected: n,
            found: if labels.len() != n { labels.len() } else { summaries.len() },
        });
    }
    let d = features[0].len();
    if let Some(bad) = features.iter().find(|f| f.len() != d) {
        return Err(Error::Dimension {
            context: "augmentation feature length",
            expected: d,
            found: bad.len(),
        });
    }

    let class_size = |l: Label| labels.iter().filter(|&&x| x == l).count();
    for l in [Label::CONTROL, Label::PATIENT] {
        let c = class_size(l);
        if c == 1 {
            log::warn!("class {} has a single member; it is not augmented", l.value());
        }
    }
    let eligible: Vec<usize> = (0..n).filter(|&i| class_size(labels[i]) >= 2).collect();

    let synthetic = eligible
        .par_iter()
        .map(|&i| {
            let nn = eros::knn_same_class(i, summaries, labels, config.k_neighbors, &weights)?;
            let mut rng = seeding::substream(config.seed, i as u64);
            let neighbour = nn[rng.random_range(0..nn.len())];
            let alpha = if config.alpha_min < config.alpha_max {
                rng.random_range(config.alpha_min..config.alpha_max)
            } else {
                config.alpha_min
            };
            let x = interpolate(&features[i], &features[neighbour], alpha)?;
            Ok((
                x,
                labels[i],
                SyntheticOrigin {
                    parent: i,
                    neighbour,
                    alpha,
                },
            ))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut out = AugmentedSet {
        features: features.to_vec(),
        labels: labels.to_vec(),
        origin: vec![None; n],
        eros_weights: weights,
    };
    for (x, y, origin) in synthetic {
        out.features.push(x);
        out.labels.push(y);
        out.origin.push(Some(origin));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn random_subjects(n: usize, seed: u64) -> Vec<RoiTimeSeries> {
        let mut rng = seeding::rng(seed);
        (0..n)
            .map(|i| {
                let data = DMatrix::from_fn(12, 4, |_, _| rng.random_range(-1.0..1.0));
                let label = if i % 2 == 0 { Label::CONTROL } else { Label::PATIENT };
                RoiTimeSeries::new(format!("s{i}"), "a", label, data).unwrap()
            })
            .collect()
    }

    fn random_features(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = seeding::rng(seed);
        (0..n).map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).collect()
    }

    #[test]
    fn interpolate_endpoints_and_midpoint() {
        let p = [0.0, 2.0];
        let q = [2.0, 0.0];
        assert_eq!(interpolate(&p, &q, 1.0).unwrap(), p.to_vec());
        assert_eq!(interpolate(&p, &q, 0.0).unwrap(), q.to_vec());
        assert_eq!(interpolate(&p, &q, 0.5).unwrap(), vec![1.0, 1.0]);
        assert!(interpolate(&p, &[1.0], 0.5).is_err());
    }

    #[test]
    fn doubles_and_keeps_originals_first() {
        let subjects = random_subjects(10, 1);
        let refs: Vec<&RoiTimeSeries> = subjects.iter().collect();
        let labels: Vec<Label> = subjects.iter().map(|s| s.label).collect();
        let feats = random_features(10, 6, 2);
        let cfg = AugmentationConfig { seed: 3, ..Default::default() };
        let out = augment_training_set(&feats, &labels, &refs, &cfg).unwrap();
        assert_eq!(out.len(), 20);
        assert_eq!(&out.features[..10], &feats[..]);
        assert!((0..10).all(|i| !out.is_synthetic(i)));
        assert!((10..20).all(|i| out.is_synthetic(i)));
        for (i, o) in out.origin.iter().enumerate().skip(10) {
            let o = o.as_ref().unwrap();
            assert_eq!(out.labels[i], labels[o.parent]);
            assert_eq!(labels[o.neighbour], labels[o.parent]);
            assert!(o.alpha >= 0.5 && o.alpha < 1.0);
        }
    }

    #[test]
    fn identical_class_members_reproduce_original() {
        let subjects = random_subjects(6, 4);
        let refs: Vec<&RoiTimeSeries> = subjects.iter().collect();
        let labels = vec![Label::PATIENT; 6];
        let feats = vec![vec![0.25, -0.5, 0.75]; 6];
        let out = augment_training_set(&feats, &labels, &refs, &AugmentationConfig::default()).unwrap();
        for x in &out.features[6..] {
            assert_eq!(x, &feats[0]);
        }
    }

    #[test]
    fn seeded_runs_are_bit_identical() {
        let subjects = random_subjects(6, 8);
        let refs: Vec<&RoiTimeSeries> = subjects.iter().collect();
        let labels: Vec<Label> = subjects.iter().map(|s| s.label).collect();
        let feats = random_features(6, 5, 9);
        let cfg = AugmentationConfig { seed: 42, ..Default::default() };
        let a = augment_training_set(&feats, &labels, &refs, &cfg).unwrap();
        let b = augment_training_set(&feats, &labels, &refs, &cfg).unwrap();
        let bits = |s: &AugmentedSet| s.features.iter().flatten().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
    }

    #[test]
    fn singleton_class_is_skipped() {
        let subjects = random_subjects(5, 2);
        let refs: Vec<&RoiTimeSeries> = subjects.iter().collect();
        let labels = vec![Label::PATIENT, Label::CONTROL, Label::CONTROL, Label::CONTROL, Label::CONTROL];
        let feats = random_features(5, 3, 1);
        let out = augment_training_set(&feats, &labels, &refs, &AugmentationConfig::default()).unwrap();
        assert_eq!(out.len(), 9);
        assert!(out.labels[5..].iter().all(|&l| l == Label::CONTROL));
    }

    #[test]
    fn rejects_bad_config_and_empty_input() {
        let cfg = AugmentationConfig { alpha_min: 0.8, alpha_max: 0.6, ..Default::default() };
        assert!(cfg.validate().is_err());
        let cfg = AugmentationConfig { k_neighbors: 0, ..Default::default() };
        assert!(cfg.validate().is_err());
        assert!(augment_training_set(&[], &[], &[], &AugmentationConfig::default()).is_err());
    }
}
