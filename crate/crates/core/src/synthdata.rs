//! Labelled synthetic ROI time series with class-dependent connectivity.
//!
//! Every ROI in a block pair carries `√g·s + √(1-g)·e` where `s` is a unit
//! latent signal and `e` unit noise, plus measurement noise of scale
//! `noise_scale`. Patients (label 1) share one latent `s` across the pair
//! (negated for negative pairs); controls draw an independent latent per ROI.
//! Marginal variances therefore match across classes and only the pair
//! correlation differs: about `±g / (1 + noise_scale²)` for patients and 0
//! for controls. Each ROI is finally shifted and rescaled at random, which
//! correlation ignores.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{atlas_name_for, Dataset, Label, RoiTimeSeries};
use crate::seeding;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockPair {
    pub first: usize,
    pub second: usize,
    /// Patients get negative rather than positive correlation on this pair.
    pub negative: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n_subjects: usize,
    pub n_rois: usize,
    pub n_timepoints: usize,
    pub n_sites: usize,
    pub block_pairs: Vec<BlockPair>,
    pub correlation_gap: f64,
    pub noise_scale: f64,
    pub seed: u64,
}

/// `m/4` disjoint pairs `(0,1), (2,3), ...`, alternating positive and negative.
pub fn default_block_pairs(n_rois: usize) -> Vec<BlockPair> {
    (0..(n_rois / 4).max(1))
        .filter(|k| 2 * k + 1 < n_rois)
        .map(|k| BlockPair {
            first: 2 * k,
            second: 2 * k + 1,
            negative: k % 2 == 1,
        })
        .collect()
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            n_subjects: 200,
            n_rois: 32,
            n_timepoints: 120,
            n_sites: 2,
            block_pairs: default_block_pairs(32),
            correlation_gap: 0.8,
            noise_scale: 0.3,
            seed: 7,
        }
    }
}

impl SynthSpec {
    /// The default layout resized to `n_rois`, with default block pairs for that size.
    pub fn with_rois(n_rois: usize) -> Self {
        Self {
            n_rois,
            block_pairs: default_block_pairs(n_rois),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_subjects < 4 {
            return Err(Error::InvalidArgument(format!(
                "need at least 4 subjects (2 per class), got {}",
                self.n_subjects
            )));
        }
        if self.n_rois < 2 || self.n_timepoints < 2 {
            return Err(Error::InvalidArgument("need at least 2 ROIs and 2 timepoints".into()));
        }
        if self.n_sites == 0 {
            return Err(Error::InvalidArgument("need at least one site".into()));
        }
        if !(0.0..=1.0).contains(&self.correlation_gap) {
            return Err(Error::InvalidArgument(format!(
                "correlation gap {} is not a feasible correlation target",
                self.correlation_gap
            )));
        }
        if !(self.noise_scale > 0.0 && self.noise_scale.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "noise scale must be positive, got {}",
                self.noise_scale
            )));
        }
        for p in &self.block_pairs {
            if p.first >= self.n_rois || p.second >= self.n_rois || p.first == p.second {
                return Err(Error::InvalidArgument(format!(
                    "block pair ({}, {}) invalid for {} ROIs",
                    p.first, p.second, self.n_rois
                )));
            }
        }
        Ok(())
    }

    /// Expected patient correlation on a positive block pair.
    pub fn expected_patient_correlation(&self) -> f64 {
        self.correlation_gap / (1.0 + self.noise_scale * self.noise_scale)
    }
}

pub fn subject_label(index: usize) -> Label {
    if index % 2 == 1 {
        Label::PATIENT
    } else {
        Label::CONTROL
    }
}

pub fn subject_site(index: usize, n_sites: usize) -> String {
    format!("site{}", (index / 2) % n_sites)
}

fn normal<R: Rng>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

fn generate_subject(spec: &SynthSpec, index: usize) -> Result<RoiTimeSeries> {
    let (t_len, m) = (spec.n_timepoints, spec.n_rois);
    let label = subject_label(index);
    let mut rng = seeding::substream(spec.seed, index as u64);
    let signal = spec.correlation_gap.sqrt();
    let residual = (1.0 - spec.correlation_gap).sqrt();

    let mut data = DMatrix::from_fn(t_len, m, |_, _| 0.0);
    let mut in_pair = vec![false; m];

    for pair in &spec.block_pairs {
        let shared: Vec<f64> = (0..t_len).map(|_| normal(&mut rng)).collect();
        let sign = if pair.negative { -1.0 } else { 1.0 };
        for (roi, s) in [(pair.first, 1.0), (pair.second, sign)] {
            in_pair[roi] = true;
            for t in 0..t_len {
                let latent = if label.is_patient() { s * shared[t] } else { normal(&mut rng) };
                data[(t, roi)] += signal * latent;
            }
        }
    }
    for roi in 0..m {
        let own = if in_pair[roi] { residual } else { 1.0 };
        let offset = rng.random_range(-2.0..2.0);
        let scale = rng.random_range(0.5..2.0);
        for t in 0..t_len {
            let clean = data[(t, roi)] + own * normal(&mut rng);
            data[(t, roi)] = offset + scale * (clean + spec.noise_scale * normal(&mut rng));
        }
    }
    RoiTimeSeries::new(
        format!("sub{index:04}"),
        subject_site(index, spec.n_sites),
        label,
        data,
    )
}

pub fn generate(spec: &SynthSpec) -> Result<Dataset> {
    spec.validate()?;
    let subjects = (0..spec.n_subjects)
        .map(|i| generate_subject(spec, i))
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(subjects, atlas_name_for(spec.n_rois))
}
