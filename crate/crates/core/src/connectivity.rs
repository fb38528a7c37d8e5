//! Pairwise Pearson correlation features and the training-set quartile mask.

use std::cmp::Ordering;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::RoiTimeSeries;

pub const DEFAULT_TAIL_FRACTION: f64 = 0.25;

/// Number of strict-upper-triangle pairs for `m` ROIs.
pub fn feature_count(m: usize) -> usize {
    m * m.saturating_sub(1) / 2
}

/// Sum of squared deviations below this (relative to the series magnitude)
/// counts as a constant series.
fn is_degenerate(sum_sq: f64, max_abs: f64, len: usize) -> bool {
    let scale = 1e-12 * max_abs.max(1.0);
    sum_sq <= scale * scale * len as f64
}

fn center(u: &[f64]) -> (Vec<f64>, f64, f64) {
    let mean = u.iter().sum::<f64>() / u.len() as f64;
    let centered: Vec<f64> = u.iter().map(|x| x - mean).collect();
    let sum_sq = centered.iter().map(|d| d * d).sum();
    let max_abs = u.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    (centered, sum_sq, max_abs)
}

pub fn pearson(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::Dimension {
            context: "pearson",
            expected: u.len(),
            found: v.len(),
        });
    }
    if u.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "pearson needs at least 2 samples, got {}",
            u.len()
        )));
    }
    let (cu, su, mu) = center(u);
    let (cv, sv, mv) = center(v);
    if is_degenerate(su, mu, u.len()) || is_degenerate(sv, mv, v.len()) {
        log::warn!("zero-variance series in pearson; correlation set to 0");
        return Ok(0.0);
    }
    let num: f64 = cu.iter().zip(&cv).map(|(a, b)| a * b).sum();
    Ok(clamp_unit(num / (su * sv).sqrt()))
}

fn clamp_unit(r: f64) -> f64 {
    r.clamp(-1.0, 1.0)
}

/// Strict upper triangle of a subject's ROI correlation matrix, ordered
/// (0,1), (0,2), ..., (0,m-1), (1,2), ...
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationVector(pub Vec<f64>);

impl CorrelationVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

pub fn correlation_vector(subject: &RoiTimeSeries) -> CorrelationVector {
    let data = &subject.data;
    let m = data.ncols();
    let t = data.nrows();

    let columns: Vec<(Vec<f64>, f64, bool)> = (0..m)
        .map(|j| {
            let col: Vec<f64> = data.column(j).iter().copied().collect();
            let (centered, sum_sq, max_abs) = center(&col);
            (centered, sum_sq, is_degenerate(sum_sq, max_abs, t))
        })
        .collect();

    let degenerate = columns.iter().filter(|c| c.2).count();
    if degenerate > 0 {
        log::warn!(
            "subject {}: {degenerate} zero-variance ROI(s); their correlations are set to 0",
            subject.subject_id
        );
    }

    let mut out = Vec::with_capacity(feature_count(m));
    for i in 0..m {
        let (ci, si, di) = &columns[i];
        for (cj, sj, dj) in &columns[i + 1..] {
            if *di || *dj {
                out.push(0.0);
                continue;
            }
            let num: f64 = ci.iter().zip(cj).map(|(a, b)| a * b).sum();
            out.push(clamp_unit(num / (si * sj).sqrt()));
        }
    }
    CorrelationVector(out)
}

/// Sorted indices into a correlation vector retained as classifier features.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureMask {
    indices: Vec<usize>,
    source_feature_count: usize,
}

impl FeatureMask {
    pub fn new(indices: Vec<usize>, source_feature_count: usize) -> Result<Self> {
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument("mask indices must be strictly increasing".into()));
        }
        if let Some(&last) = indices.last() {
            if last >= source_feature_count {
                return Err(Error::InvalidArgument(format!(
                    "mask index {last} out of range for {source_feature_count} features"
                )));
            }
        }
        Ok(Self {
            indices,
            source_feature_count,
        })
    }

    pub fn identity(feature_count: usize) -> Self {
        Self {
            indices: (0..feature_count).collect(),
            source_feature_count: feature_count,
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn source_feature_count(&self) -> usize {
        self.source_feature_count
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: FeatureMask = serde_json::from_str(text)?;
        FeatureMask::new(raw.indices, raw.source_feature_count)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// Per-tail count `⌊F·tail⌋` for the mask.
pub fn tail_count(feature_count: usize, tail_fraction: f64) -> Result<usize> {
    if !(0.0..=0.5).contains(&tail_fraction) {
        return Err(Error::InvalidArgument(format!(
            "tail fraction {tail_fraction} must lie in [0, 0.5]"
        )));
    }
    let k = (feature_count as f64 * tail_fraction).floor() as usize;
    if 2 * k > feature_count {
        return Err(Error::InvalidArgument(format!(
            "2 x {k} retained features exceed the {feature_count} available"
        )));
    }
    Ok(k)
}

/// Element-wise mean. Vectors are summed in a canonical (lexicographic)
/// order so the result does not depend on subject order.
pub fn mean_vector(vectors: &[&CorrelationVector]) -> Result<Vec<f64>> {
    let first = vectors
        .first()
        .ok_or_else(|| Error::InvalidArgument("mean of an empty set of correlation vectors".into()))?;
    let f = first.len();
    for v in vectors {
        if v.len() != f {
            return Err(Error::Dimension {
                context: "correlation vector",
                expected: f,
                found: v.len(),
            });
        }
    }
    let mut ordered: Vec<&CorrelationVector> = vectors.to_vec();
    ordered.sort_by(|a, b| {
        a.0.iter()
            .zip(&b.0)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| *o != Ordering::Equal)
            .unwrap_or(Ordering::Equal)
    });
    let mut sum = vec![0.0; f];
    for v in ordered {
        for (s, x) in sum.iter_mut().zip(&v.0) {
            *s += x;
        }
    }
    let n = vectors.len() as f64;
    Ok(sum.into_iter().map(|s| s / n).collect())
}

/// Indices of the `⌊F·tail⌋` largest and `⌊F·tail⌋` smallest mean values.
/// Ties at a selection boundary go to the lower index.
pub fn compute_mask(training_vectors: &[&CorrelationVector], tail_fraction: f64) -> Result<FeatureMask> {
    let mean = mean_vector(training_vectors)?;
    mask_from_mean(&mean, tail_fraction)
}

pub fn mask_from_mean(mean: &[f64], tail_fraction: f64) -> Result<FeatureMask> {
    let f = mean.len();
    let k = tail_count(f, tail_fraction)?;

    let mut order: Vec<usize> = (0..f).collect();
    order.sort_by(|&a, &b| mean[b].total_cmp(&mean[a]).then(a.cmp(&b)));
    let top: Vec<usize> = order[..k].to_vec();

    let mut taken = vec![false; f];
    for &i in &top {
        taken[i] = true;
    }
    let mut rest: Vec<usize> = (0..f).filter(|&i| !taken[i]).collect();
    rest.sort_by(|&a, &b| mean[a].total_cmp(&mean[b]).then(a.cmp(&b)));

    let mut indices: Vec<usize> = top.into_iter().chain(rest.into_iter().take(k)).collect();
    indices.sort_unstable();
    FeatureMask::new(indices, f)
}

pub fn apply_mask(vector: &CorrelationVector, mask: &FeatureMask) -> Result<Vec<f64>> {
    if vector.len() != mask.source_feature_count {
        return Err(Error::Dimension {
            context: "apply_mask",
            expected: mask.source_feature_count,
            found: vector.len(),
        });
    }
    Ok(mask.indices.iter().map(|&i| vector.0[i]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::Label;
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    /// Direct evaluation of the textbook formula, sharing no code with `pearson`.
    fn reference_pearson(u: &[f64], v: &[f64]) -> f64 {
        let t = u.len() as f64;
        let ub = u.iter().sum::<f64>() / t;
        let vb = v.iter().sum::<f64>() / t;
        let mut num = 0.0;
        let mut du = 0.0;
        let mut dv = 0.0;
        for k in 0..u.len() {
            num += (u[k] - ub) * (v[k] - vb);
            du += (u[k] - ub) * (u[k] - ub);
            dv += (v[k] - vb) * (v[k] - vb);
        }
        num / (du.sqrt() * dv.sqrt())
    }

    #[test]
    fn pearson_exact_cases() {
        assert_eq!(pearson(&[1., 2., 3.], &[1., 2., 3.]).unwrap(), 1.0);
        assert_eq!(pearson(&[1., 2., 3.], &[3., 2., 1.]).unwrap(), -1.0);
        let r = pearson(&[1., 2., 4.], &[2., 2., 5.]).unwrap();
        assert!((r - reference_pearson(&[1., 2., 4.], &[2., 2., 5.])).abs() < 1e-12);
        // centered u = (-4/3,-1/3,5/3), v = (-1,-1,2): 5 / sqrt(14/3 * 6)
        assert!((r - 5.0 / (28.0f64).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn pearson_errors_and_degenerate() {
        assert!(matches!(pearson(&[1., 2.], &[1., 2., 3.]), Err(Error::Dimension { .. })));
        assert_eq!(pearson(&[0.1, 0.1, 0.1], &[1., 2., 3.]).unwrap(), 0.0);
    }

    #[test]
    fn vector_order_and_length() {
        let data = DMatrix::from_row_slice(4, 3, &[1., 4., 2., 2., 3., 7., 3., 2., 1., 4., 1., 5.]);
        let s = RoiTimeSeries::new("s", "x", Label::CONTROL, data.clone()).unwrap();
        let cv = correlation_vector(&s);
        assert_eq!(cv.len(), 3);
        let col = |j: usize| data.column(j).iter().copied().collect::<Vec<_>>();
        assert!((cv.0[0] - reference_pearson(&col(0), &col(1))).abs() < 1e-12);
        assert!((cv.0[1] - reference_pearson(&col(0), &col(2))).abs() < 1e-12);
        assert!((cv.0[2] - reference_pearson(&col(1), &col(2))).abs() < 1e-12);
        assert_eq!(cv.0[0], -1.0);
    }

    #[test]
    fn feature_counts_for_atlases() {
        assert_eq!(feature_count(200), 19900);
        assert_eq!(feature_count(116), 6670);
        assert_eq!(feature_count(160), 12720);
    }

    #[test]
    fn mask_single_vector() {
        let v = CorrelationVector(vec![0.9, -0.9, 0.1, -0.1]);
        let m = compute_mask(&[&v], 0.25).unwrap();
        assert_eq!(m.indices(), &[0, 1]);
    }

    #[test]
    fn mask_tie_prefers_lower_index() {
        // mean of these two is (0.5, 0.5, -0.5, 0.0)
        let a = CorrelationVector(vec![0.75, 0.25, -0.5, 0.25]);
        let b = CorrelationVector(vec![0.25, 0.75, -0.5, -0.25]);
        let mean = mean_vector(&[&a, &b]).unwrap();
        assert_eq!(mean, vec![0.5, 0.5, -0.5, 0.0]);
        let m = compute_mask(&[&a, &b], 0.25).unwrap();
        assert_eq!(m.indices(), &[0, 2]);
    }

    #[test]
    fn mask_all_equal_means_stays_disjoint() {
        let v = CorrelationVector(vec![0.3; 8]);
        let m = compute_mask(&[&v], 0.25).unwrap();
        assert_eq!(m.indices(), &[0, 1, 2, 3]);
    }

    #[test]
    fn mask_size_for_cc200() {
        let v = CorrelationVector((0..19900).map(|i| ((i * 7919) % 1000) as f64 / 1000.0 - 0.5).collect());
        let m = compute_mask(&[&v], 0.25).unwrap();
        assert_eq!(m.len(), 9950);
        assert_eq!(m.source_feature_count(), 19900);
    }

    #[test]
    fn mask_errors() {
        assert!(compute_mask(&[], 0.25).is_err());
        let v = CorrelationVector(vec![0.1, 0.2, 0.3]);
        assert!(compute_mask(&[&v], 0.75).is_err());
        let w = CorrelationVector(vec![0.1, 0.2]);
        assert!(matches!(compute_mask(&[&v, &w], 0.25), Err(Error::Dimension { .. })));
    }

    #[test]
    fn apply_mask_cases() {
        let v = CorrelationVector(vec![1.0, 2.0, 3.0, 4.0]);
        let m = FeatureMask::new(vec![1, 3], 4).unwrap();
        assert_eq!(apply_mask(&v, &m).unwrap(), vec![2.0, 4.0]);
        assert_eq!(apply_mask(&v, &FeatureMask::identity(4)).unwrap(), v.0);
        let short = CorrelationVector(vec![1.0, 2.0]);
        assert!(apply_mask(&short, &m).is_err());
    }

    #[test]
    fn mask_json_round_trip_and_validation() {
        let m = FeatureMask::new(vec![0, 5, 7], 10).unwrap();
        assert_eq!(FeatureMask::from_json(&m.to_json().unwrap()).unwrap(), m);
        assert!(FeatureMask::from_json(r#"{"indices":[3,1],"source_feature_count":5}"#).is_err());
        assert!(FeatureMask::from_json(r#"{"indices":[1,9],"source_feature_count":5}"#).is_err());
    }

    fn series(len: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (prop::collection::vec(-10.0f64..10.0, len), prop::collection::vec(-10.0f64..10.0, len))
    }

    proptest! {
        #[test]
        fn pearson_symmetric((u, v) in (3usize..20).prop_flat_map(series)) {
            let a = pearson(&u, &v).unwrap();
            let b = pearson(&v, &u).unwrap();
            prop_assert!((a - b).abs() <= 1e-12);
        }

        #[test]
        fn pearson_affine_invariant((u, v) in (3usize..20).prop_flat_map(series), scale in 0.1f64..10.0, shift in -5.0f64..5.0) {
            let base = pearson(&u, &v).unwrap();
            let moved: Vec<f64> = u.iter().map(|x| scale * x + shift).collect();
            prop_assert!((pearson(&moved, &v).unwrap() - base).abs() <= 1e-9);
        }

        #[test]
        fn mask_ignores_subject_order(rows in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 12), 2..6)) {
            let vecs: Vec<CorrelationVector> = rows.into_iter().map(CorrelationVector).collect();
            let fwd: Vec<&CorrelationVector> = vecs.iter().collect();
            let rev: Vec<&CorrelationVector> = vecs.iter().rev().collect();
            prop_assert_eq!(compute_mask(&fwd, 0.25).unwrap(), compute_mask(&rev, 0.25).unwrap());
        }
    }
}
