//! EROS similarity between multivariate time series.
//!
//! Each subject is summarised by the leading eigenpairs of its ROI
//! covariance matrix. Two subjects are compared by the weighted sum of
//! absolute cosines between corresponding eigenvectors, with weights derived
//! from the (per-item normalised) eigenvalue spectra of a reference set.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::ingest::{Label, RoiTimeSeries};

pub const DEFAULT_RANK: usize = 2;
pub const EIGENVALUE_FLOOR: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct EigenSummary {
    /// Descending, clamped to zero below [`EIGENVALUE_FLOOR`].
    pub eigenvalues: Vec<f64>,
    /// Unit-norm eigenvectors; `eigenvectors[i]` pairs with `eigenvalues[i]`.
    pub eigenvectors: Vec<Vec<f64>>,
}

impl EigenSummary {
    pub fn rank(&self) -> usize {
        self.eigenvalues.len()
    }
}

/// Sample covariance (divisor `T-1`) across the ROI columns.
pub fn covariance(data: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let t = data.nrows();
    if t < 2 {
        return Err(Error::InvalidArgument(format!("covariance needs at least 2 timepoints, got {t}")));
    }
    let means = data.row_mean();
    let mut centered = data.clone();
    for mut row in centered.row_iter_mut() {
        row -= &means;
    }
    let cov = centered.transpose() * &centered / (t as f64 - 1.0);
    if cov.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("covariance matrix has non-finite entries".into()));
    }
    Ok(cov)
}

/// All eigenpairs of a symmetric matrix, sorted descending (ties keep solver order).
pub fn sorted_eigenpairs(symmetric: DMatrix<f64>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let eig = SymmetricEigen::new(symmetric);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let values = order
        .iter()
        .map(|&i| {
            let v = eig.eigenvalues[i];
            if v < EIGENVALUE_FLOOR {
                0.0
            } else {
                v
            }
        })
        .collect();
    let vectors = order
        .iter()
        .map(|&i| {
            let col = eig.eigenvectors.column(i);
            let norm = col.norm();
            col.iter().map(|x| x / norm).collect()
        })
        .collect();
    (values, vectors)
}

pub fn eigen_summary(subject: &RoiTimeSeries, rank: usize) -> Result<EigenSummary> {
    let m = subject.roi_count();
    if rank == 0 || rank > m {
        return Err(Error::InvalidArgument(format!(
            "eigen rank {rank} must lie in 1..={m} for subject {}",
            subject.subject_id
        )));
    }
    let cov = covariance(&subject.data)?;
    let (mut eigenvalues, mut eigenvectors) = sorted_eigenpairs(cov);
    eigenvalues.truncate(rank);
    eigenvectors.truncate(rank);
    Ok(EigenSummary {
        eigenvalues,
        eigenvectors,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErosWeights(Vec<f64>);

impl ErosWeights {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        let sum: f64 = w.iter().sum();
        if w.is_empty() || w.iter().any(|x| !x.is_finite() || *x < 0.0) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "EROS weights must be non-negative and sum to 1, got {w:?}"
            )));
        }
        Ok(Self(w))
    }

    pub fn uniform(rank: usize) -> Self {
        Self(vec![1.0 / rank as f64; rank])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Weight vector from a set of eigenvalue spectra: normalise each item's
/// spectrum to sum 1, average per eigen-index, renormalise.
pub fn eros_weights(summaries: &[&EigenSummary]) -> Result<ErosWeights> {
    let first = summaries
        .first()
        .ok_or_else(|| Error::InvalidArgument("EROS weights need at least one summary".into()))?;
    let r = first.rank();
    let mut acc = vec![0.0; r];
    for (item, s) in summaries.iter().enumerate() {
        if s.rank() != r {
            return Err(Error::Dimension {
                context: "EROS weight rank",
                expected: r,
                found: s.rank(),
            });
        }
        let total: f64 = s.eigenvalues.iter().sum();
        if total > 0.0 {
            for (a, v) in acc.iter_mut().zip(&s.eigenvalues) {
                *a += v / total;
            }
        } else {
            log::warn!("item {item}: retained eigenvalues sum to 0; using uniform spectrum");
            for a in acc.iter_mut() {
                *a += 1.0 / r as f64;
            }
        }
    }
    let n = summaries.len() as f64;
    let w: Vec<f64> = acc.into_iter().map(|a| a / n).collect();
    let total: f64 = w.iter().sum();
    Ok(ErosWeights(w.into_iter().map(|x| x / total).collect()))
}

pub fn eros_similarity(a: &EigenSummary, b: &EigenSummary, w: &ErosWeights) -> Result<f64> {
    if a.rank() != w.len() || b.rank() != w.len() {
        return Err(Error::InvalidArgument(format!(
            "EROS rank mismatch: {} vs {} with {} weights",
            a.rank(),
            b.rank(),
            w.len()
        )));
    }
    Ok(a.eigenvectors
        .iter()
        .zip(&b.eigenvectors)
        .zip(&w.0)
        .map(|((u, v), wi)| {
            let dot: f64 = u.iter().zip(v).map(|(x, y)| x * y).sum();
            wi * dot.abs()
        })
        .sum())
}

/// The `k` most EROS-similar subjects sharing the query's label, most similar
/// first. Ties go to the lower index. `k` is clamped to the number available.
pub fn knn_same_class(
    query: usize,
    summaries: &[EigenSummary],
    labels: &[Label],
    k: usize,
    w: &ErosWeights,
) -> Result<Vec<usize>> {
    if summaries.len() != labels.len() {
        return Err(Error::Dimension {
            context: "knn labels",
            expected: summaries.len(),
            found: labels.len(),
        });
    }
    if query >= summaries.len() {
        return Err(Error::InvalidArgument(format!("query index {query} out of range")));
    }
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let target = labels[query];
    let mut scored = Vec::new();
    for (i, s) in summaries.iter().enumerate() {
        if i != query && labels[i] == target {
            scored.push((i, eros_similarity(&summaries[query], s, w)?));
        }
    }
    if scored.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "subject {query} has no other member of class {}",
            target.value()
        )));
    }
    if k > scored.len() {
        log::warn!(
            "subject {query}: only {} same-class neighbours available, k={k} clamped",
            scored.len()
        );
    }
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(scored.into_iter().take(k).map(|(i, _)| i).collect())
}
