//! Stratified k-fold cross-validation, whole-dataset and per-site.
//!
//! Within a fold, everything learned (feature mask, EROS weights, neighbour
//! lists, network parameters) is fitted on the training subjects only. Seeds:
//! fold `f` of a run seeded `s` uses `derive_seed(s, FOLD, f)`, and the
//! fold's augmentation and training streams derive from that.

use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::augmentation::{self, AugmentationConfig};
use crate::connectivity::{self, CorrelationVector, FeatureMask};
use crate::eros::{self, EigenSummary, ErosWeights};
use crate::error::{Error, Result};
use crate::ingest::{Dataset, Label, RoiTimeSeries};
use crate::model::{self, ModelParams, TrainConfig, TrainHistory};
use crate::seeding::{self, tag};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub tail_fraction: f64,
    /// `None` disables augmentation.
    pub augmentation: Option<AugmentationConfig>,
    pub train: TrainConfig,
    pub k: usize,
    pub seed: u64,
    pub jobs: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            tail_fraction: connectivity::DEFAULT_TAIL_FRACTION,
            augmentation: Some(AugmentationConfig::default()),
            train: TrainConfig::default(),
            k: 10,
            seed: 0,
            jobs: 1,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        if let Some(a) = &self.augmentation {
            a.validate()?;
        }
        connectivity::tail_count(4, self.tail_fraction)?;
        if self.k < 2 {
            return Err(Error::InvalidArgument(format!("k must be at least 2, got {}", self.k)));
        }
        if self.jobs == 0 {
            return Err(Error::InvalidArgument("jobs must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub assignments: Vec<usize>,
}

impl FoldPlan {
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len()).filter(|&i| self.assignments[i] == fold).collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len()).filter(|&i| self.assignments[i] != fold).collect()
    }
}

/// Seeded shuffle within each class, then round-robin fold assignment. The
/// second class continues the round-robin where the first stopped, so fold
/// sizes also differ by at most one.
pub fn make_folds(labels: &[Label], k: usize, seed: u64, site: &str) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("k must be at least 2, got {k}")));
    }
    let mut rng = seeding::rng(seeding::derive_seed(seed, tag::FOLDS, 0));
    let mut assignments = vec![usize::MAX; labels.len()];
    let mut next = 0;
    for class in [Label::PATIENT, Label::CONTROL] {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if members.len() < k {
            return Err(Error::ClassTooSmall {
                label: class.value(),
                count: members.len(),
                needed: k,
                site: site.to_string(),
            });
        }
        members.shuffle(&mut rng);
        for i in members {
            assignments[i] = next;
            next = (next + 1) % k;
        }
    }
    Ok(FoldPlan { k, assignments })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    pub fn record(&mut self, truth: Label, predicted: Label) {
        match (truth.is_patient(), predicted.is_patient()) {
            (true, true) => self.tp += 1,
            (false, false) => self.tn += 1,
            (false, true) => self.fp += 1,
            (true, false) => self.fn_ += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }

    fn add(&mut self, o: &Confusion) {
        self.tp += o.tp;
        self.tn += o.tn;
        self.fp += o.fp;
        self.fn_ += o.fn_;
    }
}

/// Sensitivity or specificity is `None` when its denominator is zero.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn compute_metrics(c: &Confusion) -> Result<Metrics> {
    if c.total() == 0 {
        return Err(Error::InvalidArgument("metrics of an empty confusion matrix".into()));
    }
    Ok(Metrics {
        accuracy: (c.tp + c.tn) as f64 / c.total() as f64,
        sensitivity: ratio(c.tp, c.tp + c.fn_),
        specificity: ratio(c.tn, c.tn + c.fp),
    })
}

fn mean_defined(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let defined: Vec<f64> = values.flatten().collect();
    (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64)
}

/// Unweighted mean over a set of metric rows, ignoring undefined entries.
pub fn average_metrics(rows: &[Metrics]) -> Option<Metrics> {
    if rows.is_empty() {
        return None;
    }
    Some(Metrics {
        accuracy: rows.iter().map(|m| m.accuracy).sum::<f64>() / rows.len() as f64,
        sensitivity: mean_defined(rows.iter().map(|m| m.sensitivity)),
        specificity: mean_defined(rows.iter().map(|m| m.specificity)),
    })
}

/// Per-subject quantities that depend on that subject alone.
#[derive(Clone, Debug)]
pub struct SubjectFeatures {
    pub correlation: CorrelationVector,
    pub summary: Option<EigenSummary>,
}

pub fn subject_features(subject: &RoiTimeSeries, eigen_rank: Option<usize>) -> Result<SubjectFeatures> {
    Ok(SubjectFeatures {
        correlation: connectivity::correlation_vector(subject),
        summary: eigen_rank.map(|r| eros::eigen_summary(subject, r)).transpose()?,
    })
}

/// Everything learned from one training set.
#[derive(Clone, Debug, PartialEq)]
pub struct FittedPipeline {
    pub mask: FeatureMask,
    pub eros_weights: Option<ErosWeights>,
    pub params: ModelParams,
    pub history: TrainHistory,
    pub train_size: usize,
    pub augmented_size: usize,
}

impl FittedPipeline {
    pub fn predict_correlation(&self, correlation: &CorrelationVector) -> Result<(Label, f64)> {
        let x = connectivity::apply_mask(correlation, &self.mask)?;
        model::predict(&self.params, &x)
    }

    pub fn predict(&self, subject: &RoiTimeSeries) -> Result<(Label, f64)> {
        self.predict_correlation(&connectivity::correlation_vector(subject))
    }
}

/// Fits mask, augmentation and network on `train` only.
pub fn fit_prepared(train: &[(&SubjectFeatures, Label)], config: &PipelineConfig, seed: u64) -> Result<FittedPipeline> {
    let vectors: Vec<&CorrelationVector> = train.iter().map(|(f, _)| &f.correlation).collect();
    let mask = connectivity::compute_mask(&vectors, config.tail_fraction)?;
    let features = vectors
        .iter()
        .map(|v| connectivity::apply_mask(v, &mask))
        .collect::<Result<Vec<_>>>()?;
    let labels: Vec<Label> = train.iter().map(|(_, l)| *l).collect();

    let (features, labels, eros_weights) = match &config.augmentation {
        Some(aug) => {
            let summaries: Vec<EigenSummary> = train
                .iter()
                .map(|(f, _)| {
                    f.summary
                        .clone()
                        .ok_or_else(|| Error::InvalidArgument("augmentation requires eigen summaries".into()))
                })
                .collect::<Result<_>>()?;
            let refs: Vec<&EigenSummary> = summaries.iter().collect();
            let weights = eros::eros_weights(&refs)?;
            let aug = AugmentationConfig {
                seed: seeding::derive_seed(seed, tag::AUGMENT, 0),
                ..aug.clone()
            };
            let set = augmentation::augment_with_summaries(&features, &labels, &summaries, weights, &aug)?;
            (set.features, set.labels, Some(set.eros_weights))
        }
        None => (features, labels, None),
    };

    let train_config = TrainConfig {
        seed: seeding::derive_seed(seed, tag::INIT, 0),
        ..config.train.clone()
    };
    let outcome = model::train(&features, &labels, &train_config)?;
    Ok(FittedPipeline {
        mask,
        eros_weights,
        params: outcome.params,
        history: outcome.history,
        train_size: train.len(),
        augmented_size: features.len(),
    })
}

/// Convenience wrapper computing per-subject features first.
pub fn fit(train: &[&RoiTimeSeries], config: &PipelineConfig, seed: u64) -> Result<FittedPipeline> {
    let rank = config.augmentation.as_ref().map(|a| a.eigen_rank);
    let feats = train
        .par_iter()
        .map(|s| subject_features(s, rank))
        .collect::<Result<Vec<_>>>()?;
    let pairs: Vec<(&SubjectFeatures, Label)> = feats.iter().zip(train).map(|(f, s)| (f, s.label)).collect();
    fit_prepared(&pairs, config, seed)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub subject_id: String,
    pub truth: Label,
    pub predicted: Label,
    pub prob: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub train_size: usize,
    pub augmented_train_size: usize,
    pub test_size: usize,
    pub confusion: Confusion,
    pub metrics: Metrics,
    pub final_joint_loss: f64,
    pub final_finetune_loss: f64,
    pub predictions: Vec<Prediction>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub site: Option<String>,
    pub k: usize,
    pub seed: u64,
    pub folds: Vec<FoldResult>,
    /// Unweighted mean of per-fold metrics (headline numbers).
    pub mean: Metrics,
    /// Metrics of the confusion counts summed over folds.
    pub pooled: Metrics,
    pub pooled_confusion: Confusion,
    pub config: serde_json::Value,
}

/// Per-subject features for every subject of `dataset`.
pub fn prepare(dataset: &Dataset, config: &PipelineConfig) -> Result<Vec<SubjectFeatures>> {
    let rank = config.augmentation.as_ref().map(|a| a.eigen_rank);
    dataset
        .subjects()
        .par_iter()
        .map(|s| subject_features(s, rank))
        .collect()
}

/// Fits fold `fold` of `plan` exactly as [`run_cv`] does. Reads the training
/// subjects' features and labels only.
pub fn fit_fold(
    dataset: &Dataset,
    prepared: &[SubjectFeatures],
    plan: &FoldPlan,
    fold: usize,
    config: &PipelineConfig,
    run_seed: u64,
) -> Result<FittedPipeline> {
    let subjects = dataset.subjects();
    let train: Vec<(&SubjectFeatures, Label)> = plan
        .train_indices(fold)
        .into_iter()
        .map(|i| (&prepared[i], subjects[i].label))
        .collect();
    fit_prepared(&train, config, seeding::derive_seed(run_seed, tag::FOLD, fold as u64))
}

fn run_fold(
    dataset: &Dataset,
    prepared: &[SubjectFeatures],
    plan: &FoldPlan,
    fold: usize,
    config: &PipelineConfig,
    seed: u64,
) -> Result<FoldResult> {
    let train_size = plan.train_indices(fold).len();
    let test_idx = plan.test_indices(fold);
    let subjects = dataset.subjects();
    let fitted = fit_fold(dataset, prepared, plan, fold, config, seed)?;

    let mut confusion = Confusion::default();
    let mut predictions = Vec::with_capacity(test_idx.len());
    for &i in &test_idx {
        let (predicted, prob) = fitted.predict_correlation(&prepared[i].correlation)?;
        confusion.record(subjects[i].label, predicted);
        predictions.push(Prediction {
            subject_id: subjects[i].subject_id.clone(),
            truth: subjects[i].label,
            predicted,
            prob,
        });
    }
    log::info!(
        "fold {fold}: {} correct of {} ({} training samples after augmentation)",
        confusion.tp + confusion.tn,
        test_idx.len(),
        fitted.augmented_size
    );
    Ok(FoldResult {
        fold,
        train_size,
        augmented_train_size: fitted.augmented_size,
        test_size: test_idx.len(),
        metrics: compute_metrics(&confusion)?,
        confusion,
        final_joint_loss: fitted.history.joint.last().copied().unwrap_or(f64::NAN),
        final_finetune_loss: fitted.history.finetune.last().copied().unwrap_or(f64::NAN),
        predictions,
    })
}

fn with_pool<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

fn cv_inner(dataset: &Dataset, config: &PipelineConfig, seed: u64, site: Option<String>, echo: &serde_json::Value) -> Result<EvalReport> {
    let labels = dataset.labels();
    let plan = make_folds(&labels, config.k, seed, site.as_deref().unwrap_or("all"))?;
    let prepared = prepare(dataset, config)?;

    let folds = (0..plan.k)
        .into_par_iter()
        .map(|f| {
            run_fold(dataset, &prepared, &plan, f, config, seed).map_err(|e| Error::Fold {
                fold: f,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let fold_metrics: Vec<Metrics> = folds.iter().map(|f| f.metrics).collect();
    let mut pooled_confusion = Confusion::default();
    for f in &folds {
        pooled_confusion.add(&f.confusion);
    }
    Ok(EvalReport {
        site,
        k: plan.k,
        seed,
        mean: average_metrics(&fold_metrics).expect("at least two folds"),
        pooled: compute_metrics(&pooled_confusion)?,
        pooled_confusion,
        folds,
        config: echo.clone(),
    })
}

pub fn run_cv(dataset: &Dataset, config: &PipelineConfig) -> Result<EvalReport> {
    config.validate()?;
    let echo = serde_json::to_value(config)?;
    with_pool(config.jobs, || cv_inner(dataset, config, config.seed, None, &echo))?
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SiteOutcome {
    pub site: String,
    pub subjects: usize,
    pub report: Option<EvalReport>,
    pub skipped: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerSiteReport {
    pub k: usize,
    pub seed: u64,
    pub sites: Vec<SiteOutcome>,
    /// Unweighted mean over evaluated sites of their fold-mean metrics.
    pub average: Option<Metrics>,
    pub config: serde_json::Value,
}

pub fn run_per_site_cv(dataset: &Dataset, config: &PipelineConfig) -> Result<PerSiteReport> {
    config.validate()?;
    let echo = serde_json::to_value(config)?;
    let sites = dataset.sites();
    let outcomes = with_pool(config.jobs, || {
        sites
            .iter()
            .enumerate()
            .map(|(si, site)| {
                let idx: Vec<usize> = (0..dataset.len()).filter(|&i| &dataset.subjects()[i].site == site).collect();
                let subset = dataset.select(&idx)?;
                let seed = seeding::derive_seed(config.seed, tag::SITE, si as u64);
                let outcome = match cv_inner(&subset, config, seed, Some(site.clone()), &echo) {
                    Ok(report) => SiteOutcome {
                        site: site.clone(),
                        subjects: idx.len(),
                        report: Some(report),
                        skipped: None,
                    },
                    Err(e @ Error::ClassTooSmall { .. }) => {
                        log::warn!("skipping site {site}: {e}");
                        SiteOutcome {
                            site: site.clone(),
                            subjects: idx.len(),
                            report: None,
                            skipped: Some(e.to_string()),
                        }
                    }
                    Err(e) => return Err(e),
                };
                Ok(outcome)
            })
            .collect::<Result<Vec<_>>>()
    })??;
    let evaluated: Vec<Metrics> = outcomes.iter().filter_map(|o| o.report.as_ref().map(|r| r.mean)).collect();
    Ok(PerSiteReport {
        k: config.k,
        seed: config.seed,
        average: average_metrics(&evaluated),
        sites: outcomes,
        config: echo,
    })
}

const CSV_HEADER: [&str; 10] = [
    "scope",
    "site",
    "fold",
    "tp",
    "tn",
    "fp",
    "fn",
    "accuracy",
    "sensitivity",
    "specificity",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn metric_row(scope: &str, site: &str, fold: &str, c: Option<&Confusion>, m: &Metrics) -> Vec<String> {
    let counts = |f: fn(&Confusion) -> usize| c.map(|c| f(c).to_string()).unwrap_or_default();
    vec![
        scope.to_string(),
        site.to_string(),
        fold.to_string(),
        counts(|c| c.tp),
        counts(|c| c.tn),
        counts(|c| c.fp),
        counts(|c| c.fn_),
        m.accuracy.to_string(),
        opt(m.sensitivity),
        opt(m.specificity),
    ]
}

fn report_rows(r: &EvalReport) -> Vec<Vec<String>> {
    let site = r.site.clone().unwrap_or_default();
    let mut rows: Vec<Vec<String>> = r
        .folds
        .iter()
        .map(|f| metric_row("fold", &site, &f.fold.to_string(), Some(&f.confusion), &f.metrics))
        .collect();
    rows.push(metric_row("mean", &site, "", None, &r.mean));
    rows.push(metric_row("pooled", &site, "", Some(&r.pooled_confusion), &r.pooled));
    rows
}

fn write_csv(path: &Path, seed: u64, config: &serde_json::Value, rows: Vec<Vec<String>>) -> Result<()> {
    let mut buf = Vec::new();
    writeln!(buf, "# seed={seed}").map_err(|e| Error::io(path, e))?;
    writeln!(buf, "# config={}", serde_json::to_string(config)?).map_err(|e| Error::io(path, e))?;
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        let csv_err = |source| Error::Csv {
            path: path.to_path_buf(),
            source,
        };
        w.write_record(CSV_HEADER).map_err(csv_err)?;
        for row in rows {
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
    }
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

impl EvalReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        write_csv(path.as_ref(), self.seed, &self.config, report_rows(self))
    }
}

impl PerSiteReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut rows = Vec::new();
        for s in &self.sites {
            match &s.report {
                Some(r) => rows.extend(report_rows(r)),
                None => rows.push(vec![
                    "skipped".into(),
                    s.site.clone(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                ]),
            }
        }
        if let Some(avg) = &self.average {
            rows.push(metric_row("average", "", "", None, avg));
        }
        write_csv(path.as_ref(), self.seed, &self.config, rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn labels(patients: usize, controls: usize) -> Vec<Label> {
        let mut v = vec![Label::PATIENT; patients];
        v.extend(vec![Label::CONTROL; controls]);
        v
    }

    #[test]
    fn ten_balanced_subjects_five_folds() {
        let l = labels(5, 5);
        let plan = make_folds(&l, 5, 1, "all").unwrap();
        for f in 0..5 {
            let test = plan.test_indices(f);
            assert_eq!(test.len(), 2);
            assert_eq!(test.iter().filter(|&&i| l[i].is_patient()).count(), 1);
        }
    }

    #[test]
    fn abide_sized_folds() {
        let l = labels(505, 530);
        let plan = make_folds(&l, 10, 3, "all").unwrap();
        for f in 0..10 {
            let test = plan.test_indices(f);
            assert!(test.len() == 103 || test.len() == 104, "fold {f} has {}", test.len());
            let p = test.iter().filter(|&&i| l[i].is_patient()).count();
            assert!(p == 50 || p == 51);
        }
        assert_eq!(plan, make_folds(&l, 10, 3, "all").unwrap());
        assert_ne!(plan, make_folds(&l, 10, 4, "all").unwrap());
    }

    #[test]
    fn small_class_names_site() {
        let err = make_folds(&labels(3, 10), 5, 0, "NYU").unwrap_err();
        assert!(matches!(err, Error::ClassTooSmall { label: 1, count: 3, .. }));
        assert!(err.to_string().contains("NYU"));
    }

    #[test]
    fn metric_cases() {
        let m = compute_metrics(&Confusion { tp: 1, tn: 1, fp: 0, fn_: 0 }).unwrap();
        assert_eq!((m.accuracy, m.sensitivity, m.specificity), (1.0, Some(1.0), Some(1.0)));
        let m = compute_metrics(&Confusion { tp: 0, tn: 5, fp: 0, fn_: 5 }).unwrap();
        assert_eq!((m.accuracy, m.sensitivity, m.specificity), (0.5, Some(0.0), Some(1.0)));
        let m = compute_metrics(&Confusion { tp: 0, tn: 3, fp: 1, fn_: 0 }).unwrap();
        assert_eq!(m.sensitivity, None);
        assert!(compute_metrics(&Confusion::default()).is_err());
    }

    #[test]
    fn average_skips_undefined() {
        let rows = [
            Metrics { accuracy: 0.5, sensitivity: None, specificity: Some(1.0) },
            Metrics { accuracy: 1.0, sensitivity: Some(0.5), specificity: Some(0.0) },
        ];
        let avg = average_metrics(&rows).unwrap();
        assert_eq!(avg.accuracy, 0.75);
        assert_eq!(avg.sensitivity, Some(0.5));
        assert_eq!(avg.specificity, Some(0.5));
    }

    proptest! {
        #[test]
        fn folds_partition_and_stratify(p in 2usize..40, c in 2usize..40, k in 2usize..6, seed: u64) {
            prop_assume!(p >= k && c >= k);
            let l = labels(p, c);
            let plan = make_folds(&l, k, seed, "all").unwrap();
            prop_assert!(plan.assignments.iter().all(|&a| a < k));
            let mut per_class = vec![[0usize; 2]; k];
            for (i, &a) in plan.assignments.iter().enumerate() {
                per_class[a][l[i].value() as usize] += 1;
            }
            for class in 0..2 {
                let counts: Vec<usize> = per_class.iter().map(|c| c[class]).collect();
                prop_assert!(counts.iter().max().unwrap() - counts.iter().min().unwrap() <= 1);
            }
            let sizes: Vec<usize> = per_class.iter().map(|c| c[0] + c[1]).collect();
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        }

        #[test]
        fn metric_identities(tp in 0usize..50, tn in 0usize..50, fp in 0usize..50, fn_ in 0usize..50) {
            let c = Confusion { tp, tn, fp, fn_ };
            prop_assume!(c.total() > 0);
            let m = compute_metrics(&c).unwrap();
            prop_assert_eq!(m.accuracy, (tp + tn) as f64 / (tp + tn + fp + fn_) as f64);
            prop_assert!((0.0..=1.0).contains(&m.accuracy));
            match m.sensitivity {
                Some(s) => prop_assert_eq!(s, tp as f64 / (tp + fn_) as f64),
                None => prop_assert_eq!(tp + fn_, 0),
            }
            match m.specificity {
                Some(s) => prop_assert_eq!(s, tn as f64 / (tn + fp) as f64),
                None => prop_assert_eq!(tn + fp, 0),
            }
        }
    }
}
