use fcnet::evaluation::{self, PipelineConfig};
use fcnet::ingest::{Dataset, Label, RoiTimeSeries};
use fcnet::model::TrainConfig;
use fcnet::synthdata::{self, SynthSpec};

fn small_spec() -> SynthSpec {
    SynthSpec { n_subjects: 60, n_timepoints: 60, ..SynthSpec::with_rois(12) }
}

fn quick_config(k: usize, seed: u64) -> PipelineConfig {
    PipelineConfig {
        k,
        seed,
        train: TrainConfig { joint_epochs: 10, finetune_epochs: 3, ..TrainConfig::default() },
        ..PipelineConfig::default()
    }
}

#[test]
fn whole_cv_is_deterministic_and_counts_every_subject() {
    let ds = synthdata::generate(&small_spec()).unwrap();
    let cfg = quick_config(5, 3);
    let a = evaluation::run_cv(&ds, &cfg).unwrap();
    let b = evaluation::run_cv(&ds, &cfg).unwrap();
    assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    assert_eq!(a.folds.len(), 5);
    assert_eq!(a.pooled_confusion.total(), ds.len());
    let per_fold: usize = a.folds.iter().map(|f| f.confusion.total()).sum();
    assert_eq!(per_fold, ds.len());
    let predicted: usize = a.folds.iter().map(|f| f.predictions.len()).sum();
    assert_eq!(predicted, ds.len());
}

#[test]
fn parallel_folds_match_sequential() {
    let ds = synthdata::generate(&small_spec()).unwrap();
    let seq = quick_config(5, 11);
    let par = PipelineConfig { jobs: 4, ..seq.clone() };
    let a = evaluation::run_cv(&ds, &seq).unwrap();
    let b = evaluation::run_cv(&ds, &par).unwrap();
    assert_eq!(
        serde_json::to_string(&a.folds).unwrap(),
        serde_json::to_string(&b.folds).unwrap()
    );
}

#[test]
fn augmentation_doubles_training_set_only_when_enabled() {
    let ds = synthdata::generate(&small_spec()).unwrap();
    let on = quick_config(5, 1);
    let off = PipelineConfig { augmentation: None, ..on.clone() };
    let with = evaluation::run_cv(&ds, &on).unwrap();
    let without = evaluation::run_cv(&ds, &off).unwrap();
    for (a, b) in with.folds.iter().zip(&without.folds) {
        assert_eq!(a.augmented_train_size, 2 * a.train_size);
        assert_eq!(b.augmented_train_size, b.train_size);
        assert_eq!(a.train_size + a.test_size, ds.len());
    }
}

#[test]
fn joint_loss_decreases_over_training() {
    let ds = synthdata::generate(&small_spec()).unwrap();
    let cfg = PipelineConfig { train: TrainConfig { joint_epochs: 25, ..TrainConfig::default() }, ..PipelineConfig::default() };
    let subjects: Vec<&RoiTimeSeries> = ds.subjects().iter().collect();
    let fitted = evaluation::fit(&subjects, &cfg, 5).unwrap();
    let joint = &fitted.history.joint;
    assert_eq!(joint.len(), 25);
    // average over the first and last tenth of the epochs, rounded up
    let window = joint.len().div_ceil(10);
    let head: f64 = joint[..window].iter().sum::<f64>() / window as f64;
    let tail: f64 = joint[joint.len() - window..].iter().sum::<f64>() / window as f64;
    assert!(tail < head, "loss went from {head} to {tail}");
    assert_eq!(fitted.history.finetune.len(), cfg.train.finetune_epochs);
}

#[test]
fn per_site_evaluates_each_site_and_averages() {
    let spec = SynthSpec { n_sites: 2, ..small_spec() };
    let ds = synthdata::generate(&spec).unwrap();
    let report = evaluation::run_per_site_cv(&ds, &quick_config(5, 2)).unwrap();
    assert_eq!(report.sites.len(), 2);
    for site in &report.sites {
        let r = site.report.as_ref().expect("site should be evaluated");
        assert_eq!(r.pooled_confusion.total(), site.subjects);
    }
    let avg = report.average.as_ref().unwrap();
    let mean = report.sites.iter().map(|s| s.report.as_ref().unwrap().mean.accuracy).sum::<f64>() / 2.0;
    assert!((avg.accuracy - mean).abs() < 1e-12);
}

#[test]
fn per_site_skips_site_with_too_few_patients() {
    let base = synthdata::generate(&small_spec()).unwrap();
    let mut subjects = base.into_subjects();
    // move three patients and ten controls into a site of their own
    let mut moved_patients = 0;
    let mut moved_controls = 0;
    for s in subjects.iter_mut() {
        if s.label == Label::PATIENT && moved_patients < 3 {
            s.site = "tiny".into();
            moved_patients += 1;
        } else if s.label == Label::CONTROL && moved_controls < 10 {
            s.site = "tiny".into();
            moved_controls += 1;
        } else {
            s.site = "big".into();
        }
    }
    let ds = Dataset::new(subjects, "custom-12").unwrap();
    let report = evaluation::run_per_site_cv(&ds, &quick_config(5, 4)).unwrap();
    let tiny = report.sites.iter().find(|s| s.site == "tiny").unwrap();
    assert!(tiny.report.is_none());
    assert!(tiny.skipped.as_ref().unwrap().contains("tiny"));
    let big = report.sites.iter().find(|s| s.site == "big").unwrap();
    assert!(big.report.is_some());
    let avg = report.average.unwrap();
    assert_eq!(avg.accuracy, big.report.as_ref().unwrap().mean.accuracy);
}

#[test]
fn whole_cv_errors_when_a_class_cannot_fill_the_folds() {
    let base = synthdata::generate(&SynthSpec { n_subjects: 8, ..small_spec() }).unwrap();
    let err = evaluation::run_cv(&base, &quick_config(10, 0)).unwrap_err();
    assert!(err.to_string().contains("all"), "{err}");
}
