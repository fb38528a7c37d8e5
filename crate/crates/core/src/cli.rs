//! Command-line front end.
//!
//! Settings resolve as: command-line flag, else `--config` TOML file, else
//! built-in default. The resolved [`RunConfig`] is echoed into every artifact.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::augmentation::AugmentationConfig;
use crate::checkpoint::Checkpoint;
use crate::connectivity;
use crate::error::{Error, Result};
use crate::evaluation::{self, EvalReport, Metrics, PerSiteReport, PipelineConfig};
use crate::ingest::{self, Dataset, Label};
use crate::model::TrainConfig;
use crate::synthdata::{self, SynthSpec};

#[derive(Debug, Parser)]
#[command(name = "fcnet", version, about = "Connectivity-based subject classification")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cross-validate the full pipeline and write report.json / report.csv.
    Cv(RunArgs),
    /// Fit on the whole dataset and write model.json.
    Train(RunArgs),
    /// Score subjects with a saved model and write predictions.csv.
    Predict(PredictArgs),
    /// Generate a synthetic dataset.
    Synth(SynthArgs),
    /// Load a dataset and print a summary.
    Validate(DataArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CvMode {
    Whole,
    PerSite,
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Directory of `<subject_id>.<ext>` time-series files.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Phenotype CSV (defaults to `<data>/phenotypes.csv`).
    #[arg(long)]
    pub pheno: Option<PathBuf>,
    /// Time-series file extension.
    #[arg(long)]
    pub extension: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// TOML file with run settings; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, value_enum)]
    pub mode: Option<CvMode>,
    #[arg(long)]
    pub no_augment: bool,
    #[arg(long)]
    pub tail_fraction: Option<f64>,
    #[arg(long)]
    pub bottleneck: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub finetune_epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub momentum: Option<f64>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub knn: Option<usize>,
    #[arg(long)]
    pub alpha_min: Option<f64>,
    #[arg(long)]
    pub alpha_max: Option<f64>,
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct PredictArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Checkpoint written by `train`.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long, default_value = "synth")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, default_value_t = 200)]
    pub subjects: usize,
    #[arg(long, default_value_t = 32)]
    pub rois: usize,
    #[arg(long, default_value_t = 120)]
    pub timepoints: usize,
    #[arg(long, default_value_t = 2)]
    pub sites: usize,
    #[arg(long, default_value_t = 0.8)]
    pub gap: f64,
    #[arg(long, default_value_t = 0.3)]
    pub noise: f64,
}

/// Settings accepted in a `--config` file. Keys mirror the long flags.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub data: Option<PathBuf>,
    pub pheno: Option<PathBuf>,
    pub extension: Option<String>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub k: Option<usize>,
    pub mode: Option<CvMode>,
    pub augment: Option<bool>,
    pub tail_fraction: Option<f64>,
    pub bottleneck: Option<usize>,
    pub epochs: Option<usize>,
    pub finetune_epochs: Option<usize>,
    pub lr: Option<f64>,
    pub momentum: Option<f64>,
    pub batch: Option<usize>,
    pub knn: Option<usize>,
    pub alpha_min: Option<f64>,
    pub alpha_max: Option<f64>,
    pub jobs: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))
    }
}

/// Fully resolved settings of one invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub data: PathBuf,
    pub pheno: PathBuf,
    pub extension: String,
    pub out: PathBuf,
    pub seed: u64,
    pub mode: CvMode,
    pub pipeline: PipelineConfig,
}

impl RunConfig {
    pub fn resolve(args: &RunArgs) -> Result<Self> {
        let file = match &args.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let seed = args.seed.or(file.seed).ok_or_else(|| {
            Error::InvalidArgument("a seed is required (--seed or `seed` in the config file)".into())
        })?;
        let data = args
            .data
            .data
            .clone()
            .or(file.data)
            .ok_or_else(|| Error::InvalidArgument("--data is required".into()))?;
        let pheno = args
            .data
            .pheno
            .clone()
            .or(file.pheno)
            .unwrap_or_else(|| data.join(ingest::PHENOTYPE_FILE));
        let extension = args
            .data
            .extension
            .clone()
            .or(file.extension)
            .unwrap_or_else(|| ingest::DEFAULT_EXTENSION.to_string());
        let mode = args.mode.or(file.mode).unwrap_or(CvMode::Whole);
        let default_k = match mode {
            CvMode::Whole => 10,
            CvMode::PerSite => 5,
        };

        let train_defaults = TrainConfig::default();
        let train = TrainConfig {
            joint_epochs: args.epochs.or(file.epochs).unwrap_or(train_defaults.joint_epochs),
            finetune_epochs: args
                .finetune_epochs
                .or(file.finetune_epochs)
                .unwrap_or(train_defaults.finetune_epochs),
            batch_size: args.batch.or(file.batch).unwrap_or(train_defaults.batch_size),
            learning_rate: args.lr.or(file.lr).unwrap_or(train_defaults.learning_rate),
            momentum: args.momentum.or(file.momentum).unwrap_or(train_defaults.momentum),
            bottleneck_dim: args.bottleneck.or(file.bottleneck),
            seed,
            ..train_defaults
        };
        let augment = !args.no_augment && file.augment.unwrap_or(true);
        let aug_defaults = AugmentationConfig::default();
        let augmentation = augment.then(|| AugmentationConfig {
            k_neighbors: args.knn.or(file.knn).unwrap_or(aug_defaults.k_neighbors),
            alpha_min: args.alpha_min.or(file.alpha_min).unwrap_or(aug_defaults.alpha_min),
            alpha_max: args.alpha_max.or(file.alpha_max).unwrap_or(aug_defaults.alpha_max),
            seed,
            ..aug_defaults
        });
        let pipeline = PipelineConfig {
            tail_fraction: args
                .tail_fraction
                .or(file.tail_fraction)
                .unwrap_or(connectivity::DEFAULT_TAIL_FRACTION),
            augmentation,
            train,
            k: args.k.or(file.k).unwrap_or(default_k),
            seed,
            jobs: args.jobs.or(file.jobs).unwrap_or(1),
        };
        pipeline.validate()?;
        Ok(Self {
            data,
            pheno,
            extension,
            out: args.out.clone().or(file.out).unwrap_or_else(|| PathBuf::from("out")),
            seed,
            mode,
            pipeline,
        })
    }

    pub fn echo(&self) -> Result<serde_json::Value> {
        Ok(serde_json::to_value(self)?)
    }
}

fn load_data(args: &DataArgs) -> Result<Dataset> {
    let data = args
        .data
        .clone()
        .ok_or_else(|| Error::InvalidArgument("--data is required".into()))?;
    let pheno = args.pheno.clone().unwrap_or_else(|| data.join(ingest::PHENOTYPE_FILE));
    let ext = args.extension.as_deref().unwrap_or(ingest::DEFAULT_EXTENSION);
    ingest::load_dataset_with_extension(&data, &pheno, ext)
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "n/a".into())
}

fn metrics_line(m: &Metrics) -> String {
    format!(
        "accuracy={:.4} sensitivity={} specificity={}",
        m.accuracy,
        fmt_opt(m.sensitivity),
        fmt_opt(m.specificity)
    )
}

/// Runs cross-validation and returns the written report paths.
pub fn cmd_cv(args: &RunArgs) -> Result<Vec<PathBuf>> {
    let run = RunConfig::resolve(args)?;
    let dataset = ingest::load_dataset_with_extension(&run.data, &run.pheno, &run.extension)?;
    create_dir(&run.out)?;
    let echo = run.echo()?;
    match run.mode {
        CvMode::Whole => {
            let mut report: EvalReport = evaluation::run_cv(&dataset, &run.pipeline)?;
            report.config = echo;
            let json = run.out.join("report.json");
            let csv = run.out.join("report.csv");
            write_file(&json, report.to_json()?)?;
            report.write_csv(&csv)?;
            println!(
                "{}-fold CV on {} subjects: {} (pooled accuracy {:.4})",
                report.k,
                dataset.len(),
                metrics_line(&report.mean),
                report.pooled.accuracy
            );
            Ok(vec![json, csv])
        }
        CvMode::PerSite => {
            let mut report: PerSiteReport = evaluation::run_per_site_cv(&dataset, &run.pipeline)?;
            report.config = echo.clone();
            for site in report.sites.iter_mut() {
                if let Some(r) = site.report.as_mut() {
                    r.config = echo.clone();
                }
            }
            let json = run.out.join("per_site_report.json");
            let csv = run.out.join("per_site_report.csv");
            write_file(&json, report.to_json()?)?;
            report.write_csv(&csv)?;
            for site in &report.sites {
                match (&site.report, &site.skipped) {
                    (Some(r), _) => println!("site {}: {}", site.site, metrics_line(&r.mean)),
                    (None, Some(reason)) => println!("site {}: skipped ({reason})", site.site),
                    (None, None) => {}
                }
            }
            match &report.average {
                Some(avg) => println!("average: {}", metrics_line(avg)),
                None => println!("average: no site could be evaluated"),
            }
            Ok(vec![json, csv])
        }
    }
}

/// Fits on every subject with the run seed and writes `model.json`.
pub fn cmd_train(args: &RunArgs) -> Result<PathBuf> {
    let run = RunConfig::resolve(args)?;
    let dataset = ingest::load_dataset_with_extension(&run.data, &run.pheno, &run.extension)?;
    let subjects: Vec<_> = dataset.subjects().iter().collect();
    let fitted = evaluation::fit(&subjects, &run.pipeline, run.seed)?;
    create_dir(&run.out)?;
    let ckpt = Checkpoint::new(&fitted.params, &fitted.mask, dataset.roi_count(), run.echo()?);
    let path = run.out.join("model.json");
    ckpt.save(&path)?;
    println!(
        "trained on {} subjects ({} after augmentation), d_in={} d_h={}, final joint loss {:.6}",
        fitted.train_size,
        fitted.augmented_size,
        fitted.params.d_in,
        fitted.params.d_h,
        fitted.history.joint.last().copied().unwrap_or(f64::NAN)
    );
    Ok(path)
}

pub fn cmd_predict(args: &PredictArgs) -> Result<PathBuf> {
    let ckpt = Checkpoint::load(&args.model)?;
    let dataset = load_data(&args.data)?;
    ckpt.check_roi_count(dataset.roi_count())?;
    let params = ckpt.params();

    let out = args.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    create_dir(&out)?;
    let path = out.join("predictions.csv");
    let mut buf = Vec::new();
    let echo = serde_json::json!({ "model": args.model, "model_config": ckpt.config });
    let seed = ckpt.config.get("seed").cloned().unwrap_or(serde_json::Value::Null);
    buf.extend_from_slice(format!("# seed={seed}\n# config={echo}\n").as_bytes());
    {
        let csv_err = |source| Error::Csv {
            path: path.clone(),
            source,
        };
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(["subject_id", "prob", "label"]).map_err(csv_err)?;
        for s in dataset.subjects() {
            let x = connectivity::apply_mask(&connectivity::correlation_vector(s), &ckpt.mask)?;
            let (label, prob) = crate::model::predict(&params, &x)?;
            w.write_record([s.subject_id.clone(), prob.to_string(), label.value().to_string()])
                .map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
    }
    write_file(&path, buf)?;
    println!("wrote {} predictions to {}", dataset.len(), path.display());
    Ok(path)
}

pub fn cmd_synth(args: &SynthArgs) -> Result<PathBuf> {
    let spec = SynthSpec {
        n_subjects: args.subjects,
        n_timepoints: args.timepoints,
        n_sites: args.sites,
        correlation_gap: args.gap,
        noise_scale: args.noise,
        seed: args.seed,
        ..SynthSpec::with_rois(args.rois)
    };
    let dataset = synthdata::generate(&spec)?;
    let pheno = ingest::dump_dataset(&dataset, &args.out)?;
    write_file(&args.out.join("synth_spec.json"), serde_json::to_string_pretty(&spec)?)?;
    println!(
        "wrote {} subjects ({} ROIs x {} timepoints, {} sites) to {}",
        dataset.len(),
        spec.n_rois,
        spec.n_timepoints,
        spec.n_sites,
        args.out.display()
    );
    if spec.correlation_gap == 0.0 {
        println!("note: gap is 0, so the two classes are statistically indistinguishable");
    }
    Ok(pheno)
}

pub fn cmd_validate(args: &DataArgs) -> Result<()> {
    let dataset = load_data(args)?;
    let (tmin, tmax) = dataset
        .subjects()
        .iter()
        .fold((usize::MAX, 0), |(lo, hi), s| (lo.min(s.timepoints()), hi.max(s.timepoints())));
    let count = |subjects: &mut dyn Iterator<Item = &Label>, l: Label| subjects.filter(|&&x| x == l).count();
    let labels = dataset.labels();
    println!(
        "{} subjects, {} ROIs ({}), {} features, timepoints {tmin}..={tmax}",
        dataset.len(),
        dataset.roi_count(),
        dataset.atlas_name,
        connectivity::feature_count(dataset.roi_count())
    );
    println!(
        "patients={} controls={}",
        count(&mut labels.iter(), Label::PATIENT),
        count(&mut labels.iter(), Label::CONTROL)
    );
    for site in dataset.sites() {
        let site_labels: Vec<Label> = dataset
            .subjects()
            .iter()
            .filter(|s| s.site == site)
            .map(|s| s.label)
            .collect();
        println!(
            "site {site}: patients={} controls={}",
            count(&mut site_labels.iter(), Label::PATIENT),
            count(&mut site_labels.iter(), Label::CONTROL)
        );
    }
    Ok(())
}

pub fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Cv(a) => cmd_cv(a).map(|_| ()),
        Command::Train(a) => cmd_train(a).map(|_| ()),
        Command::Predict(a) => cmd_predict(a).map(|_| ()),
        Command::Synth(a) => cmd_synth(a).map(|_| ()),
        Command::Validate(a) => cmd_validate(a),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> RunArgs {
        let cli = Cli::try_parse_from(std::iter::once("fcnet").chain(args.iter().copied())).unwrap();
        match cli.command {
            Command::Cv(a) | Command::Train(a) => a,
            _ => unreachable!(),
        }
    }

    #[test]
    fn seed_is_mandatory() {
        let args = parse(&["cv", "--data", "d"]);
        assert!(RunConfig::resolve(&args).is_err());
    }

    #[test]
    fn defaults_follow_mode() {
        let run = RunConfig::resolve(&parse(&["cv", "--data", "d", "--seed", "3", "--mode", "per-site"])).unwrap();
        assert_eq!(run.pipeline.k, 5);
        assert_eq!(run.pheno, PathBuf::from("d").join("phenotypes.csv"));
        assert!(run.pipeline.augmentation.is_some());
        let run = RunConfig::resolve(&parse(&["cv", "--data", "d", "--seed", "3", "--no-augment"])).unwrap();
        assert_eq!(run.pipeline.k, 10);
        assert!(run.pipeline.augmentation.is_none());
    }

    #[test]
    fn flags_override_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.toml");
        fs::write(&cfg, "seed = 4\nk = 3\nlr = 0.5\nepochs = 2\nmode = \"per-site\"\n").unwrap();
        let run = RunConfig::resolve(&parse(&[
            "cv",
            "--data",
            "d",
            "--config",
            cfg.to_str().unwrap(),
            "--k",
            "4",
        ]))
        .unwrap();
        assert_eq!(run.seed, 4);
        assert_eq!(run.pipeline.k, 4);
        assert_eq!(run.pipeline.train.learning_rate, 0.5);
        assert_eq!(run.pipeline.train.joint_epochs, 2);
        assert_eq!(run.mode, CvMode::PerSite);
    }

    #[test]
    fn unknown_config_key_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.toml");
        fs::write(&cfg, "seed = 4\nlearning_rate = 0.1\n").unwrap();
        let args = parse(&["cv", "--data", "d", "--config", cfg.to_str().unwrap()]);
        assert!(RunConfig::resolve(&args).is_err());
    }

    #[test]
    fn invalid_values_rejected() {
        assert!(RunConfig::resolve(&parse(&["cv", "--data", "d", "--seed", "1", "--alpha-min", "0.9", "--alpha-max", "0.2"])).is_err());
        assert!(RunConfig::resolve(&parse(&["cv", "--data", "d", "--seed", "1", "--k", "1"])).is_err());
        assert!(RunConfig::resolve(&parse(&["cv", "--data", "d", "--seed", "1", "--tail-fraction", "0.7"])).is_err());
    }
}
