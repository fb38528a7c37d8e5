//! ROI time-series files and phenotype tables.
//!
//! A time-series file holds one row per timepoint and one whitespace
//! separated column per ROI. The first line may be a header if its first
//! token is not a number (ABIDE `.1D` files start with `#2001 #2002 ...`).
//! The phenotype table is a CSV with the exact header `subject_id,site,label`.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_EXTENSION: &str = "1D";
pub const PHENOTYPE_HEADER: [&str; 3] = ["subject_id", "site", "label"];
pub const PHENOTYPE_FILE: &str = "phenotypes.csv";

/// Binary diagnosis. `1` is the patient class.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Label(u8);

impl Label {
    pub const CONTROL: Label = Label(0);
    pub const PATIENT: Label = Label(1);

    pub fn new(value: u8) -> Result<Self> {
        match value {
            0 | 1 => Ok(Label(value)),
            other => Err(Error::Dataset(format!("label {other} is outside {{0,1}}"))),
        }
    }

    pub fn value(self) -> u8 {
        self.0
    }

    pub fn is_patient(self) -> bool {
        self.0 == 1
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.0)
    }
}

/// One subject's T×m BOLD matrix (rows are timepoints, columns are ROIs).
#[derive(Clone, Debug, PartialEq)]
pub struct RoiTimeSeries {
    pub subject_id: String,
    pub site: String,
    pub label: Label,
    pub data: DMatrix<f64>,
}

impl RoiTimeSeries {
    pub fn new(subject_id: impl Into<String>, site: impl Into<String>, label: Label, data: DMatrix<f64>) -> Result<Self> {
        let subject_id = subject_id.into();
        if data.nrows() < 2 || data.ncols() < 2 {
            return Err(Error::Dataset(format!(
                "subject {subject_id}: need at least 2 timepoints and 2 ROIs, got {}x{}",
                data.nrows(),
                data.ncols()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Dataset(format!("subject {subject_id}: non-finite sample")));
        }
        Ok(Self {
            subject_id,
            site: site.into(),
            label,
            data,
        })
    }

    pub fn timepoints(&self) -> usize {
        self.data.nrows()
    }

    pub fn roi_count(&self) -> usize {
        self.data.ncols()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    subjects: Vec<RoiTimeSeries>,
    roi_count: usize,
    pub atlas_name: String,
}

impl Dataset {
    pub fn new(subjects: Vec<RoiTimeSeries>, atlas_name: impl Into<String>) -> Result<Self> {
        let first = subjects
            .first()
            .ok_or_else(|| Error::Dataset("dataset has no subjects".into()))?;
        let roi_count = first.roi_count();
        let mut seen = HashSet::new();
        for s in &subjects {
            if s.roi_count() != roi_count {
                return Err(Error::Dataset(format!(
                    "subject {} has {} ROIs, expected {roi_count}",
                    s.subject_id,
                    s.roi_count()
                )));
            }
            if !seen.insert(s.subject_id.as_str()) {
                return Err(Error::Dataset(format!("duplicate subject_id {}", s.subject_id)));
            }
        }
        Ok(Self {
            subjects,
            roi_count,
            atlas_name: atlas_name.into(),
        })
    }

    pub fn subjects(&self) -> &[RoiTimeSeries] {
        &self.subjects
    }

    pub fn roi_count(&self) -> usize {
        self.roi_count
    }

    pub fn len(&self) -> usize {
        self.subjects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subjects.is_empty()
    }

    pub fn labels(&self) -> Vec<Label> {
        self.subjects.iter().map(|s| s.label).collect()
    }

    /// Site names in order of first appearance.
    pub fn sites(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for s in &self.subjects {
            if !out.contains(&s.site) {
                out.push(s.site.clone());
            }
        }
        out
    }

    /// Subset in the given index order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let subjects = indices.iter().map(|&i| self.subjects[i].clone()).collect();
        Dataset::new(subjects, self.atlas_name.clone())
    }

    pub fn into_subjects(self) -> Vec<RoiTimeSeries> {
        self.subjects
    }
}

/// Informational atlas name for a ROI count.
pub fn atlas_name_for(roi_count: usize) -> String {
    match roi_count {
        200 => "CC-200".to_string(),
        116 => "AAL".to_string(),
        160 => "Dosenbach160".to_string(),
        m => format!("custom-{m}"),
    }
}

pub fn parse_timeseries(text: &str, path: &Path) -> Result<DMatrix<f64>> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };

    let mut values = Vec::new();
    let mut cols: Option<usize> = None;
    let mut rows = 0usize;
    let mut first_content = true;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if first_content {
            first_content = false;
            if tokens[0].parse::<f64>().is_err() {
                continue;
            }
        }
        match cols {
            None => cols = Some(tokens.len()),
            Some(c) if c != tokens.len() => {
                return Err(parse_err(line_no, format!("ragged row: expected {c} columns, found {}", tokens.len())));
            }
            Some(_) => {}
        }
        for tok in tokens {
            let v: f64 = tok
                .parse()
                .map_err(|_| parse_err(line_no, format!("non-numeric cell {tok:?}")))?;
            if !v.is_finite() {
                return Err(parse_err(line_no, format!("non-finite cell {tok:?}")));
            }
            values.push(v);
        }
        rows += 1;
    }

    let cols = cols.ok_or_else(|| parse_err(1, "file contains no numeric rows".into()))?;
    Ok(DMatrix::from_row_slice(rows, cols, &values))
}

pub fn load_timeseries_file(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_timeseries(&text, path)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhenotypeRow {
    pub subject_id: String,
    pub site: String,
    pub label: Label,
}

pub fn load_phenotypes(path: impl AsRef<Path>) -> Result<Vec<PhenotypeRow>> {
    let path = path.as_ref();
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(csv_err)?;
    let header = reader.headers().map_err(csv_err)?.clone();
    if header.iter().collect::<Vec<_>>() != PHENOTYPE_HEADER {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: format!("header must be exactly `{}`", PHENOTYPE_HEADER.join(",")),
        });
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let line = i + 2;
        let raw_label = &record[2];
        let label = raw_label
            .parse::<u8>()
            .map_err(|_| Error::Dataset(format!("{}: line {line}: label {raw_label:?} is outside {{0,1}}", path.display())))
            .and_then(Label::new)?;
        rows.push(PhenotypeRow {
            subject_id: record[0].to_string(),
            site: record[1].to_string(),
            label,
        });
    }
    Ok(rows)
}

/// Loads every subject listed in the phenotype table from `<dir>/<subject_id>.<extension>`.
/// Subject order follows the phenotype rows.
pub fn load_dataset_with_extension(
    timeseries_dir: impl AsRef<Path>,
    phenotype_path: impl AsRef<Path>,
    extension: &str,
) -> Result<Dataset> {
    let dir = timeseries_dir.as_ref();
    let rows = load_phenotypes(phenotype_path)?;
    if rows.is_empty() {
        return Err(Error::Dataset("phenotype table lists no subjects".into()));
    }
    let mut seen = HashSet::new();
    for r in &rows {
        if !seen.insert(r.subject_id.as_str()) {
            return Err(Error::Dataset(format!("duplicate subject_id {}", r.subject_id)));
        }
    }

    let subjects = rows
        .par_iter()
        .map(|row| {
            let file = subject_path(dir, &row.subject_id, extension);
            if !file.is_file() {
                return Err(Error::Dataset(format!(
                    "missing time-series file {} for subject {}",
                    file.display(),
                    row.subject_id
                )));
            }
            let data = load_timeseries_file(&file)?;
            RoiTimeSeries::new(row.subject_id.clone(), row.site.clone(), row.label, data)
        })
        .collect::<Result<Vec<_>>>()?;

    let m = subjects[0].roi_count();
    Dataset::new(subjects, atlas_name_for(m))
}

pub fn load_dataset(timeseries_dir: impl AsRef<Path>, phenotype_path: impl AsRef<Path>) -> Result<Dataset> {
    load_dataset_with_extension(timeseries_dir, phenotype_path, DEFAULT_EXTENSION)
}

pub fn subject_path(dir: &Path, subject_id: &str, extension: &str) -> PathBuf {
    dir.join(format!("{subject_id}.{extension}"))
}

/// Text form of one subject's matrix: a `#ROI_j` header then tab-separated rows.
/// `f64` Display is shortest-round-trip, so loading the text back is lossless.
pub fn format_timeseries(data: &DMatrix<f64>) -> String {
    let mut out = String::new();
    let header: Vec<String> = (0..data.ncols()).map(|j| format!("#ROI_{j}")).collect();
    out.push_str(&header.join("\t"));
    out.push('\n');
    for r in 0..data.nrows() {
        for c in 0..data.ncols() {
            if c > 0 {
                out.push('\t');
            }
            let _ = write!(out, "{}", data[(r, c)]);
        }
        out.push('\n');
    }
    out
}

/// Writes `<subject_id>.1D` files and `phenotypes.csv` into `dir`.
pub fn dump_dataset(dataset: &Dataset, dir: impl AsRef<Path>) -> Result<PathBuf> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for s in dataset.subjects() {
        let path = subject_path(dir, &s.subject_id, DEFAULT_EXTENSION);
        fs::write(&path, format_timeseries(&s.data)).map_err(|e| Error::io(&path, e))?;
    }
    let pheno = dir.join(PHENOTYPE_FILE);
    let csv_err = |source| Error::Csv {
        path: pheno.clone(),
        source,
    };
    let mut writer = csv::Writer::from_path(&pheno).map_err(csv_err)?;
    writer.write_record(PHENOTYPE_HEADER).map_err(csv_err)?;
    for s in dataset.subjects() {
        writer
            .write_record([s.subject_id.as_str(), s.site.as_str(), &s.label.value().to_string()])
            .map_err(csv_err)?;
    }
    writer.flush().map_err(|e| Error::io(&pheno, e))?;
    Ok(pheno)
}
