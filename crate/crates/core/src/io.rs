//! CSV input, JSON reports and `key = value` configuration files.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::inference::{
    bb_test, bm_test, hosmer_lemeshow_test, monte_carlo_test_with, weak_calibration_lr_test,
    BbTestResult, BmTestResult, DfRule, HlTestResult, McStatistic, McTestResult, WeakCalibResult,
    EFFECTIVE_SIZE_THRESHOLD,
};
use crate::process::{build_dataset, CalibrationDataset};
use crate::sim::StudyResult;

/// Version written to the `schema` field of every JSON document.
pub const SCHEMA_VERSION: u32 = 1;

/// Column names and clamping for [`read_dataset_csv`].
#[derive(Debug, Clone, PartialEq)]
pub struct CsvOptions {
    pub prediction_column: String,
    pub outcome_column: String,
    pub clamp_epsilon: Option<f64>,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self {
            prediction_column: "p".into(),
            outcome_column: "y".into(),
            clamp_epsilon: None,
        }
    }
}

pub fn read_dataset_csv(path: impl AsRef<Path>, opts: &CsvOptions) -> Result<CalibrationDataset> {
    read_dataset(File::open(path)?, opts)
}

/// Reads a headed CSV stream. Rows are numbered from 1 after the header.
pub fn read_dataset<R: Read>(mut input: R, opts: &CsvOptions) -> Result<CalibrationDataset> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let body = text.strip_prefix('\u{feff}').unwrap_or(&text);
    if body.trim().is_empty() {
        return Err(Error::EmptyInput);
    }

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(body.as_bytes());
    let headers = reader.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let p_col = find(&opts.prediction_column)?;
    let y_col = find(&opts.outcome_column)?;

    let mut predictions = Vec::new();
    let mut outcomes = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record?;
        let cell = |col: usize, name: &str| {
            record.get(col).ok_or_else(|| Error::Parse {
                row,
                message: format!("missing value for `{name}`"),
            })
        };
        let raw_p = cell(p_col, &opts.prediction_column)?;
        let p: f64 = raw_p.parse().map_err(|_| Error::Parse {
            row,
            message: format!("`{}` is not a number: {raw_p:?}", opts.prediction_column),
        })?;
        let raw_y = cell(y_col, &opts.outcome_column)?;
        let y: i64 = raw_y.parse().map_err(|_| Error::Parse {
            row,
            message: format!("`{}` is not an integer: {raw_y:?}", opts.outcome_column),
        })?;
        let y = u8::try_from(y).ok().filter(|v| *v <= 1).ok_or_else(|| Error::Parse {
            row,
            message: format!("`{}` must be 0 or 1, got {y}", opts.outcome_column),
        })?;
        predictions.push(p);
        outcomes.push(y);
    }
    if predictions.is_empty() {
        return Err(Error::EmptyInput);
    }
    build_dataset(&predictions, &outcomes, opts.clamp_epsilon)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub n: usize,
    pub events: usize,
    pub mean_prediction: f64,
    pub total_variance: f64,
    pub tie_flag: bool,
    /// Total variance below the threshold where asymptotic p-values are
    /// trusted.
    pub effective_size_warning: bool,
}

impl DatasetSummary {
    pub fn of(data: &CalibrationDataset) -> Self {
        let total_variance = data.total_variance();
        Self {
            n: data.len(),
            events: data.events(),
            mean_prediction: data.mean_prediction(),
            total_variance,
            tie_flag: data.tie_flag(),
            effective_size_warning: total_variance < EFFECTIVE_SIZE_THRESHOLD,
        }
    }
}

/// Which tests [`AnalysisReport::analyze`] runs beyond BM and BB.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisOptions {
    /// Hosmer–Lemeshow groups; `None` skips the test.
    pub hl_groups: Option<usize>,
    pub hl_df_rule: DfRule,
    pub weak_calibration: bool,
    /// `(replications, seed)` for the Monte Carlo versions.
    pub monte_carlo: Option<(usize, u64)>,
    pub exec: Execution,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            hl_groups: Some(10),
            hl_df_rule: DfRule::default(),
            weak_calibration: true,
            monte_carlo: None,
            exec: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloSection {
    pub bm: McTestResult,
    pub bb: McTestResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub schema: u32,
    pub tool_version: String,
    pub timestamp: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub input: Option<String>,
    pub dataset: DatasetSummary,
    pub bm: BmTestResult,
    pub bb: BbTestResult,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub hosmer_lemeshow: Option<HlTestResult>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub weak_calibration: Option<WeakCalibResult>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub monte_carlo: Option<MonteCarloSection>,
    /// Tests that could not be evaluated, with the reason.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub notes: Vec<String>,
}

impl AnalysisReport {
    pub fn analyze(data: &CalibrationDataset, opts: &AnalysisOptions, timestamp: impl Into<String>) -> Result<Self> {
        let mut notes = Vec::new();
        let hosmer_lemeshow = match opts.hl_groups {
            Some(g) => match hosmer_lemeshow_test(data, g, opts.hl_df_rule) {
                Ok(r) => Some(r),
                Err(e) => {
                    notes.push(format!("hosmer_lemeshow: {e}"));
                    None
                }
            },
            None => None,
        };
        let weak_calibration = opts.weak_calibration.then(|| weak_calibration_lr_test(data));
        if weak_calibration.is_some_and(|w| !w.converged) {
            notes.push("weak_calibration: recalibration fit did not converge".into());
        }
        let monte_carlo = match opts.monte_carlo {
            Some((reps, seed)) => Some(MonteCarloSection {
                bm: monte_carlo_test_with(data, McStatistic::Bm, reps, seed, opts.exec)?,
                bb: monte_carlo_test_with(data, McStatistic::Bb, reps, seed, opts.exec)?,
            }),
            None => None,
        };
        Ok(Self {
            schema: SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: timestamp.into(),
            input: None,
            dataset: DatasetSummary::of(data),
            bm: bm_test(data),
            bb: bb_test(data),
            hosmer_lemeshow,
            weak_calibration,
            monte_carlo,
            notes,
        })
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| Error::Write {
            path: path.to_path_buf(),
            source,
        })
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")
        .and_then(|_| out.flush())
        .map_err(|source| Error::Write {
            path: path.to_path_buf(),
            source,
        })
}

fn check_schema(found: u32) -> Result<()> {
    if found == SCHEMA_VERSION {
        Ok(())
    } else {
        Err(Error::Schema(format!(
            "expected schema {SCHEMA_VERSION}, found {found}"
        )))
    }
}

pub fn report_to_string(report: &AnalysisReport) -> Result<String> {
    Ok(serde_json::to_string_pretty(report)? + "\n")
}

pub fn write_report_json(report: &AnalysisReport, path: impl AsRef<Path>) -> Result<()> {
    write_json(report, path.as_ref())
}

pub fn read_report_json(path: impl AsRef<Path>) -> Result<AnalysisReport> {
    let report: AnalysisReport = serde_json::from_reader(File::open(path)?)?;
    check_schema(report.schema)?;
    Ok(report)
}

/// On-disk wrapper for a study. Each cell echoes its full scenario,
/// including the seed, so any cell can be re-run on its own.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyDocument {
    pub schema: u32,
    pub tool_version: String,
    pub study: StudyResult,
}

pub fn write_study_json(study: &StudyResult, path: impl AsRef<Path>) -> Result<()> {
    let doc = StudyDocument {
        schema: SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        study: study.clone(),
    };
    write_json(&doc, path.as_ref())
}

pub fn read_study_json(path: impl AsRef<Path>) -> Result<StudyResult> {
    let doc: StudyDocument = serde_json::from_reader(File::open(path)?)?;
    check_schema(doc.schema)?;
    Ok(doc.study)
}

/// Flat `key = value` configuration. Blank lines and lines starting with
/// `#` are skipped; later keys override earlier ones.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Config {
    entries: BTreeMap<String, (usize, String)>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim().trim_start_matches('\u{feff}');
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Config {
                line: line_no,
                message: format!("expected `key = value`, got {line:?}"),
            })?;
            let key = key.trim();
            if key.is_empty() {
                return Err(Error::Config {
                    line: line_no,
                    message: "empty key".into(),
                });
            }
            entries.insert(key.to_string(), (line_no, value.trim().to_string()));
        }
        Ok(Self { entries })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(_, v)| v.as_str())
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.entries.get(key) {
            None => Ok(None),
            Some((line, v)) => v.parse().map(Some).map_err(|e: T::Err| Error::Config {
                line: *line,
                message: format!("`{key}`: {e}"),
            }),
        }
    }

    /// Comma-separated list value.
    pub fn get_list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>>
    where
        T::Err: std::fmt::Display,
    {
        match self.entries.get(key) {
            None => Ok(None),
            Some((line, v)) => v
                .split(',')
                .map(|s| {
                    s.trim().parse().map_err(|e: T::Err| Error::Config {
                        line: *line,
                        message: format!("`{key}`: {e}"),
                    })
                })
                .collect::<Result<Vec<T>>>()
                .map(Some),
        }
    }
}
