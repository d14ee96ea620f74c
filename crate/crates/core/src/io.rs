//! File formats: truth JSON, trajectory CSV, summaries and PCA outputs.
//!
//! Floating-point values in CSV and truth files are written in scientific
//! notation with 17 significant digits, which round-trips every `f64`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

use crate::experiment::{AccuracyReport, MethodResult, PcaProjection, TruthSpec};
use crate::model::{ModelShape, ParamVector};
use crate::optim::{InitStrategy, RunStatus, RunTrajectory};
use crate::{Error, Result};

/// 17 significant digits; non-finite values as `NaN`, `inf`, `-inf`.
pub fn format_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

/// Writes to a sibling temporary file and renames it into place.
pub fn atomic_write(path: &Path, contents: &[u8]) -> Result<()> {
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::Config(format!("{} is not a file path", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(file_name);
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(())
}

fn precise_values<S: serde::Serializer>(values: &[f64], serializer: S) -> Result<S::Ok, S::Error> {
    use serde::ser::{Error as _, SerializeSeq};
    let mut seq = serializer.serialize_seq(Some(values.len()))?;
    for &v in values {
        if !v.is_finite() {
            return Err(S::Error::custom("non-finite parameter"));
        }
        let raw = RawValue::from_string(format_f64(v)).map_err(S::Error::custom)?;
        seq.serialize_element(&raw)?;
    }
    seq.end()
}

/// Ground-truth parameters with the recipe that produced them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthFile {
    pub n: usize,
    pub sigma: f64,
    pub seed: u64,
    pub d: usize,
    #[serde(serialize_with = "precise_values")]
    pub theta: Vec<f64>,
}

impl TruthFile {
    pub fn new(spec: &TruthSpec, theta: &ParamVector) -> Self {
        Self {
            n: spec.n,
            sigma: spec.sigma,
            seed: spec.seed,
            d: theta.len(),
            theta: theta.as_slice().to_vec(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        atomic_write(path, self.to_json()?.as_bytes())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let file: Self = serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        file.params()?;
        Ok(file)
    }

    pub fn spec(&self) -> TruthSpec {
        TruthSpec {
            n: self.n,
            sigma: self.sigma,
            seed: self.seed,
        }
    }

    pub fn params(&self) -> Result<ParamVector> {
        let shape = ModelShape::new(self.n)?;
        if self.d != shape.d() {
            return Err(Error::DimensionMismatch {
                expected: shape.d(),
                actual: self.d,
            });
        }
        ParamVector::new(shape, self.theta.clone())
    }
}

pub fn trajectory_header(d: usize) -> Vec<String> {
    ["iter", "loss", "grad_norm"]
        .into_iter()
        .map(String::from)
        .chain((0..d).map(|i| format!("theta_{i}")))
        .collect()
}

/// `iter, loss, grad_norm, theta_0 .. theta_{d−1}`, one row per record.
pub fn trajectory_csv(trajectory: &RunTrajectory) -> Result<Vec<u8>> {
    let d = trajectory.initial().theta.len();
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(trajectory_header(d))?;
    for r in &trajectory.records {
        let row = [r.iter.to_string(), format_f64(r.loss), format_f64(r.grad_norm)]
            .into_iter()
            .chain(r.theta.iter().map(|&t| format_f64(t)));
        writer.write_record(row)?;
    }
    writer.into_inner().map_err(|e| Error::Io(e.into_error()))
}

/// A trajectory read back from CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryTable {
    pub iters: Vec<usize>,
    pub losses: Vec<f64>,
    pub grad_norms: Vec<f64>,
    pub thetas: Vec<Vec<f64>>,
}

fn parse_field<T: std::str::FromStr>(field: &str, path: &Path, row: usize) -> Result<T> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("{}: bad value `{field}` on row {row}", path.display())))
}

pub fn read_trajectory_csv(path: &Path) -> Result<TrajectoryTable> {
    let mut reader = csv::Reader::from_path(path)?;
    let header = reader.headers()?.clone();
    let d = header.len().saturating_sub(3);
    if header.len() < 4 || header.iter().collect::<Vec<_>>() != trajectory_header(d) {
        return Err(Error::Config(format!(
            "{}: not a trajectory CSV (expected iter,loss,grad_norm,theta_0..)",
            path.display()
        )));
    }
    let mut table = TrajectoryTable {
        iters: Vec::new(),
        losses: Vec::new(),
        grad_norms: Vec::new(),
        thetas: Vec::new(),
    };
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        table.iters.push(parse_field(&record[0], path, row)?);
        table.losses.push(parse_field(&record[1], path, row)?);
        table.grad_norms.push(parse_field(&record[2], path, row)?);
        table.thetas.push(
            record
                .iter()
                .skip(3)
                .map(|f| parse_field(f, path, row))
                .collect::<Result<_>>()?,
        );
    }
    Ok(table)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub method: String,
    pub alpha: f64,
    pub epsilon: f64,
    pub max_iters: usize,
    pub grad_tol: f64,
    pub init: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub init_seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub init_sigma: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub label: String,
    pub status: RunStatus,
    pub iterations: usize,
    pub initial_loss: f64,
    pub final_loss: f64,
    pub final_grad_norm: f64,
    pub rmse: f64,
    pub pearson_r: f64,
    pub config: ConfigEcho,
    pub notes: Vec<String>,
}

impl RunSummary {
    pub fn new(label: &str, init: InitStrategy, trajectory: &RunTrajectory, accuracy: &AccuracyReport) -> Self {
        let cfg = trajectory.config;
        let (init_seed, init_sigma) = match init {
            InitStrategy::Random { seed, sigma } => (Some(seed), Some(sigma)),
            InitStrategy::Hopfield => (None, None),
        };
        let mut notes = trajectory.warnings.clone();
        if !cfg.method.uses_curvature() {
            notes.push("epsilon is ignored by gd".into());
        }
        Self {
            label: label.to_string(),
            status: trajectory.status,
            iterations: trajectory.last().iter,
            initial_loss: trajectory.initial().loss,
            final_loss: trajectory.last().loss,
            final_grad_norm: trajectory.last().grad_norm,
            rmse: accuracy.rmse,
            pearson_r: accuracy.pearson_r,
            config: ConfigEcho {
                method: cfg.method.to_string(),
                alpha: cfg.alpha,
                epsilon: cfg.epsilon,
                max_iters: cfg.max_iters,
                grad_tol: cfg.grad_tol,
                init: init.label().into(),
                init_seed,
                init_sigma,
            },
            notes,
        }
    }

    pub fn from_result(result: &MethodResult) -> Self {
        Self::new(&result.label, result.init, &result.trajectory, &result.accuracy)
    }
}

/// Accuracy of the raw Hopfield solution, reported next to the runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineSummary {
    pub label: String,
    pub loss: f64,
    pub rmse: f64,
    pub pearson_r: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareSummary {
    pub truth: TruthSpec,
    pub hopfield_solution: BaselineSummary,
    pub runs: Vec<RunSummary>,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    atomic_write(path, text.as_bytes())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PcaSidecar {
    pub runs: Vec<String>,
    pub mean: Vec<f64>,
    pub axis1: Vec<f64>,
    pub axis2: Vec<f64>,
    pub explained_variance: [f64; 2],
    pub grid_size: usize,
}

pub fn pca_paths_csv(labels: &[String], pca: &PcaProjection, iters: &[Vec<usize>]) -> Result<Vec<u8>> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(["run_label", "iter", "pc1", "pc2"])?;
    for ((label, path), its) in labels.iter().zip(&pca.paths).zip(iters) {
        for (&(a, b), it) in path.iter().zip(its) {
            writer.write_record([label.clone(), it.to_string(), format_f64(a), format_f64(b)])?;
        }
    }
    writer.into_inner().map_err(|e| Error::Io(e.into_error()))
}

pub fn pca_grid_csv(pca: &PcaProjection) -> Result<Vec<u8>> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(["pc1", "pc2", "loss"])?;
    for g in &pca.grid {
        writer.write_record([format_f64(g.pc1), format_f64(g.pc2), format_f64(g.loss)])?;
    }
    writer.into_inner().map_err(|e| Error::Io(e.into_error()))
}

/// `prefix` with `suffix` appended to its file name.
pub fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut name = prefix.as_os_str().to_os_string();
    name.push(suffix);
    PathBuf::from(name)
}
