//! CSV ingestion, output records and atomic file writes.

use confound_bounds::RawDataset;
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};

use crate::Failure;

/// One row of `curves.*`: a single (model, δ, ε) grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRecord {
    pub model: String,
    pub delta: f64,
    pub eps: f64,
    pub psi_l: f64,
    pub psi_u: f64,
    pub sigma_l: f64,
    pub sigma_u: f64,
    pub uniform_lower: f64,
    pub uniform_upper: f64,
    pub pointwise_lower: f64,
    pub pointwise_upper: f64,
}

impl CurveRecord {
    pub const HEADER: [&'static str; 11] = [
        "model",
        "delta",
        "eps",
        "psi_l",
        "psi_u",
        "sigma_l",
        "sigma_u",
        "uniform_lower",
        "uniform_upper",
        "pointwise_lower",
        "pointwise_upper",
    ];

    pub fn numbers(&self) -> [f64; 10] {
        [
            self.delta,
            self.eps,
            self.psi_l,
            self.psi_u,
            self.sigma_l,
            self.sigma_u,
            self.uniform_lower,
            self.uniform_upper,
            self.pointwise_lower,
            self.pointwise_upper,
        ]
    }
}

/// One row of `epsilon0.*`. Numeric fields are empty unless `status` is `ok`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Epsilon0Record {
    pub model: String,
    pub delta: f64,
    pub status: String,
    pub estimate: Option<f64>,
    pub std_error: Option<f64>,
    pub ci_lower: Option<f64>,
    pub ci_upper: Option<f64>,
    pub boundary: Option<bool>,
    pub moment_residual: Option<f64>,
}

impl Epsilon0Record {
    pub const HEADER: [&'static str; 9] = [
        "model",
        "delta",
        "status",
        "estimate",
        "std_error",
        "ci_lower",
        "ci_upper",
        "boundary",
        "moment_residual",
    ];
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn number(v: f64) -> String {
    format!("{v:.16e}")
}

fn optional(v: Option<f64>) -> String {
    v.map(number).unwrap_or_default()
}

pub fn curves_csv(rows: &[CurveRecord]) -> Result<Vec<u8>, Failure> {
    let mut w = csv::Writer::from_writer(vec![]);
    w.write_record(CurveRecord::HEADER).map_err(io_failure)?;
    for r in rows {
        let mut fields = vec![r.model.clone()];
        fields.extend(r.numbers().iter().map(|&v| number(v)));
        w.write_record(&fields).map_err(io_failure)?;
    }
    w.into_inner().map_err(|e| Failure::Io(e.to_string()))
}

pub fn epsilon0_csv(rows: &[Epsilon0Record]) -> Result<Vec<u8>, Failure> {
    let mut w = csv::Writer::from_writer(vec![]);
    w.write_record(Epsilon0Record::HEADER).map_err(io_failure)?;
    for r in rows {
        w.write_record([
            r.model.clone(),
            number(r.delta),
            r.status.clone(),
            optional(r.estimate),
            optional(r.std_error),
            optional(r.ci_lower),
            optional(r.ci_upper),
            r.boundary.map(|b| b.to_string()).unwrap_or_default(),
            optional(r.moment_residual),
        ])
        .map_err(io_failure)?;
    }
    w.into_inner().map_err(|e| Failure::Io(e.to_string()))
}

pub fn parse_curves_csv(bytes: &[u8]) -> Result<Vec<CurveRecord>, csv::Error> {
    csv::Reader::from_reader(bytes).deserialize().collect()
}

pub fn json<T: Serialize + ?Sized>(value: &T) -> Result<Vec<u8>, Failure> {
    let mut out = serde_json::to_vec_pretty(value).map_err(|e| Failure::Io(e.to_string()))?;
    out.push(b'\n');
    Ok(out)
}

fn io_failure(e: csv::Error) -> Failure {
    Failure::Io(e.to_string())
}

/// Reads the named columns of a headed CSV file.
pub fn read_dataset(
    path: &Path,
    outcome: &str,
    treatment: &str,
    covariates: &[String],
    y_min: Option<f64>,
    y_max: Option<f64>,
) -> Result<RawDataset, Failure> {
    let mut names = vec![outcome, treatment];
    names.extend(covariates.iter().map(String::as_str));
    for (i, a) in names.iter().enumerate() {
        if names[..i].contains(a) {
            return Err(Failure::Validation(format!("column '{a}' is named more than once")));
        }
    }

    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| Failure::Validation(format!("cannot read {}: {e}", path.display())))?;
    let header = reader
        .headers()
        .map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))?
        .clone();
    let index: Vec<usize> = names
        .iter()
        .map(|name| {
            header
                .iter()
                .position(|h| h.trim() == *name)
                .ok_or_else(|| Failure::Validation(format!("column '{name}' not found in {}", path.display())))
        })
        .collect::<Result<_, _>>()?;

    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))?;
        for (k, &j) in index.iter().enumerate() {
            let cell = record.get(j).unwrap_or("").trim();
            let v: f64 = cell.parse().map_err(|_| {
                Failure::Validation(format!(
                    "column '{}' row {}: '{cell}' is not a number",
                    names[k],
                    row + 1
                ))
            })?;
            columns[k].push(v);
        }
    }
    let covariates = covariate_matrix(&columns[2..]);
    let mut columns = columns.into_iter();
    Ok(RawDataset {
        outcome: columns.next().unwrap_or_default(),
        treatment: columns.next().unwrap_or_default(),
        covariates,
        y_min,
        y_max,
    })
}

/// Column vectors to an `n × p` matrix.
fn covariate_matrix(columns: &[Vec<f64>]) -> Array2<f64> {
    let n = columns.first().map_or(0, Vec::len);
    Array2::from_shape_fn((n, columns.len()), |(i, j)| columns[j][i])
}

/// Files staged next to their targets and renamed into place only after
/// every file has been written, so a failure leaves no partial output.
pub fn write_all_atomic(dir: &Path, files: &[(String, Vec<u8>)]) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::Io(format!("{}: {e}", dir.display())))?;
    let mut staged: Vec<(PathBuf, PathBuf)> = Vec::with_capacity(files.len());
    for (name, bytes) in files {
        let target = dir.join(name);
        let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
        if let Err(e) = fs::write(&tmp, bytes) {
            for (t, _) in &staged {
                let _ = fs::remove_file(t);
            }
            let _ = fs::remove_file(&tmp);
            return Err(Failure::Io(format!("{}: {e}", tmp.display())));
        }
        staged.push((tmp, target));
    }
    for (tmp, target) in staged {
        fs::rename(&tmp, &target).map_err(|e| Failure::Io(format!("{}: {e}", target.display())))?;
    }
    Ok(())
}
