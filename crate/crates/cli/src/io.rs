use nalgebra::DMatrix;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("cannot open {path}: {source}")]
    Open { path: PathBuf, source: io::Error },
    #[error("{path}: row {row}, column {column}: {message}")]
    Parse { path: PathBuf, row: usize, column: usize, message: String },
    #[error("{path}: {message}")]
    Empty { path: PathBuf, message: String },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: io::Error },
    #[error("serialization failed: {0}")]
    Json(#[from] serde_json::Error),
}

fn parse_row(record: &csv::StringRecord) -> Vec<Option<f64>> {
    record.iter().map(|cell| cell.trim().parse::<f64>().ok().filter(|v| v.is_finite())).collect()
}

/// Reads a numeric CSV matrix. A first row containing any non-numeric cell is
/// treated as a header. Rows and columns in errors are 1-based file positions.
pub fn read_matrix_csv(path: &Path) -> Result<DMatrix<f64>, IoError> {
    let file = File::open(path).map_err(|source| IoError::Open { path: path.into(), source })?;
    read_matrix_from(file, path)
}

pub fn read_matrix_from<R: io::Read>(reader: R, path: &Path) -> Result<DMatrix<f64>, IoError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(reader);
    let mut values = Vec::new();
    let mut width = None;
    let mut rows = 0;
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| IoError::Parse { path: path.into(), row, column: 1, message: e.to_string() })?;
        if record.len() == 1 && record[0].trim().is_empty() {
            continue;
        }
        let parsed = parse_row(&record);
        if rows == 0 && width.is_none() && parsed.iter().any(Option::is_none) {
            width = Some(record.len());
            continue;
        }
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(IoError::Parse {
                path: path.into(),
                row,
                column: record.len().min(expected) + 1,
                message: format!("expected {expected} fields, found {}", record.len()),
            });
        }
        if let Some(column) = parsed.iter().position(Option::is_none) {
            return Err(IoError::Parse {
                path: path.into(),
                row,
                column: column + 1,
                message: format!("not a finite number: {:?}", &record[column]),
            });
        }
        values.extend(parsed.into_iter().flatten());
        rows += 1;
    }
    match width {
        Some(cols) if rows > 0 => Ok(DMatrix::from_row_slice(rows, cols, &values)),
        _ => Err(IoError::Empty { path: path.into(), message: "no numeric rows".into() }),
    }
}

/// Writes floats as `{:.16e}` (17 significant digits) and non-finite values
/// as `null`.
struct FixedDigits;

impl serde_json::ser::Formatter for FixedDigits {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            write!(writer, "{value:.16e}")
        } else {
            writer.write_all(b"null")
        }
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }
}

/// Top-level report layout shared by every command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report<C, R, S> {
    pub version: String,
    pub config: C,
    pub records: Vec<R>,
    pub summary: S,
}

impl<C, R, S> Report<C, R, S> {
    pub fn new(config: C, records: Vec<R>, summary: S) -> Self {
        Self { version: "1".into(), config, records, summary }
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>, IoError> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, FixedDigits);
    value.serialize(&mut ser)?;
    out.push(b'\n');
    Ok(out)
}

pub fn from_json<T: DeserializeOwned>(bytes: &[u8]) -> Result<T, IoError> {
    Ok(serde_json::from_slice(bytes)?)
}

/// Writes to `path`, or to standard output when `path` is `None`.
pub fn write_output(bytes: &[u8], path: Option<&Path>) -> Result<(), IoError> {
    match path {
        Some(path) => {
            let file = File::create(path).map_err(|source| IoError::Write { path: path.into(), source })?;
            let mut w = BufWriter::new(file);
            w.write_all(bytes).and_then(|_| w.flush()).map_err(|source| IoError::Write { path: path.into(), source })
        }
        None => {
            let mut out = io::stdout().lock();
            out.write_all(bytes).and_then(|_| out.flush()).map_err(|source| IoError::Write { path: "-".into(), source })
        }
    }
}

pub fn write_report_json<T: Serialize>(report: &T, path: Option<&Path>) -> Result<(), IoError> {
    write_output(&to_json(report)?, path)
}
