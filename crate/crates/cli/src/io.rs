//! Curve CSV files, coefficient and tidy CSV output, and JSON with fixed
//! 17-significant-digit floats.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;
use ppc_core::{FourierBasis, RawCurveSet};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{CliError, CliResult};

/// Shortest fixed-width form that round-trips every `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

struct ExactFloats;

impl serde_json::ser::Formatter for ExactFloats {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()> {
        writer.write_all(fmt_f64(value).as_bytes())
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut out = BufWriter::new(create(path)?);
    let mut ser = serde_json::Serializer::with_formatter(&mut out, ExactFloats);
    value
        .serialize(&mut ser)
        .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::data(format!("{}: malformed JSON: {e}", path.display())))
}

fn create(path: &Path) -> CliResult<File> {
    File::create(path).map_err(|e| CliError::data(format!("cannot write {}: {e}", path.display())))
}

fn parse_number(field: &str, row: usize, col: usize) -> CliResult<f64> {
    let v: f64 = field
        .parse()
        .map_err(|_| CliError::data(format!("row {row}, column {col}: '{field}' is not a number")))?;
    if !v.is_finite() {
        return Err(CliError::data(format!("row {row}, column {col}: non-finite value")));
    }
    Ok(v)
}

/// Reads a curve matrix: header `id,t_1,...,t_n`, then one curve per row.
/// Rows and columns in messages are 1-based.
pub fn read_curves(path: &Path) -> CliResult<RawCurveSet> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    let mut records = reader.records();
    let header = match records.next() {
        Some(r) => r.map_err(|e| CliError::data(format!("{}: {e}", path.display())))?,
        None => return Err(CliError::data(format!("{}: empty file", path.display()))),
    };
    if header.get(0) != Some("id") {
        return Err(CliError::data("row 1, column 1: header must start with 'id'"));
    }
    let times = header
        .iter()
        .enumerate()
        .skip(1)
        .map(|(c, f)| parse_number(f, 1, c + 1))
        .collect::<CliResult<Vec<f64>>>()?;
    if times.is_empty() {
        return Err(CliError::data("row 1: no time columns"));
    }
    if let Some(j) = times.windows(2).position(|w| w[1] <= w[0]) {
        return Err(CliError::data(format!(
            "row 1, column {}: header times must be strictly increasing",
            j + 3
        )));
    }
    let n = times.len();
    let mut ids = Vec::new();
    let mut values = Vec::new();
    for (r, record) in records.enumerate() {
        let row = r + 2;
        let record = record.map_err(|e| CliError::data(format!("row {row}: {e}")))?;
        if record.len() != n + 1 {
            return Err(CliError::data(format!(
                "row {row}: expected {} fields, found {}",
                n + 1,
                record.len()
            )));
        }
        ids.push(record[0].to_string());
        for (c, f) in record.iter().enumerate().skip(1) {
            values.push(parse_number(f, row, c + 1)?);
        }
    }
    if ids.is_empty() {
        return Err(CliError::data(format!("{}: no curves", path.display())));
    }
    let matrix = DMatrix::from_row_slice(ids.len(), n, &values);
    Ok(RawCurveSet::new(times, matrix, ids)?)
}

pub fn write_curves(path: &Path, raw: &RawCurveSet) -> CliResult<()> {
    let header: Vec<String> = std::iter::once("id".to_string())
        .chain(raw.times().iter().map(|&t| fmt_f64(t)))
        .collect();
    let rows = raw.values();
    write_table(
        path,
        &header,
        (0..rows.nrows()).map(|i| {
            std::iter::once(raw.ids()[i].clone())
                .chain(rows.row(i).iter().map(|&v| fmt_f64(v)))
                .collect()
        }),
    )
}

/// Name of the function stored in each coefficient slot.
pub fn basis_labels(basis: &FourierBasis) -> Vec<String> {
    (0..basis.dim())
        .map(|slot| {
            let index = basis.index_of(slot);
            let k = FourierBasis::frequency_of_index(index);
            match index {
                0 => "const".to_string(),
                i if i % 2 == 1 => format!("sin{k}"),
                _ => format!("cos{k}"),
            }
        })
        .collect()
}

/// Coefficients with one row per curve, labelled by `ids`.
pub fn write_coefficients(path: &Path, basis: &FourierBasis, ids: &[String], coefs: &DMatrix<f64>) -> CliResult<()> {
    let header: Vec<String> = std::iter::once("id".to_string()).chain(basis_labels(basis)).collect();
    write_table(
        path,
        &header,
        (0..coefs.nrows()).map(|i| {
            std::iter::once(ids[i].clone())
                .chain(coefs.row(i).iter().map(|&v| fmt_f64(v)))
                .collect()
        }),
    )
}

pub fn write_table<I>(path: &Path, header: &[String], rows: I) -> CliResult<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(BufWriter::new(create(path)?));
    let fail = |e: csv::Error| CliError::data(format!("{}: {e}", path.display()));
    writer.write_record(header).map_err(fail)?;
    for row in rows {
        writer.write_record(&row).map_err(fail)?;
    }
    writer.flush()?;
    Ok(())
}

/// `path` with its extension replaced by `suffix`, e.g. `out.json` and
/// `_coefficients.csv` give `out_coefficients.csv`.
pub fn sibling(path: &Path, suffix: &str) -> std::path::PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}
