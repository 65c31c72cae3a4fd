//! CSV ingestion and emission.
//!
//! The column contract is fixed: header `t,delta` (plus an optional latent
//! `x` column), comma separated, `.` decimal point, LF line endings. Floats
//! are written with 17 significant digits so a round trip through the file
//! reproduces every 64-bit value exactly.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::CliError;

/// Raw ingested records before estimation-side validation. A truth column
/// in the file is validated and discarded; estimation never sees it.
pub struct Dataset {
    pub times: Vec<f64>,
    pub statuses: Vec<bool>,
}

/// 17 significant digits: value-preserving for every finite f64.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn data_err(path: &Path, line: u64, msg: String) -> CliError {
    CliError::Data(format!("{}:{line}: {msg}", path.display()))
}

/// Reads a `t,delta[,x]` file, reporting malformed rows with their line
/// numbers. Inspection times must be finite and inside the support; the
/// status must be the literal 0 or 1.
pub fn read_dataset(path: &Path, support: (f64, f64)) -> Result<Dataset, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;

    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?
        .iter()
        .map(|h| h.to_ascii_lowercase())
        .collect();
    let with_truth = match headers.iter().map(String::as_str).collect::<Vec<_>>()[..] {
        ["t", "delta"] => false,
        ["t", "delta", "x"] => true,
        _ => {
            return Err(CliError::Data(format!(
                "{}: expected header `t,delta` or `t,delta,x`, got `{}`",
                path.display(),
                headers.join(",")
            )))
        }
    };

    let (a, b) = support;
    let mut times = Vec::new();
    let mut statuses = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let line = record.position().map_or(0, |p| p.line());
        let expected = if with_truth { 3 } else { 2 };
        if record.len() != expected {
            return Err(data_err(
                path,
                line,
                format!("expected {expected} fields, got {}", record.len()),
            ));
        }
        let t: f64 = record[0]
            .parse()
            .map_err(|_| data_err(path, line, format!("cannot parse time `{}`", &record[0])))?;
        if !t.is_finite() || !(a..=b).contains(&t) {
            return Err(data_err(
                path,
                line,
                format!("inspection time {t} outside support [{a}, {b}]"),
            ));
        }
        let delta = match &record[1] {
            "0" => false,
            "1" => true,
            other => {
                return Err(data_err(
                    path,
                    line,
                    format!("status must be 0 or 1, got `{other}`"),
                ))
            }
        };
        times.push(t);
        statuses.push(delta);
        if with_truth {
            record[2].parse::<f64>().map_err(|_| {
                data_err(path, line, format!("cannot parse latent time `{}`", &record[2]))
            })?;
        }
    }
    if times.is_empty() {
        return Err(CliError::Data(format!(
            "{}: no observations",
            path.display()
        )));
    }
    Ok(Dataset { times, statuses })
}

/// Writes a `t,delta[,x]` file.
pub fn write_sample(
    path: &Path,
    times: &[f64],
    statuses: &[bool],
    latent: Option<&[f64]>,
) -> Result<(), CliError> {
    let file = File::create(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let mut out = BufWriter::new(file);
    match latent {
        None => writeln!(out, "t,delta")?,
        Some(_) => writeln!(out, "t,delta,x")?,
    }
    for (i, (&t, &d)) in times.iter().zip(statuses).enumerate() {
        let delta = if d { 1 } else { 0 };
        match latent {
            None => writeln!(out, "{},{delta}", fmt_f64(t))?,
            Some(xs) => writeln!(out, "{},{delta},{}", fmt_f64(t), fmt_f64(xs[i]))?,
        }
    }
    out.flush()?;
    Ok(())
}

/// Writes a table of named float columns of equal length.
pub fn write_curves(path: &Path, columns: &[(&str, &[f64])]) -> Result<(), CliError> {
    let file = File::create(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let mut out = BufWriter::new(file);
    let header: Vec<&str> = columns.iter().map(|(name, _)| *name).collect();
    writeln!(out, "{}", header.join(","))?;
    let rows = columns.first().map_or(0, |(_, col)| col.len());
    debug_assert!(columns.iter().all(|(_, col)| col.len() == rows));
    for i in 0..rows {
        let row: Vec<String> = columns.iter().map(|(_, col)| fmt_f64(col[i])).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    out.flush()?;
    Ok(())
}
