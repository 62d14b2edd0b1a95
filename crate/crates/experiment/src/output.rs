//! CSV emission and reading of result rows.

use std::io::Write;
use std::path::Path;

use thiserror::Error;

use crate::run::{ResultRow, COLUMNS};

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("{path}: {source}")]
    Csv { path: String, source: csv::Error },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: record {record}: {message}")]
    Parse { path: String, record: usize, message: String },
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes the header and one record per row. Floats use the shortest
/// decimal that parses back to the same value.
pub fn write_rows<W: Write>(rows: &[ResultRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COLUMNS)?;
    for r in rows {
        w.write_record([
            r.seed.to_string(),
            r.algorithm.clone(),
            r.t.to_string(),
            r.cost.to_string(),
            r.cost_perslot.to_string(),
            opt(r.cost_offline),
            r.regret_d.to_string(),
            r.fit_d.to_string(),
            opt(r.lambda_norm),
            r.queue_norm.to_string(),
            r.avg_cost.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv(rows: &[ResultRow], path: &Path) -> Result<(), OutputError> {
    let file = std::fs::File::create(path).map_err(|source| OutputError::Io {
        path: path.display().to_string(),
        source,
    })?;
    write_rows(rows, std::io::BufWriter::new(file)).map_err(|source| OutputError::Csv {
        path: path.display().to_string(),
        source,
    })
}

pub fn read_csv(path: &Path) -> Result<Vec<ResultRow>, OutputError> {
    let name = path.display().to_string();
    let mut r = csv::Reader::from_path(path).map_err(|source| OutputError::Csv {
        path: name.clone(),
        source,
    })?;
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|source| OutputError::Csv {
            path: name.clone(),
            source,
        })?;
        let bad = |field: &str| OutputError::Parse {
            path: name.clone(),
            record: i + 1,
            message: format!("malformed {field}"),
        };
        let num = |k: usize| rec[k].parse::<f64>().map_err(|_| bad(COLUMNS[k]));
        let opt = |k: usize| -> Result<Option<f64>, OutputError> {
            if rec[k].is_empty() {
                Ok(None)
            } else {
                num(k).map(Some)
            }
        };
        if rec.len() != COLUMNS.len() {
            return Err(bad("record length"));
        }
        rows.push(ResultRow {
            seed: rec[0].parse().map_err(|_| bad("seed"))?,
            algorithm: rec[1].to_string(),
            t: rec[2].parse().map_err(|_| bad("t"))?,
            cost: num(3)?,
            cost_perslot: num(4)?,
            cost_offline: opt(5)?,
            regret_d: num(6)?,
            fit_d: num(7)?,
            lambda_norm: opt(8)?,
            queue_norm: num(9)?,
            avg_cost: num(10)?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(t: usize, x: f64) -> ResultRow {
        ResultRow {
            seed: 7,
            algorithm: "odg_0.5".into(),
            t,
            cost: x,
            cost_perslot: x / 3.0,
            cost_offline: (t % 2 == 0).then_some(0.1 + 0.2),
            regret_d: -x * 1e-17,
            fit_d: 0.0,
            lambda_norm: None,
            queue_norm: std::f64::consts::PI,
            avg_cost: 1e300,
        }
    }

    #[test]
    fn empty_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        emit_csv(&[], &p).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), format!("{}\n", COLUMNS.join(",")));
        assert!(read_csv(&p).unwrap().is_empty());
    }

    #[test]
    fn round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        let rows: Vec<ResultRow> = (1..=5).map(|t| row(t, 1.0 / t as f64)).collect();
        emit_csv(&rows, &p).unwrap();
        assert_eq!(read_csv(&p).unwrap(), rows);
    }

    #[test]
    fn missing_directory_names_the_path() {
        let err = emit_csv(&[], Path::new("/nonexistent/dir/r.csv")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/dir/r.csv"));
    }
}
