//! Evaluation outputs: per-trial records, edf curves and sweep tables.
//! Numbers are written with 6 decimal places.

use std::fmt::Write as _;
use std::path::Path;

use mapdr_core::eval::{EdfCurve, Estimator, EvalRecord, SweepRow};

use crate::error::FileError;

pub const RECORDS_HEADER: &str = "trip_id,run_id,estimator,error_m,rel_error,diverged";

pub fn records_csv(records: &[EvalRecord]) -> String {
    let mut out = String::from(RECORDS_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{:.6},{:.6},{}",
            r.trip_id,
            r.run_id,
            r.estimator.name(),
            r.error_m,
            r.rel_error,
            r.diverged
        );
    }
    out
}

pub fn parse_records(path: &Path, text: &str) -> Result<Vec<EvalRecord>, FileError> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| FileError::csv(path, e))?;
    if !header.iter().eq(RECORDS_HEADER.split(',')) {
        return Err(FileError::format(path, 1, "unexpected header"));
    }
    let mut records = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| FileError::csv(path, e))?;
        let line = row.position().map_or(0, |p| p.line());
        let bad = |col: &str| FileError::format(path, line, format!("bad {col}"));
        records.push(EvalRecord {
            trip_id: row[0].parse().map_err(|_| bad("trip_id"))?,
            run_id: row[1].parse().map_err(|_| bad("run_id"))?,
            estimator: Estimator::from_name(&row[2]).ok_or_else(|| bad("estimator"))?,
            error_m: row[3].parse().map_err(|_| bad("error_m"))?,
            rel_error: row[4].parse().map_err(|_| bad("rel_error"))?,
            diverged: row[5].parse().map_err(|_| bad("diverged"))?,
        });
    }
    Ok(records)
}

pub fn read_records(path: &Path) -> Result<Vec<EvalRecord>, FileError> {
    let text = std::fs::read_to_string(path).map_err(|e| FileError::io(path, e))?;
    parse_records(path, &text)
}

/// The jump points of an edf, one `x,F` row each.
pub fn edf_csv(curve: &EdfCurve) -> String {
    let mut out = String::from("x,F\n");
    for (x, f) in curve.steps() {
        let _ = writeln!(out, "{x:.6},{f:.6}");
    }
    out
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("radius_m,q10_m,q25_m\n");
    for r in rows {
        let _ = writeln!(out, "{:.6},{:.6},{:.6}", r.radius_m, r.q10_m, r.q25_m);
    }
    out
}
