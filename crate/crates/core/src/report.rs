//! CSV output for runs and frequency curves.
//!
//! Floats are written in scientific notation with 17 significant digits so
//! that every value reads back to the same bits.

use std::io::{Read, Write};

use thiserror::Error;

use crate::experiment::{FrequencyPoint, TrialResult};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("row {row}: {detail}")]
    Malformed { row: usize, detail: String },
}

/// `{:.16e}`: 17 significant digits.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_flag(flag: Option<bool>) -> &'static str {
    match flag {
        Some(true) => "1",
        Some(false) => "0",
        None => "",
    }
}

/// Columns: trial, phase, is_eq, satisfied_bitmask, policy_0 .. policy_{N-1}.
/// `is_eq` is empty for phases that were not evaluated.
pub fn write_run_csv<W: Write>(out: W, results: &[TrialResult], num_players: usize) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["trial".to_string(), "phase".into(), "is_eq".into(), "satisfied_bitmask".into()];
    header.extend((0..num_players).map(|i| format!("policy_{i}")));
    w.write_record(&header)?;
    for r in results {
        for p in &r.phases {
            let mut rec = vec![
                r.trial.to_string(),
                p.phase.to_string(),
                fmt_flag(p.is_eq).to_string(),
                p.satisfied_bitmask().to_string(),
            ];
            rec.extend(p.policy_ids.iter().map(u64::to_string));
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Equilibrium flags per trial, in order of first appearance, read back
/// from a run CSV.
pub fn read_run_flags<R: Read>(input: R) -> Result<Vec<Vec<Option<bool>>>, ReportError> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    let col = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| ReportError::Malformed {
            row: 0,
            detail: format!("missing column {name}"),
        })
    };
    let (trial_col, eq_col) = (col("trial")?, col("is_eq")?);
    let mut trials: Vec<(String, Vec<Option<bool>>)> = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        let trial = rec.get(trial_col).unwrap_or_default().to_string();
        let flag = match rec.get(eq_col).unwrap_or_default() {
            "1" => Some(true),
            "0" => Some(false),
            "" => None,
            other => {
                return Err(ReportError::Malformed {
                    row: row + 1,
                    detail: format!("is_eq = {other:?}"),
                })
            }
        };
        match trials.iter_mut().find(|(t, _)| *t == trial) {
            Some((_, flags)) => flags.push(flag),
            None => trials.push((trial, vec![flag])),
        }
    }
    Ok(trials.into_iter().map(|(_, f)| f).collect())
}

/// Columns: phase, mean, stderr.
pub fn write_frequency_csv<W: Write>(out: W, points: &[FrequencyPoint]) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["phase", "mean", "stderr"])?;
    for p in points {
        w.write_record([p.phase.to_string(), fmt_float(p.mean), fmt_float(p.stderr)])?;
    }
    w.flush()?;
    Ok(())
}
