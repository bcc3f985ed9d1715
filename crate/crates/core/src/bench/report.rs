use std::collections::BTreeMap;
use std::io::{Read, Write};

use super::{Method, TrialErrors, TrialRecord};
use crate::error::{Error, Result};

pub const RECORD_HEADER: [&str; 14] = [
    "trial",
    "seed",
    "S",
    "lambda",
    "K",
    "M",
    "method",
    "err_max_amp",
    "err_sum_amp",
    "err_loc_weighted",
    "err_spurious",
    "envelope",
    "solver_iters",
    "wall_ms",
];

pub const ABORT_HEADER: [&str; 8] = ["trial", "seed", "S", "lambda", "K", "M", "method", "reason"];

pub const SUMMARY_HEADER: [&str; 8] = ["lambda", "K", "method", "trials", "aborted", "mean", "median", "std"];

fn csv_err(e: csv::Error) -> Error {
    match e.position() {
        Some(p) => Error::Parse {
            line: p.line() as usize,
            message: e.to_string(),
        },
        None => Error::Io(e.to_string()),
    }
}

fn key_fields(r: &TrialRecord) -> [String; 7] {
    [
        r.trial.to_string(),
        r.seed.to_string(),
        r.s.to_string(),
        r.lambda.to_string(),
        r.k.to_string(),
        r.m_total.to_string(),
        r.method.tag().to_string(),
    ]
}

/// Completed records as CSV; aborted ones are skipped (see [`write_aborts`]).
pub fn write_records<W: Write>(records: &[TrialRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RECORD_HEADER).map_err(csv_err)?;
    for r in records {
        let Ok(e) = &r.outcome else { continue };
        let mut row: Vec<String> = key_fields(r).into();
        row.extend([
            e.max_amp.to_string(),
            e.sum_amp.to_string(),
            e.loc_weighted.to_string(),
            e.spurious.to_string(),
            r.envelope.to_string(),
            r.solver_iters.to_string(),
            format!("{:.3}", r.wall_ms),
        ]);
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_aborts<W: Write>(records: &[TrialRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ABORT_HEADER).map_err(csv_err)?;
    for r in records {
        let Err(reason) = &r.outcome else { continue };
        let mut row: Vec<String> = key_fields(r).into();
        row.push(reason.clone());
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, line: usize) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    let raw = rec.get(i).ok_or_else(|| Error::Parse {
        line,
        message: format!("missing column {}", RECORD_HEADER[i]),
    })?;
    raw.parse().map_err(|e| Error::Parse {
        line,
        message: format!("{} = {raw:?}: {e}", RECORD_HEADER[i]),
    })
}

/// Read back a file written by [`write_records`].
pub fn read_records<R: Read>(input: R) -> Result<Vec<TrialRecord>> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers().map_err(csv_err)?.clone();
    if header.iter().ne(RECORD_HEADER.iter().copied()) {
        return Err(Error::Parse {
            line: 1,
            message: format!("unexpected header {:?}", header.iter().collect::<Vec<_>>()),
        });
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let tag: String = field(&rec, 6, line)?;
        let method = Method::from_tag(&tag).ok_or_else(|| Error::Parse {
            line,
            message: format!("unknown method {tag:?}"),
        })?;
        out.push(TrialRecord {
            trial: field(&rec, 0, line)?,
            seed: field(&rec, 1, line)?,
            s: field(&rec, 2, line)?,
            lambda: field(&rec, 3, line)?,
            k: field(&rec, 4, line)?,
            m_total: field(&rec, 5, line)?,
            method,
            outcome: Ok(TrialErrors {
                max_amp: field(&rec, 7, line)?,
                sum_amp: field(&rec, 8, line)?,
                loc_weighted: field(&rec, 9, line)?,
                spurious: field(&rec, 10, line)?,
            }),
            envelope: field(&rec, 11, line)?,
            solver_iters: field(&rec, 12, line)?,
            wall_ms: field(&rec, 13, line)?,
        });
    }
    Ok(out)
}

/// Statistics of `err_max_amp` for one `(lambda, K, method)` cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub lambda: usize,
    pub k: usize,
    pub method: Method,
    /// Completed trials entering the statistics.
    pub trials: usize,
    pub aborted: usize,
    pub mean: f64,
    pub median: f64,
    /// Sample standard deviation; zero for a single trial.
    pub std: f64,
}

/// Per-cell statistics over trials, sorted by `(lambda, K, method)`.
/// Aborted trials are counted and left out of the statistics.
pub fn summarize(records: &[TrialRecord]) -> Vec<Summary> {
    let mut cells: BTreeMap<(usize, usize, Method), (Vec<f64>, usize)> = BTreeMap::new();
    for r in records {
        let cell = cells.entry((r.lambda, r.k, r.method)).or_default();
        match &r.outcome {
            Ok(e) => cell.0.push(e.max_amp),
            Err(_) => cell.1 += 1,
        }
    }
    cells
        .into_iter()
        .map(|((lambda, k, method), (mut v, aborted))| {
            let n = v.len();
            let mean = if n == 0 { f64::NAN } else { v.iter().sum::<f64>() / n as f64 };
            v.sort_by(f64::total_cmp);
            let median = match n {
                0 => f64::NAN,
                _ if n % 2 == 1 => v[n / 2],
                _ => 0.5 * (v[n / 2 - 1] + v[n / 2]),
            };
            let std = if n < 2 {
                0.0
            } else {
                (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
            };
            Summary {
                lambda,
                k,
                method,
                trials: n,
                aborted,
                mean,
                median,
                std,
            }
        })
        .collect()
}

pub fn write_summary<W: Write>(summary: &[Summary], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_HEADER).map_err(csv_err)?;
    for s in summary {
        w.write_record([
            s.lambda.to_string(),
            s.k.to_string(),
            s.method.tag().to_string(),
            s.trials.to_string(),
            s.aborted.to_string(),
            s.mean.to_string(),
            s.median.to_string(),
            s.std.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}
