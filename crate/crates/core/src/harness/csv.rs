//! Trace CSV files: `k,fval,subgrad_inf,backtracks,inner_iters,step_scalar,t_k,elapsed_sec`.
//!
//! Floats are written with 17 significant digits so that reading a file back
//! recovers every value bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{io_at, Error, Result};
use crate::optimizers::{Record, Trace};

pub const TRACE_HEADER: &str = "k,fval,subgrad_inf,backtracks,inner_iters,step_scalar,t_k,elapsed_sec";

pub fn trace_to_csv(records: &[Record]) -> String {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for r in records {
        writeln!(
            out,
            "{},{:.16e},{:.16e},{},{},{:.16e},{:.16e},{:.16e}",
            r.k, r.fval, r.subgrad_inf, r.backtracks, r.inner_iters, r.step_scalar, r.t_k, r.elapsed_sec
        )
        .expect("writing to a String cannot fail");
    }
    out
}

pub fn emit_trace_csv(trace: &Trace, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, trace_to_csv(&trace.records)).map_err(io_at(path))?;
    Ok(())
}

pub fn parse_trace_csv(text: &str, origin: &str) -> Result<Vec<Record>> {
    let err = |line: usize, msg: String| Error::Parse {
        path: origin.into(),
        line,
        msg,
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == TRACE_HEADER => {}
        _ => return Err(err(1, format!("expected header `{TRACE_HEADER}`"))),
    }
    let mut records = Vec::new();
    for (i, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            return Err(err(i + 1, format!("expected 8 fields, found {}", fields.len())));
        }
        let int = |j: usize| fields[j].parse::<usize>().map_err(|e| err(i + 1, format!("field {}: {e}", j + 1)));
        let float = |j: usize| fields[j].parse::<f64>().map_err(|e| err(i + 1, format!("field {}: {e}", j + 1)));
        let rec = Record {
            k: int(0)?,
            fval: float(1)?,
            subgrad_inf: float(2)?,
            backtracks: int(3)?,
            inner_iters: int(4)?,
            step_scalar: float(5)?,
            t_k: float(6)?,
            elapsed_sec: float(7)?,
        };
        if let Some(prev) = records.last() {
            let prev: &Record = prev;
            if rec.k <= prev.k {
                return Err(err(i + 1, format!("iteration {} does not follow {}", rec.k, prev.k)));
            }
        }
        records.push(rec);
    }
    Ok(records)
}

pub fn read_trace_csv(path: impl AsRef<Path>) -> Result<Vec<Record>> {
    let path = path.as_ref();
    parse_trace_csv(&fs::read_to_string(path).map_err(io_at(path))?, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(k: usize, f: f64) -> Record {
        Record {
            k,
            fval: f,
            subgrad_inf: f / 3.0,
            backtracks: k % 3,
            inner_iters: 7 * k,
            step_scalar: 0.1 + k as f64,
            t_k: 1.0 / 7.0,
            elapsed_sec: 1e-7 * k as f64,
        }
    }

    #[test]
    fn empty_trace_is_header_only() {
        assert_eq!(trace_to_csv(&[]), format!("{TRACE_HEADER}\n"));
        assert!(parse_trace_csv(&trace_to_csv(&[]), "t").unwrap().is_empty());
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let recs: Vec<Record> = (0..20).map(|k| rec(k, (k as f64 + 0.1).ln() * std::f64::consts::PI)).collect();
        let back = parse_trace_csv(&trace_to_csv(&recs), "t").unwrap();
        assert_eq!(back, recs);
        for (a, b) in back.iter().zip(&recs) {
            assert_eq!(a.fval.to_bits(), b.fval.to_bits());
        }
    }

    #[test]
    fn rejects_bad_rows() {
        let bad = format!("{TRACE_HEADER}\n0,1,1,0,0,1,1\n");
        assert!(matches!(parse_trace_csv(&bad, "t"), Err(Error::Parse { line: 2, .. })));
        let bad = format!("{TRACE_HEADER}\n1,1,1,0,0,1,1,0\n1,1,1,0,0,1,1,0\n");
        assert!(matches!(parse_trace_csv(&bad, "t"), Err(Error::Parse { line: 3, .. })));
        assert!(parse_trace_csv("k,f\n", "t").is_err());
    }
}
