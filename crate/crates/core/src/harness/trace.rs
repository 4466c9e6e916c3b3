//! Checkpoint traces as CSV.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TRACE_HEADER: &str = "t,seconds,upper,lower,gap,rho_or_alpha,restarts";

/// One checkpoint: best upper bound `υ^t`, best lower bound `υ_t`, their gap
/// and the current penalty (or stage weight for sequential runs).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: usize,
    pub seconds: f64,
    pub upper: f64,
    pub lower: f64,
    pub gap: f64,
    pub rho_or_alpha: f64,
    pub restarts: usize,
}

impl TraceRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{:.6},{:e},{:e},{:e},{:e},{}",
            self.t, self.seconds, self.upper, self.lower, self.gap, self.rho_or_alpha, self.restarts
        )
    }

    pub fn parse(line: &str) -> Result<Self> {
        let f: Vec<&str> = line.trim().split(',').collect();
        if f.len() != 7 {
            return Err(Error::Parse(format!("trace row needs 7 fields, got {}: {line}", f.len())));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|e| Error::Parse(format!("bad number {s:?}: {e}")));
        let int = |s: &str| s.parse::<usize>().map_err(|e| Error::Parse(format!("bad integer {s:?}: {e}")));
        Ok(Self {
            t: int(f[0])?,
            seconds: num(f[1])?,
            upper: num(f[2])?,
            lower: num(f[3])?,
            gap: num(f[4])?,
            rho_or_alpha: num(f[5])?,
            restarts: int(f[6])?,
        })
    }
}

pub fn write_trace<W: Write>(mut out: W, rows: &[TraceRow]) -> Result<()> {
    writeln!(out, "{TRACE_HEADER}")?;
    for r in rows {
        writeln!(out, "{}", r.to_csv())?;
    }
    Ok(())
}

pub fn read_trace<R: BufRead>(input: R) -> Result<Vec<TraceRow>> {
    let mut lines = input.lines();
    let header = lines.next().transpose()?.unwrap_or_default();
    if header.trim() != TRACE_HEADER {
        return Err(Error::Parse(format!("trace must start with `{TRACE_HEADER}`")));
    }
    let mut rows = Vec::new();
    for l in lines {
        let l = l?;
        if !l.trim().is_empty() {
            rows.push(TraceRow::parse(&l)?);
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let rows = vec![
            TraceRow { t: 1, seconds: 0.25, upper: 3.5, lower: f64::NEG_INFINITY, gap: f64::INFINITY, rho_or_alpha: 1e-3, restarts: 0 },
            TraceRow { t: 2, seconds: 0.5, upper: 1.0 / 3.0, lower: -0.1, gap: 1.0 / 3.0 + 0.1, rho_or_alpha: 0.5, restarts: 2 },
        ];
        let mut buf = Vec::new();
        write_trace(&mut buf, &rows).unwrap();
        let back = read_trace(buf.as_slice()).unwrap();
        assert_eq!(back, rows);
    }

    #[test]
    fn rejects_missing_header() {
        assert!(read_trace("1,0,1,0,1,0,0\n".as_bytes()).is_err());
    }
}
