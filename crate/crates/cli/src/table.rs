//! CSV tables written and read by the commands.

use std::io::{self, Write};

use aacg_core::format::sig17;
use aacg_core::{BaselinePoint, SweepCell};

pub const RESULTS_HEADER: &str =
    "r0,theta_trig,k,status,period,lambda_max,region,speed,mcot,boa_dths,boa_thn,boa_dthn,q_dthetas,q_thetan,q_dthetan";

pub const BASELINE_HEADER: &str = "impulse,speed,mcot,lambda_max";

fn opt(v: Option<f64>) -> String {
    v.map(sig17).unwrap_or_default()
}

pub fn write_results<W: Write>(out: &mut W, cells: &[SweepCell]) -> io::Result<()> {
    writeln!(out, "{RESULTS_HEADER}")?;
    for c in cells {
        let rec = c.record.as_ref();
        let metrics = rec.and_then(|r| r.metrics);
        let boa = rec.and_then(|r| r.boa);
        let q = rec.map(|r| r.q_star.to_array());
        let fields = [
            sig17(c.r0),
            sig17(c.theta_trig),
            sig17(c.k),
            c.status().as_str().to_string(),
            rec.map(|r| r.period.to_string()).unwrap_or_default(),
            opt(rec.map(|r| r.lambda_max)),
            metrics.map(|m| m.region.as_str().to_string()).unwrap_or_default(),
            opt(metrics.map(|m| m.speed)),
            opt(metrics.map(|m| m.mcot)),
            opt(boa.map(|b| b[0])),
            opt(boa.map(|b| b[1])),
            opt(boa.map(|b| b[2])),
            opt(q.map(|q| q[0])),
            opt(q.map(|q| q[1])),
            opt(q.map(|q| q[2])),
        ];
        writeln!(out, "{}", fields.join(","))?;
    }
    Ok(())
}

pub fn write_baseline<W: Write>(out: &mut W, points: &[BaselinePoint]) -> io::Result<()> {
    writeln!(out, "{BASELINE_HEADER}")?;
    for p in points {
        writeln!(out, "{},{},{},{}", sig17(p.impulse), sig17(p.speed), sig17(p.mcot), sig17(p.lambda_max))?;
    }
    Ok(())
}

/// One parsed `results.csv` row. Missing fields are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub r0: f64,
    pub theta_trig: f64,
    pub k: f64,
    pub status: String,
    pub period: Option<usize>,
    pub lambda_max: Option<f64>,
    pub region: Option<String>,
    pub speed: Option<f64>,
    pub mcot: Option<f64>,
    pub boa: Option<[f64; 3]>,
    pub q_star: Option<[f64; 3]>,
}

impl ResultRow {
    pub fn stable(&self) -> bool {
        self.status == "stable"
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl std::fmt::Display for ParseError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

pub fn read_results(text: &str) -> Result<Vec<ResultRow>, ParseError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == RESULTS_HEADER => {}
        _ => {
            return Err(ParseError {
                line: 1,
                message: "unexpected header".into(),
            })
        }
    }
    lines.map(|(i, l)| parse_row(l).map_err(|message| ParseError { line: i + 1, message })).collect()
}

fn parse_row(line: &str) -> Result<ResultRow, String> {
    let f: Vec<&str> = line.split(',').collect();
    if f.len() != 15 {
        return Err(format!("expected 15 fields, found {}", f.len()));
    }
    let num = |i: usize| -> Result<Option<f64>, String> {
        if f[i].is_empty() {
            Ok(None)
        } else {
            f[i].parse().map(Some).map_err(|_| format!("bad number `{}`", f[i]))
        }
    };
    let req = |i: usize| num(i)?.ok_or_else(|| format!("field {} is empty", i + 1));
    let triple = |a: usize| -> Result<Option<[f64; 3]>, String> {
        Ok(match (num(a)?, num(a + 1)?, num(a + 2)?) {
            (Some(x), Some(y), Some(z)) => Some([x, y, z]),
            _ => None,
        })
    };
    Ok(ResultRow {
        r0: req(0)?,
        theta_trig: req(1)?,
        k: req(2)?,
        status: f[3].to_string(),
        period: if f[4].is_empty() {
            None
        } else {
            Some(f[4].parse().map_err(|_| format!("bad period `{}`", f[4]))?)
        },
        lambda_max: num(5)?,
        region: (!f[6].is_empty()).then(|| f[6].to_string()),
        speed: num(7)?,
        mcot: num(8)?,
        boa: triple(9)?,
        q_star: triple(12)?,
    })
}
