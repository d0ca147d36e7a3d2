//! Text and delimiter-separated renderings of simulation results.
//!
//! Per-`n` tables group rows by `rho`, then estimator, with one column per
//! `d` and four decimals. The results file carries every cell at full
//! (round-trip) precision.

use std::fmt::Write;

use crate::error::{Error, Result};
use crate::estimators::EstimatorKind;
use crate::simulation::SimulationResult;

pub const DELIMITER: char = ',';

/// One `n` block rendered two ways.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderedTable {
    pub n: usize,
    pub text: String,
    pub csv: String,
}

fn fmt_value(v: f64, valid: bool) -> String {
    if valid && v.is_finite() {
        format!("{v:.4}")
    } else {
        "NA".to_string()
    }
}

fn d_header(d: f64) -> String {
    format!("d = {d}")
}

pub fn emit_table(result: &SimulationResult, n: usize) -> Result<RenderedTable> {
    let ni = result
        .n_values
        .iter()
        .position(|v| *v == n)
        .ok_or_else(|| Error::InvalidInput(format!("no results for n = {n}")))?;

    let headers: Vec<String> = result.d_grid.iter().map(|d| d_header(*d)).collect();
    let mut body: Vec<(String, EstimatorKind, Vec<String>)> = Vec::new();
    for (ri, rho) in result.rho_values.iter().enumerate() {
        for kind in EstimatorKind::ALL {
            let values = (0..result.d_grid.len())
                .map(|di| {
                    let s = &result.cell_by_index(kind, ni, ri, di).stats;
                    fmt_value(s.smse, s.valid)
                })
                .collect();
            body.push((format!("{rho:.2}"), kind, values));
        }
    }

    let widths: Vec<usize> = (0..headers.len())
        .map(|j| {
            body.iter()
                .map(|(_, _, v)| v[j].len())
                .chain(std::iter::once(headers[j].len()))
                .max()
                .unwrap_or(0)
        })
        .collect();

    let mut text = String::new();
    writeln!(text, "Estimated SMSE for different d when n = {n}").unwrap();
    write!(text, "{:<12} {:<8}", "", "").unwrap();
    for (h, w) in headers.iter().zip(&widths) {
        write!(text, "  {h:>w$}").unwrap();
    }
    text.push('\n');
    let mut last_rho = None;
    for (rho, kind, values) in &body {
        let rho_label = if last_rho.as_ref() == Some(rho) {
            String::new()
        } else {
            if last_rho.is_some() {
                text.push('\n');
            }
            format!("rho = {rho}")
        };
        last_rho = Some(rho.clone());
        write!(text, "{rho_label:<12} {:<8}", kind.label()).unwrap();
        for (v, w) in values.iter().zip(&widths) {
            write!(text, "  {v:>w$}").unwrap();
        }
        text.push('\n');
    }

    let mut csv = String::new();
    write!(csv, "rho{DELIMITER}estimator").unwrap();
    for d in &result.d_grid {
        write!(csv, "{DELIMITER}d={d}").unwrap();
    }
    csv.push('\n');
    for (rho, kind, values) in &body {
        write!(csv, "{rho}{DELIMITER}{}", kind.label()).unwrap();
        for v in values {
            write!(csv, "{DELIMITER}{v}").unwrap();
        }
        csv.push('\n');
    }

    Ok(RenderedTable { n, text, csv })
}

/// Parsed form of a delimiter-separated per-`n` table.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedTable {
    pub d_values: Vec<f64>,
    /// `(rho, estimator, values)`; `NA` cells parse as NaN.
    pub rows: Vec<(f64, EstimatorKind, Vec<f64>)>,
}

fn parse_f64(field: &str, line: usize) -> Result<f64> {
    let field = field.trim();
    if field == "NA" {
        return Ok(f64::NAN);
    }
    field
        .parse()
        .map_err(|_| Error::InvalidInput(format!("line {line}: `{field}` is not a number")))
}

pub fn parse_table_csv(text: &str) -> Result<ParsedTable> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::InvalidInput("empty table".into()))?;
    let d_values = header
        .split(DELIMITER)
        .skip(2)
        .map(|h| parse_f64(h.trim().trim_start_matches("d="), 1))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for (i, line) in lines {
        let fields: Vec<&str> = line.split(DELIMITER).collect();
        if fields.len() != d_values.len() + 2 {
            return Err(Error::InvalidInput(format!(
                "line {}: expected {} fields, found {}",
                i + 1,
                d_values.len() + 2,
                fields.len()
            )));
        }
        let rho = parse_f64(fields[0], i + 1)?;
        let kind = EstimatorKind::from_label(fields[1])
            .ok_or_else(|| Error::InvalidInput(format!("line {}: unknown estimator `{}`", i + 1, fields[1])))?;
        let values = fields[2..]
            .iter()
            .map(|f| parse_f64(f, i + 1))
            .collect::<Result<Vec<_>>>()?;
        rows.push((rho, kind, values));
    }
    Ok(ParsedTable { d_values, rows })
}

pub const RESULTS_HEADER: &str = "estimator,n,rho,d,smse,mc_standard_error,successes,failed_replications,valid";

/// Every cell at full precision, one per line, in canonical order.
pub fn results_csv(result: &SimulationResult) -> String {
    let mut out = String::with_capacity(result.cells.len() * 64);
    out.push_str(RESULTS_HEADER);
    out.push('\n');
    for c in &result.cells {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            c.estimator.label(),
            c.n,
            c.rho,
            c.d,
            c.stats.smse,
            c.stats.mc_standard_error,
            c.stats.successes,
            c.stats.failed_replications,
            c.stats.valid
        )
        .unwrap();
    }
    out
}
