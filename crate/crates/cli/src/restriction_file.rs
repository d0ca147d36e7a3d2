//! Plain-text restriction files.
//!
//! ```text
//! # comment
//! p = 4
//! q = 3
//! [H]
//! 1, -1, 0, 1
//! 1, 1, -1, 0
//! 0, 0, 1, -1
//! [h]
//! 1
//! -2
//! 1
//! [Psi]
//! 1, 0, 0
//! 0, 1, 0
//! 0, 0, 1
//! ```
//!
//! `H` has `q` rows of `p` values, `h` has `q` rows of one value and `Psi`
//! has `q` rows of `q` values. Values are separated by commas.

use std::path::Path;

use liu_logit::{DMatrix, DVector, StochasticRestriction};

use crate::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    H,
    SmallH,
    Psi,
}

pub fn parse_restriction(text: &str) -> Result<StochasticRestriction> {
    let mut p = None;
    let mut q = None;
    let mut rows: [Vec<Vec<f64>>; 3] = Default::default();
    let mut section = None;
    let err = |line: usize, msg: String| CliError::Input(format!("restriction file line {line}: {msg}"));

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            section = Some(match name.trim() {
                "H" => Section::H,
                "h" => Section::SmallH,
                "Psi" => Section::Psi,
                other => return Err(err(line_no, format!("unknown section [{other}]"))),
            });
            continue;
        }
        if let Some((key, value)) = line.split_once('=') {
            let value: usize = value
                .trim()
                .parse()
                .map_err(|_| err(line_no, format!("'{}' is not a count", value.trim())))?;
            match key.trim() {
                "p" => p = Some(value),
                "q" => q = Some(value),
                other => return Err(err(line_no, format!("unknown key '{other}'"))),
            }
            continue;
        }
        let Some(current) = section else {
            return Err(err(line_no, "values before any [H], [h] or [Psi] section".into()));
        };
        let values = line
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| err(line_no, format!("'{}' is not a number", s.trim())))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows[current as usize].push(values);
    }

    let p = p.ok_or_else(|| CliError::Input("restriction file: missing 'p = ...'".into()))?;
    let q = q.ok_or_else(|| CliError::Input("restriction file: missing 'q = ...'".into()))?;
    let [h_rows, small_h_rows, psi_rows] = rows;
    let h_mat = matrix("[H]", &h_rows, q, p)?;
    let h = matrix("[h]", &small_h_rows, q, 1)?;
    let psi = matrix("[Psi]", &psi_rows, q, q)?;
    StochasticRestriction::new(h_mat, DVector::from_column_slice(h.as_slice()), psi)
        .map_err(|e| CliError::Input(format!("restriction file: {e}")))
}

fn matrix(name: &str, rows: &[Vec<f64>], nrows: usize, ncols: usize) -> Result<DMatrix<f64>> {
    if rows.len() != nrows {
        return Err(CliError::Input(format!(
            "restriction file: {name} has {} rows, expected {nrows}",
            rows.len()
        )));
    }
    if let Some((i, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != ncols) {
        return Err(CliError::Input(format!(
            "restriction file: {name} row {} has {} values, expected {ncols}",
            i + 1,
            row.len()
        )));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

pub fn read_restriction(path: &Path) -> Result<StochasticRestriction> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_restriction(&text).map_err(|e| match e {
        CliError::Input(msg) => CliError::Input(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Formats values with shortest round-trip precision so that parsing the
/// output reproduces the restriction exactly.
pub fn format_restriction(r: &StochasticRestriction) -> String {
    let row = |m: &DMatrix<f64>, i: usize| {
        m.row(i).iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", ")
    };
    let mut out = format!("p = {}\nq = {}\n[H]\n", r.p(), r.q());
    for i in 0..r.q() {
        out.push_str(&row(r.h_matrix(), i));
        out.push('\n');
    }
    out.push_str("[h]\n");
    for v in r.h().iter() {
        out.push_str(&format!("{v}\n"));
    }
    out.push_str("[Psi]\n");
    for i in 0..r.q() {
        out.push_str(&row(r.psi(), i));
        out.push('\n');
    }
    out
}
