use std::path::Path;

use liu_logit::{DMatrix, DVector, Dataset};

use crate::{CliError, Result};

/// Loads a headed CSV file. The response column is matched by name first and
/// then, if the name is not a header, by zero-based index. Every other column
/// becomes a predictor, in header order.
pub fn load_csv(path: &Path, response: &str) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    let response_col = headers
        .iter()
        .position(|h| h == response)
        .or_else(|| response.parse::<usize>().ok().filter(|i| *i < headers.len()))
        .ok_or_else(|| {
            CliError::Input(format!(
                "{}: response column '{response}' not found (columns: {})",
                path.display(),
                headers.join(", ")
            ))
        })?;
    if headers.len() < 2 {
        return Err(CliError::Input(format!("{}: need at least one predictor column", path.display())));
    }

    let mut values = Vec::new();
    let mut y = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        // header is line 1
        let line = record.position().map_or(0, |p| p.line());
        for (j, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                CliError::Input(format!(
                    "{} row {line}: column '{}' has non-numeric value '{field}'",
                    path.display(),
                    headers[j]
                ))
            })?;
            if !v.is_finite() {
                return Err(CliError::Input(format!(
                    "{} row {line}: column '{}' is not finite",
                    path.display(),
                    headers[j]
                )));
            }
            if j == response_col {
                if v != 0.0 && v != 1.0 {
                    return Err(CliError::Input(format!(
                        "{} row {line}: response '{}' must be 0 or 1, found {field}",
                        path.display(),
                        headers[j]
                    )));
                }
                y.push(v);
            } else {
                values.push(v);
            }
        }
    }
    let p = headers.len() - 1;
    let n = y.len();
    let x = DMatrix::from_row_slice(n, p, &values);
    let names = headers
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != response_col)
        .map(|(_, h)| h.clone())
        .collect();
    Ok(Dataset::new(x, DVector::from_vec(y))?.with_feature_names(names)?)
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    match e.kind() {
        csv::ErrorKind::Io(_) => match e.into_kind() {
            csv::ErrorKind::Io(io) => CliError::io(path, io),
            _ => unreachable!(),
        },
        _ => CliError::Input(format!("{}: {e}", path.display())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn temp_csv(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    #[test]
    fn loads_small_file() {
        let f = temp_csv("x1,x2,y\n1,0.5,0\n2,0.1,1\n0.3,2,1\n-1,1,0\n0.7,-0.4,1\n");
        let data = load_csv(f.path(), "y").unwrap();
        assert_eq!((data.n(), data.p()), (5, 2));
        assert_eq!(data.feature_names().unwrap(), ["x1", "x2"]);
        assert_eq!(data.x()[(2, 1)], 2.0);
    }

    #[test]
    fn response_by_index() {
        let f = temp_csv("y,x1,x2\n0,1,0.5\n1,2,0.1\n1,0.3,2\n0,-1,1\n");
        let data = load_csv(f.path(), "0").unwrap();
        assert_eq!(data.y().as_slice(), [0.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn non_binary_response_names_row() {
        let f = temp_csv("x1,x2,y\n1,0.5,0\n2,0.1,2\n0.3,2,1\n-1,1,0\n");
        let msg = load_csv(f.path(), "y").unwrap_err().to_string();
        assert!(msg.contains("row 3"), "{msg}");
    }

    #[test]
    fn non_numeric_cell_names_row() {
        let f = temp_csv("x1,x2,y\n1,0.5,0\n2,abc,1\n0.3,2,1\n-1,1,0\n");
        let err = load_csv(f.path(), "y").unwrap_err();
        assert!(err.to_string().contains("row 3"));
        assert_eq!(err.exit_code(), crate::EXIT_INPUT);
    }

    #[test]
    fn missing_file_is_input_error() {
        let err = load_csv(Path::new("/nonexistent/data.csv"), "y").unwrap_err();
        assert!(matches!(err, CliError::Io { .. }));
        assert_eq!(err.exit_code(), crate::EXIT_INPUT);
    }

    #[test]
    fn rank_deficient_design_rejected() {
        let f = temp_csv("x1,x2,y\n1,2,0\n2,4,1\n3,6,1\n-1,-2,0\n");
        let err = load_csv(f.path(), "y").unwrap_err();
        assert!(matches!(err, CliError::Model(liu_logit::Error::RankDeficient { .. })));
    }
}
