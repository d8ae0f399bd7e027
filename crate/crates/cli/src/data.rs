//! One-column numeric input files.

use std::path::Path;

use serde::Serialize;

use crate::error::CliError;

/// Offending rows listed in a parse error.
pub const MAX_REPORTED_ROWS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BadRow {
    /// 1-based line number.
    pub row: usize,
    pub content: String,
    pub reason: &'static str,
}

pub fn parse_data_file(path: &Path) -> Result<Vec<f64>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_data(&text).map_err(|e| match e {
        CliError::Parse { rows, total, .. } => CliError::Parse {
            path: Some(path.to_path_buf()),
            rows,
            total,
        },
        other => other,
    })
}

/// One value per line, blank lines skipped. A first row that does not parse
/// as a number is taken as a header.
pub fn parse_data(text: &str) -> Result<Vec<f64>, CliError> {
    let mut values = Vec::new();
    let mut bad = Vec::new();
    let mut total = 0;
    let mut first = true;
    for (i, line) in text.lines().enumerate() {
        let cell = line.trim();
        if cell.is_empty() {
            continue;
        }
        let was_first = std::mem::replace(&mut first, false);
        match cell.parse::<f64>() {
            Ok(v) if v.is_finite() => values.push(v),
            Ok(_) => {
                total += 1;
                bad.push(BadRow {
                    row: i + 1,
                    content: cell.to_string(),
                    reason: "not finite",
                });
            }
            Err(_) if was_first && looks_like_header(cell) => {}
            Err(_) => {
                total += 1;
                bad.push(BadRow {
                    row: i + 1,
                    content: cell.to_string(),
                    reason: "not a number",
                });
            }
        }
    }
    if !bad.is_empty() {
        bad.truncate(MAX_REPORTED_ROWS);
        return Err(CliError::Parse {
            path: None,
            rows: bad,
            total,
        });
    }
    if values.is_empty() {
        return Err(CliError::EmptyInput);
    }
    Ok(values)
}

fn looks_like_header(cell: &str) -> bool {
    let lower = cell.to_ascii_lowercase();
    !matches!(
        lower.trim_start_matches(['+', '-']),
        "nan" | "inf" | "infinity"
    )
}
