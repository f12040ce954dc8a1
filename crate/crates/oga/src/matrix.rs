//! Cost-matrix files: a line holding `n`, then `n` rows of `n`
//! whitespace-separated numbers. Blank lines are skipped.

use oga_core::assignment::{AssignError, CostMatrix, Solution};

/// Rows and columns in messages are 1-based.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MatrixError {
    #[error("cost matrix is empty")]
    Empty,
    #[error("line {line}: expected the matrix size, found {found:?}")]
    BadSize { line: usize, found: String },
    #[error("row {row}, column {col}: {found:?} is not a number")]
    NotANumber {
        row: usize,
        col: usize,
        found: String,
    },
    #[error("row {row}, column {col}: cost must be finite and nonnegative")]
    BadEntry { row: usize, col: usize },
    #[error("row {row}: expected {expected} entries, found {found}")]
    RowLength {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("expected {expected} rows, found {found}")]
    RowCount { expected: usize, found: usize },
}

pub fn parse_cost_matrix(text: &str) -> Result<CostMatrix, MatrixError> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (size_line, size_text) = lines.next().ok_or(MatrixError::Empty)?;
    let n: usize = size_text.trim().parse().map_err(|_| MatrixError::BadSize {
        line: size_line + 1,
        found: size_text.trim().to_string(),
    })?;
    if n == 0 {
        return Err(MatrixError::Empty);
    }
    let mut rows = Vec::with_capacity(n);
    for (_, line) in lines {
        let row = rows.len() + 1;
        if row > n {
            return Err(MatrixError::RowCount {
                expected: n,
                found: row,
            });
        }
        let entries = line
            .split_whitespace()
            .enumerate()
            .map(|(j, tok)| {
                tok.parse::<f64>().map_err(|_| MatrixError::NotANumber {
                    row,
                    col: j + 1,
                    found: tok.to_string(),
                })
            })
            .collect::<Result<Vec<f64>, _>>()?;
        if entries.len() != n {
            return Err(MatrixError::RowLength {
                row,
                expected: n,
                found: entries.len(),
            });
        }
        rows.push(entries);
    }
    if rows.len() != n {
        return Err(MatrixError::RowCount {
            expected: n,
            found: rows.len(),
        });
    }
    CostMatrix::from_rows(&rows).map_err(|e| match e {
        AssignError::BadEntry { row, col } => MatrixError::BadEntry {
            row: row + 1,
            col: col + 1,
        },
        other => unreachable!("shape already checked: {other}"),
    })
}

pub fn format_cost_matrix(c: &CostMatrix) -> String {
    let n = c.size();
    let mut out = format!("{n}\n");
    for i in 0..n {
        let row: Vec<String> = c.row(i).iter().map(|v| v.to_string()).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

/// `0→1 1→0 cost=3`
pub fn format_solution(s: &Solution) -> String {
    let mut parts: Vec<String> = s
        .perm
        .iter()
        .enumerate()
        .map(|(i, g)| format!("{i}→{g}"))
        .collect();
    parts.push(format!("cost={}", s.total_cost));
    parts.join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reports_row_and_column() {
        let e = parse_cost_matrix("2\n1 2\n3 x\n").unwrap_err();
        assert_eq!(
            e,
            MatrixError::NotANumber {
                row: 2,
                col: 2,
                found: "x".into()
            }
        );
        assert!(e.to_string().contains("row 2, column 2"));
        assert_eq!(
            parse_cost_matrix("2\n1 2\n3\n").unwrap_err(),
            MatrixError::RowLength {
                row: 2,
                expected: 2,
                found: 1
            }
        );
        assert_eq!(
            parse_cost_matrix("2\n1 2\n3 -4\n").unwrap_err(),
            MatrixError::BadEntry { row: 2, col: 2 }
        );
        assert_eq!(
            parse_cost_matrix("3\n1 2 3\n").unwrap_err(),
            MatrixError::RowCount {
                expected: 3,
                found: 1
            }
        );
        assert!(matches!(
            parse_cost_matrix("two\n").unwrap_err(),
            MatrixError::BadSize { line: 1, .. }
        ));
        assert_eq!(parse_cost_matrix("  \n").unwrap_err(), MatrixError::Empty);
    }

    #[test]
    fn round_trips() {
        let c = parse_cost_matrix("3\n0.1 2 3\n\n4 5e-3 6\n7 8 9\n").unwrap();
        assert_eq!(parse_cost_matrix(&format_cost_matrix(&c)).unwrap(), c);
    }
}
