//! Complex matrices as JSON `(re, im)` pairs or CSV rows of `re,im,re,im,…`.

use num_complex::Complex64;

use crate::decompose::TransferMatrix;
use crate::error::{Error, Result};

/// Row-major `[[[re, im], …], …]`.
pub fn to_pairs(u: &TransferMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..u.nrows())
        .map(|i| (0..u.ncols()).map(|j| [u[(i, j)].re, u[(i, j)].im]).collect())
        .collect()
}

pub fn from_pairs(rows: &[Vec<[f64; 2]>]) -> Result<TransferMatrix> {
    let n = rows.len();
    if let Some(bad) = rows.iter().find(|r| r.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: bad.len(),
        });
    }
    Ok(TransferMatrix::from_fn(n, n, |i, j| {
        Complex64::new(rows[i][j][0], rows[i][j][1])
    }))
}

pub fn parse_json(text: &str) -> Result<TransferMatrix> {
    let rows: Vec<Vec<[f64; 2]>> = serde_json::from_str(text)?;
    from_pairs(&rows)
}

pub fn parse_csv(text: &str) -> Result<TransferMatrix> {
    let mut rows = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let values = line
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Document(format!("line {}: {e}", line_no + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        if values.len() % 2 != 0 {
            return Err(Error::Document(format!(
                "line {}: expected re,im pairs, found {} values",
                line_no + 1,
                values.len()
            )));
        }
        rows.push(values.chunks(2).map(|p| [p[0], p[1]]).collect::<Vec<_>>());
    }
    from_pairs(&rows)
}

/// JSON if the text opens with `[`, CSV otherwise.
pub fn parse_matrix(text: &str) -> Result<TransferMatrix> {
    if text.trim_start().starts_with('[') {
        parse_json(text)
    } else {
        parse_csv(text)
    }
}

pub fn to_json(u: &TransferMatrix) -> Result<String> {
    Ok(serde_json::to_string(&to_pairs(u))?)
}

pub fn to_csv(u: &TransferMatrix) -> String {
    let mut out = String::new();
    for row in to_pairs(u) {
        let cells: Vec<String> = row.iter().map(|[re, im]| format!("{re},{im}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}
