//! Matrix Market exchange format, real `array` and `coordinate` matrices with
//! `general` or `symmetric` storage.

use thiserror::Error;

use crate::io::format_float;
use crate::operator::DenseMatrix;

#[derive(Debug, Error, PartialEq)]
pub enum MatrixMarketError {
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("field `{0}` is not supported, only real matrices are accepted")]
    NonRealField(String),
    #[error("symmetry `{0}` is not supported")]
    UnsupportedSymmetry(String),
    #[error("line {line}: malformed size line")]
    MalformedSize { line: usize },
    #[error("line {line}: malformed entry")]
    MalformedEntry { line: usize },
    #[error("line {line}: index ({row}, {col}) outside a {rows}x{cols} matrix")]
    IndexOutOfRange {
        line: usize,
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },
    #[error("line {line}: duplicate entry at ({row}, {col})")]
    DuplicateEntry { line: usize, row: usize, col: usize },
    #[error("expected {expected} entries, found {found}")]
    EntryCount { expected: usize, found: usize },
    #[error("symmetric storage requires a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not exactly symmetric; cannot write symmetric storage")]
    NotSymmetric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    Array,
    Coordinate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symmetry {
    General,
    Symmetric,
}

/// A parsed matrix of any shape, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketMatrix {
    pub rows: usize,
    pub cols: usize,
    pub layout: Layout,
    pub symmetry: Symmetry,
    pub values: Vec<f64>,
}

impl MarketMatrix {
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.values[r * self.cols + c]
    }

    pub fn into_dense(self) -> crate::Result<DenseMatrix> {
        if self.rows != self.cols {
            return Err(MatrixMarketError::NotSquare {
                rows: self.rows,
                cols: self.cols,
            }
            .into());
        }
        DenseMatrix::from_row_major(self.rows, self.values)
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }
}

fn parse_header(line: &str) -> Result<(Layout, Symmetry), MatrixMarketError> {
    let tokens: Vec<String> = line.split_whitespace().map(str::to_ascii_lowercase).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(MatrixMarketError::MalformedHeader(line.trim().to_string()));
    }
    let layout = match tokens[2].as_str() {
        "array" => Layout::Array,
        "coordinate" => Layout::Coordinate,
        other => return Err(MatrixMarketError::MalformedHeader(format!("unknown format `{other}`"))),
    };
    match tokens[3].as_str() {
        "real" | "double" => {}
        "integer" | "complex" | "pattern" => return Err(MatrixMarketError::NonRealField(tokens[3].clone())),
        other => return Err(MatrixMarketError::MalformedHeader(format!("unknown field `{other}`"))),
    }
    let symmetry = match tokens[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        other => return Err(MatrixMarketError::UnsupportedSymmetry(other.to_string())),
    };
    Ok((layout, symmetry))
}

fn parse_usize(tok: Option<&str>, line: usize) -> Result<usize, MatrixMarketError> {
    tok.and_then(|t| t.parse().ok())
        .ok_or(MatrixMarketError::MalformedEntry { line })
}

fn parse_f64(tok: Option<&str>, line: usize) -> Result<f64, MatrixMarketError> {
    tok.and_then(|t| t.parse::<f64>().ok())
        .filter(|v| v.is_finite())
        .ok_or(MatrixMarketError::MalformedEntry { line })
}

/// Parses a Matrix Market document of any shape.
pub fn parse_market(text: &str) -> Result<MarketMatrix, MatrixMarketError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines
        .next()
        .ok_or_else(|| MatrixMarketError::MalformedHeader("empty input".into()))?;
    let (layout, symmetry) = parse_header(header)?;

    let mut body = lines.filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('%')
    });

    let (size_line, size) = body.next().ok_or(MatrixMarketError::MalformedSize { line: 1 })?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|t| t.parse())
        .collect::<Result<_, _>>()
        .map_err(|_| MatrixMarketError::MalformedSize { line: size_line })?;
    let expected_dims = if layout == Layout::Array { 2 } else { 3 };
    if dims.len() != expected_dims || dims[0] == 0 || dims[1] == 0 {
        return Err(MatrixMarketError::MalformedSize { line: size_line });
    }
    let (rows, cols) = (dims[0], dims[1]);
    if symmetry == Symmetry::Symmetric && rows != cols {
        return Err(MatrixMarketError::NotSquare { rows, cols });
    }
    let mut values = vec![0.0; rows * cols];

    match layout {
        Layout::Array => {
            // Column-major; symmetric storage lists the lower triangle only.
            let slots: Vec<(usize, usize)> = (0..cols)
                .flat_map(|c| {
                    let first = if symmetry == Symmetry::Symmetric { c } else { 0 };
                    (first..rows).map(move |r| (r, c))
                })
                .collect();
            let mut found = 0;
            for (line, text) in body {
                let mut toks = text.split_whitespace();
                let v = parse_f64(toks.next(), line)?;
                if toks.next().is_some() {
                    return Err(MatrixMarketError::MalformedEntry { line });
                }
                if let Some(&(r, c)) = slots.get(found) {
                    values[r * cols + c] = v;
                    if symmetry == Symmetry::Symmetric {
                        values[c * cols + r] = v;
                    }
                }
                found += 1;
            }
            if found != slots.len() {
                return Err(MatrixMarketError::EntryCount {
                    expected: slots.len(),
                    found,
                });
            }
        }
        Layout::Coordinate => {
            let nnz = dims[2];
            let mut seen = vec![false; rows * cols];
            let mut found = 0;
            for (line, text) in body {
                let mut toks = text.split_whitespace();
                let r = parse_usize(toks.next(), line)?;
                let c = parse_usize(toks.next(), line)?;
                let v = parse_f64(toks.next(), line)?;
                if toks.next().is_some() {
                    return Err(MatrixMarketError::MalformedEntry { line });
                }
                if r == 0 || c == 0 || r > rows || c > cols {
                    return Err(MatrixMarketError::IndexOutOfRange {
                        line,
                        row: r,
                        col: c,
                        rows,
                        cols,
                    });
                }
                let (r, c) = (r - 1, c - 1);
                if seen[r * cols + c] {
                    return Err(MatrixMarketError::DuplicateEntry {
                        line,
                        row: r + 1,
                        col: c + 1,
                    });
                }
                seen[r * cols + c] = true;
                values[r * cols + c] = v;
                if symmetry == Symmetry::Symmetric {
                    seen[c * cols + r] = true;
                    values[c * cols + r] = v;
                }
                found += 1;
            }
            if found != nnz {
                return Err(MatrixMarketError::EntryCount { expected: nnz, found });
            }
        }
    }

    Ok(MarketMatrix {
        rows,
        cols,
        layout,
        symmetry,
        values,
    })
}

/// Parses a square real matrix.
pub fn parse_matrix_market(text: &str) -> crate::Result<DenseMatrix> {
    parse_market(text)?.into_dense()
}

/// Serializes a row-major `rows × cols` matrix.
pub fn write_market(
    rows: usize,
    cols: usize,
    values: &[f64],
    layout: Layout,
    symmetry: Symmetry,
) -> Result<String, MatrixMarketError> {
    assert_eq!(values.len(), rows * cols, "value count must match the shape");
    if symmetry == Symmetry::Symmetric {
        if rows != cols {
            return Err(MatrixMarketError::NotSquare { rows, cols });
        }
        for r in 0..rows {
            for c in 0..r {
                if values[r * cols + c].to_bits() != values[c * cols + r].to_bits() {
                    return Err(MatrixMarketError::NotSymmetric);
                }
            }
        }
    }
    let lower_only = symmetry == Symmetry::Symmetric;
    let mut out = format!(
        "%%MatrixMarket matrix {} real {}\n",
        match layout {
            Layout::Array => "array",
            Layout::Coordinate => "coordinate",
        },
        match symmetry {
            Symmetry::General => "general",
            Symmetry::Symmetric => "symmetric",
        }
    );
    match layout {
        Layout::Array => {
            out.push_str(&format!("{rows} {cols}\n"));
            for c in 0..cols {
                let first = if lower_only { c } else { 0 };
                for r in first..rows {
                    out.push_str(&format_float(values[r * cols + c]));
                    out.push('\n');
                }
            }
        }
        Layout::Coordinate => {
            let mut entries = Vec::new();
            for c in 0..cols {
                let first = if lower_only { c } else { 0 };
                for r in first..rows {
                    let v = values[r * cols + c];
                    if v.to_bits() != 0 {
                        entries.push((r, c, v));
                    }
                }
            }
            out.push_str(&format!("{rows} {cols} {}\n", entries.len()));
            for (r, c, v) in entries {
                out.push_str(&format!("{} {} {}\n", r + 1, c + 1, format_float(v)));
            }
        }
    }
    Ok(out)
}

pub fn write_matrix_market(m: &DenseMatrix, layout: Layout, symmetry: Symmetry) -> Result<String, MatrixMarketError> {
    write_market(m.dim(), m.dim(), m.as_slice(), layout, symmetry)
}

impl MarketMatrix {
    pub fn to_text(&self) -> Result<String, MatrixMarketError> {
        write_market(self.rows, self.cols, &self.values, self.layout, self.symmetry)
    }
}
