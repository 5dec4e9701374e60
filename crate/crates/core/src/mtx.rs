//! MatrixMarket reader/writer for dense real matrices (array and coordinate
//! layouts, `general` or `symmetric`).

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Layout {
    Array,
    Coordinate,
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

pub fn read_matrix_market(reader: impl BufRead) -> Result<DenseMatrix> {
    let mut lines = reader.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty input"))?;
    let header = header?;
    let fields: Vec<String> = header.split_whitespace().map(str::to_lowercase).collect();
    if fields.len() < 5 || fields[0] != "%%matrixmarket" || fields[1] != "matrix" {
        return Err(parse_err(1, "expected '%%MatrixMarket matrix <layout> <field> <symmetry>'"));
    }
    let layout = match fields[2].as_str() {
        "array" => Layout::Array,
        "coordinate" => Layout::Coordinate,
        other => return Err(parse_err(1, format!("unsupported layout {other:?}"))),
    };
    let pattern = match fields[3].as_str() {
        "real" | "double" | "integer" => false,
        "pattern" if layout == Layout::Coordinate => true,
        other => return Err(parse_err(1, format!("unsupported field {other:?}"))),
    };
    let symmetric = match fields[4].as_str() {
        "general" => false,
        "symmetric" => true,
        other => return Err(parse_err(1, format!("unsupported symmetry {other:?}"))),
    };

    let mut body = lines.filter_map(|(i, l)| match l {
        Ok(s) if s.trim().is_empty() || s.trim_start().starts_with('%') => None,
        Ok(s) => Some(Ok((i + 1, s))),
        Err(e) => Some(Err(e)),
    });

    let (size_line, size) = body
        .next()
        .ok_or_else(|| parse_err(2, "missing size line"))??;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| parse_err(size_line, format!("bad size {t:?}"))))
        .collect::<Result<_>>()?;
    let num = |tok: Option<&str>, line: usize| -> Result<f64> {
        let t = tok.ok_or_else(|| parse_err(line, "missing value"))?;
        t.parse::<f64>()
            .map_err(|_| parse_err(line, format!("bad number {t:?}")))
    };

    match layout {
        Layout::Array => {
            let [rows, cols] = dims[..] else {
                return Err(parse_err(size_line, "array size line needs 'rows cols'"));
            };
            let mut m = DenseMatrix::new(rows, cols, vec![0.0; rows * cols])?;
            // column-major; symmetric stores the lower triangle only
            let positions: Vec<(usize, usize)> = (0..cols)
                .flat_map(|c| (0..rows).map(move |r| (r, c)))
                .filter(|&(r, c)| !symmetric || r >= c)
                .collect();
            let mut pos = positions.iter();
            for item in body {
                let (line, text) = item?;
                for tok in text.split_whitespace() {
                    let &(r, c) = pos
                        .next()
                        .ok_or_else(|| parse_err(line, "too many entries"))?;
                    let x = num(Some(tok), line)?;
                    m[(r, c)] = x;
                    if symmetric {
                        m[(c, r)] = x;
                    }
                }
            }
            if pos.next().is_some() {
                return Err(parse_err(size_line, "too few entries"));
            }
            DenseMatrix::new(rows, cols, m.into_vec())
        }
        Layout::Coordinate => {
            let [rows, cols, nnz] = dims[..] else {
                return Err(parse_err(size_line, "coordinate size line needs 'rows cols nnz'"));
            };
            let mut m = DenseMatrix::new(rows, cols, vec![0.0; rows * cols])?;
            let mut seen = 0;
            for item in body {
                let (line, text) = item?;
                let mut toks = text.split_whitespace();
                let mut index = |what: &str| -> Result<usize> {
                    let t = toks
                        .next()
                        .ok_or_else(|| parse_err(line, format!("missing {what} index")))?;
                    let i: usize = t
                        .parse()
                        .map_err(|_| parse_err(line, format!("bad {what} index {t:?}")))?;
                    Ok(i)
                };
                let r = index("row")?;
                let c = index("column")?;
                if r == 0 || c == 0 || r > rows || c > cols {
                    return Err(parse_err(line, format!("index ({r}, {c}) out of range")));
                }
                let x = if pattern { 1.0 } else { num(toks.next(), line)? };
                m[(r - 1, c - 1)] = x;
                if symmetric {
                    m[(c - 1, r - 1)] = x;
                }
                seen += 1;
            }
            if seen != nnz {
                return Err(parse_err(size_line, format!("declared {nnz} entries, found {seen}")));
            }
            DenseMatrix::new(rows, cols, m.into_vec())
        }
    }
}

pub fn read_matrix_market_file(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    let file = std::fs::File::open(path)?;
    read_matrix_market(std::io::BufReader::new(file))
}

/// Dense column-major `array real general` text.
pub fn to_array_string(m: &DenseMatrix) -> String {
    let mut out = String::from("%%MatrixMarket matrix array real general\n");
    let _ = writeln!(out, "{} {}", m.rows(), m.cols());
    for c in 0..m.cols() {
        for r in 0..m.rows() {
            let _ = writeln!(out, "{:e}", m[(r, c)]);
        }
    }
    out
}

/// `coordinate real general` text listing nonzero entries row by row.
pub fn to_coordinate_string(m: &DenseMatrix) -> String {
    let entries: Vec<(usize, usize, f64)> = (0..m.rows())
        .flat_map(|r| (0..m.cols()).map(move |c| (r, c)))
        .map(|(r, c)| (r, c, m[(r, c)]))
        .filter(|&(_, _, x)| x != 0.0)
        .collect();
    let mut out = String::from("%%MatrixMarket matrix coordinate real general\n");
    let _ = writeln!(out, "{} {} {}", m.rows(), m.cols(), entries.len());
    for (r, c, x) in entries {
        let _ = writeln!(out, "{} {} {:e}", r + 1, c + 1, x);
    }
    out
}

pub fn write_array(m: &DenseMatrix, mut w: impl Write) -> Result<()> {
    w.write_all(to_array_string(m).as_bytes())?;
    Ok(())
}

pub fn write_coordinate(m: &DenseMatrix, mut w: impl Write) -> Result<()> {
    w.write_all(to_coordinate_string(m).as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_array_column_major() {
        let text = "%%MatrixMarket matrix array real general\n% comment\n2 3\n1\n4\n2\n5\n3\n6\n";
        let m = read_matrix_market(text.as_bytes()).unwrap();
        assert_eq!(m.row(0), &[1.0, 2.0, 3.0]);
        assert_eq!(m.row(1), &[4.0, 5.0, 6.0]);
    }

    #[test]
    fn reads_symmetric_coordinate_and_pattern() {
        let text = "%%MatrixMarket matrix coordinate pattern symmetric\n3 3 2\n2 1\n3 2\n";
        let m = read_matrix_market(text.as_bytes()).unwrap();
        assert!(m.is_symmetric(0.0));
        assert_eq!(m[(0, 1)], 1.0);
        assert_eq!(m[(2, 1)], 1.0);
        assert_eq!(m[(0, 2)], 0.0);
    }

    #[test]
    fn both_layouts_roundtrip_exactly() {
        let m = DenseMatrix::from_fn(3, 2, |r, c| if r == c { 0.0 } else { 0.1 * (r + 1) as f64 / 3.0 - c as f64 });
        let a = read_matrix_market(to_array_string(&m).as_bytes()).unwrap();
        let c = read_matrix_market(to_coordinate_string(&m).as_bytes()).unwrap();
        assert_eq!(a, m);
        assert_eq!(c, m);
    }

    #[test]
    fn rejects_malformed_input() {
        for bad in [
            "",
            "%%MatrixMarket matrix array complex general\n1 1\n1\n",
            "%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n",
            "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n",
            "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n",
            "not a header\n1 1\n1\n",
        ] {
            assert!(read_matrix_market(bad.as_bytes()).is_err(), "{bad:?}");
        }
    }
}
