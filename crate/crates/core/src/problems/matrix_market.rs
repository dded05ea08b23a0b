//! Matrix Market exchange format: `coordinate` (real, integer, pattern;
//! general or symmetric) and `array` (real or integer, general).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::linalg::RowMatrix;
use crate::{KaczError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Layout {
    Coordinate,
    Array,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Field {
    Real,
    Integer,
    Pattern,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
}

/// Parsed file contents before conversion to a [`RowMatrix`].
#[derive(Debug, Clone)]
pub struct MatrixMarketData {
    pub nrows: usize,
    pub ncols: usize,
    /// Nonzero entries after symmetric expansion, 0-based, explicit zeros removed.
    pub entries: Vec<(usize, usize, f64)>,
    /// Number of explicit zero entries that were dropped.
    pub explicit_zeros: usize,
}

impl MatrixMarketData {
    /// Rows without any stored nonzero.
    pub fn empty_rows(&self) -> Vec<usize> {
        let mut seen = vec![false; self.nrows];
        for &(i, _, _) in &self.entries {
            seen[i] = true;
        }
        (0..self.nrows).filter(|&i| !seen[i]).collect()
    }

    pub fn to_matrix(&self) -> Result<RowMatrix> {
        RowMatrix::from_triplets(self.nrows, self.ncols, &self.entries)
    }

    /// Drops empty rows; returns the matrix and the original indices of the dropped rows.
    pub fn to_matrix_filtered(&self) -> Result<(RowMatrix, Vec<usize>)> {
        let dropped = self.empty_rows();
        if dropped.is_empty() {
            return Ok((self.to_matrix()?, dropped));
        }
        let mut new_index = vec![usize::MAX; self.nrows];
        let mut next = 0;
        for (i, slot) in new_index.iter_mut().enumerate() {
            if dropped.binary_search(&i).is_err() {
                *slot = next;
                next += 1;
            }
        }
        if next == 0 {
            return Err(KaczError::contract("matrix has no nonzero rows"));
        }
        let entries: Vec<_> = self.entries.iter().map(|&(i, j, v)| (new_index[i], j, v)).collect();
        Ok((RowMatrix::from_triplets(next, self.ncols, &entries)?, dropped))
    }
}

struct Reader {
    path: PathBuf,
    line_no: usize,
}

impl Reader {
    fn err(&self, message: impl Into<String>) -> KaczError {
        KaczError::MatrixMarket {
            path: self.path.clone(),
            line: self.line_no,
            message: message.into(),
        }
    }
}

/// Parses a Matrix Market file.
pub fn parse_matrix_market(path: impl AsRef<Path>) -> Result<MatrixMarketData> {
    let path = path.as_ref();
    let file = File::open(path)?;
    let mut rd = Reader {
        path: path.to_path_buf(),
        line_no: 0,
    };
    let mut lines = BufReader::new(file).lines();

    let mut next_line = |rd: &mut Reader| -> Result<Option<String>> {
        for line in lines.by_ref() {
            rd.line_no += 1;
            let line = line?;
            let t = line.trim();
            if rd.line_no == 1 || !(t.is_empty() || t.starts_with('%')) {
                return Ok(Some(line));
            }
        }
        Ok(None)
    };

    let header = next_line(&mut rd)?.ok_or_else(|| rd.err("empty file"))?;
    let (layout, field, symmetry) = parse_header(&header).map_err(|m| rd.err(m))?;

    let size = next_line(&mut rd)?.ok_or_else(|| rd.err("missing size line"))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| rd.err(format!("bad size line: {e}")))?;
    let (nrows, ncols, declared) = match (layout, dims.as_slice()) {
        (Layout::Coordinate, &[m, n, nnz]) => (m, n, nnz),
        (Layout::Array, &[m, n]) => (m, n, m * n),
        _ => return Err(rd.err(format!("bad size line '{}'", size.trim()))),
    };
    if nrows == 0 || ncols == 0 {
        return Err(rd.err("matrix has a zero dimension"));
    }

    let mut entries = Vec::with_capacity(declared);
    let mut explicit_zeros = 0;
    let mut count = 0;
    while let Some(line) = next_line(&mut rd)? {
        if count == declared {
            return Err(rd.err(format!("more than the {declared} declared entries")));
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        let (i, j, v) = match layout {
            Layout::Coordinate => {
                let want = if field == Field::Pattern { 2 } else { 3 };
                if tokens.len() != want {
                    return Err(rd.err(format!("expected {want} fields, found {}", tokens.len())));
                }
                let i: usize = tokens[0].parse().map_err(|e| rd.err(format!("bad row index: {e}")))?;
                let j: usize = tokens[1].parse().map_err(|e| rd.err(format!("bad column index: {e}")))?;
                if i == 0 || j == 0 || i > nrows || j > ncols {
                    return Err(rd.err(format!("coordinate ({i}, {j}) outside {nrows}x{ncols}")));
                }
                let v = match field {
                    Field::Pattern => 1.0,
                    _ => parse_value(tokens[2], field).map_err(|m| rd.err(m))?,
                };
                (i - 1, j - 1, v)
            }
            Layout::Array => {
                if tokens.len() != 1 {
                    return Err(rd.err(format!("expected 1 field, found {}", tokens.len())));
                }
                let v = parse_value(tokens[0], field).map_err(|m| rd.err(m))?;
                // column-major order
                (count % nrows, count / nrows, v)
            }
        };
        count += 1;
        if v == 0.0 {
            explicit_zeros += 1;
            continue;
        }
        entries.push((i, j, v));
        if symmetry == Symmetry::Symmetric && i != j {
            entries.push((j, i, v));
        }
    }
    if count != declared {
        return Err(rd.err(format!("found {count} entries, header declares {declared}")));
    }

    let mut keys: Vec<(usize, usize)> = entries.iter().map(|e| (e.0, e.1)).collect();
    keys.sort_unstable();
    if let Some(w) = keys.windows(2).find(|w| w[0] == w[1]) {
        return Err(rd.err(format!("duplicate entry at ({}, {})", w[0].0 + 1, w[0].1 + 1)));
    }

    Ok(MatrixMarketData {
        nrows,
        ncols,
        entries,
        explicit_zeros,
    })
}

fn parse_header(line: &str) -> std::result::Result<(Layout, Field, Symmetry), String> {
    let t: Vec<String> = line.split_whitespace().map(str::to_ascii_lowercase).collect();
    if t.len() != 5 || t[0] != "%%matrixmarket" || t[1] != "matrix" {
        return Err(format!("malformed header '{}'", line.trim()));
    }
    let layout = match t[2].as_str() {
        "coordinate" => Layout::Coordinate,
        "array" => Layout::Array,
        other => return Err(format!("unsupported layout '{other}'")),
    };
    let field = match t[3].as_str() {
        "real" | "double" => Field::Real,
        "integer" => Field::Integer,
        "pattern" => Field::Pattern,
        other => return Err(format!("unsupported field '{other}'")),
    };
    let symmetry = match t[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        other => return Err(format!("unsupported symmetry '{other}'")),
    };
    if layout == Layout::Array && (field == Field::Pattern || symmetry != Symmetry::General) {
        return Err("array layout supports real/integer general matrices only".into());
    }
    Ok((layout, field, symmetry))
}

fn parse_value(token: &str, field: Field) -> std::result::Result<f64, String> {
    let v = match field {
        Field::Integer => token
            .parse::<i64>()
            .map(|v| v as f64)
            .map_err(|e| format!("bad integer '{token}': {e}"))?,
        _ => token.parse::<f64>().map_err(|e| format!("bad value '{token}': {e}"))?,
    };
    if !v.is_finite() {
        return Err(format!("non-finite value '{token}'"));
    }
    Ok(v)
}

/// Reads a Matrix Market file into a [`RowMatrix`] with the header's dimensions.
/// Files with empty rows are rejected; see [`read_matrix_market_filtered`].
pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<RowMatrix> {
    parse_matrix_market(path)?.to_matrix()
}

/// Reads a Matrix Market file, dropping empty rows. Returns the original indices of dropped rows.
pub fn read_matrix_market_filtered(path: impl AsRef<Path>) -> Result<(RowMatrix, Vec<usize>)> {
    parse_matrix_market(path)?.to_matrix_filtered()
}

/// Writes `a` as `coordinate real general`.
pub fn write_matrix_market(path: impl AsRef<Path>, a: &RowMatrix, comment: Option<&str>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
    if let Some(c) = comment {
        for line in c.lines() {
            writeln!(w, "% {line}")?;
        }
    }
    let nnz: usize = (0..a.nrows())
        .map(|i| a.row(i).iter().filter(|&(_, v)| v != 0.0).count())
        .sum();
    writeln!(w, "{} {} {}", a.nrows(), a.ncols(), nnz)?;
    for i in 0..a.nrows() {
        for (j, v) in a.row(i).iter().filter(|&(_, v)| v != 0.0) {
            writeln!(w, "{} {} {}", i + 1, j + 1, v)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use std::io::Write;

    use super::*;

    fn file_with(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn one_by_one() {
        let f = file_with("%%MatrixMarket matrix coordinate real general\n1 1 1\n1 1 2.5\n");
        let a = read_matrix_market(f.path()).unwrap();
        assert_eq!((a.nrows(), a.ncols()), (1, 1));
        assert_eq!(a.row_dot(0, &[1.0]).unwrap(), 2.5);
    }

    #[test]
    fn pattern_and_symmetric() {
        let f = file_with(
            "%%MatrixMarket matrix coordinate pattern symmetric\n% comment\n3 3 3\n1 1\n2 1\n3 2\n",
        );
        let d = parse_matrix_market(f.path()).unwrap();
        assert_eq!(d.entries.len(), 5);
        let a = d.to_matrix().unwrap();
        assert_eq!(a.row_sq_norms(), &[2.0, 2.0, 1.0]);
    }

    #[test]
    fn array_layout_is_column_major() {
        let f = file_with("%%MatrixMarket matrix array integer general\n2 2\n1\n2\n3\n4\n");
        let a = read_matrix_market(f.path()).unwrap();
        assert_eq!(a.row_dot(0, &[1.0, 0.0]).unwrap(), 1.0);
        assert_eq!(a.row_dot(0, &[0.0, 1.0]).unwrap(), 3.0);
        assert_eq!(a.row_dot(1, &[1.0, 0.0]).unwrap(), 2.0);
    }

    #[test]
    fn explicit_zero_dropped() {
        let f = file_with("%%MatrixMarket matrix coordinate real general\n2 2 3\n1 1 1.0\n1 2 0.0\n2 2 -1\n");
        let d = parse_matrix_market(f.path()).unwrap();
        assert_eq!(d.explicit_zeros, 1);
        assert_eq!(d.to_matrix().unwrap().nnz(), 2);
    }

    #[test]
    fn rejects_malformed() {
        let cases = [
            "%%MatrixMarket matrix coordinate complex general\n1 1 1\n1 1 1 0\n",
            "%MatrixMarket matrix coordinate real general\n1 1 1\n1 1 1\n",
            "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n",
            "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n1 1 2.0\n",
            "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n",
            "%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1 1.0\n2 2 1.0\n",
            "%%MatrixMarket matrix coordinate real general\n2 2\n",
            "%%MatrixMarket matrix coordinate real general\n1 1 1\n1 1 abc\n",
            "%%MatrixMarket matrix coordinate real symmetric\n2 2 2\n2 1 1.0\n1 2 1.0\n",
        ];
        for c in cases {
            let f = file_with(c);
            assert!(parse_matrix_market(f.path()).is_err(), "accepted:\n{c}");
        }
        assert!(matches!(
            read_matrix_market("/nonexistent/matrix.mtx"),
            Err(KaczError::Io(_))
        ));
    }

    #[test]
    fn empty_rows_filtered_or_rejected() {
        let f = file_with("%%MatrixMarket matrix coordinate real general\n3 2 2\n1 1 1.0\n3 2 4.0\n");
        assert!(matches!(read_matrix_market(f.path()), Err(KaczError::ZeroRow { row: 1 })));
        let (a, dropped) = read_matrix_market_filtered(f.path()).unwrap();
        assert_eq!(dropped, vec![1]);
        assert_eq!(a.nrows(), 2);
        assert_eq!(a.row_sq_norms(), &[1.0, 16.0]);
    }

    #[test]
    fn write_then_read() {
        let a = RowMatrix::from_rows(&[vec![1.0, 0.0, -2.5], vec![0.0, 3.0, 0.0]]).unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        write_matrix_market(f.path(), &a, Some("test")).unwrap();
        let b = read_matrix_market(f.path()).unwrap();
        assert_eq!(b.to_dense(), a.to_dense());
    }
}
