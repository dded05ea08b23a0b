use nalgebra::DMatrix;

use super::vector::dot;
use crate::{KaczError, Result};

#[derive(Debug, Clone)]
enum Storage {
    /// Row-major `m × n` values.
    Dense(Vec<f64>),
    Csr(Csr),
}

#[derive(Debug, Clone)]
struct Csr {
    offsets: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<f64>,
    // Column-major mirror: lets `A·aᵢᵀ` touch only the columns in row i's support.
    col_offsets: Vec<usize>,
    col_rows: Vec<usize>,
    col_values: Vec<f64>,
}

impl Csr {
    fn build(m: usize, n: usize, offsets: Vec<usize>, cols: Vec<usize>, values: Vec<f64>) -> Self {
        let mut col_offsets = vec![0usize; n + 1];
        for &c in &cols {
            col_offsets[c + 1] += 1;
        }
        for j in 0..n {
            col_offsets[j + 1] += col_offsets[j];
        }
        let mut fill = col_offsets.clone();
        let mut col_rows = vec![0usize; cols.len()];
        let mut col_values = vec![0.0; cols.len()];
        for i in 0..m {
            for p in offsets[i]..offsets[i + 1] {
                let c = cols[p];
                col_rows[fill[c]] = i;
                col_values[fill[c]] = values[p];
                fill[c] += 1;
            }
        }
        Csr {
            offsets,
            cols,
            values,
            col_offsets,
            col_rows,
            col_values,
        }
    }
}

/// Borrowed view of one matrix row.
#[derive(Debug, Clone, Copy)]
pub enum Row<'a> {
    Dense(&'a [f64]),
    Sparse { cols: &'a [usize], values: &'a [f64] },
}

impl<'a> Row<'a> {
    /// Stored `(column, value)` pairs; dense rows yield every column.
    pub fn iter(&self) -> Box<dyn Iterator<Item = (usize, f64)> + 'a> {
        match *self {
            Row::Dense(v) => Box::new(v.iter().copied().enumerate()),
            Row::Sparse { cols, values } => Box::new(cols.iter().copied().zip(values.iter().copied())),
        }
    }

    #[inline]
    pub fn dot(&self, x: &[f64]) -> f64 {
        match *self {
            Row::Dense(v) => dot(v, x),
            Row::Sparse { cols, values } => cols.iter().zip(values).map(|(&c, &v)| v * x[c]).sum(),
        }
    }

    /// x ← x + alpha·rowᵀ
    #[inline]
    pub fn axpy_into(&self, alpha: f64, x: &mut [f64]) {
        match *self {
            Row::Dense(v) => {
                for (xj, vj) in x.iter_mut().zip(v) {
                    *xj += alpha * vj;
                }
            }
            Row::Sparse { cols, values } => {
                for (&c, &v) in cols.iter().zip(values) {
                    x[c] += alpha * v;
                }
            }
        }
    }

    pub fn nnz(&self) -> usize {
        match *self {
            Row::Dense(v) => v.len(),
            Row::Sparse { cols, .. } => cols.len(),
        }
    }
}

/// Dense or CSR matrix with cached squared row norms `‖A⁽ⁱ⁾‖₂²` and `‖A‖_F²`.
///
/// Every row must contain a nonzero entry: all row-action updates divide by
/// the squared row norm.
#[derive(Debug, Clone)]
pub struct RowMatrix {
    m: usize,
    n: usize,
    storage: Storage,
    row_sq_norms: Vec<f64>,
    frob_sq: f64,
}

impl RowMatrix {
    /// Builds a dense matrix from row-major values.
    pub fn from_dense(m: usize, n: usize, values: Vec<f64>) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(KaczError::contract(format!("empty matrix shape {m}x{n}")));
        }
        if values.len() != m * n {
            return Err(KaczError::contract(format!(
                "dense storage has {} values, expected {}",
                values.len(),
                m * n
            )));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(KaczError::NonFinite { index });
        }
        let row_sq_norms: Vec<f64> = values.chunks_exact(n).map(|r| dot(r, r)).collect();
        Self::finish(m, n, Storage::Dense(values), row_sq_norms)
    }

    /// Builds a dense matrix from a slice of rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n) {
            return Err(KaczError::contract("rows have different lengths"));
        }
        Self::from_dense(m, n, rows.concat())
    }

    /// Builds a CSR matrix. Column indices must be strictly increasing within each row.
    pub fn from_csr(
        m: usize,
        n: usize,
        offsets: Vec<usize>,
        cols: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(KaczError::contract(format!("empty matrix shape {m}x{n}")));
        }
        if offsets.len() != m + 1 || offsets[0] != 0 {
            return Err(KaczError::contract("CSR offsets must have length m+1 and start at 0"));
        }
        if offsets.windows(2).any(|w| w[0] > w[1]) {
            return Err(KaczError::contract("CSR offsets must be nondecreasing"));
        }
        let nnz = offsets[m];
        if cols.len() != nnz || values.len() != nnz {
            return Err(KaczError::contract(format!(
                "CSR arrays have {} columns and {} values, offsets say {nnz}",
                cols.len(),
                values.len()
            )));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(KaczError::NonFinite { index });
        }
        let mut row_sq_norms = Vec::with_capacity(m);
        for i in 0..m {
            let rc = &cols[offsets[i]..offsets[i + 1]];
            if rc.iter().any(|&c| c >= n) {
                return Err(KaczError::contract(format!("row {i} has a column index out of range")));
            }
            if rc.windows(2).any(|w| w[0] >= w[1]) {
                return Err(KaczError::contract(format!(
                    "row {i} column indices are not strictly increasing"
                )));
            }
            let rv = &values[offsets[i]..offsets[i + 1]];
            row_sq_norms.push(dot(rv, rv));
        }
        let csr = Csr::build(m, n, offsets, cols, values);
        Self::finish(m, n, Storage::Csr(csr), row_sq_norms)
    }

    /// Builds a CSR matrix from `(row, col, value)` triplets in any order.
    /// Zero values are dropped; duplicate coordinates are rejected.
    pub fn from_triplets(m: usize, n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut sorted: Vec<(usize, usize, f64)> =
            triplets.iter().copied().filter(|t| t.2 != 0.0).collect();
        if let Some(t) = sorted.iter().find(|t| t.0 >= m || t.1 >= n) {
            return Err(KaczError::contract(format!(
                "triplet ({}, {}) outside {m}x{n}",
                t.0, t.1
            )));
        }
        sorted.sort_by_key(|t| (t.0, t.1));
        if let Some(w) = sorted.windows(2).find(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1)) {
            return Err(KaczError::contract(format!(
                "duplicate entry at ({}, {})",
                w[0].0, w[0].1
            )));
        }
        let mut offsets = vec![0usize; m + 1];
        for t in &sorted {
            offsets[t.0 + 1] += 1;
        }
        for i in 0..m {
            offsets[i + 1] += offsets[i];
        }
        let cols = sorted.iter().map(|t| t.1).collect();
        let values = sorted.iter().map(|t| t.2).collect();
        Self::from_csr(m, n, offsets, cols, values)
    }

    pub fn identity(n: usize) -> Result<Self> {
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            values[i * n + i] = 1.0;
        }
        Self::from_dense(n, n, values)
    }

    fn finish(m: usize, n: usize, storage: Storage, row_sq_norms: Vec<f64>) -> Result<Self> {
        if let Some(row) = row_sq_norms.iter().position(|&s| s <= 0.0) {
            return Err(KaczError::ZeroRow { row });
        }
        let frob_sq = row_sq_norms.iter().sum();
        Ok(RowMatrix {
            m,
            n,
            storage,
            row_sq_norms,
            frob_sq,
        })
    }

    pub fn nrows(&self) -> usize {
        self.m
    }

    pub fn ncols(&self) -> usize {
        self.n
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.storage, Storage::Csr(_))
    }

    pub fn nnz(&self) -> usize {
        match &self.storage {
            Storage::Dense(v) => v.len(),
            Storage::Csr(c) => c.values.len(),
        }
    }

    /// Cached `‖A⁽ⁱ⁾‖₂²` for every row.
    pub fn row_sq_norms(&self) -> &[f64] {
        &self.row_sq_norms
    }

    pub fn row_sq_norm(&self, i: usize) -> f64 {
        self.row_sq_norms[i]
    }

    /// Cached `‖A‖_F²`.
    pub fn frob_sq(&self) -> f64 {
        self.frob_sq
    }

    /// Row view. Panics when `i >= m`.
    #[inline]
    pub fn row(&self, i: usize) -> Row<'_> {
        match &self.storage {
            Storage::Dense(v) => Row::Dense(&v[i * self.n..(i + 1) * self.n]),
            Storage::Csr(c) => {
                let range = c.offsets[i]..c.offsets[i + 1];
                Row::Sparse {
                    cols: &c.cols[range.clone()],
                    values: &c.values[range],
                }
            }
        }
    }

    fn check_row(&self, i: usize, x_len: usize) -> Result<()> {
        if i >= self.m {
            return Err(KaczError::contract(format!(
                "row index {i} out of range for {} rows",
                self.m
            )));
        }
        if x_len != self.n {
            return Err(KaczError::contract(format!(
                "vector length {x_len} does not match {} columns",
                self.n
            )));
        }
        Ok(())
    }

    /// `A⁽ⁱ⁾·x`; sparse rows touch only stored entries.
    pub fn row_dot(&self, i: usize, x: &[f64]) -> Result<f64> {
        self.check_row(i, x.len())?;
        Ok(self.row(i).dot(x))
    }

    /// Returns `x + alpha·(A⁽ⁱ⁾)ᵀ`.
    pub fn axpy_row(&self, x: &[f64], alpha: f64, i: usize) -> Result<Vec<f64>> {
        self.check_row(i, x.len())?;
        let mut out = x.to_vec();
        self.row(i).axpy_into(alpha, &mut out);
        Ok(out)
    }

    /// `A·x`
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n, "mul_vec: length mismatch");
        (0..self.m).map(|i| self.row(i).dot(x)).collect()
    }

    /// `Aᵀ·y`
    pub fn tr_mul_vec(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.m, "tr_mul_vec: length mismatch");
        let mut out = vec![0.0; self.n];
        for (i, &yi) in y.iter().enumerate() {
            if yi != 0.0 {
                self.row(i).axpy_into(yi, &mut out);
            }
        }
        out
    }

    /// `b − A·x`
    pub fn residual(&self, b: &[f64], x: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.m, "residual: length mismatch");
        (0..self.m).map(|i| b[i] - self.row(i).dot(x)).collect()
    }

    /// r ← r − alpha·A·(A⁽ⁱ⁾)ᵀ, the residual change caused by `x ← x + alpha·(A⁽ⁱ⁾)ᵀ`.
    pub fn residual_row_update(&self, i: usize, alpha: f64, r: &mut [f64]) {
        debug_assert_eq!(r.len(), self.m);
        match &self.storage {
            Storage::Dense(v) => {
                let ai = &v[i * self.n..(i + 1) * self.n];
                for (rj, aj) in r.iter_mut().zip(v.chunks_exact(self.n)) {
                    *rj -= alpha * dot(aj, ai);
                }
            }
            Storage::Csr(c) => {
                let span = c.offsets[i]..c.offsets[i + 1];
                for (&col, &v) in c.cols[span.clone()].iter().zip(&c.values[span]) {
                    let scale = alpha * v;
                    let col_span = c.col_offsets[col]..c.col_offsets[col + 1];
                    for (&row, &w) in c.col_rows[col_span.clone()].iter().zip(&c.col_values[col_span]) {
                        r[row] -= scale * w;
                    }
                }
            }
        }
    }

    /// r ← r − A·z
    pub fn residual_sub_mul(&self, z: &[f64], r: &mut [f64]) {
        debug_assert_eq!(r.len(), self.m);
        match &self.storage {
            Storage::Dense(_) => {
                for (i, ri) in r.iter_mut().enumerate() {
                    *ri -= self.row(i).dot(z);
                }
            }
            Storage::Csr(c) => {
                for (col, &zc) in z.iter().enumerate() {
                    if zc == 0.0 {
                        continue;
                    }
                    for q in c.col_offsets[col]..c.col_offsets[col + 1] {
                        r[c.col_rows[q]] -= zc * c.col_values[q];
                    }
                }
            }
        }
    }

    /// Dense copy of the rows in `idx`, in the given order.
    pub fn rows_dense(&self, idx: &[usize]) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(idx.len(), self.n);
        for (k, &i) in idx.iter().enumerate() {
            for (j, v) in self.row(i).iter() {
                out[(k, j)] = v;
            }
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let all: Vec<usize> = (0..self.m).collect();
        self.rows_dense(&all)
    }

    /// Dense Gram matrix `AᵀA`.
    pub fn gram(&self) -> DMatrix<f64> {
        match &self.storage {
            Storage::Dense(_) => {
                let a = self.to_dense();
                a.tr_mul(&a)
            }
            Storage::Csr(_) => {
                let mut g = DMatrix::zeros(self.n, self.n);
                for i in 0..self.m {
                    if let Row::Sparse { cols, values } = self.row(i) {
                        for (&cj, &vj) in cols.iter().zip(values) {
                            for (&ck, &vk) in cols.iter().zip(values) {
                                g[(cj, ck)] += vj * vk;
                            }
                        }
                    }
                }
                g
            }
        }
    }
}
