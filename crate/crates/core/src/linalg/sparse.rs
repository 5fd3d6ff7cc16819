use super::{DenseMatrix, LinalgError, SymOperator};

/// Row-compressed storage for a structurally symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSymMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSymMatrix {
    /// Assembles from `(row, col, value)` triplets; duplicates are summed.
    /// Both triangles must be supplied and agree to 1e-12 relative.
    pub fn from_triplets(
        n: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self, LinalgError> {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (i, j, v) in triplets {
            if i >= n || j >= n {
                return Err(LinalgError::DimensionMismatch {
                    expected: n,
                    found: i.max(j) + 1,
                });
            }
            if !v.is_finite() {
                return Err(LinalgError::NonFinite { row: i, col: j });
            }
            rows[i].push((j, v));
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for row in &mut rows {
            row.sort_unstable_by_key(|&(j, _)| j);
            let mut last: Option<usize> = None;
            for &(j, v) in row.iter() {
                if last == Some(j) {
                    *values.last_mut().expect("entry exists") += v;
                } else {
                    col_idx.push(j);
                    values.push(v);
                    last = Some(j);
                }
            }
            row_ptr.push(col_idx.len());
        }
        let m = Self {
            n,
            row_ptr,
            col_idx,
            values,
        };
        m.check_symmetric()?;
        Ok(m)
    }

    pub(crate) fn check_symmetric(&self) -> Result<(), LinalgError> {
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                let t = self.get(j, i);
                let scale = v.abs().max(t.abs()).max(f64::MIN_POSITIVE);
                if (v - t).abs() > 1e-12 * scale {
                    return Err(LinalgError::NotSymmetric { row: i, col: j });
                }
            }
        }
        Ok(())
    }

    pub(crate) fn from_csr_unchecked(
        n: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Self {
        let m = Self {
            n,
            row_ptr,
            col_idx,
            values,
        };
        m
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self, LinalgError> {
        Self::from_triplets(diag.len(), diag.iter().enumerate().map(|(i, &d)| (i, i, d)))
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[span.clone()].binary_search(&j) {
            Ok(pos) => self.values[span.start + pos],
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                d[(i, j)] = v;
            }
        }
        d
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.apply(x, &mut y);
        y
    }
}

impl SymOperator for SparseSymMatrix {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.n) {
            let span = self.row_ptr[i]..self.row_ptr[i + 1];
            let mut acc = 0.0;
            for (&j, &v) in self.col_idx[span.clone()].iter().zip(&self.values[span]) {
                acc += v * x[j];
            }
            *yi = acc;
        }
    }
}
