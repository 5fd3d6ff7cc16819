use std::ops::{Index, IndexMut};

use super::{LinalgError, SymOperator};

/// Pivots below this fraction of the largest entry are treated as zero.
const PIVOT_TOL: f64 = 1e-12;

/// Square row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, LinalgError> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(LinalgError::DimensionMismatch {
                    expected: n,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Self { n, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        self.data
            .chunks_exact(self.n.max(1))
            .take(self.n)
            .map(|row| super::dot(row, x))
            .collect()
    }

    /// LU factorization with scaled partial pivoting: the pivot maximizes
    /// `|a_rc| / max_j |a_rj|` (original row scale), and the matrix counts as
    /// singular once that ratio drops to 1e-12 or below.
    pub fn lu(&self) -> Result<LuFactors, LinalgError> {
        let n = self.n;
        let mut a = self.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale: Vec<f64> = (0..n)
            .map(|r| self.row(r).iter().fold(0.0f64, |m, v| m.max(v.abs())))
            .collect();
        for col in 0..n {
            let (piv_row, ratio) = (col..n)
                .map(|r| {
                    let s = scale[perm[r]];
                    (r, if s > 0.0 { a[r * n + col].abs() / s } else { 0.0 })
                })
                .fold((col, -1.0), |best, c| if c.1 > best.1 { c } else { best });
            if !(ratio > PIVOT_TOL) {
                return Err(LinalgError::Singular {
                    column: col,
                    pivot: a[piv_row * n + col],
                });
            }
            if piv_row != col {
                for j in 0..n {
                    a.swap(col * n + j, piv_row * n + j);
                }
                perm.swap(col, piv_row);
            }
            let pivot = a[col * n + col];
            let (upper, lower) = a.split_at_mut((col + 1) * n);
            let pivot_row = &upper[col * n + col + 1..col * n + n];
            for r in 0..(n - col - 1) {
                let row = &mut lower[r * n..(r + 1) * n];
                let factor = row[col] / pivot;
                row[col] = factor;
                if factor != 0.0 {
                    for (x, p) in row[col + 1..].iter_mut().zip(pivot_row) {
                        *x -= factor * p;
                    }
                }
            }
        }
        Ok(LuFactors { n, lu: a, perm })
    }

    /// Explicit inverse via LU.
    pub fn inverse(&self) -> Result<DenseMatrix, LinalgError> {
        let lu = self.lu()?;
        let n = self.n;
        let mut inv_t = Vec::with_capacity(n * n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[j] = 1.0;
            inv_t.extend(lu.solve(&e)?);
        }
        let mut inv = Self::zeros(n);
        for j in 0..n {
            for i in 0..n {
                inv.data[i * n + j] = inv_t[j * n + i];
            }
        }
        Ok(inv)
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

impl SymOperator for DenseMatrix {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.n) {
            *yi = super::dot(self.row(i), x);
        }
    }
}

/// Packed `PA = LU` factors.
#[derive(Debug, Clone)]
pub struct LuFactors {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl LuFactors {
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
        let n = self.n;
        if b.len() != n {
            return Err(LinalgError::DimensionMismatch {
                expected: n,
                found: b.len(),
            });
        }
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = &self.lu[i * n..i * n + i];
            x[i] -= super::dot(row, &x[..i]);
        }
        for i in (0..n).rev() {
            let row = &self.lu[i * n..(i + 1) * n];
            let s = super::dot(&row[i + 1..], &x[i + 1..]);
            x[i] = (x[i] - s) / row[i];
        }
        Ok(x)
    }
}

/// Solves `A x = b` by LU with partial pivoting.
pub fn direct_solve(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
    if b.len() != a.n() {
        return Err(LinalgError::DimensionMismatch {
            expected: a.n(),
            found: b.len(),
        });
    }
    a.lu()?.solve(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn small_solves() {
        let id = DenseMatrix::identity(3);
        assert_eq!(direct_solve(&id, &[1.0, -2.0, 3.5]).unwrap(), vec![1.0, -2.0, 3.5]);
        let a = DenseMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let x = direct_solve(&a, &[3.0, 3.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn needs_pivoting() {
        let a = DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(direct_solve(&a, &[2.0, 3.0]).unwrap(), vec![3.0, 2.0]);
    }

    #[test]
    fn singular_detected() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(matches!(direct_solve(&a, &[1.0, 1.0]), Err(LinalgError::Singular { .. })));
        assert!(matches!(
            direct_solve(&a, &[1.0]),
            Err(LinalgError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn inverse_times_matrix_is_identity() {
        let a = DenseMatrix::from_rows(&[
            vec![4.0, 1.0, 0.5],
            vec![1.0, 3.0, -1.0],
            vec![0.5, -1.0, 2.0],
        ])
        .unwrap();
        let inv = a.inverse().unwrap();
        for j in 0..3 {
            let col: Vec<f64> = (0..3).map(|i| inv[(i, j)]).collect();
            let e = a.matvec(&col);
            for (i, v) in e.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((v - want).abs() < 1e-13);
            }
        }
    }

    proptest! {
        // Diagonally dominant matrices have κ well under 1e6.
        #[test]
        fn recovers_x_from_ax(
            n in 2usize..12,
            entries in prop::collection::vec(-1.0f64..1.0, 144),
            x in prop::collection::vec(-5.0f64..5.0, 12),
        ) {
            let mut a = DenseMatrix::zeros(n);
            for i in 0..n {
                for j in 0..n {
                    a[(i, j)] = entries[i * 12 + j];
                }
                a[(i, i)] += n as f64 + 1.0;
            }
            let x = &x[..n];
            let b = a.matvec(x);
            let got = direct_solve(&a, &b).unwrap();
            let err: f64 = got.iter().zip(x).map(|(g, t)| (g - t).powi(2)).sum::<f64>().sqrt();
            let scale: f64 = x.iter().map(|t| t * t).sum::<f64>().sqrt().max(1e-12);
            prop_assert!(err / scale <= 1e-9);
        }
    }
}
