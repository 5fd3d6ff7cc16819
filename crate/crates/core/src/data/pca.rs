use nalgebra::{DMatrix, SymmetricEigen};

use super::DataError;
use crate::graph::Dataset;

/// A fitted principal-component projection.
#[derive(Debug, Clone, PartialEq)]
pub struct Pca {
    pub mean: Vec<f64>,
    /// Principal directions as rows, by decreasing eigenvalue. The
    /// largest-magnitude coordinate of each direction is positive.
    pub directions: Vec<Vec<f64>>,
    /// Eigenvalues of the sample covariance (divisor `n − 1`) for each direction.
    pub eigenvalues: Vec<f64>,
}

impl Pca {
    pub fn fit(dataset: &Dataset, components: usize) -> Result<Self, DataError> {
        let (n, d) = (dataset.len(), dataset.dim());
        if components == 0 || components > d || components > n {
            return Err(DataError::InvalidParameter(format!(
                "{components} components for {n} points of dimension {d}"
            )));
        }
        let mut mean = vec![0.0; d];
        for p in dataset.points() {
            mean.iter_mut().zip(p).for_each(|(m, x)| *m += x);
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let centered = DMatrix::from_fn(n, d, |i, j| dataset.point(i)[j] - mean[j]);
        let cov = centered.tr_mul(&centered) / (n.max(2) - 1) as f64;
        let eig = SymmetricEigen::new(cov);
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let mut directions = Vec::with_capacity(components);
        let mut eigenvalues = Vec::with_capacity(components);
        for &j in order.iter().take(components) {
            let mut v: Vec<f64> = eig.eigenvectors.column(j).iter().copied().collect();
            let lead = v.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
            if lead < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
            directions.push(v);
            eigenvalues.push(eig.eigenvalues[j]);
        }
        Ok(Self {
            mean,
            directions,
            eigenvalues,
        })
    }

    pub fn transform(&self, dataset: &Dataset) -> Result<Dataset, DataError> {
        if dataset.dim() != self.mean.len() {
            return Err(DataError::InvalidParameter(format!(
                "fitted on dimension {}, got {}",
                self.mean.len(),
                dataset.dim()
            )));
        }
        let k = self.directions.len();
        let mut values = Vec::with_capacity(dataset.len() * k);
        for p in dataset.points() {
            for dir in &self.directions {
                values.push(
                    dir.iter()
                        .zip(p.iter().zip(&self.mean))
                        .map(|(v, (x, m))| v * (x - m))
                        .sum(),
                );
            }
        }
        let out = Dataset::from_flat(k, values)?;
        Ok(match dataset.classes() {
            Some(c) => out.with_classes(c.to_vec())?,
            None => out,
        })
    }
}

/// Centers `dataset` and projects it onto its top `components` principal
/// directions. Class labels are kept.
pub fn pca_project(dataset: &Dataset, components: usize) -> Result<Dataset, DataError> {
    Pca::fit(dataset, components)?.transform(dataset)
}
