//! Two-component PCA of embedding means.

use nalgebra::{DMatrix, SymmetricEigen};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PcaError {
    #[error("need at least 2 distinct points, got {0}")]
    TooFewPoints(usize),
    #[error("need at least 2 dimensions, got {0}")]
    TooFewDims(usize),
    #[error("rows have inconsistent dimensions")]
    Ragged,
}

/// Centre and top-two principal directions of a point set.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaFit {
    pub center: Vec<f64>,
    pub components: [Vec<f64>; 2],
    /// Eigenvalues of the sample covariance for the two components.
    pub variances: [f64; 2],
}

impl PcaFit {
    pub fn fit<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self, PcaError> {
        let n = rows.len();
        let d = rows.first().map_or(0, |r| r.as_ref().len());
        if rows.iter().any(|r| r.as_ref().len() != d) {
            return Err(PcaError::Ragged);
        }
        if d < 2 {
            return Err(PcaError::TooFewDims(d));
        }
        let distinct = rows
            .iter()
            .enumerate()
            .filter(|(i, r)| rows[..*i].iter().all(|q| q.as_ref() != r.as_ref()))
            .count();
        if distinct < 2 {
            return Err(PcaError::TooFewPoints(distinct));
        }
        let mut center = vec![0.0; d];
        for r in rows {
            for (c, &x) in center.iter_mut().zip(r.as_ref()) {
                *c += x;
            }
        }
        center.iter_mut().for_each(|c| *c /= n as f64);
        let x = DMatrix::from_fn(n, d, |i, j| rows[i].as_ref()[j] - center[j]);
        let cov = x.transpose() * &x / (n as f64 - 1.0);
        let eig = SymmetricEigen::new(cov);
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let component = |k: usize| -> Vec<f64> {
            let mut v: Vec<f64> = eig.eigenvectors.column(order[k]).iter().copied().collect();
            // Sign convention: largest-magnitude entry positive.
            let pivot = v
                .iter()
                .copied()
                .fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
            if pivot < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
            v
        };
        Ok(PcaFit {
            center,
            components: [component(0), component(1)],
            variances: [eig.eigenvalues[order[0]], eig.eigenvalues[order[1]]],
        })
    }

    pub fn project(&self, row: &[f64]) -> [f64; 2] {
        let dot = |c: &[f64]| -> f64 {
            row.iter()
                .zip(&self.center)
                .zip(c)
                .map(|((x, m), v)| (x - m) * v)
                .sum()
        };
        [dot(&self.components[0]), dot(&self.components[1])]
    }
}

/// Fits PCA on `rows` and projects them onto the top two components.
pub fn pca_project<R: AsRef<[f64]>>(rows: &[R]) -> Result<Vec<[f64; 2]>, PcaError> {
    let fit = PcaFit::fit(rows)?;
    Ok(rows.iter().map(|r| fit.project(r.as_ref())).collect())
}
