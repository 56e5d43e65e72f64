//! Small dense linear-algebra helpers backed by nalgebra: symmetric
//! eigenvalues for signatures, matrix inversion, SVD null spaces.

use nalgebra::DMatrix;

use crate::error::{NordenError, Result};
use crate::tensor::{DenseTensor, Variance, LOWER2};

pub(crate) fn to_matrix(t: &DenseTensor) -> DMatrix<f64> {
    let dim = t.dim();
    DMatrix::from_fn(dim, dim, |i, j| t.at2(i, j))
}

/// Inverts a symmetric rank-2 tensor; the result has both slots' variance flipped.
pub fn invert(metric: &DenseTensor) -> Result<DenseTensor> {
    if metric.rank() != 2 {
        return Err(NordenError::RankMismatch { expected: 2, got: metric.rank() });
    }
    let m = to_matrix(metric);
    let inv = m.try_inverse().ok_or(NordenError::SingularMetric)?;
    let variance = [metric.variance()[0].flipped(), metric.variance()[1].flipped()];
    Ok(DenseTensor::from_fn2(metric.dim(), variance, |i, j| inv[(i, j)]))
}

/// Signature of a symmetric rank-2 tensor as (positive, negative) eigenvalue
/// counts. Eigenvalues inside `zero_threshold` mean the metric is degenerate.
pub fn signature(metric: &DenseTensor, zero_threshold: f64) -> Result<(usize, usize)> {
    if metric.rank() != 2 {
        return Err(NordenError::RankMismatch { expected: 2, got: metric.rank() });
    }
    let m = to_matrix(metric);
    let sym = (&m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigenvalues();
    let mut pos = 0;
    let mut neg = 0;
    for &ev in eig.iter() {
        if ev > zero_threshold {
            pos += 1;
        } else if ev < -zero_threshold {
            neg += 1;
        } else {
            return Err(NordenError::DegenerateMetric);
        }
    }
    Ok((pos, neg))
}

/// Orthonormal basis of the null space of the linear map given by `rows`
/// (each row one linear functional on R^ncols), via SVD with threshold `tol`.
pub fn null_space(rows: &[Vec<f64>], ncols: usize, tol: f64) -> Vec<Vec<f64>> {
    if rows.is_empty() {
        // whole space: standard basis
        return (0..ncols)
            .map(|i| {
                let mut v = vec![0.0; ncols];
                v[i] = 1.0;
                v
            })
            .collect();
    }
    let a = DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]);
    let svd = a.svd(false, true);
    let vt = svd.v_t.expect("v_t requested");
    let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
    (rank..vt.nrows())
        .map(|r| vt.row(r).iter().copied().collect())
        .collect()
}

/// Least-squares solution of `rows * x = rhs` via SVD.
pub fn lstsq(rows: &[Vec<f64>], rhs: &[f64], ncols: usize) -> Vec<f64> {
    let a = DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]);
    let b = DMatrix::from_fn(rows.len(), 1, |i, _| rhs[i]);
    let svd = a.svd(true, true);
    let x = svd.solve(&b, 1e-12).expect("svd solve");
    x.column(0).iter().copied().collect()
}

/// Symmetric eigendecomposition, returning (eigenvalues, eigenvectors-as-rows).
pub fn sym_eigen(mat: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = mat.len();
    let m = DMatrix::from_fn(n, n, |i, j| 0.5 * (mat[i][j] + mat[j][i]));
    let se = m.symmetric_eigen();
    let vals: Vec<f64> = se.eigenvalues.iter().copied().collect();
    let vecs: Vec<Vec<f64>> = (0..n)
        .map(|c| se.eigenvectors.column(c).iter().copied().collect())
        .collect();
    (vals, vecs)
}

/// Determinant guard used when sampling random basis changes.
pub fn well_conditioned(mat: &DenseTensor, min_sv: f64, max_sv: f64) -> bool {
    let m = to_matrix(mat);
    let svd = m.svd(false, false);
    let svs = &svd.singular_values;
    let lo = svs.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = svs.iter().cloned().fold(0.0f64, f64::max);
    lo > min_sv && hi < max_sv
}

/// Identity as a (1,1) tensor.
pub fn identity11(dim: usize) -> DenseTensor {
    DenseTensor::from_fn2(dim, [Variance::Upper, Variance::Lower], |i, j| if i == j { 1.0 } else { 0.0 })
}

/// Symmetry residual max|m_{ij} - m_{ji}|.
pub fn asymmetry(t: &DenseTensor) -> f64 {
    let dim = t.dim();
    let mut worst = 0.0f64;
    for i in 0..dim {
        for j in 0..dim {
            worst = worst.max((t.at2(i, j) - t.at2(j, i)).abs());
        }
    }
    worst
}

/// Checks that a rank-2 lower tensor is symmetric within `tol`.
pub fn require_symmetric(t: &DenseTensor, tol: f64) -> Result<()> {
    if asymmetry(t) > tol {
        return Err(NordenError::MetricNotSymmetric);
    }
    Ok(())
}

pub fn zeros2_lower(dim: usize) -> DenseTensor {
    DenseTensor::zeros(dim, &LOWER2).expect("even dim")
}
