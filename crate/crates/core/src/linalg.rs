//! Small dense complex linear-algebra helpers on top of nalgebra.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Eigenpairs of a Hermitian matrix, columns of `vectors` matching `values`.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: DVector<f64>,
    pub vectors: DMatrix<Complex64>,
}

/// `(A + Aᴴ)/2`.
pub fn hermitian_part(a: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    (a + a.adjoint()) * Complex64::new(0.5, 0.0)
}

/// `max |A − Aᴴ|`.
pub fn hermitian_deviation(a: &DMatrix<Complex64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

fn eigen_raw(a: &DMatrix<Complex64>) -> Result<(Vec<f64>, DMatrix<Complex64>)> {
    if !a.is_square() {
        return Err(Error::domain(format!("eigendecomposition of a {}x{} matrix", a.nrows(), a.ncols())));
    }
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::numeric("matrix has non-finite entries"));
    }
    let eig = nalgebra::SymmetricEigen::try_new(hermitian_part(a), 1e-15, 0)
        .ok_or_else(|| Error::numeric("Hermitian eigendecomposition did not converge"))?;
    Ok((eig.eigenvalues.iter().copied().collect(), eig.eigenvectors))
}

fn reorder(values: Vec<f64>, vectors: DMatrix<Complex64>, key: impl Fn(f64) -> f64) -> HermitianEigen {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&i, &j| key(values[j]).total_cmp(&key(values[i])).then(i.cmp(&j)));
    let sorted_values = DVector::from_iterator(idx.len(), idx.iter().map(|&i| values[i]));
    let sorted_vectors = DMatrix::from_fn(vectors.nrows(), idx.len(), |r, c| vectors[(r, idx[c])]);
    HermitianEigen { values: sorted_values, vectors: sorted_vectors }
}

/// Eigenpairs sorted by descending eigenvalue. Input is symmetrized first.
pub fn hermitian_eigen(a: &DMatrix<Complex64>) -> Result<HermitianEigen> {
    let (values, vectors) = eigen_raw(a)?;
    Ok(reorder(values, vectors, |v| v))
}

/// Eigenpairs sorted by descending `|λ|`, for indefinite matrices whose
/// dominant structure may carry a negative eigenvalue.
pub fn hermitian_eigen_by_magnitude(a: &DMatrix<Complex64>) -> Result<HermitianEigen> {
    let (values, vectors) = eigen_raw(a)?;
    Ok(reorder(values, vectors, f64::abs))
}

/// `X Xᴴ / L` for an `D × L` snapshot matrix.
pub fn sample_covariance(x: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    if x.ncols() == 0 {
        return Err(Error::domain("no snapshots"));
    }
    Ok(x * x.adjoint() / Complex64::new(x.ncols() as f64, 0.0))
}

/// Projection onto the PSD cone in Frobenius norm. Returns the projection and
/// the smallest eigenvalue of the (symmetrized) input.
pub fn psd_project(a: &DMatrix<Complex64>) -> Result<(DMatrix<Complex64>, f64)> {
    let (values, vectors) = eigen_raw(a)?;
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let mut scaled = vectors.clone();
    for (c, &v) in values.iter().enumerate() {
        let w = v.max(0.0);
        scaled.column_mut(c).scale_mut(w);
    }
    Ok((scaled * vectors.adjoint(), min))
}

/// Smallest eigenvalue of the Hermitian part of `a`.
pub fn min_eigenvalue(a: &DMatrix<Complex64>) -> Result<f64> {
    let (values, _) = eigen_raw(a)?;
    Ok(values.iter().copied().fold(f64::INFINITY, f64::min))
}

/// Least-squares solution of `A X = B` via Householder QR. Fails when `A` is
/// numerically rank deficient (`|R_kk| ≤ 1e-10 · max |R_ii|`).
pub fn least_squares(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    if a.nrows() != b.nrows() {
        return Err(Error::domain("least squares: row mismatch"));
    }
    if a.ncols() > a.nrows() {
        return Err(Error::numeric(format!(
            "least squares: {} columns exceed {} rows",
            a.ncols(),
            a.nrows()
        )));
    }
    let qr = a.clone().qr();
    let r = qr.r();
    let diag_max = (0..r.ncols()).map(|k| r[(k, k)].norm()).fold(0.0, f64::max);
    for k in 0..r.ncols() {
        if !(r[(k, k)].norm() > 1e-10 * diag_max) || diag_max == 0.0 {
            return Err(Error::numeric(format!(
                "least squares: column {k} is numerically dependent (|R_kk| = {:.3e}, max {:.3e})",
                r[(k, k)].norm(),
                diag_max
            )));
        }
    }
    let qhb = qr.q().adjoint() * b;
    r.solve_upper_triangular(&qhb)
        .ok_or_else(|| Error::numeric("least squares: triangular solve failed"))
}

/// Inverse of a Hermitian positive-definite matrix via Cholesky, with the
/// eigenvalue spread reported on failure.
pub fn hpd_inverse(a: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    let h = hermitian_part(a);
    match h.clone().cholesky() {
        Some(ch) => Ok(ch.inverse()),
        None => {
            let (values, _) = eigen_raw(&h)?;
            let min = values.iter().copied().fold(f64::INFINITY, f64::min);
            let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            Err(Error::numeric(format!(
                "covariance not positive definite: eigenvalues in [{min:.3e}, {max:.3e}]"
            )))
        }
    }
}

/// `Re tr(A B)` without forming the product.
pub fn trace_of_product(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn test_matrix() -> DMatrix<Complex64> {
        let b = DMatrix::from_fn(4, 4, |i, j| c((i * 3 + j) as f64 * 0.1 - 0.5, (i as f64 - j as f64) * 0.2));
        &b * b.adjoint()
    }

    #[test]
    fn eigen_reconstructs_and_sorts() {
        let a = test_matrix();
        let e = hermitian_eigen(&a).unwrap();
        for k in 1..e.values.len() {
            assert!(e.values[k - 1] >= e.values[k]);
        }
        let d = DMatrix::from_diagonal(&e.values.map(|v| c(v, 0.0)));
        let back = &e.vectors * d * e.vectors.adjoint();
        assert!((back - a).norm() < 1e-12);
    }

    #[test]
    fn magnitude_sort_puts_negative_first() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![c(1.0, 0.0), c(-3.0, 0.0), c(2.0, 0.0)]));
        let e = hermitian_eigen_by_magnitude(&a).unwrap();
        assert_eq!(e.values.as_slice(), &[-3.0, 2.0, 1.0]);
    }

    #[test]
    fn psd_projection_clips() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![c(1.0, 0.0), c(-2.0, 0.0)]));
        let (p, min) = psd_project(&a).unwrap();
        assert_eq!(min, -2.0);
        assert!((p[(0, 0)] - c(1.0, 0.0)).norm() < 1e-14);
        assert!(p[(1, 1)].norm() < 1e-14);
    }

    #[test]
    fn least_squares_exact_and_rank_deficient() {
        let a = DMatrix::from_fn(5, 2, |i, j| c(i as f64 + 1.0, (j * i) as f64));
        let x = DMatrix::from_vec(2, 1, vec![c(1.0, -1.0), c(0.5, 2.0)]);
        let b = &a * &x;
        let sol = least_squares(&a, &b).unwrap();
        assert!((sol - x).norm() < 1e-12);
        let dup = DMatrix::from_fn(5, 2, |i, _| c(i as f64, 1.0));
        assert!(least_squares(&dup, &b).is_err());
    }

    #[test]
    fn hpd_inverse_roundtrip() {
        let a = test_matrix() + DMatrix::identity(4, 4);
        let inv = hpd_inverse(&a).unwrap();
        assert!((&a * inv - DMatrix::<Complex64>::identity(4, 4)).norm() < 1e-12);
    }
}
