use crate::error::{Error, Result};
use crate::linalg::hermitian_eigen_by_magnitude;
use nalgebra::DMatrix;
use num_complex::Complex64;

/// Sample fourth-order cumulant matrix of a `D`-dimensional stack, `D²×D²`.
#[derive(Debug, Clone, PartialEq)]
pub struct CumulantMatrix {
    pub c4: DMatrix<Complex64>,
    /// Dominant eigenvalue over `‖a ⊗ a*‖² = D²`; equals `h` when the
    /// cumulant is `h (a⊗a*)(a⊗a*)ᴴ` with unit-modulus `a`.
    pub h: Complex64,
    pub dim: usize,
    pub n_snapshots: usize,
}

/// `C_4[i·D + j, p·D + q] = cum(x_i, x_j*, x_p*, x_q)`, with all moments
/// replaced by (non-centred) sample means over the columns of `x`:
///
/// `E{x_i x_j* x_p* x_q} − E{x_i x_p*}E{x_j* x_q} − E{x_i x_q}E{x_j* x_p*} − E{x_i x_j*}E{x_p* x_q}`.
pub fn build_c4(x: &DMatrix<Complex64>) -> Result<CumulantMatrix> {
    let (d, l) = x.shape();
    if l < 2 {
        return Err(Error::domain(format!("cumulant needs at least 2 snapshots, got {l}")));
    }
    if d == 0 {
        return Err(Error::domain("empty snapshot dimension"));
    }
    let inv_l = Complex64::new(1.0 / l as f64, 0.0);
    // z_{(i,j)} = x_i x_j*, so E{z zᴴ} is the fourth moment in the stated layout.
    let z = DMatrix::from_fn(d * d, l, |row, col| x[(row / d, col)] * x[(row % d, col)].conj());
    let mut c4 = &z * z.adjoint() * inv_l;
    let r = x * x.adjoint() * inv_l; // E{x_i x_p*}
    let p = x * x.transpose() * inv_l; // E{x_i x_q}
    for i in 0..d {
        for j in 0..d {
            for pp in 0..d {
                for q in 0..d {
                    let term = r[(i, pp)] * r[(j, q)].conj()
                        + p[(i, q)] * p[(j, pp)].conj()
                        + r[(i, j)] * r[(pp, q)].conj();
                    c4[(i * d + j, pp * d + q)] -= term;
                }
            }
        }
    }
    let eig = hermitian_eigen_by_magnitude(&c4)?;
    let h = Complex64::new(eig.values[0] / (d * d) as f64, 0.0);
    Ok(CumulantMatrix { c4, h, dim: d, n_snapshots: l })
}
