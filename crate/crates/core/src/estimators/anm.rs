use super::grid::GridSpec;
use super::music::music_from_covariance;
use super::{fill_amplitudes, Estimate, Method};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_part, min_eigenvalue, psd_project, sample_covariance};
use crate::model::RadarConfig;
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// ADMM settings for the denoising SDP.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnmOptions {
    /// Initial penalty; rebalanced every few iterations while primal and
    /// dual residuals differ by more than a factor of ten.
    pub rho: f64,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl Default for AnmOptions {
    fn default() -> Self {
        Self { rho: 1.0, abs_tol: 1e-6, rel_tol: 1e-6, max_iter: 2000 }
    }
}

/// Solution of the atomic-norm denoising SDP.
#[derive(Debug, Clone, PartialEq)]
pub struct DenoisedStack {
    /// `X̂`, same shape as the input.
    pub x_hat: DMatrix<Complex64>,
    /// `𝒮(T)`, the two-level Toeplitz block (`MN × MN`, index `n·M + m`).
    pub toeplitz: DMatrix<Complex64>,
    /// Free parameters `t[(δn + N − 1)·(2M − 1) + δm + M − 1] = 𝒮(T)[(δn, δm) class]`.
    pub t_param: Vec<Complex64>,
    /// `P`, `L × L`.
    pub p: DMatrix<Complex64>,
    /// `½ tr 𝒮(T) + ½ tr P`.
    pub objective: f64,
    /// Per iteration, the objective after shifting `𝒮(T)` and `P` by the
    /// block's most negative eigenvalue (a feasible point).
    pub objective_history: Vec<f64>,
    /// Smallest eigenvalue of `[[𝒮(T), X̂], [X̂ᴴ, P]]`.
    pub min_eigenvalue: f64,
    /// Frobenius norm of that block, the scale for the certificate.
    pub block_norm: f64,
    /// `τ − ‖X − X̂‖_F²`, non-negative when feasible.
    pub slack: f64,
    pub converged: bool,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
}

const BALANCE_EVERY: usize = 10;
const BALANCE_RATIO: f64 = 10.0;

/// `max(σ0² · MN · L, 1e-9 ‖X‖_F²)`: the expected white-noise energy, kept
/// strictly positive for noise-free data.
pub fn default_tau(x: &DMatrix<Complex64>, sigma0_sq: f64) -> f64 {
    let expected = sigma0_sq * (x.nrows() * x.ncols()) as f64;
    expected.max(1e-9 * x.norm_squared()).max(f64::MIN_POSITIVE)
}

struct ToeplitzClasses {
    n: usize,
    m: usize,
}

impl ToeplitzClasses {
    fn index(&self, row: usize, col: usize) -> usize {
        let (a, i) = (row / self.m, row % self.m);
        let (b, j) = (col / self.m, col % self.m);
        let dn = a as i64 - b as i64 + self.n as i64 - 1;
        let dm = i as i64 - j as i64 + self.m as i64 - 1;
        (dn as usize) * (2 * self.m - 1) + dm as usize
    }

    fn count(&self) -> usize {
        (2 * self.n - 1) * (2 * self.m - 1)
    }

    /// Frobenius-nearest two-level Toeplitz matrix: the mean over each
    /// `(a − b, i − j)` class. Returns the matrix and its parameters.
    fn project(&self, h: &DMatrix<Complex64>) -> (DMatrix<Complex64>, Vec<Complex64>) {
        let dim = h.nrows();
        let mut sums = vec![Complex64::new(0.0, 0.0); self.count()];
        let mut counts = vec![0usize; self.count()];
        for c in 0..dim {
            for r in 0..dim {
                let k = self.index(r, c);
                sums[k] += h[(r, c)];
                counts[k] += 1;
            }
        }
        let params: Vec<Complex64> = sums.iter().zip(&counts).map(|(s, &n)| s / n as f64).collect();
        (DMatrix::from_fn(dim, dim, |r, c| params[self.index(r, c)]), params)
    }
}

fn assemble(s: &DMatrix<Complex64>, x: &DMatrix<Complex64>, p: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let (d, l) = x.shape();
    let mut b = DMatrix::zeros(d + l, d + l);
    b.view_mut((0, 0), (d, d)).copy_from(s);
    b.view_mut((0, d), (d, l)).copy_from(x);
    b.view_mut((d, 0), (l, d)).copy_from(&x.adjoint());
    b.view_mut((d, d), (l, l)).copy_from(p);
    b
}

fn real_trace(a: &DMatrix<Complex64>) -> f64 {
    a.diagonal().iter().map(|z| z.re).sum()
}

/// Solves `min ½ tr 𝒮(T) + ½ tr P` subject to `[[𝒮(T), X̂], [X̂ᴴ, P]] ⪰ 0`
/// and `‖X − X̂‖_F² ≤ τ` by ADMM on the PSD splitting `B(T, X̂, P) = Z`.
///
/// The stack is first reduced to its row space (`X = Rᴴ Qᴴ`, at most `MN`
/// columns) and rescaled to unit average energy per row; both maps are
/// undone on output.
pub fn anm_denoise(
    x: &DMatrix<Complex64>,
    n_rx: usize,
    n_tx: usize,
    tau: f64,
    opts: &AnmOptions,
) -> Result<DenoisedStack> {
    let (d, l) = x.shape();
    if d != n_rx * n_tx || l == 0 {
        return Err(Error::domain(format!("stack is {d}x{l}, expected {} rows", n_rx * n_tx)));
    }
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::domain(format!("tau must be positive and finite, got {tau}")));
    }
    if !(opts.rho > 0.0) || opts.max_iter == 0 {
        return Err(Error::domain("ADMM needs rho > 0 and at least one iteration"));
    }

    // Row-space reduction.
    let (xr, q) = if l > d {
        let qr = x.adjoint().qr();
        (qr.r().adjoint(), Some(qr.q()))
    } else {
        (x.clone(), None)
    };
    let lr = xr.ncols();
    let scale = {
        let s = xr.norm() / (d as f64).sqrt();
        if s > 0.0 { s } else { 1.0 }
    };
    let xn = &xr / Complex64::new(scale, 0.0);
    let tau_n = tau / (scale * scale);

    let classes = ToeplitzClasses { n: n_tx, m: n_rx };
    let mut rho = opts.rho;
    let id_d = DMatrix::<Complex64>::identity(d, d);
    let id_l = DMatrix::<Complex64>::identity(lr, lr);
    let total = d + lr;

    let mut z = DMatrix::<Complex64>::zeros(total, total);
    let mut lambda = DMatrix::<Complex64>::zeros(total, total);
    let mut s_mat = DMatrix::zeros(d, d);
    let mut params = vec![Complex64::new(0.0, 0.0); classes.count()];
    let mut x_hat = xn.clone();
    let mut p = DMatrix::zeros(lr, lr);
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let (mut r_primal, mut r_dual) = (f64::INFINITY, f64::INFINITY);

    for _ in 0..opts.max_iter {
        iterations += 1;
        let half_inv_rho = Complex64::new(0.5 / rho, 0.0);
        let w = &z + &lambda / Complex64::new(rho, 0.0);
        let w11 = hermitian_part(&w.view((0, 0), (d, d)).clone_owned());
        let w22 = hermitian_part(&w.view((d, d), (lr, lr)).clone_owned());
        let w12 = w.view((0, d), (d, lr)).clone_owned();
        let w21 = w.view((d, 0), (lr, d)).clone_owned();

        let (s_new, t_new) = classes.project(&(w11 - &id_d * half_inv_rho));
        s_mat = s_new;
        params = t_new;
        p = w22 - &id_l * half_inv_rho;
        let v = (w12 + w21.adjoint()) * Complex64::new(0.5, 0.0);
        let e = &v - &xn;
        let e_norm_sq = e.norm_squared();
        x_hat = if e_norm_sq <= tau_n { v } else { &xn + e * Complex64::new((tau_n / e_norm_sq).sqrt(), 0.0) };

        let b = assemble(&s_mat, &x_hat, &p);
        let z_prev = z;
        z = psd_project(&(&b - &lambda / Complex64::new(rho, 0.0)))?.0;
        lambda += (&z - &b) * Complex64::new(rho, 0.0);

        // Objective of the iterate made feasible by the diagonal shift used
        // after the loop; an upper bound on the optimum.
        let shift = (-min_eigenvalue(&b)?).max(0.0);
        history.push(0.5 * (real_trace(&s_mat) + real_trace(&p) + shift * total as f64) * scale);
        r_primal = (&z - &b).norm();
        r_dual = rho * (&z - &z_prev).norm();
        let eps_primal = opts.abs_tol * total as f64 + opts.rel_tol * z.norm().max(b.norm());
        let eps_dual = opts.abs_tol * total as f64 + opts.rel_tol * lambda.norm();
        if r_primal <= eps_primal && r_dual <= eps_dual {
            converged = true;
            break;
        }
        // λ is unscaled, so changing ρ needs no dual rescaling.
        if iterations % BALANCE_EVERY == 0 {
            if r_primal > BALANCE_RATIO * r_dual {
                rho *= 2.0;
            } else if r_dual > BALANCE_RATIO * r_primal {
                rho /= 2.0;
            }
        }
    }

    // Shift 𝒮(T) and P by the worst negative eigenvalue so the block is PSD.
    let block = assemble(&s_mat, &x_hat, &p);
    let lam_min = min_eigenvalue(&block)?;
    if lam_min < 0.0 {
        let shift = Complex64::new(-lam_min, 0.0);
        s_mat += &id_d * shift;
        p += &id_l * shift;
        let zero = classes.index(0, 0);
        params[zero] += shift;
    }
    let block = assemble(&s_mat, &x_hat, &p);
    let mut certificate = min_eigenvalue(&block)? * scale;
    if q.is_some() && l > lr {
        // The discarded row-space complement contributes zero eigenvalues.
        certificate = certificate.min(0.0);
    }
    let block_norm = block.norm() * scale;

    let c = Complex64::new(scale, 0.0);
    let (x_hat, p) = match &q {
        Some(q) => (&x_hat * q.adjoint() * c, q * &p * q.adjoint() * c),
        None => (x_hat * c, p * c),
    };
    let toeplitz = s_mat * c;
    let t_param = params.into_iter().map(|t| t * c).collect();
    let objective = 0.5 * (real_trace(&toeplitz) + real_trace(&p));
    let slack = tau - (x - &x_hat).norm_squared();
    Ok(DenoisedStack {
        x_hat,
        toeplitz,
        t_param,
        p,
        objective,
        objective_history: history,
        min_eigenvalue: certificate,
        block_norm,
        slack,
        converged,
        iterations,
        primal_residual: r_primal * scale,
        dual_residual: r_dual * scale,
    })
}

/// MUSIC on `X̂ X̂ᴴ / L`.
pub fn subspace_from_denoised(
    cfg: &RadarConfig,
    d: &DenoisedStack,
    grid: &GridSpec,
    n_targets: usize,
) -> Result<Vec<Estimate>> {
    let cov = sample_covariance(&d.x_hat)?;
    let (_, mut est) = music_from_covariance(cfg, &cov, grid, n_targets, Method::AnmMusic)?;
    fill_amplitudes(cfg, &d.x_hat, &mut est);
    Ok(est)
}
