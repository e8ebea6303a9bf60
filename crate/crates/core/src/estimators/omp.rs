use super::grid::{grid_forms, GridSpec};
use super::{json_f64, Estimate, Method};
use crate::error::{Error, Result};
use crate::linalg::least_squares;
use crate::model::{joint_steering, RadarConfig};
use nalgebra::DMatrix;
use num_complex::Complex64;

/// Simultaneous OMP output. Coefficients are per atom (rows) and pulse
/// (columns) in units of the unit-norm atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct OmpResult {
    pub estimates: Vec<Estimate>,
    /// Selected `(θ index, r index)` in selection order.
    pub atoms: Vec<(usize, usize)>,
    pub coefficients: DMatrix<Complex64>,
    /// `‖R‖_F` before the first and after every iteration.
    pub residual_norms: Vec<f64>,
}

/// Greedy recovery over the normalized dictionary `a(θ, r)/√(MN)`. Each
/// iteration picks the atom with the largest correlation energy
/// `Σ_l |ãᴴ r_l|²` against the residual and refits all selected atoms by
/// least squares. Runs exactly `n_targets` iterations.
pub fn omp(cfg: &RadarConfig, x: &DMatrix<Complex64>, grid: &GridSpec, n_targets: usize) -> Result<OmpResult> {
    grid.validate()?;
    let dim = cfg.dim();
    if x.nrows() != dim || x.ncols() == 0 {
        return Err(Error::domain(format!("stack is {:?}, expected {dim} rows and ≥1 pulse", x.shape())));
    }
    if n_targets == 0 {
        return Err(Error::domain("need at least one target"));
    }
    if n_targets > dim {
        return Err(Error::domain(format!("{n_targets} atoms exceed dimension {dim}")));
    }
    let scale = Complex64::new(1.0 / (dim as f64).sqrt(), 0.0);
    let atom = |i: usize, j: usize| joint_steering(cfg, grid.theta_axis[i], grid.r_axis[j]) * scale;

    let mut residual = x.clone();
    let mut residual_norms = vec![residual.norm()];
    let mut atoms: Vec<(usize, usize)> = Vec::new();
    let mut coefficients = DMatrix::zeros(0, x.ncols());
    for _ in 0..n_targets {
        let q = &residual * residual.adjoint();
        let corr = grid_forms(cfg, grid, std::slice::from_ref(&q), |f| f[0].re / dim as f64);
        let mut best = (0, 0);
        for i in 0..corr.nrows() {
            for j in 0..corr.ncols() {
                if corr[(i, j)] > corr[best] {
                    best = (i, j);
                }
            }
        }
        atoms.push(best);
        let cols: Vec<_> = atoms.iter().map(|&(i, j)| atom(i, j)).collect();
        let a = DMatrix::from_columns(&cols);
        coefficients = least_squares(&a, x).map_err(|e| {
            Error::numeric(format!("selected atoms {atoms:?} are rank deficient: {e}"))
        })?;
        residual = x - &a * &coefficients;
        residual_norms.push(residual.norm());
    }

    let sqrt_dim = (dim as f64).sqrt();
    let estimates = atoms
        .iter()
        .enumerate()
        .map(|(k, &(i, j))| {
            let amp = coefficients.row(k).sum() / Complex64::new(x.ncols() as f64 * sqrt_dim, 0.0);
            let mut diagnostics = serde_json::Map::new();
            diagnostics.insert("residual_norm".into(), json_f64(*residual_norms.last().unwrap()));
            diagnostics.insert("selection_order".into(), k.into());
            Estimate {
                theta_deg: grid.theta_axis[i].to_degrees(),
                r_m: Some(grid.r_axis[j]),
                amplitude_re: amp.re,
                amplitude_im: amp.im,
                method: Method::Omp,
                diagnostics,
            }
        })
        .collect();
    Ok(OmpResult { estimates, atoms, coefficients, residual_norms })
}
