use super::cumulant::CumulantMatrix;
use super::grid::{grid_forms, GridSpec, Spectrum1D, Spectrum2D};
use super::{fill_amplitudes, json_f64, Estimate, Method};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, hermitian_eigen_by_magnitude, sample_covariance, HermitianEigen};
use crate::model::{cis, RadarConfig};
use nalgebra::DMatrix;
use num_complex::Complex64;

/// Relative floor on the projection onto the noise subspace.
const FLOOR_REL: f64 = 1e-14;

/// Data fed to 2D-MUSIC.
#[derive(Debug, Clone, Copy)]
pub enum MusicInput<'a> {
    /// `MN × L` pulse stack; the sample covariance is formed internally.
    Stack(&'a DMatrix<Complex64>),
    /// A precomputed `MN × MN` covariance.
    Covariance(&'a DMatrix<Complex64>),
}

fn check_order(n_targets: usize, dim: usize) -> Result<()> {
    if n_targets == 0 {
        return Err(Error::domain("need at least one target"));
    }
    if n_targets >= dim {
        return Err(Error::domain(format!(
            "{n_targets} targets leave no noise subspace in dimension {dim}"
        )));
    }
    Ok(())
}

fn check_degenerate(eig: &HermitianEigen) -> Result<()> {
    let top = eig.values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if !(top > 0.0 && top.is_finite()) {
        return Err(Error::numeric("covariance is zero or non-finite; no subspace to estimate"));
    }
    Ok(())
}

/// Signal-subspace projector `U_s U_sᴴ` from the `s` leading eigenvectors.
fn signal_projector(eig: &HermitianEigen, s: usize) -> DMatrix<Complex64> {
    let us = eig.vectors.columns(0, s);
    us * us.adjoint()
}

fn eigen_diagnostics(eig: &HermitianEigen, s: usize) -> serde_json::Map<String, serde_json::Value> {
    let mut d = serde_json::Map::new();
    let gap = if eig.values[s].abs() > 0.0 { eig.values[s - 1].abs() / eig.values[s].abs() } else { f64::INFINITY };
    d.insert("eigen_gap".into(), json_f64(gap));
    d
}

pub(crate) fn music_from_covariance(
    cfg: &RadarConfig,
    cov: &DMatrix<Complex64>,
    grid: &GridSpec,
    n_targets: usize,
    method: Method,
) -> Result<(Spectrum2D, Vec<Estimate>)> {
    grid.validate()?;
    let dim = cfg.dim();
    if cov.shape() != (dim, dim) {
        return Err(Error::domain(format!("covariance is {:?}, expected {dim}x{dim}", cov.shape())));
    }
    check_order(n_targets, dim)?;
    let eig = hermitian_eigen(cov)?;
    check_degenerate(&eig)?;
    let proj = signal_projector(&eig, n_targets);
    let norm = dim as f64;
    // 1 / (aᴴ U_n U_nᴴ a) = 1 / (‖a‖² − aᴴ U_s U_sᴴ a)
    let values = grid_forms(cfg, grid, std::slice::from_ref(&proj), |f| {
        1.0 / (norm - f[0].re).max(norm * FLOOR_REL)
    });
    let spectrum = Spectrum2D::new(values, grid);
    let diag = eigen_diagnostics(&eig, n_targets);
    let estimates = spectrum
        .top_peaks(n_targets)
        .into_iter()
        .map(|(i, j)| {
            let mut diagnostics = diag.clone();
            diagnostics.insert("spectrum_value".into(), json_f64(spectrum.values[(i, j)]));
            Estimate {
                theta_deg: grid.theta_axis[i].to_degrees(),
                r_m: Some(grid.r_axis[j]),
                amplitude_re: f64::NAN,
                amplitude_im: f64::NAN,
                method,
                diagnostics,
            }
        })
        .collect();
    Ok((spectrum, estimates))
}

/// 2D-MUSIC over the (θ, r) grid.
pub fn music_2d(
    cfg: &RadarConfig,
    input: MusicInput<'_>,
    grid: &GridSpec,
    n_targets: usize,
) -> Result<(Spectrum2D, Vec<Estimate>)> {
    match input {
        MusicInput::Stack(x) => {
            if x.nrows() != cfg.dim() {
                return Err(Error::domain(format!("stack has {} rows, expected {}", x.nrows(), cfg.dim())));
            }
            let cov = sample_covariance(x)?;
            let (s, mut e) = music_from_covariance(cfg, &cov, grid, n_targets, Method::Music2d)?;
            fill_amplitudes(cfg, x, &mut e);
            Ok((s, e))
        }
        MusicInput::Covariance(c) => music_from_covariance(cfg, c, grid, n_targets, Method::Music2d),
    }
}

/// MUSIC on the cumulant matrix with steering `a ⊗ a*`. The signal subspace
/// is taken by eigenvalue magnitude since the target cumulant is negative.
pub fn music_c4(
    cfg: &RadarConfig,
    c4: &CumulantMatrix,
    grid: &GridSpec,
    n_targets: usize,
) -> Result<(Spectrum2D, Vec<Estimate>)> {
    grid.validate()?;
    let dim = cfg.dim();
    if c4.dim != dim {
        return Err(Error::domain(format!("cumulant built for dimension {}, expected {dim}", c4.dim)));
    }
    check_order(n_targets, dim * dim)?;
    let eig = hermitian_eigen_by_magnitude(&c4.c4)?;
    check_degenerate(&eig)?;
    // |u_kᴴ (a ⊗ a*)| = |aᴴ U_k a| with U_k[i, j] = u_k[i·MN + j].
    let mats: Vec<DMatrix<Complex64>> = (0..n_targets)
        .map(|k| DMatrix::from_fn(dim, dim, |i, j| eig.vectors[(i * dim + j, k)]))
        .collect();
    let norm = (dim * dim) as f64;
    let values = grid_forms(cfg, grid, &mats, |f| {
        let captured: f64 = f.iter().map(|z| z.norm_sqr()).sum();
        1.0 / (norm - captured).max(norm * FLOOR_REL)
    });
    let spectrum = Spectrum2D::new(values, grid);
    let diag = eigen_diagnostics(&eig, n_targets);
    let estimates = spectrum
        .top_peaks(n_targets)
        .into_iter()
        .map(|(i, j)| {
            let mut diagnostics = diag.clone();
            diagnostics.insert("spectrum_value".into(), json_f64(spectrum.values[(i, j)]));
            diagnostics.insert("h_re".into(), json_f64(c4.h.re));
            Estimate {
                theta_deg: grid.theta_axis[i].to_degrees(),
                r_m: Some(grid.r_axis[j]),
                amplitude_re: f64::NAN,
                amplitude_im: f64::NAN,
                method: Method::MusicC4,
                diagnostics,
            }
        })
        .collect();
    Ok((spectrum, estimates))
}

/// Angle-only MUSIC on the `M × (N·L)` row-snapshot matrix: each column of
/// every pulse's `Y` is one receive-array snapshot.
pub fn music_rows(
    cfg: &RadarConfig,
    x: &DMatrix<Complex64>,
    theta_axis: &[f64],
    n_sources: usize,
) -> Result<(Spectrum1D, Vec<Estimate>)> {
    let m = cfg.n_rx;
    if x.nrows() != cfg.dim() {
        return Err(Error::domain(format!("stack has {} rows, expected {}", x.nrows(), cfg.dim())));
    }
    if theta_axis.len() < 2 || theta_axis.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::domain("angle axis must have at least 2 strictly increasing points"));
    }
    check_order(n_sources, m)?;
    // Column-major storage makes the reshape a reinterpretation.
    let snapshots = DMatrix::from_column_slice(m, cfg.n_tx * x.ncols(), x.as_slice());
    let cov = sample_covariance(&snapshots)?;
    let eig = hermitian_eigen(&cov)?;
    check_degenerate(&eig)?;
    let us = eig.vectors.columns(0, n_sources).clone_owned();
    let norm = m as f64;
    let values: Vec<f64> = theta_axis
        .iter()
        .map(|&theta| {
            let f_theta = cfg.spatial_frequency(theta);
            let mut captured = 0.0;
            for k in 0..n_sources {
                let mut acc = Complex64::new(0.0, 0.0);
                for i in 0..m {
                    acc += us[(i, k)].conj() * cis(-(i as f64) * f_theta);
                }
                captured += acc.norm_sqr();
            }
            1.0 / (norm - captured).max(norm * FLOOR_REL)
        })
        .collect();
    let spectrum = Spectrum1D::new(values, theta_axis);
    let diag = eigen_diagnostics(&eig, n_sources);
    let estimates = spectrum
        .top_peaks(n_sources)
        .into_iter()
        .map(|k| {
            let mut diagnostics = diag.clone();
            diagnostics.insert("spectrum_value".into(), json_f64(spectrum.values[k]));
            Estimate {
                theta_deg: theta_axis[k].to_degrees(),
                r_m: None,
                amplitude_re: f64::NAN,
                amplitude_im: f64::NAN,
                method: Method::MusicRows,
                diagnostics,
            }
        })
        .collect();
    Ok((spectrum, estimates))
}
