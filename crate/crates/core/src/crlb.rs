//! Fisher information and diagonal CRLBs for range and angle under the
//! colored offset-noise covariance.
//!
//! `F(r,r) = L [ |β|² Re{∂_r aᴴ C⁻¹ ∂_r a} + ½ Re tr(C⁻¹ ∂_r C C⁻¹ ∂_r C) ]`
//! with `C = C_0 + C_t + C_r`; `F(θ,θ)` has the same form with
//! `C̃ = C_0 + C_r`. β is a known nuisance and its carrier phase is not
//! differentiated.

use crate::error::{Error, Result};
use crate::linalg::{hpd_inverse, trace_of_product};
use crate::model::{joint_steering, OffsetModel, RadarConfig, Target};
use crate::noise_stats::{covariance_derivatives, covariance_model};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Write;

const J: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FimReport {
    pub f_rr: f64,
    pub f_theta_theta: f64,
    /// m²
    pub crlb_r: f64,
    /// rad²
    pub crlb_theta: f64,
    pub n_pulses: usize,
    pub sigma0_sq: f64,
}

/// `∂a/∂r`: the transmit phase `n·2rΔf/c` is the only range dependence.
pub fn steering_derivative_r(cfg: &RadarConfig, theta: f64, r: f64) -> DVector<Complex64> {
    let a = joint_steering(cfg, theta, r);
    let k = 2.0 * PI * 2.0 * cfg.delta_f / cfg.c;
    DVector::from_fn(a.len(), |idx, _| {
        let n = (idx / cfg.n_rx) as f64;
        J * k * n * a[idx]
    })
}

/// `∂a/∂θ`: entry `(m, n)` carries phase `−(m + n) fθ`.
pub fn steering_derivative_theta(cfg: &RadarConfig, theta: f64, r: f64) -> DVector<Complex64> {
    let a = joint_steering(cfg, theta, r);
    let k = -2.0 * PI * cfg.spatial_frequency_derivative(theta);
    DVector::from_fn(a.len(), |idx, _| {
        let (n, m) = ((idx / cfg.n_rx) as f64, (idx % cfg.n_rx) as f64);
        J * k * (n + m) * a[idx]
    })
}

fn information(
    beta_sq: f64,
    da: &DVector<Complex64>,
    c: &DMatrix<Complex64>,
    dc: &DMatrix<Complex64>,
    what: &str,
) -> Result<f64> {
    let inv = hpd_inverse(c).map_err(|e| Error::numeric(format!("{what}: {e}")))?;
    let mean_term = beta_sq * da.dotc(&(&inv * da)).re;
    let g = &inv * dc;
    let cov_term = 0.5 * trace_of_product(&g, &g).re;
    Ok(mean_term + cov_term)
}

/// Fisher information over `n_pulses` independent pulses with white-noise
/// variance `sigma0_sq`.
pub fn fim(
    cfg: &RadarConfig,
    target: &Target,
    offsets: &OffsetModel,
    sigma0_sq: f64,
    n_pulses: usize,
) -> Result<FimReport> {
    if n_pulses == 0 {
        return Err(Error::domain("need at least one pulse"));
    }
    let cov = covariance_model(cfg, target, offsets, sigma0_sq)?;
    let der = covariance_derivatives(cfg, target, offsets)?;
    let beta_sq = target.beta(cfg).norm_sqr();
    let dar = steering_derivative_r(cfg, target.theta, target.r);
    let dat = steering_derivative_theta(cfg, target.theta, target.r);
    let dc_r = &der.dct_dr + &der.dcr_dr;
    let l = n_pulses as f64;
    let f_rr = l * information(beta_sq, &dar, &cov.c_total, &dc_r, "C = C0 + Ct + Cr")?;
    let f_tt = l * information(beta_sq, &dat, &cov.c_tilde, &der.dcr_dtheta, "C~ = C0 + Cr")?;
    if !(f_rr > 0.0 && f_tt > 0.0) {
        return Err(Error::numeric(format!("non-positive information: F(r,r) = {f_rr:e}, F(θ,θ) = {f_tt:e}")));
    }
    Ok(FimReport {
        f_rr,
        f_theta_theta: f_tt,
        crlb_r: 1.0 / f_rr,
        crlb_theta: 1.0 / f_tt,
        n_pulses,
        sigma0_sq,
    })
}

/// White-noise-only closed form `4π²|β|²(2Δf/c)² M Σ_n n² / σ0²` (per pulse).
pub fn white_noise_f_rr(cfg: &RadarConfig, target: &Target, sigma0_sq: f64) -> f64 {
    let k = 2.0 * cfg.delta_f / cfg.c;
    let sum_sq: f64 = (0..cfg.n_tx).map(|n| (n * n) as f64).sum();
    4.0 * PI * PI * target.beta(cfg).norm_sqr() * k * k * cfg.n_rx as f64 * sum_sq / sigma0_sq
}

/// Which input a CRLB curve varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrlbSweep {
    /// σ_t in Hz
    SigmaT,
    /// σ_r in Hz
    SigmaR,
    /// white-noise SNR in dB
    Snr,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrlbRow {
    pub sweep_value: f64,
    pub crlb_r_m2: f64,
    pub crlb_theta_rad2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrlbCurve {
    pub sweep: CrlbSweep,
    pub rows: Vec<CrlbRow>,
    /// `crlb_r` never decreases along the sweep.
    pub r_non_decreasing: bool,
    /// `crlb_theta` never decreases along the sweep.
    pub theta_non_decreasing: bool,
}

/// Evaluates [`fim`] at every sweep value. `sigma0_sq` is the white-noise
/// level for offset sweeps; SNR sweeps derive it from `|β|²`.
pub fn crlb_curve(
    cfg: &RadarConfig,
    target: &Target,
    offsets: &OffsetModel,
    sigma0_sq: f64,
    n_pulses: usize,
    sweep: CrlbSweep,
    values: &[f64],
) -> Result<CrlbCurve> {
    if values.is_empty() {
        return Err(Error::domain("empty sweep"));
    }
    let rows = values
        .par_iter()
        .map(|&v| {
            let (o, s0) = match sweep {
                CrlbSweep::SigmaT => (OffsetModel { sigma_t: v, ..*offsets }, sigma0_sq),
                CrlbSweep::SigmaR => (OffsetModel { sigma_r: v, ..*offsets }, sigma0_sq),
                CrlbSweep::Snr => (*offsets, target.beta(cfg).norm_sqr() / 10f64.powf(v / 10.0)),
            };
            fim(cfg, target, &o, s0, n_pulses).map(|f| CrlbRow {
                sweep_value: v,
                crlb_r_m2: f.crlb_r,
                crlb_theta_rad2: f.crlb_theta,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let non_decreasing = |get: fn(&CrlbRow) -> f64| rows.windows(2).all(|w| get(&w[1]) >= get(&w[0]));
    Ok(CrlbCurve {
        sweep,
        r_non_decreasing: non_decreasing(|r| r.crlb_r_m2),
        theta_non_decreasing: non_decreasing(|r| r.crlb_theta_rad2),
        rows,
    })
}

/// CSV with header `sweep_value,crlb_r_m2,crlb_theta_rad2`.
pub fn write_csv<W: Write>(curve: &CrlbCurve, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["sweep_value", "crlb_r_m2", "crlb_theta_rad2"])
        .map_err(|e| Error::numeric(format!("csv: {e}")))?;
    for row in &curve.rows {
        w.write_record([row.sweep_value.to_string(), row.crlb_r_m2.to_string(), row.crlb_theta_rad2.to_string()])
            .map_err(|e| Error::numeric(format!("csv: {e}")))?;
    }
    w.flush().map_err(|e| Error::numeric(format!("csv: {e}")))?;
    Ok(())
}
