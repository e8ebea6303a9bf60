//! Analytic covariances of the equalized offset noises, their structure
//! checks, and equalized SNR (analytic and Monte-Carlo).
//!
//! Entry layout follows the vectorization in [`crate::model`]: row
//! `n*M + m`, column `q*M + p`.

use crate::error::{Error, Result};
use crate::linalg::{hermitian_deviation, hermitian_eigen};
use crate::model::{
    cis, i1_table, matched_output_approx, matched_output_exact, OffsetModel, PulseDraw,
    RadarConfig, Target,
};
use crate::quadrature::QuadOptions;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const J: Complex64 = Complex64::new(0.0, 1.0);

/// `C_0 = σ0² I`, `C_t`, diagonal `C_r`, and the sums used downstream.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceModel {
    pub n_rx: usize,
    pub n_tx: usize,
    pub sigma0_sq: f64,
    pub c0: DMatrix<Complex64>,
    pub ct: DMatrix<Complex64>,
    pub cr: DMatrix<Complex64>,
    /// `C_0 + C_t + C_r`
    pub c_total: DMatrix<Complex64>,
    /// `C_0 + C_r`
    pub c_tilde: DMatrix<Complex64>,
}

/// Per-scene constants shared by the covariance entries and their derivatives.
struct Ingredients {
    m: usize,
    n: usize,
    /// `Σ_i I_{1,i,n} I*_{1,i,q}` as an N×N matrix `G`.
    gram: DMatrix<Complex64>,
    /// `h_n = (2r/c) T_p + Σ_i e^{-j2π(i-n)fθ} I_{1,i,n}`.
    h: DVector<Complex64>,
    /// `∂h_n/∂θ`.
    dh_dtheta: DVector<Complex64>,
    /// `2 T_p / c`, the constant `∂h_n/∂r`.
    dh_dr: f64,
    f_theta: f64,
    df_theta: f64,
    range_cycles: f64,
    beta_sq: f64,
    tp: f64,
}

impl Ingredients {
    fn new(cfg: &RadarConfig, target: &Target) -> Self {
        let (m, n) = (cfg.n_rx, cfg.n_tx);
        let tp = cfg.pulse_duration();
        let i1 = i1_table(cfg);
        let gram = i1.adjoint() * &i1;
        let gram = DMatrix::from_fn(n, n, |a, b| gram[(b, a)]);
        let f_theta = cfg.spatial_frequency(target.theta);
        let df_theta = cfg.spatial_frequency_derivative(target.theta);
        let round_trip = 2.0 * target.r / cfg.c;
        let h = DVector::from_fn(n, |col, _| {
            let mut acc = Complex64::new(round_trip * tp, 0.0);
            for i in 0..n {
                acc += cis(-(i as f64 - col as f64) * f_theta) * i1[(i, col)];
            }
            acc
        });
        let dh_dtheta = DVector::from_fn(n, |col, _| {
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..n {
                let k = i as f64 - col as f64;
                acc += -J * 2.0 * PI * k * df_theta * cis(-k * f_theta) * i1[(i, col)];
            }
            acc
        });
        Self {
            m,
            n,
            gram,
            h,
            dh_dtheta,
            dh_dr: 2.0 * tp / cfg.c,
            f_theta,
            df_theta,
            range_cycles: cfg.delta_f * round_trip,
            beta_sq: target.beta(cfg).norm_sqr(),
            tp,
        }
    }

    /// `4π²|β|²σ²/T_p²`.
    fn gain(&self, sigma: f64) -> f64 {
        4.0 * PI * PI * self.beta_sq * sigma * sigma / (self.tp * self.tp)
    }

    fn ct_with(&self, sigma_t: f64, factor: impl Fn(usize, usize, usize, usize) -> Complex64) -> DMatrix<Complex64> {
        let (m, n) = (self.m, self.n);
        let k = self.gain(sigma_t);
        let mut ct = DMatrix::zeros(m * n, m * n);
        if k == 0.0 {
            return ct;
        }
        for nn in 0..n {
            for q in 0..n {
                let g = self.gram[(nn, q)] * k;
                for mm in 0..m {
                    for p in 0..m {
                        let phase = (nn as f64 - q as f64) * self.range_cycles
                            - (mm as f64 - p as f64) * self.f_theta;
                        ct[(nn * m + mm, q * m + p)] = g * cis(phase) * factor(nn, mm, q, p);
                    }
                }
            }
        }
        ct
    }

    fn ct(&self, sigma_t: f64) -> DMatrix<Complex64> {
        self.ct_with(sigma_t, |_, _, _, _| Complex64::new(1.0, 0.0))
    }

    fn cr_diag(&self, sigma_r: f64, value: impl Fn(usize) -> f64) -> DMatrix<Complex64> {
        let (m, n) = (self.m, self.n);
        let k = self.gain(sigma_r);
        DMatrix::from_fn(m * n, m * n, |row, col| {
            if row == col {
                Complex64::new(k * value(row / m), 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    fn cr(&self, sigma_r: f64) -> DMatrix<Complex64> {
        self.cr_diag(sigma_r, |n| self.h[n].norm_sqr())
    }
}

/// Assembles `C_0`, `C_t`, `C_r` for one target. `sigma0_sq` is the white
/// noise variance (0 when there is none).
pub fn covariance_model(
    cfg: &RadarConfig,
    target: &Target,
    offsets: &OffsetModel,
    sigma0_sq: f64,
) -> Result<CovarianceModel> {
    cfg.validate()?;
    target.validate(cfg)?;
    offsets.validate()?;
    if !(sigma0_sq >= 0.0 && sigma0_sq.is_finite()) {
        return Err(Error::domain("white noise variance must be finite and non-negative"));
    }
    let ing = Ingredients::new(cfg, target);
    let dim = cfg.dim();
    let c0 = DMatrix::from_diagonal_element(dim, dim, Complex64::new(sigma0_sq, 0.0));
    let ct = ing.ct(offsets.sigma_t);
    let cr = ing.cr(offsets.sigma_r);
    let c_tilde = &c0 + &cr;
    let c_total = &c_tilde + &ct;
    Ok(CovarianceModel { n_rx: cfg.n_rx, n_tx: cfg.n_tx, sigma0_sq, c0, ct, cr, c_total, c_tilde })
}

/// Analytic `∂C_t`, `∂C_r` with respect to range and angle.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceDerivatives {
    pub dct_dr: DMatrix<Complex64>,
    pub dcr_dr: DMatrix<Complex64>,
    pub dct_dtheta: DMatrix<Complex64>,
    pub dcr_dtheta: DMatrix<Complex64>,
}

pub fn covariance_derivatives(
    cfg: &RadarConfig,
    target: &Target,
    offsets: &OffsetModel,
) -> Result<CovarianceDerivatives> {
    cfg.validate()?;
    target.validate(cfg)?;
    offsets.validate()?;
    let ing = Ingredients::new(cfg, target);
    let dphase_dr = 2.0 * cfg.delta_f / cfg.c;
    let dct_dr = ing.ct_with(offsets.sigma_t, |n, _, q, _| {
        J * 2.0 * PI * (n as f64 - q as f64) * dphase_dr
    });
    let dct_dtheta = ing.ct_with(offsets.sigma_t, |_, m, _, p| {
        -J * 2.0 * PI * (m as f64 - p as f64) * ing.df_theta
    });
    let dcr_dr = ing.cr_diag(offsets.sigma_r, |n| 2.0 * (ing.h[n].conj() * ing.dh_dr).re);
    let dcr_dtheta = ing.cr_diag(offsets.sigma_r, |n| 2.0 * (ing.h[n].conj() * ing.dh_dtheta[n]).re);
    Ok(CovarianceDerivatives { dct_dr, dcr_dr, dct_dtheta, dcr_dtheta })
}

/// Which offsets an equalized-SNR figure refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OffsetScenario {
    TxOnly,
    RxOnly,
    Both,
    None,
}

impl OffsetScenario {
    pub fn of(offsets: &OffsetModel) -> Self {
        match (offsets.sigma_t > 0.0, offsets.sigma_r > 0.0) {
            (true, true) => Self::Both,
            (true, false) => Self::TxOnly,
            (false, true) => Self::RxOnly,
            (false, false) => Self::None,
        }
    }
}

/// How the equalized SNR is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SnrMode {
    /// Traces of the analytic covariances only.
    Model,
    /// Also average `‖Y − Y_0‖²` over quadrature-evaluated pulses, where
    /// `Y_0` is the offset-free output of the same model.
    Empirical,
    /// Also average `‖N_t + N_r‖²` over first-order pulses.
    EmpiricalApprox,
}

/// Equalized SNR in dB; `+∞` (serialized as `"inf"`) when no offsets are present.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EqualizedSnrReport {
    pub scenario: OffsetScenario,
    pub sigma_over_df: f64,
    pub r_over_rmax: f64,
    #[serde(with = "crate::complex_serde::nonfinite")]
    pub snr_model_db: f64,
    #[serde(with = "crate::complex_serde::nonfinite::option")]
    pub snr_empirical_db: Option<f64>,
    pub n_pulses: usize,
}

/// `10 log10(‖β a‖² / (tr C_t + tr C_r))`.
pub fn equalized_snr_model(cfg: &RadarConfig, target: &Target, offsets: &OffsetModel) -> Result<f64> {
    cfg.validate()?;
    target.validate(cfg)?;
    offsets.validate()?;
    let ing = Ingredients::new(cfg, target);
    let m = cfg.n_rx as f64;
    let gram_trace: f64 = (0..cfg.n_tx).map(|n| ing.gram[(n, n)].re).sum();
    let h_energy: f64 = ing.h.iter().map(|z| z.norm_sqr()).sum();
    let noise = m * (ing.gain(offsets.sigma_t) * gram_trace + ing.gain(offsets.sigma_r) * h_energy);
    let signal = ing.beta_sq * cfg.dim() as f64;
    Ok(ratio_db(signal, noise))
}

fn ratio_db(signal: f64, noise: f64) -> f64 {
    if noise == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (signal / noise).log10()
    }
}

pub fn equalized_snr(
    cfg: &RadarConfig,
    target: &Target,
    offsets: &OffsetModel,
    mode: SnrMode,
    n_pulses: usize,
    quad: QuadOptions,
) -> Result<EqualizedSnrReport> {
    let snr_model_db = equalized_snr_model(cfg, target, offsets)?;
    let snr_empirical_db = match mode {
        SnrMode::Model => None,
        _ if n_pulses == 0 => return Err(Error::domain("empirical equalized SNR needs at least one pulse")),
        SnrMode::Empirical => {
            let reference = matched_output_exact(cfg, target, &PulseDraw::zeros(cfg), quad)?;
            let mut noise = 0.0;
            for p in 0..n_pulses as u64 {
                let draw = PulseDraw::sample(cfg, offsets, p);
                let y = matched_output_exact(cfg, target, &draw, quad)?;
                noise += (&y.y - &reference.y).norm_squared();
            }
            Some(ratio_db(reference.y.norm_squared(), noise / n_pulses as f64))
        }
        SnrMode::EmpiricalApprox => {
            let mut noise = 0.0;
            let mut signal = 0.0;
            for p in 0..n_pulses as u64 {
                let draw = PulseDraw::sample(cfg, offsets, p);
                let out = matched_output_approx(cfg, target, &draw);
                noise += (&out.n_t + &out.n_r).norm_squared();
                signal = out.clean.norm_squared();
            }
            Some(ratio_db(signal, noise / n_pulses as f64))
        }
    };
    Ok(EqualizedSnrReport {
        scenario: OffsetScenario::of(offsets),
        sigma_over_df: offsets.sigma_t.max(offsets.sigma_r) / cfg.delta_f,
        r_over_rmax: target.r / cfg.max_range(),
        snr_model_db,
        snr_empirical_db,
        n_pulses: if mode == SnrMode::Model { 0 } else { n_pulses },
    })
}

/// Relative tolerance of the rank-1 and singularity checks.
pub const RANK_TOL: f64 = 1e-10;
/// Relative tolerance of the elementwise equality checks.
pub const EQUALITY_TOL: f64 = 1e-12;

/// Structure flags of a [`CovarianceModel`] with the worst deviation seen by
/// each check. `ct_vacuous` marks `C_t = 0`, in which case the `C_t` flags
/// hold trivially.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StructureReport {
    pub ct_vacuous: bool,
    pub ct_block_toeplitz: bool,
    pub ct_toeplitz_deviation: f64,
    pub ct_blocks_rank1: bool,
    pub ct_worst_block_ratio: f64,
    pub ct_singular: bool,
    pub ct_min_over_max_eig: f64,
    pub cr_diagonal: bool,
    pub cr_offdiag_max: f64,
    pub all_hermitian: bool,
    pub hermitian_deviation: f64,
}

pub fn structure_report(cov: &CovarianceModel) -> Result<StructureReport> {
    let (m, n) = (cov.n_rx, cov.n_tx);
    let ct = &cov.ct;
    let scale = ct.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let ct_vacuous = scale == 0.0;

    // Entries of each M×M block depend only on m − p.
    let mut toeplitz_dev = 0.0f64;
    for nn in 0..n {
        for q in 0..n {
            for mm in 1..m {
                for p in 1..m {
                    let a = ct[(nn * m + mm, q * m + p)];
                    let b = ct[(nn * m + mm - 1, q * m + p - 1)];
                    toeplitz_dev = toeplitz_dev.max((a - b).norm());
                }
            }
        }
    }
    let toeplitz_rel = if ct_vacuous { 0.0 } else { toeplitz_dev / scale };

    let mut worst_ratio = 0.0f64;
    if !ct_vacuous {
        for nn in 0..n {
            for q in 0..n {
                let block = ct.view((nn * m, q * m), (m, m)).clone_owned();
                let sv = block.singular_values();
                let mut s: Vec<f64> = sv.iter().copied().collect();
                s.sort_by(|a, b| b.total_cmp(a));
                if s[0] > RANK_TOL * scale && s.len() > 1 {
                    worst_ratio = worst_ratio.max(s[1] / s[0]);
                }
            }
        }
    }

    let min_over_max = if ct_vacuous {
        0.0
    } else {
        let eig = hermitian_eigen(ct)?;
        let max = eig.values[0];
        let min = eig.values[eig.values.len() - 1];
        min.abs() / max
    };

    let mut cr_off = 0.0f64;
    for i in 0..cov.cr.nrows() {
        for j in 0..cov.cr.ncols() {
            if i != j {
                cr_off = cr_off.max(cov.cr[(i, j)].norm());
            }
        }
    }

    let mut herm = 0.0f64;
    for c in [&cov.c0, &cov.ct, &cov.cr, &cov.c_total, &cov.c_tilde] {
        let s = c.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if s > 0.0 {
            herm = herm.max(hermitian_deviation(c) / s);
        }
    }

    Ok(StructureReport {
        ct_vacuous,
        ct_block_toeplitz: toeplitz_rel < EQUALITY_TOL,
        ct_toeplitz_deviation: toeplitz_rel,
        ct_blocks_rank1: worst_ratio < RANK_TOL,
        ct_worst_block_ratio: worst_ratio,
        ct_singular: ct_vacuous || min_over_max < RANK_TOL,
        ct_min_over_max_eig: min_over_max,
        cr_diagonal: cr_off == 0.0 && cov.cr.diagonal().iter().all(|z| z.im == 0.0 && z.re >= 0.0),
        cr_offdiag_max: cr_off,
        all_hermitian: herm < EQUALITY_TOL,
        hermitian_deviation: herm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SPEED_OF_LIGHT;
    use approx::assert_relative_eq;

    fn scene(delta_f: f64, r_frac: f64) -> (RadarConfig, Target) {
        let cfg = RadarConfig::table1().with_delta_f(delta_f);
        let t = Target::from_degrees(30.0, r_frac * cfg.max_range());
        (cfg, t)
    }

    #[test]
    fn zero_sigma_t_gives_zero_ct() {
        let (cfg, t) = scene(10e3, 0.4);
        let cov = covariance_model(&cfg, &t, &OffsetModel::new(0.0, 300.0, 0), 0.0).unwrap();
        assert!(cov.ct.iter().all(|z| *z == Complex64::new(0.0, 0.0)));
        let rep = structure_report(&cov).unwrap();
        assert!(rep.ct_vacuous && rep.cr_diagonal && rep.all_hermitian);
    }

    #[test]
    fn structure_with_both_offsets() {
        let (cfg, t) = scene(10e3, 0.4);
        let cov = covariance_model(&cfg, &t, &OffsetModel::new(400.0, 300.0, 0), 1e-9).unwrap();
        let rep = structure_report(&cov).unwrap();
        assert!(rep.ct_block_toeplitz, "{rep:?}");
        assert!(rep.ct_blocks_rank1, "{rep:?}");
        assert!(rep.ct_singular, "{rep:?}");
        assert!(rep.cr_diagonal && rep.all_hermitian, "{rep:?}");
    }

    #[test]
    fn model_snr_depends_only_on_ratios() {
        let o = |df: f64| OffsetModel::new(0.04 * df, 0.0, 0);
        let (c1, t1) = scene(1e3, 0.4);
        let (c2, t2) = scene(10e3, 0.4);
        let a = equalized_snr_model(&c1, &t1, &o(1e3)).unwrap();
        let b = equalized_snr_model(&c2, &t2, &o(10e3)).unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-12);
    }

    #[test]
    fn rx_table_value_at_two_percent() {
        // Closed form of the receive-offset noise power for a single receive
        // element, summed independently of the covariance assembly.
        let (cfg, t) = scene(10e3, 0.4);
        let sigma_t = 0.02; // σ_r T_p
        let rt = 2.0 * t.r / SPEED_OF_LIGHT * cfg.delta_f; // (2r/c)/T_p
        let fth = 0.25;
        let mut total = 0.0;
        for n in 0..4i32 {
            let mut h = Complex64::new(rt, 0.0);
            for i in 0..4i32 {
                let k = (i - n) as f64;
                let i1 = if i == n { Complex64::new(0.5, 0.0) } else { Complex64::new(0.0, 1.0 / (2.0 * PI * k)) };
                h += Complex64::from_polar(1.0, -2.0 * PI * k * fth) * i1;
            }
            total += 4.0 * PI * PI * sigma_t * sigma_t * h.norm_sqr();
        }
        let expected = 10.0 * (4.0 / total).log10();
        let got = equalized_snr_model(&cfg, &t, &OffsetModel::new(0.0, 200.0, 0)).unwrap();
        assert_relative_eq!(got, expected, max_relative = 1e-12);
    }

    #[test]
    fn no_offsets_is_infinite() {
        let (cfg, t) = scene(10e3, 0.4);
        let r = equalized_snr(&cfg, &t, &OffsetModel::none(), SnrMode::Model, 0, QuadOptions::default()).unwrap();
        assert_eq!(r.snr_model_db, f64::INFINITY);
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let (cfg, t) = scene(10e3, 0.4);
        let o = OffsetModel::new(300.0, 400.0, 0);
        let d = covariance_derivatives(&cfg, &t, &o).unwrap();
        let h = 1e-3;
        let plus = covariance_model(&cfg, &Target { r: t.r + h, ..t }, &o, 0.0).unwrap();
        let minus = covariance_model(&cfg, &Target { r: t.r - h, ..t }, &o, 0.0).unwrap();
        let fd = (&plus.ct + &plus.cr - &minus.ct - &minus.cr) / Complex64::new(2.0 * h, 0.0);
        let an = &d.dct_dr + &d.dcr_dr;
        assert!((&fd - &an).norm() / an.norm() < 1e-6);
    }
}
