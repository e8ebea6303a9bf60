//! Range–angle estimators over a (θ, r) grid.
//!
//! Every grid evaluation splits the joint steering vector as
//! `a(θ, r) = (d(r) ⊙ g(θ)) ⊗ a_r(θ)` with `d_n = e^{j2πn·2rΔf/c}` and
//! `g_n = e^{-j2πn fθ}`, so quadratic forms `aᴴ Q a` are contracted over the
//! receive index once per angle and cost `O(N²)` per range cell.

mod anm;
mod cumulant;
mod grid;
mod music;
mod omp;

pub use anm::{anm_denoise, default_tau, subspace_from_denoised, AnmOptions, DenoisedStack};
pub use cumulant::{build_c4, CumulantMatrix};
pub use grid::{GridSpec, Spectrum1D, Spectrum2D};
pub use music::{music_2d, music_c4, music_rows, MusicInput};
pub use omp::{omp, OmpResult};

use crate::error::{Error, Result};
use crate::model::{joint_steering, RadarConfig};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Estimator selector, spelled as on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[serde(rename = "music2d")]
    Music2d,
    MusicRows,
    MusicC4,
    Omp,
    AnmMusic,
    AnmOmp,
}

impl Method {
    pub const ALL: [Method; 6] =
        [Method::Music2d, Method::MusicRows, Method::MusicC4, Method::Omp, Method::AnmMusic, Method::AnmOmp];

    pub fn name(self) -> &'static str {
        match self {
            Method::Music2d => "music2d",
            Method::MusicRows => "music_rows",
            Method::MusicC4 => "music_c4",
            Method::Omp => "omp",
            Method::AnmMusic => "anm_music",
            Method::AnmOmp => "anm_omp",
        }
    }

    /// Whether the method estimates range (row-MUSIC is angle only).
    pub fn estimates_range(self) -> bool {
        self != Method::MusicRows
    }

    pub fn uses_anm(self) -> bool {
        matches!(self, Method::AnmMusic | Method::AnmOmp)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Method::ALL.iter().map(|m| m.name()).collect();
                Error::Config(format!("unknown method {s:?}; expected one of {}", names.join(", ")))
            })
    }
}

/// One located target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub theta_deg: f64,
    /// `None` for angle-only methods.
    pub r_m: Option<f64>,
    /// NaN when the method yields no amplitude.
    #[serde(with = "crate::complex_serde::nonfinite")]
    pub amplitude_re: f64,
    #[serde(with = "crate::complex_serde::nonfinite")]
    pub amplitude_im: f64,
    pub method: Method,
    #[serde(default)]
    pub diagnostics: serde_json::Map<String, serde_json::Value>,
}

impl Estimate {
    pub fn theta_rad(&self) -> f64 {
        self.theta_deg.to_radians()
    }
}

/// Knobs shared by the dispatcher.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorOptions {
    /// ANM data-fidelity radius; `None` picks [`default_tau`].
    pub tau: Option<f64>,
    /// Known white-noise variance, used for the default τ.
    pub sigma0_sq: f64,
    pub anm: AnmOptions,
}

impl Default for EstimatorOptions {
    fn default() -> Self {
        Self { tau: None, sigma0_sq: 0.0, anm: AnmOptions::default() }
    }
}

/// Runs `method` on the `MN × L` stack `x`. `n_targets` is the number of
/// sources to locate; for row-MUSIC pass the number of distinct directions.
pub fn run_method(
    method: Method,
    cfg: &RadarConfig,
    x: &DMatrix<Complex64>,
    grid: &GridSpec,
    n_targets: usize,
    opts: &EstimatorOptions,
) -> Result<Vec<Estimate>> {
    match method {
        Method::Music2d => Ok(music_2d(cfg, MusicInput::Stack(x), grid, n_targets)?.1),
        Method::MusicRows => music_rows(cfg, x, &grid.theta_axis, n_targets).map(|(_, e)| e),
        Method::MusicC4 => {
            let c4 = build_c4(x)?;
            let (_, mut est) = music_c4(cfg, &c4, grid, n_targets)?;
            fill_amplitudes(cfg, x, &mut est);
            Ok(est)
        }
        Method::Omp => Ok(omp(cfg, x, grid, n_targets)?.estimates),
        Method::AnmMusic | Method::AnmOmp => {
            let tau = opts.tau.unwrap_or_else(|| default_tau(x, opts.sigma0_sq));
            let d = anm_denoise(x, cfg.n_rx, cfg.n_tx, tau, &opts.anm)?;
            let mut est = if method == Method::AnmMusic {
                subspace_from_denoised(cfg, &d, grid, n_targets)?
            } else {
                omp(cfg, &d.x_hat, grid, n_targets)?.estimates
            };
            for e in &mut est {
                e.method = method;
                e.diagnostics.insert("anm_converged".into(), d.converged.into());
                e.diagnostics.insert("anm_iterations".into(), d.iterations.into());
                e.diagnostics.insert("anm_min_eig".into(), json_f64(d.min_eigenvalue));
                e.diagnostics.insert("tau".into(), json_f64(tau));
            }
            Ok(est)
        }
    }
}

/// JSON number, or a string for non-finite values.
pub fn json_f64(v: f64) -> serde_json::Value {
    serde_json::Number::from_f64(v)
        .map(serde_json::Value::Number)
        .unwrap_or_else(|| serde_json::Value::String(v.to_string()))
}

/// Amplitudes β̂ by least squares of the pulse-averaged snapshot on the
/// steering vectors at the estimated positions. Falls back to per-target
/// matched filtering when the positions coincide.
pub(crate) fn fill_amplitudes(cfg: &RadarConfig, x: &DMatrix<Complex64>, est: &mut [Estimate]) {
    if est.is_empty() || x.ncols() == 0 {
        return;
    }
    let mean: DVector<Complex64> = x.column_mean();
    let steering: Vec<DVector<Complex64>> = est
        .iter()
        .map(|e| joint_steering(cfg, e.theta_rad(), e.r_m.unwrap_or(0.0)))
        .collect();
    let a = DMatrix::from_columns(&steering);
    let b = DMatrix::from_column_slice(mean.len(), 1, mean.as_slice());
    let coeffs: Vec<Complex64> = match crate::linalg::least_squares(&a, &b) {
        Ok(sol) => sol.column(0).iter().copied().collect(),
        Err(_) => steering
            .iter()
            .map(|s| s.dotc(&mean) / Complex64::new(s.len() as f64, 0.0))
            .collect(),
    };
    for (e, c) in est.iter_mut().zip(coeffs) {
        e.amplitude_re = c.re;
        e.amplitude_im = c.im;
    }
}
