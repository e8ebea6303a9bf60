use crate::complex_serde::nonfinite;
use crate::error::{Error, Result};
use crate::estimators::{AnmOptions, GridSpec, Method};
use crate::model::{OffsetModel, RadarConfig, Target};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Target in scenario units: degrees and meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSpec {
    pub theta_deg: f64,
    pub r_m: f64,
    #[serde(default = "one")]
    pub alpha_re: f64,
    #[serde(default)]
    pub alpha_im: f64,
}

fn one() -> f64 {
    1.0
}

impl TargetSpec {
    pub fn new(theta_deg: f64, r_m: f64) -> Self {
        Self { theta_deg, r_m, alpha_re: 1.0, alpha_im: 0.0 }
    }

    pub fn to_target(&self) -> Target {
        Target::new(self.theta_deg.to_radians(), self.r_m, Complex64::new(self.alpha_re, self.alpha_im))
    }
}

/// Offset standard deviations in Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OffsetSpec {
    pub sigma_t: f64,
    pub sigma_r: f64,
}

impl Default for OffsetSpec {
    fn default() -> Self {
        Self { sigma_t: 500.0, sigma_r: 500.0 }
    }
}

impl OffsetSpec {
    pub fn none() -> Self {
        Self { sigma_t: 0.0, sigma_r: 0.0 }
    }

    pub fn with_seed(&self, seed: u64) -> OffsetModel {
        OffsetModel::new(self.sigma_t, self.sigma_r, seed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    None,
    /// σ_t / Δf
    SigmaTOverDf,
    /// σ_r / Δf
    SigmaROverDf,
    SnrDb,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::None => "none",
            SweepAxis::SigmaTOverDf => "sigma_t_over_df",
            SweepAxis::SigmaROverDf => "sigma_r_over_df",
            SweepAxis::SnrDb => "snr_db",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub axis: SweepAxis,
    #[serde(default)]
    pub values: Vec<f64>,
}

impl Default for Sweep {
    fn default() -> Self {
        Self { axis: SweepAxis::None, values: Vec::new() }
    }
}

/// Search grid: the full default grid, or its nodes within a window around
/// the targets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum GridMode {
    Full,
    Window { theta_half_deg: f64, r_half_m: f64 },
}

/// A complete experiment description. Every field has a default; the
/// defaults are the single-target reference scene (4×4 array, 10 GHz,
/// Δf = 10 kHz, θ = 30°, r = 6000 m, σ_t = σ_r = 500 Hz, SNR 20 dB, L = 200).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Scenario {
    pub radar: RadarConfig,
    pub targets: Vec<TargetSpec>,
    pub offsets: OffsetSpec,
    /// White-noise SNR in dB; `null` or `"inf"` means no white noise.
    #[serde(with = "nonfinite::option")]
    pub snr_db: Option<f64>,
    pub n_pulses: usize,
    pub n_trials: usize,
    /// Trial cap for the ANM-based estimators.
    pub anm_trials: usize,
    pub seed: u64,
    pub estimators: Vec<Method>,
    pub sweep: Sweep,
    pub grid: GridMode,
    pub anm: AnmOptions,
    /// ANM fidelity radius; `null` uses the expected white-noise energy.
    pub tau: Option<f64>,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            radar: RadarConfig::table1(),
            targets: vec![TargetSpec::new(30.0, 6000.0)],
            offsets: OffsetSpec::default(),
            snr_db: Some(20.0),
            n_pulses: 200,
            n_trials: 200,
            anm_trials: 50,
            seed: 0,
            estimators: vec![Method::Music2d],
            sweep: Sweep::default(),
            grid: GridMode::Full,
            anm: AnmOptions::default(),
            tau: None,
        }
    }
}

/// Second target of the dual-target scenes: same direction, another range cell.
pub const DUAL_SECOND_RANGE_M: f64 = 9000.0;

impl Scenario {
    pub fn table1() -> Self {
        Self::default()
    }

    /// Two targets at θ = 30° and ranges 6000 m and 9000 m.
    pub fn dual_target() -> Self {
        Self {
            targets: vec![TargetSpec::new(30.0, 6000.0), TargetSpec::new(30.0, DUAL_SECOND_RANGE_M)],
            ..Self::default()
        }
    }

    /// `+∞` when there is no white noise.
    pub fn snr(&self) -> f64 {
        self.snr_db.unwrap_or(f64::INFINITY)
    }

    pub fn target_list(&self) -> Vec<Target> {
        self.targets.iter().map(TargetSpec::to_target).collect()
    }

    /// Number of distinct directions, the source count for row-MUSIC.
    pub fn distinct_directions(&self) -> usize {
        let mut thetas: Vec<f64> = self.targets.iter().map(|t| t.theta_deg).collect();
        thetas.sort_by(f64::total_cmp);
        thetas.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        thetas.len()
    }

    pub fn validate(&self) -> Result<()> {
        self.radar.validate()?;
        if self.targets.is_empty() {
            return Err(Error::domain("scenario needs at least one target"));
        }
        for t in self.target_list() {
            t.validate(&self.radar)?;
        }
        self.offsets.with_seed(0).validate()?;
        if let Some(s) = self.snr_db {
            if s.is_nan() || s == f64::NEG_INFINITY {
                return Err(Error::domain("snr_db must be a number, \"inf\" or null"));
            }
        }
        if self.n_pulses == 0 || self.n_trials == 0 {
            return Err(Error::domain("n_pulses and n_trials must be positive"));
        }
        if self.estimators.is_empty() {
            return Err(Error::domain("no estimators selected"));
        }
        if self.sweep.axis != SweepAxis::None && self.sweep.values.is_empty() {
            return Err(Error::domain(format!("sweep over {} has no values", self.sweep.axis.name())));
        }
        if let GridMode::Window { theta_half_deg, r_half_m } = self.grid {
            if !(theta_half_deg > 0.0 && r_half_m > 0.0) {
                return Err(Error::domain("grid window half-widths must be positive"));
            }
        }
        if let Some(tau) = self.tau {
            if !(tau > 0.0) {
                return Err(Error::domain("tau must be positive"));
            }
        }
        Ok(())
    }

    /// Copy with the sweep axis set to `value`.
    pub fn at_sweep_value(&self, value: f64) -> Self {
        let mut s = self.clone();
        match self.sweep.axis {
            SweepAxis::None => {}
            SweepAxis::SigmaTOverDf => s.offsets.sigma_t = value * self.radar.delta_f,
            SweepAxis::SigmaROverDf => s.offsets.sigma_r = value * self.radar.delta_f,
            SweepAxis::SnrDb => s.snr_db = Some(value),
        }
        s
    }

    pub fn grid_spec(&self) -> GridSpec {
        match self.grid {
            GridMode::Full => GridSpec::default_for(&self.radar),
            GridMode::Window { theta_half_deg, r_half_m } => {
                let (mut t_lo, mut t_hi, mut r_lo, mut r_hi) =
                    (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
                for t in &self.targets {
                    t_lo = t_lo.min(t.theta_deg);
                    t_hi = t_hi.max(t.theta_deg);
                    r_lo = r_lo.min(t.r_m);
                    r_hi = r_hi.max(t.r_m);
                }
                GridSpec::default_window(
                    &self.radar,
                    0.5 * (t_lo + t_hi),
                    0.5 * (t_hi - t_lo) + theta_half_deg,
                    0.5 * (r_lo + r_hi),
                    0.5 * (r_hi - r_lo) + r_half_m,
                )
            }
        }
    }
}
