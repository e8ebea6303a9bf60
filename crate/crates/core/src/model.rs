//! Signal model: radar geometry, steering vectors, matched-filter outputs and
//! the equalized offset-noise terms.
//!
//! Index conventions (0-based throughout): receive element `m < M` is the row
//! of `Y`, transmit element / matched-filter index `n < N` is the column, and
//! the vectorized form stacks columns, so entry `(m, n)` lands at `n*M + m`.
//! That is nalgebra's native column-major storage.

use crate::error::{Error, Result};
use crate::quadrature::{integrate, QuadOptions};
use crate::rng::pulse_rng;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

const J: Complex64 = Complex64::new(0.0, 1.0);

/// `e^{j 2π cycles}`.
#[inline]
pub(crate) fn cis(cycles: f64) -> Complex64 {
    let (s, c) = (2.0 * PI * cycles).sin_cos();
    Complex64::new(c, s)
}

/// Array geometry and waveform parameters. Pulse duration, element spacing
/// and unambiguous range are derived, never stored. Missing fields
/// deserialize to [`RadarConfig::table1`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RadarConfig {
    /// Transmit elements `N`.
    pub n_tx: usize,
    /// Receive elements `M`.
    pub n_rx: usize,
    /// Carrier frequency in Hz.
    pub f0: f64,
    /// Frequency increment between adjacent transmit elements, Hz.
    pub delta_f: f64,
    /// Total transmitted energy in joules.
    pub energy: f64,
    /// Propagation speed in m/s.
    pub c: f64,
}

impl Default for RadarConfig {
    fn default() -> Self {
        Self::table1()
    }
}

impl RadarConfig {
    /// 4×4 array at 10 GHz with a 10 kHz increment.
    pub fn table1() -> Self {
        Self { n_tx: 4, n_rx: 4, f0: 10e9, delta_f: 10e3, energy: 1.0, c: SPEED_OF_LIGHT }
    }

    pub fn with_delta_f(mut self, delta_f: f64) -> Self {
        self.delta_f = delta_f;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_tx == 0 || self.n_rx == 0 {
            return Err(Error::domain("array needs at least one transmit and one receive element"));
        }
        if !(self.f0 > 0.0 && self.f0.is_finite()) {
            return Err(Error::domain(format!("carrier frequency must be positive, got {}", self.f0)));
        }
        if !(self.delta_f > 0.0 && self.delta_f.is_finite()) {
            return Err(Error::domain(format!(
                "frequency increment must be positive, got {}",
                self.delta_f
            )));
        }
        if self.delta_f / self.f0 >= 1e-3 {
            return Err(Error::domain(format!(
                "frequency increment {} Hz is not small against the carrier {} Hz (ratio must be < 1e-3)",
                self.delta_f, self.f0
            )));
        }
        if !(self.energy > 0.0 && self.energy.is_finite()) {
            return Err(Error::domain("energy must be positive"));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::domain("propagation speed must be positive"));
        }
        Ok(())
    }

    /// `T_p = 1/Δf`, the shortest pulse keeping the waveforms orthogonal.
    pub fn pulse_duration(&self) -> f64 {
        1.0 / self.delta_f
    }

    /// Half-wavelength element spacing `c / (2 f0)`.
    pub fn spacing(&self) -> f64 {
        self.c / (2.0 * self.f0)
    }

    /// Unambiguous range `c / (2Δf)`.
    pub fn max_range(&self) -> f64 {
        self.c / (2.0 * self.delta_f)
    }

    /// Length `M N` of the vectorized matched-filter output.
    pub fn dim(&self) -> usize {
        self.n_tx * self.n_rx
    }

    /// Normalized spatial frequency `f0 d sinθ / c`.
    pub fn spatial_frequency(&self, theta: f64) -> f64 {
        self.f0 * self.spacing() * theta.sin() / self.c
    }

    /// `dfθ/dθ`.
    pub fn spatial_frequency_derivative(&self, theta: f64) -> f64 {
        self.f0 * self.spacing() * theta.cos() / self.c
    }

    /// Per-element transmit phase increment `φ = 2rΔf/c − fθ` in cycles.
    pub fn range_phase(&self, theta: f64, r: f64) -> f64 {
        2.0 * r * self.delta_f / self.c - self.spatial_frequency(theta)
    }

    /// `2 f0 r / c` reduced modulo one cycle; the carrier phase carried by β.
    pub fn carrier_cycles(&self, r: f64) -> f64 {
        (2.0 * self.f0 * r / self.c).rem_euclid(1.0)
    }

    pub fn check_angle_range(&self, theta: f64, r: f64) -> Result<()> {
        if !(theta.is_finite() && (-FRAC_PI_2 - 1e-12..=FRAC_PI_2 + 1e-12).contains(&theta)) {
            return Err(Error::domain(format!("angle {theta} rad outside [-π/2, π/2]")));
        }
        if !(r.is_finite() && r >= 0.0 && r < self.max_range()) {
            return Err(Error::domain(format!(
                "range {r} m outside [0, {}) m",
                self.max_range()
            )));
        }
        Ok(())
    }
}

/// Point target: direction, range and complex reflection coefficient α.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Target {
    pub theta: f64,
    pub r: f64,
    pub alpha: Complex64,
}

impl Target {
    pub fn new(theta: f64, r: f64, alpha: Complex64) -> Self {
        Self { theta, r, alpha }
    }

    pub fn from_degrees(theta_deg: f64, r: f64) -> Self {
        Self::new(theta_deg.to_radians(), r, Complex64::new(1.0, 0.0))
    }

    /// `β = α T_p √(E/N) e^{j4π f0 r / c}`.
    pub fn beta(&self, cfg: &RadarConfig) -> Complex64 {
        self.alpha
            * cfg.pulse_duration()
            * (cfg.energy / cfg.n_tx as f64).sqrt()
            * cis(cfg.carrier_cycles(self.r))
    }

    pub fn validate(&self, cfg: &RadarConfig) -> Result<()> {
        cfg.check_angle_range(self.theta, self.r)?;
        if !(self.alpha.re.is_finite() && self.alpha.im.is_finite()) {
            return Err(Error::domain("reflection coefficient must be finite"));
        }
        Ok(())
    }
}

/// Where the first-order offset model stands for a given offset spread.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OffsetValidity {
    /// max σ < 0.05 Δf
    Valid,
    /// between 0.05 Δf and 0.1 Δf
    Marginal,
    /// max σ > 0.1 Δf
    Invalid,
}

/// Zero-mean Gaussian carrier-frequency offsets, redrawn every pulse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OffsetModel {
    /// Transmit offset standard deviation σ_t in Hz.
    pub sigma_t: f64,
    /// Receive offset standard deviation σ_r in Hz.
    pub sigma_r: f64,
    #[serde(default)]
    pub seed: u64,
}

impl Default for OffsetModel {
    fn default() -> Self {
        Self { sigma_t: 500.0, sigma_r: 500.0, seed: 0 }
    }
}

impl OffsetModel {
    pub fn none() -> Self {
        Self { sigma_t: 0.0, sigma_r: 0.0, seed: 0 }
    }

    pub fn new(sigma_t: f64, sigma_r: f64, seed: u64) -> Self {
        Self { sigma_t, sigma_r, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_t >= 0.0 && self.sigma_t.is_finite())
            || !(self.sigma_r >= 0.0 && self.sigma_r.is_finite())
        {
            return Err(Error::domain("offset standard deviations must be finite and non-negative"));
        }
        Ok(())
    }

    pub fn validity(&self, cfg: &RadarConfig) -> OffsetValidity {
        let ratio = self.sigma_t.max(self.sigma_r) / cfg.delta_f;
        if ratio < 0.05 {
            OffsetValidity::Valid
        } else if ratio > 0.1 {
            OffsetValidity::Invalid
        } else {
            OffsetValidity::Marginal
        }
    }

    pub fn tx_only(&self) -> Self {
        Self { sigma_r: 0.0, ..*self }
    }

    pub fn rx_only(&self) -> Self {
        Self { sigma_t: 0.0, ..*self }
    }
}

/// Offsets realized for one pulse: `f_e_t[n]` per transmit element and
/// `f_e_r[(m, n)]` per receive element and down-conversion branch.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseDraw {
    pub f_e_t: DVector<f64>,
    pub f_e_r: DMatrix<f64>,
}

impl PulseDraw {
    pub fn zeros(cfg: &RadarConfig) -> Self {
        Self { f_e_t: DVector::zeros(cfg.n_tx), f_e_r: DMatrix::zeros(cfg.n_rx, cfg.n_tx) }
    }

    /// Draws from an existing generator. Always consumes `N + MN` normals so
    /// the stream layout does not depend on σ.
    pub fn sample_with<R: Rng + ?Sized>(cfg: &RadarConfig, offsets: &OffsetModel, rng: &mut R) -> Self {
        let f_e_t = DVector::from_fn(cfg.n_tx, |_, _| {
            offsets.sigma_t * rng.sample::<f64, _>(StandardNormal)
        });
        let f_e_r = DMatrix::from_fn(cfg.n_rx, cfg.n_tx, |_, _| {
            offsets.sigma_r * rng.sample::<f64, _>(StandardNormal)
        });
        Self { f_e_t, f_e_r }
    }

    /// Offsets of pulse `pulse_index` under `offsets.seed`.
    pub fn sample(cfg: &RadarConfig, offsets: &OffsetModel, pulse_index: u64) -> Self {
        Self::sample_with(cfg, offsets, &mut pulse_rng(offsets.seed, pulse_index))
    }
}

/// Matched-filter output `Y` (M×N).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalMatrix {
    #[serde(with = "crate::complex_serde::matrix")]
    pub y: DMatrix<Complex64>,
}

impl SignalMatrix {
    pub fn new(y: DMatrix<Complex64>) -> Self {
        Self { y }
    }

    pub fn n_rx(&self) -> usize {
        self.y.nrows()
    }

    pub fn n_tx(&self) -> usize {
        self.y.ncols()
    }

    /// Column-major vectorization, entry `(m, n)` at `n*M + m`.
    pub fn vectorize(&self) -> DVector<Complex64> {
        DVector::from_column_slice(self.y.as_slice())
    }

    pub fn from_vector(v: &DVector<Complex64>, n_rx: usize, n_tx: usize) -> Result<Self> {
        if v.len() != n_rx * n_tx {
            return Err(Error::domain(format!(
                "vector of length {} cannot be shaped {n_rx}x{n_tx}",
                v.len()
            )));
        }
        Ok(Self { y: DMatrix::from_column_slice(n_rx, n_tx, v.as_slice()) })
    }
}

/// Stacks pulses column-wise into the `MN × L` matrix `X`.
pub fn stack_pulses(pulses: &[SignalMatrix]) -> Result<DMatrix<Complex64>> {
    let first = pulses.first().ok_or_else(|| Error::domain("empty pulse list"))?;
    let dim = first.y.len();
    let mut x = DMatrix::zeros(dim, pulses.len());
    for (l, p) in pulses.iter().enumerate() {
        if p.y.shape() != first.y.shape() {
            return Err(Error::domain("pulses have inconsistent shapes"));
        }
        x.column_mut(l).copy_from_slice(p.y.as_slice());
    }
    Ok(x)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Steering {
    /// `a_r(θ)`, length M.
    pub rx: DVector<Complex64>,
    /// `a_t(θ, r)`, length N.
    pub tx: DVector<Complex64>,
    /// `a = a_t ⊗ a_r`, length MN.
    pub joint: DVector<Complex64>,
}

/// Receive, transmit and joint steering vectors for direction `theta`
/// (radians) and range `r` (meters).
pub fn steering_vectors(cfg: &RadarConfig, theta: f64, r: f64) -> Result<Steering> {
    cfg.validate()?;
    cfg.check_angle_range(theta, r)?;
    Ok(steering_unchecked(cfg, theta, r))
}

pub(crate) fn steering_unchecked(cfg: &RadarConfig, theta: f64, r: f64) -> Steering {
    let f_theta = cfg.spatial_frequency(theta);
    let phi = cfg.range_phase(theta, r);
    let rx = DVector::from_fn(cfg.n_rx, |m, _| cis(-(m as f64) * f_theta));
    let tx = DVector::from_fn(cfg.n_tx, |n, _| cis(n as f64 * phi));
    let joint = tx.kronecker(&rx);
    Steering { rx, tx, joint }
}

/// Joint steering vector `a(θ, r)` without domain checks.
pub fn joint_steering(cfg: &RadarConfig, theta: f64, r: f64) -> DVector<Complex64> {
    steering_unchecked(cfg, theta, r).joint
}

/// `I_{1,i,n} = ∫_0^{T_p} e^{-j2π(i-n)Δf t} t dt` in closed form.
pub fn i1_integral(cfg: &RadarConfig, i: usize, n: usize) -> Complex64 {
    let tp = cfg.pulse_duration();
    if i == n {
        Complex64::new(0.5 * tp * tp, 0.0)
    } else {
        let k = i as f64 - n as f64;
        J * (tp * tp / (2.0 * PI * k))
    }
}

/// Table of `I_{1,i,n}` indexed `[(i, n)]`.
pub fn i1_table(cfg: &RadarConfig) -> DMatrix<Complex64> {
    DMatrix::from_fn(cfg.n_tx, cfg.n_tx, |i, n| i1_integral(cfg, i, n))
}

/// Reference output: every `Y_{m,n}` is assembled from the per-transmitter
/// integrals `∫_0^{T_p} e^{-j2π(f_{t,i} - f_{r,m,n}) t} dt`, evaluated by
/// adaptive quadrature, times the full delay phase `e^{j2π f_{r,m,n} τ_{m,i}}`.
/// No Taylor expansion and no aperture approximation is applied.
pub fn matched_output_exact(
    cfg: &RadarConfig,
    target: &Target,
    draw: &PulseDraw,
    quad: QuadOptions,
) -> Result<SignalMatrix> {
    cfg.validate()?;
    target.validate(cfg)?;
    let (m_count, n_count) = (cfg.n_rx, cfg.n_tx);
    let tp = cfg.pulse_duration();
    let amp = target.alpha * (cfg.energy / n_count as f64).sqrt();
    let carrier = cfg.carrier_cycles(target.r);
    let f_theta = cfg.spatial_frequency(target.theta);
    let aperture = cfg.spacing() * target.theta.sin() / cfg.c;
    let round_trip = 2.0 * target.r / cfg.c;
    let quad = QuadOptions {
        abs_tol: if quad.abs_tol > 0.0 { quad.abs_tol / tp } else { quad.rel_tol },
        ..quad
    };

    let mut y = DMatrix::zeros(m_count, n_count);
    for n in 0..n_count {
        for m in 0..m_count {
            let fer = draw.f_e_r[(m, n)];
            // f_{r,m,n} − f0
            let baseband_rx = n as f64 * cfg.delta_f + fer;
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..n_count {
                let geom = (m + i) as f64;
                // f_{r,m,n} τ_{m,i}, split so the large carrier part stays exact mod 1.
                let phase = carrier + baseband_rx * round_trip
                    - geom * f_theta
                    - baseband_rx * geom * aperture;
                // Frequency difference times T_p, integrated over normalized time.
                let nu = ((i as f64 - n as f64) * cfg.delta_f + draw.f_e_t[i] - fer) * tp;
                let integral = integrate(|s| cis(-nu * s), 0.0, 1.0, quad)
                    .map_err(|e| Error::numeric(format!("Y[{m},{n}] transmitter {i}: {e}")))?;
                acc += cis(phase) * integral.value * tp;
            }
            y[(m, n)] = amp * acc;
        }
    }
    Ok(SignalMatrix::new(y))
}

/// The three addends of the first-order output `Y = β a_r a_tᵀ + N_t + N_r`.
#[derive(Debug, Clone, PartialEq)]
pub struct ApproxOutput {
    pub clean: DMatrix<Complex64>,
    pub n_t: DMatrix<Complex64>,
    pub n_r: DMatrix<Complex64>,
}

impl ApproxOutput {
    pub fn total(&self) -> SignalMatrix {
        SignalMatrix::new(&self.clean + &self.n_t + &self.n_r)
    }
}

/// First-order (Taylor) matched-filter output with the transmit and receive
/// offset noise terms kept separate.
pub fn matched_output_approx(cfg: &RadarConfig, target: &Target, draw: &PulseDraw) -> ApproxOutput {
    let (m_count, n_count) = (cfg.n_rx, cfg.n_tx);
    let tp = cfg.pulse_duration();
    let beta = target.beta(cfg);
    let f_theta = cfg.spatial_frequency(target.theta);
    let round_trip = 2.0 * target.r / cfg.c;
    let i1 = i1_table(cfg);
    let st = steering_unchecked(cfg, target.theta, target.r);

    let mut clean = DMatrix::zeros(m_count, n_count);
    let mut n_t = DMatrix::zeros(m_count, n_count);
    let mut n_r = DMatrix::zeros(m_count, n_count);
    for n in 0..n_count {
        let range_term = n as f64 * cfg.delta_f * round_trip;
        for m in 0..m_count {
            let base = |i: usize| cis(range_term - (m + i) as f64 * f_theta);
            let s = st.rx[m] * st.tx[n] * beta;
            clean[(m, n)] = s;

            // Σ_i f_{e,t,i} e^{j2π[...]} I_{1,i,n}  and the same sum without offsets.
            let mut tx_sum = Complex64::new(0.0, 0.0);
            let mut plain_sum = Complex64::new(0.0, 0.0);
            for i in 0..n_count {
                let term = base(i) * i1[(i, n)];
                tx_sum += term * draw.f_e_t[i];
                plain_sum += term;
            }
            // The Taylor factor is 1 − j2π(f_{e,t,i} − f_{e,r,m,n}) t, so the
            // transmit contribution enters with a minus sign.
            n_t[(m, n)] = -J * 2.0 * PI * beta / tp * tx_sum;
            let fer = draw.f_e_r[(m, n)];
            n_r[(m, n)] = J * 2.0 * PI * fer * (round_trip * s + beta / tp * plain_sum);
        }
    }
    ApproxOutput { clean, n_t, n_r }
}

/// Noise-free, offset-free output `β a_r a_tᵀ`.
pub fn clean_output(cfg: &RadarConfig, target: &Target) -> DMatrix<Complex64> {
    let st = steering_unchecked(cfg, target.theta, target.r);
    (&st.rx * st.tx.transpose()) * target.beta(cfg)
}

/// White-noise variance per element for a given SNR over the clean signal
/// power `Σ_k ‖β_k a_k‖² / MN`. Infinite SNR gives zero.
pub fn white_noise_variance(cfg: &RadarConfig, targets: &[Target], snr_db: f64) -> f64 {
    if snr_db == f64::INFINITY {
        return 0.0;
    }
    let signal: f64 = targets.iter().map(|t| t.beta(cfg).norm_sqr()).sum();
    signal / 10f64.powf(snr_db / 10.0)
}

/// One pulse of the first-order model for every target, plus circular white
/// Gaussian noise at `snr_db` (`f64::INFINITY` for none).
///
/// The offsets are drawn once per pulse from `(offsets.seed, pulse_index)`
/// and shared by all targets; the white noise continues the same stream.
pub fn draw_pulse(
    cfg: &RadarConfig,
    targets: &[Target],
    offsets: &OffsetModel,
    snr_db: f64,
    pulse_index: u64,
) -> Result<SignalMatrix> {
    cfg.validate()?;
    offsets.validate()?;
    if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
        return Err(Error::domain("SNR must be finite or +inf"));
    }
    for t in targets {
        t.validate(cfg)?;
    }
    let mut rng = pulse_rng(offsets.seed, pulse_index);
    let draw = PulseDraw::sample_with(cfg, offsets, &mut rng);
    let mut y = DMatrix::zeros(cfg.n_rx, cfg.n_tx);
    for t in targets {
        y += matched_output_approx(cfg, t, &draw).total().y;
    }
    let var = white_noise_variance(cfg, targets, snr_db);
    if var > 0.0 {
        let scale = (var / 2.0).sqrt();
        for z in y.iter_mut() {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *z += Complex64::new(re, im) * scale;
        }
    }
    Ok(SignalMatrix::new(y))
}

/// Draws `n_pulses` consecutive pulses and stacks them into `MN × L`.
pub fn draw_stack(
    cfg: &RadarConfig,
    targets: &[Target],
    offsets: &OffsetModel,
    snr_db: f64,
    n_pulses: usize,
) -> Result<DMatrix<Complex64>> {
    let pulses = (0..n_pulses as u64)
        .map(|p| draw_pulse(cfg, targets, offsets, snr_db, p))
        .collect::<Result<Vec<_>>>()?;
    stack_pulses(&pulses)
}

/// Mean relative Frobenius error of the first-order output against the
/// quadrature reference, for transmit-only, receive-only and joint offsets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApproxErrorReport {
    pub tx_only: f64,
    pub rx_only: f64,
    pub both: f64,
    pub n_pulses: usize,
}

pub fn approximation_error(
    cfg: &RadarConfig,
    target: &Target,
    offsets: &OffsetModel,
    n_pulses: usize,
    quad: QuadOptions,
) -> Result<ApproxErrorReport> {
    if n_pulses == 0 {
        return Err(Error::domain("need at least one pulse"));
    }
    let scenario = |o: OffsetModel| -> Result<f64> {
        let mut sum = 0.0;
        for p in 0..n_pulses as u64 {
            let draw = PulseDraw::sample(cfg, &o, p);
            let exact = matched_output_exact(cfg, target, &draw, quad)?;
            let approx = matched_output_approx(cfg, target, &draw).total();
            sum += (&approx.y - &exact.y).norm() / exact.y.norm();
        }
        Ok(sum / n_pulses as f64)
    };
    Ok(ApproxErrorReport {
        tx_only: scenario(offsets.tx_only())?,
        rx_only: scenario(offsets.rx_only())?,
        both: scenario(*offsets)?,
        n_pulses,
    })
}
