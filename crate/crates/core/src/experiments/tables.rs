use crate::complex_serde::nonfinite;
use crate::error::Result;
use crate::model::{OffsetModel, RadarConfig, Target};
use crate::noise_stats::{equalized_snr, SnrMode};
use crate::quadrature::QuadOptions;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Offset ratios of the equalized-SNR tables.
pub const EQSNR_SIGMAS: [f64; 5] = [0.02, 0.04, 0.06, 0.08, 0.1];
/// Target range as a fraction of `r_max`.
pub const EQSNR_RANGE_FRACTION: f64 = 0.4;
/// The two frequency increments compared by the tables, Hz.
pub const EQSNR_DELTA_F: [f64; 2] = [10e3, 1e3];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OffsetKind {
    Tx,
    Rx,
}

impl OffsetKind {
    pub fn offsets(self, sigma: f64, seed: u64) -> OffsetModel {
        match self {
            OffsetKind::Tx => OffsetModel::new(sigma, 0.0, seed),
            OffsetKind::Rx => OffsetModel::new(0.0, sigma, seed),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            OffsetKind::Tx => "tx",
            OffsetKind::Rx => "rx",
        }
    }
}

/// Analytic ("estimation") and Monte-Carlo ("actual") equalized SNR in dB
/// at both frequency increments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EqSnrRow {
    pub sigma_over_df: f64,
    #[serde(with = "nonfinite")]
    pub estimation_db_10khz: f64,
    #[serde(with = "nonfinite")]
    pub estimation_db_1khz: f64,
    #[serde(with = "nonfinite")]
    pub actual_db_10khz: f64,
    #[serde(with = "nonfinite")]
    pub actual_db_1khz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EqSnrTable {
    pub kind: OffsetKind,
    pub r_over_rmax: f64,
    pub theta_deg: f64,
    pub n_pulses: usize,
    pub rows: Vec<EqSnrRow>,
}

/// Scene for one table cell: θ = 30°, r = 0.4 r_max.
pub fn eqsnr_scene(delta_f: f64) -> (RadarConfig, Target) {
    let cfg = RadarConfig::table1().with_delta_f(delta_f);
    let t = Target::from_degrees(30.0, EQSNR_RANGE_FRACTION * cfg.max_range());
    (cfg, t)
}

/// One equalized-SNR table. The "actual" columns average `n_pulses`
/// quadrature-evaluated pulses.
pub fn eqsnr_table(kind: OffsetKind, sigmas: &[f64], n_pulses: usize, seed: u64, quad: QuadOptions) -> Result<EqSnrTable> {
    let rows = sigmas
        .par_iter()
        .map(|&ratio| {
            let mut vals = [[0.0; 2]; 2];
            for (k, &df) in EQSNR_DELTA_F.iter().enumerate() {
                let (cfg, t) = eqsnr_scene(df);
                let o = kind.offsets(ratio * df, seed);
                let rep = equalized_snr(&cfg, &t, &o, SnrMode::Empirical, n_pulses, quad)?;
                vals[k] = [rep.snr_model_db, rep.snr_empirical_db.unwrap_or(f64::NAN)];
            }
            Ok(EqSnrRow {
                sigma_over_df: ratio,
                estimation_db_10khz: vals[0][0],
                estimation_db_1khz: vals[1][0],
                actual_db_10khz: vals[0][1],
                actual_db_1khz: vals[1][1],
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EqSnrTable { kind, r_over_rmax: EQSNR_RANGE_FRACTION, theta_deg: 30.0, n_pulses, rows })
}

/// Transmit- and receive-offset tables over [`EQSNR_SIGMAS`].
pub fn reproduce_eqsnr_tables(n_pulses: usize, seed: u64, quad: QuadOptions) -> Result<(EqSnrTable, EqSnrTable)> {
    Ok((
        eqsnr_table(OffsetKind::Tx, &EQSNR_SIGMAS, n_pulses, seed, quad)?,
        eqsnr_table(OffsetKind::Rx, &EQSNR_SIGMAS, n_pulses, seed, quad)?,
    ))
}
