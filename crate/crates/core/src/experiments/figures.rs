use super::monte_carlo::{monte_carlo, RmseTable};
use super::scenario::{OffsetSpec, Scenario, Sweep, SweepAxis, TargetSpec, DUAL_SECOND_RANGE_M};
use super::tables::{eqsnr_scene, OffsetKind};
use crate::error::{Error, Result};
use crate::model::{approximation_error, OffsetModel, Target};
use crate::noise_stats::{equalized_snr, SnrMode};
use crate::quadrature::QuadOptions;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub label: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Figure {
    pub name: String,
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// Settings that are not visible in the series (trial counts, grids, ...).
    pub notes: Vec<String>,
}

impl Figure {
    fn new(name: &str, title: &str, x_label: &str, y_label: &str) -> Self {
        Self {
            name: name.into(),
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            series: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn series(&self, label: &str) -> Option<&Series> {
        self.series.iter().find(|s| s.label == label)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FigureKind {
    ApproxError,
    EqsnrVsSigma,
    EqsnrVsRange,
    RmseVsSigmaT,
    RmseVsSigmaR,
    RmseVsSnr,
}

impl FigureKind {
    pub const ALL: [FigureKind; 6] = [
        FigureKind::ApproxError,
        FigureKind::EqsnrVsSigma,
        FigureKind::EqsnrVsRange,
        FigureKind::RmseVsSigmaT,
        FigureKind::RmseVsSigmaR,
        FigureKind::RmseVsSnr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FigureKind::ApproxError => "approx_error",
            FigureKind::EqsnrVsSigma => "eqsnr_vs_sigma",
            FigureKind::EqsnrVsRange => "eqsnr_vs_range",
            FigureKind::RmseVsSigmaT => "rmse_vs_sigma_t",
            FigureKind::RmseVsSigmaR => "rmse_vs_sigma_r",
            FigureKind::RmseVsSnr => "rmse_vs_snr",
        }
    }

    fn default_axis(self) -> Vec<f64> {
        match self {
            FigureKind::ApproxError => (1..=10).map(|k| k as f64 * 0.01).collect(),
            FigureKind::EqsnrVsSigma | FigureKind::RmseVsSigmaT | FigureKind::RmseVsSigmaR => {
                (1..=5).map(|k| k as f64 * 0.02).collect()
            }
            FigureKind::EqsnrVsRange => (1..=19).map(|k| k as f64 * 0.05).collect(),
            FigureKind::RmseVsSnr => (0..=6).map(|k| k as f64 * 5.0).collect(),
        }
    }
}

impl fmt::Display for FigureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FigureKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        FigureKind::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| {
            let names: Vec<_> = FigureKind::ALL.iter().map(|k| k.name()).collect();
            Error::Config(format!("unknown figure {s:?}; expected one of {}", names.join(", ")))
        })
    }
}

/// Settings of a curve run beyond the base scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveOptions {
    /// Sweep values; `None` uses the figure's own axis.
    pub axis: Option<Vec<f64>>,
    /// Pulses per equalized-SNR point.
    pub eqsnr_pulses: usize,
    /// Pulses per approximation-error point.
    pub approx_pulses: usize,
    /// Quadrature tolerance for the exact model.
    pub quad_rel_tol: f64,
    /// White-noise SNR of the offset-sweep RMSE figures.
    pub offset_sweep_snr_db: f64,
    /// Offset ratio of the equalized-SNR range sweep.
    pub range_sweep_sigma: f64,
}

impl Default for CurveOptions {
    fn default() -> Self {
        Self {
            axis: None,
            eqsnr_pulses: 1000,
            approx_pulses: 100,
            quad_rel_tol: 1e-8,
            offset_sweep_snr_db: 50.0,
            range_sweep_sigma: 0.05,
        }
    }
}

/// Builds the curves of `which`. RMSE figures return two entries (range and
/// angle); the others return one. The base scenario provides the targets,
/// estimators, trial counts, grid and seed.
pub fn reproduce_curves(which: FigureKind, base: &Scenario, opts: &CurveOptions) -> Result<Vec<Figure>> {
    base.validate()?;
    let axis = opts.axis.clone().unwrap_or_else(|| which.default_axis());
    if axis.is_empty() {
        return Err(Error::domain("empty sweep axis"));
    }
    let quad = QuadOptions { rel_tol: opts.quad_rel_tol, ..QuadOptions::default() };
    match which {
        FigureKind::ApproxError => approx_error_curve(base, &axis, opts, quad).map(|f| vec![f]),
        FigureKind::EqsnrVsSigma => eqsnr_vs_sigma(&axis, base.seed, opts, quad).map(|f| vec![f]),
        FigureKind::EqsnrVsRange => eqsnr_vs_range(&axis, base.seed, opts, quad).map(|f| vec![f]),
        FigureKind::RmseVsSigmaT => rmse_curves(which, base, &axis, opts),
        FigureKind::RmseVsSigmaR => rmse_curves(which, base, &axis, opts),
        FigureKind::RmseVsSnr => rmse_curves(which, base, &axis, opts),
    }
}

fn approx_error_curve(base: &Scenario, axis: &[f64], opts: &CurveOptions, quad: QuadOptions) -> Result<Figure> {
    let cfg = &base.radar;
    let target = base.target_list()[0];
    let reports = axis
        .par_iter()
        .map(|&ratio| {
            let s = ratio * cfg.delta_f;
            approximation_error(cfg, &target, &OffsetModel::new(s, s, base.seed), opts.approx_pulses, quad)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut fig = Figure::new(
        "approx_error",
        "First-order model error against the quadrature reference",
        "offset std / frequency increment",
        "mean relative Frobenius error (%)",
    );
    for (label, get) in [
        ("tx-only", (|r: &crate::model::ApproxErrorReport| r.tx_only) as fn(&_) -> f64),
        ("rx-only", |r| r.rx_only),
        ("both", |r| r.both),
    ] {
        fig.series.push(Series { label: label.into(), x: axis.to_vec(), y: reports.iter().map(|r| 100.0 * get(r)).collect() });
    }
    fig.notes.push(format!("{} pulses per point, quadrature rel_tol {:e}", opts.approx_pulses, quad.rel_tol));
    Ok(fig)
}

fn eqsnr_point(kind: OffsetKind, delta_f: f64, ratio: f64, r_frac: f64, seed: u64, pulses: usize, quad: QuadOptions) -> Result<(f64, f64)> {
    let (cfg, mut t) = eqsnr_scene(delta_f);
    t = Target { r: r_frac * cfg.max_range(), ..t };
    let rep = equalized_snr(&cfg, &t, &kind.offsets(ratio * delta_f, seed), SnrMode::Empirical, pulses, quad)?;
    Ok((rep.snr_model_db, rep.snr_empirical_db.unwrap_or(f64::NAN)))
}

fn eqsnr_series(
    fig: &mut Figure,
    axis: &[f64],
    point: impl Fn(OffsetKind, f64) -> Result<(f64, f64)> + Sync,
) -> Result<()> {
    for kind in [OffsetKind::Tx, OffsetKind::Rx] {
        let vals = axis.par_iter().map(|&v| point(kind, v)).collect::<Result<Vec<_>>>()?;
        fig.series.push(Series {
            label: format!("{} model", kind.name()),
            x: axis.to_vec(),
            y: vals.iter().map(|v| v.0).collect(),
        });
        fig.series.push(Series {
            label: format!("{} simulated", kind.name()),
            x: axis.to_vec(),
            y: vals.iter().map(|v| v.1).collect(),
        });
    }
    Ok(())
}

fn eqsnr_vs_sigma(axis: &[f64], seed: u64, opts: &CurveOptions, quad: QuadOptions) -> Result<Figure> {
    let mut fig = Figure::new(
        "eqsnr_vs_sigma",
        "Equalized SNR against offset spread (r = 0.4 r_max)",
        "offset std / frequency increment",
        "equalized SNR (dB)",
    );
    eqsnr_series(&mut fig, axis, |kind, v| eqsnr_point(kind, 1e3, v, 0.4, seed, opts.eqsnr_pulses, quad))?;
    fig.notes.push(format!("simulated series: Δf = 1 kHz, {} pulses per point", opts.eqsnr_pulses));
    Ok(fig)
}

fn eqsnr_vs_range(axis: &[f64], seed: u64, opts: &CurveOptions, quad: QuadOptions) -> Result<Figure> {
    let mut fig = Figure::new(
        "eqsnr_vs_range",
        "Equalized SNR against target range",
        "r / r_max",
        "equalized SNR (dB)",
    );
    let sigma = opts.range_sweep_sigma;
    eqsnr_series(&mut fig, axis, |kind, v| eqsnr_point(kind, 10e3, sigma, v, seed, opts.eqsnr_pulses, quad))?;
    fig.notes.push(format!("offset std {sigma} Δf, Δf = 10 kHz, θ = 30°, {} pulses per point", opts.eqsnr_pulses));
    Ok(fig)
}

fn rmse_curves(which: FigureKind, base: &Scenario, axis: &[f64], opts: &CurveOptions) -> Result<Vec<Figure>> {
    let (sweep_axis, x_label, offsets, snr) = match which {
        FigureKind::RmseVsSigmaT => (
            SweepAxis::SigmaTOverDf,
            "transmit offset std / frequency increment",
            OffsetSpec::none(),
            Some(opts.offset_sweep_snr_db),
        ),
        FigureKind::RmseVsSigmaR => (
            SweepAxis::SigmaROverDf,
            "receive offset std / frequency increment",
            OffsetSpec::none(),
            Some(opts.offset_sweep_snr_db),
        ),
        _ => (SweepAxis::SnrDb, "SNR (dB)", OffsetSpec::none(), base.snr_db),
    };
    let mut single = base.clone();
    single.targets.truncate(1);
    single.offsets = offsets;
    single.snr_db = snr;
    single.sweep = Sweep { axis: sweep_axis, values: axis.to_vec() };
    let mut dual = single.clone();
    let first = single.targets[0];
    dual.targets.push(TargetSpec { r_m: DUAL_SECOND_RANGE_M, ..first });

    let tables: Vec<(&str, RmseTable)> = vec![("single", monte_carlo(&single)?), ("dual", monte_carlo(&dual)?)];
    let mut fig_r = Figure::new(
        &format!("{}_range", which.name()),
        "Range RMSE",
        x_label,
        "range RMSE (m)",
    );
    let mut fig_t = Figure::new(
        &format!("{}_angle", which.name()),
        "Angle RMSE",
        x_label,
        "angle RMSE (deg)",
    );
    for (variant, table) in &tables {
        for &method in &base.estimators {
            let rows: Vec<_> = table.rows.iter().filter(|r| r.estimator == method).collect();
            let x: Vec<f64> = rows.iter().map(|r| r.sweep_value.unwrap_or(f64::NAN)).collect();
            if method.estimates_range() {
                fig_r.series.push(Series {
                    label: format!("{method} {variant}"),
                    x: x.clone(),
                    y: rows.iter().map(|r| r.rmse_r_m.unwrap_or(f64::NAN)).collect(),
                });
            }
            fig_t.series.push(Series {
                label: format!("{method} {variant}"),
                x,
                y: rows.iter().map(|r| r.rmse_theta_deg).collect(),
            });
        }
    }
    let note = format!(
        "{} trials ({} for ANM methods), {} pulses, seed {}, grid {:?}; dual target adds θ = {}°, r = {} m",
        base.n_trials, base.anm_trials.min(base.n_trials), base.n_pulses, base.seed, base.grid, first.theta_deg, DUAL_SECOND_RANGE_M
    );
    fig_r.notes.push(note.clone());
    fig_t.notes.push(note);
    Ok(vec![fig_r, fig_t])
}
