use super::scenario::{Scenario, SweepAxis};
use crate::error::Result;
use crate::estimators::{run_method, Estimate, EstimatorOptions, GridSpec, Method};
use crate::model::{draw_stack, white_noise_variance, RadarConfig, Target};
use crate::rng::child_seed;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// One `(sweep value, estimator)` cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmseRow {
    pub sweep_axis: SweepAxis,
    pub sweep_value: Option<f64>,
    pub estimator: Method,
    /// Meters; `None` for angle-only estimators.
    pub rmse_r_m: Option<f64>,
    pub rmse_theta_deg: f64,
    /// Trials that produced an estimate.
    pub n_trials: usize,
    /// Trials where the estimator returned an error; excluded from the RMSE.
    pub n_failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmseTable {
    pub experiment: String,
    pub rows: Vec<RmseRow>,
}

/// Squared errors of one trial, summed over targets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialErrors {
    pub sq_r: f64,
    pub sq_theta_deg: f64,
    pub n_targets: usize,
}

/// Pairs estimates with targets. Range-capable estimates take the
/// assignment minimizing the summed squared error in grid-step units;
/// angle-only estimates serve every target with the nearest direction.
pub fn match_errors(cfg: &RadarConfig, targets: &[Target], estimates: &[Estimate]) -> TrialErrors {
    let theta_unit = 0.1;
    let r_unit = cfg.max_range() / 1500.0;
    let err = |t: &Target, e: &Estimate| {
        let dth = e.theta_deg - t.theta.to_degrees();
        let dr = e.r_m.map(|r| r - t.r).unwrap_or(0.0);
        (dth, dr)
    };
    let cost = |t: &Target, e: &Estimate| {
        let (dth, dr) = err(t, e);
        (dth / theta_unit).powi(2) + (dr / r_unit).powi(2)
    };
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    let angle_only = estimates.iter().all(|e| e.r_m.is_none());
    if angle_only || estimates.len() < targets.len() {
        for (k, t) in targets.iter().enumerate() {
            let best = (0..estimates.len())
                .min_by(|&a, &b| cost(t, &estimates[a]).total_cmp(&cost(t, &estimates[b])))
                .unwrap_or(0);
            pairs.push((k, best));
        }
    } else {
        let mut best_cost = f64::INFINITY;
        let mut perm: Vec<usize> = (0..estimates.len()).collect();
        permute(&mut perm, 0, &mut |p| {
            let c: f64 = targets.iter().enumerate().map(|(k, t)| cost(t, &estimates[p[k]])).sum();
            if c < best_cost {
                best_cost = c;
                pairs = (0..targets.len()).map(|k| (k, p[k])).collect();
            }
        });
    }
    let mut out = TrialErrors { sq_r: 0.0, sq_theta_deg: 0.0, n_targets: targets.len() };
    for (k, j) in pairs {
        if let Some(e) = estimates.get(j) {
            let (dth, dr) = err(&targets[k], e);
            out.sq_r += dr * dr;
            out.sq_theta_deg += dth * dth;
        }
    }
    out
}

fn permute(items: &mut Vec<usize>, k: usize, visit: &mut dyn FnMut(&[usize])) {
    if k == items.len() {
        visit(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permute(items, k + 1, visit);
        items.swap(k, i);
    }
}

/// Runs every estimator of `scn` on trial `trial` (drawn with seed
/// `child_seed(scn.seed, trial)`).
pub fn run_trial(scn: &Scenario, grid: &GridSpec, trial: u64) -> Result<Vec<(Method, Result<Vec<Estimate>>)>> {
    let cfg = &scn.radar;
    let targets = scn.target_list();
    let offsets = scn.offsets.with_seed(child_seed(scn.seed, trial));
    let x = draw_stack(cfg, &targets, &offsets, scn.snr(), scn.n_pulses)?;
    let opts = EstimatorOptions {
        tau: scn.tau,
        sigma0_sq: white_noise_variance(cfg, &targets, scn.snr()),
        anm: scn.anm,
    };
    Ok(scn
        .estimators
        .iter()
        .filter(|m| !m.uses_anm() || (trial as usize) < scn.anm_trials)
        .map(|&m| {
            let n = if m == Method::MusicRows { scn.distinct_directions() } else { targets.len() };
            (m, run_method(m, cfg, &x, grid, n, &opts))
        })
        .collect())
}

/// RMSE of every estimator at every sweep value. Trials run in parallel and
/// are reduced in trial order, so the table depends only on the scenario.
pub fn monte_carlo(scn: &Scenario) -> Result<RmseTable> {
    scn.validate()?;
    let points: Vec<Option<f64>> = match scn.sweep.axis {
        SweepAxis::None => vec![None],
        _ => scn.sweep.values.iter().map(|&v| Some(v)).collect(),
    };
    let mut rows = Vec::new();
    for point in points {
        let s = point.map(|v| scn.at_sweep_value(v)).unwrap_or_else(|| scn.clone());
        s.validate()?;
        let grid = s.grid_spec();
        grid.validate()?;
        let targets = s.target_list();
        let per_trial: Vec<Vec<(Method, Result<Vec<Estimate>>)>> = (0..s.n_trials as u64)
            .into_par_iter()
            .map(|t| run_trial(&s, &grid, t))
            .collect::<Result<_>>()?;
        for &method in &s.estimators {
            let (mut sq_r, mut sq_th, mut count, mut ok, mut failed) = (0.0, 0.0, 0usize, 0usize, 0usize);
            for trial in &per_trial {
                for (m, res) in trial {
                    if *m != method {
                        continue;
                    }
                    match res {
                        Ok(est) => {
                            let e = match_errors(&s.radar, &targets, est);
                            sq_r += e.sq_r;
                            sq_th += e.sq_theta_deg;
                            count += e.n_targets;
                            ok += 1;
                        }
                        Err(_) => failed += 1,
                    }
                }
            }
            let rmse = |sq: f64| if count > 0 { (sq / count as f64).sqrt() } else { f64::NAN };
            rows.push(RmseRow {
                sweep_axis: s.sweep.axis,
                sweep_value: point,
                estimator: method,
                rmse_r_m: method.estimates_range().then(|| rmse(sq_r)),
                rmse_theta_deg: rmse(sq_th),
                n_trials: ok,
                n_failed: failed,
            });
        }
    }
    Ok(RmseTable { experiment: "mc".into(), rows })
}
