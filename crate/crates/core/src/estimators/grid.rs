use crate::error::{Error, Result};
use crate::model::{cis, RadarConfig};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Search axes. Angles in radians, ranges in meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub theta_axis: Vec<f64>,
    pub r_axis: Vec<f64>,
}

/// Default angle step.
pub const THETA_STEP_DEG: f64 = 0.1;
/// Default number of range cells over `[0, r_max)`.
pub const RANGE_CELLS: usize = 1500;

impl GridSpec {
    /// 0.1° over [−90°, 90°] by `r_max/1500` over `[0, r_max)`.
    pub fn default_for(cfg: &RadarConfig) -> Self {
        let per_degree = (1.0 / THETA_STEP_DEG).round();
        let n_theta = 180 * per_degree as usize + 1;
        // Integer numerators keep whole-degree nodes exact.
        let theta_axis = (0..n_theta)
            .map(|k| ((k as f64 - 90.0 * per_degree) / per_degree).to_radians())
            .collect();
        let step = cfg.max_range() / RANGE_CELLS as f64;
        let r_axis = (0..RANGE_CELLS).map(|k| k as f64 * step).collect();
        Self { theta_axis, r_axis }
    }

    /// The nodes of [`GridSpec::default_for`] inside
    /// `[θc − hθ, θc + hθ] × [rc − hr, rc + hr]`, clipped to the full grid.
    pub fn default_window(cfg: &RadarConfig, theta_deg: f64, half_theta_deg: f64, r: f64, half_r: f64) -> Self {
        let full = Self::default_for(cfg);
        let lo = (theta_deg - half_theta_deg).to_radians() - 1e-12;
        let hi = (theta_deg + half_theta_deg).to_radians() + 1e-12;
        let theta_axis = full.theta_axis.into_iter().filter(|t| *t >= lo && *t <= hi).collect();
        let r_axis = full
            .r_axis
            .into_iter()
            .filter(|x| *x >= r - half_r - 1e-9 && *x <= r + half_r + 1e-9)
            .collect();
        Self { theta_axis, r_axis }
    }

    /// `n_theta` angles over `[lo, hi]` degrees and `n_r` ranges over `[r_lo, r_hi]`.
    pub fn uniform(theta_deg: (f64, f64), n_theta: usize, r: (f64, f64), n_r: usize) -> Result<Self> {
        let lin = |a: f64, b: f64, n: usize| -> Vec<f64> {
            if n < 2 {
                return vec![a];
            }
            (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
        };
        let g = Self {
            theta_axis: lin(theta_deg.0, theta_deg.1, n_theta).into_iter().map(f64::to_radians).collect(),
            r_axis: lin(r.0, r.1, n_r),
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, axis) in [("angle", &self.theta_axis), ("range", &self.r_axis)] {
            if axis.len() < 2 {
                return Err(Error::domain(format!("{name} axis needs at least 2 points")));
            }
            if axis.windows(2).any(|w| !(w[1] > w[0])) || axis.iter().any(|v| !v.is_finite()) {
                return Err(Error::domain(format!("{name} axis must be finite and strictly increasing")));
            }
        }
        Ok(())
    }

    /// Dictionary size `|θ|·|r|`.
    pub fn len(&self) -> usize {
        self.theta_axis.len() * self.r_axis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Real spectrum over the grid, rows indexed by angle.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum2D {
    pub values: DMatrix<f64>,
    /// Global argmax `(θ, r)`; ties go to the smallest `(θ index, r index)`.
    pub peak: (f64, f64),
    pub peak_index: (usize, usize),
    pub peak_value: f64,
}

impl Spectrum2D {
    pub(crate) fn new(values: DMatrix<f64>, grid: &GridSpec) -> Self {
        let mut best = (0, 0);
        let mut best_v = f64::NEG_INFINITY;
        for i in 0..values.nrows() {
            for j in 0..values.ncols() {
                if values[(i, j)] > best_v {
                    best_v = values[(i, j)];
                    best = (i, j);
                }
            }
        }
        Self {
            peak: (grid.theta_axis[best.0], grid.r_axis[best.1]),
            peak_index: best,
            peak_value: best_v,
            values,
        }
    }

    /// The `count` highest local maxima over the 8-neighbourhood, padded with
    /// the next-highest remaining cells when fewer maxima exist.
    pub fn top_peaks(&self, count: usize) -> Vec<(usize, usize)> {
        let (rows, cols) = self.values.shape();
        let v = &self.values;
        let beats = |a: (usize, usize), b: (usize, usize)| v[a] > v[b] || (v[a] == v[b] && a < b);
        let mut peaks = Vec::new();
        for i in 0..rows {
            for j in 0..cols {
                let mut is_peak = true;
                'nb: for di in -1i64..=1 {
                    for dj in -1i64..=1 {
                        if di == 0 && dj == 0 {
                            continue;
                        }
                        let (ni, nj) = (i as i64 + di, j as i64 + dj);
                        if ni < 0 || nj < 0 || ni >= rows as i64 || nj >= cols as i64 {
                            continue;
                        }
                        if !beats((i, j), (ni as usize, nj as usize)) {
                            is_peak = false;
                            break 'nb;
                        }
                    }
                }
                if is_peak {
                    peaks.push((i, j));
                }
            }
        }
        order_desc(&mut peaks, |p| v[*p]);
        peaks.truncate(count);
        if peaks.len() < count {
            let mut rest: Vec<(usize, usize)> = (0..rows)
                .flat_map(|i| (0..cols).map(move |j| (i, j)))
                .filter(|p| !peaks.contains(p))
                .collect();
            order_desc(&mut rest, |p| v[*p]);
            peaks.extend(rest.into_iter().take(count - peaks.len()));
        }
        peaks
    }
}

/// Angle-only spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum1D {
    pub values: Vec<f64>,
    pub peak: f64,
    pub peak_index: usize,
    pub peak_value: f64,
}

impl Spectrum1D {
    pub(crate) fn new(values: Vec<f64>, axis: &[f64]) -> Self {
        let mut best = 0;
        for (k, v) in values.iter().enumerate() {
            if *v > values[best] {
                best = k;
            }
        }
        Self { peak: axis[best], peak_index: best, peak_value: values[best], values }
    }

    pub fn top_peaks(&self, count: usize) -> Vec<usize> {
        let v = &self.values;
        let n = v.len();
        let beats = |a: usize, b: usize| v[a] > v[b] || (v[a] == v[b] && a < b);
        let mut peaks: Vec<usize> = (0..n)
            .filter(|&k| (k == 0 || beats(k, k - 1)) && (k + 1 == n || beats(k, k + 1)))
            .collect();
        order_desc(&mut peaks, |k| v[*k]);
        peaks.truncate(count);
        if peaks.len() < count {
            let mut rest: Vec<usize> = (0..n).filter(|k| !peaks.contains(k)).collect();
            order_desc(&mut rest, |k| v[*k]);
            peaks.extend(rest.into_iter().take(count - peaks.len()));
        }
        peaks
    }
}

fn order_desc<T: Ord + Copy>(items: &mut [T], value: impl Fn(&T) -> f64) {
    items.sort_by(|a, b| value(b).total_cmp(&value(a)).then(a.cmp(b)));
}

/// Evaluates `combine([aᴴ Q_k a]_k)` at every grid node, where each `Q_k` is
/// `MN × MN` and `a = a(θ, r)`.
pub(crate) fn grid_forms<F>(cfg: &RadarConfig, grid: &GridSpec, mats: &[DMatrix<Complex64>], combine: F) -> DMatrix<f64>
where
    F: Fn(&[Complex64]) -> f64 + Sync,
{
    let (m, n) = (cfg.n_rx, cfg.n_tx);
    let range_step = 2.0 * cfg.delta_f / cfg.c;
    let d_table: Vec<Vec<Complex64>> = grid
        .r_axis
        .iter()
        .map(|r| (0..n).map(|k| cis(k as f64 * range_step * r)).collect())
        .collect();
    let rows: Vec<Vec<f64>> = grid
        .theta_axis
        .par_iter()
        .map(|&theta| {
            let f_theta = cfg.spatial_frequency(theta);
            let ar: Vec<Complex64> = (0..m).map(|k| cis(-(k as f64) * f_theta)).collect();
            let g: Vec<Complex64> = (0..n).map(|k| cis(-(k as f64) * f_theta)).collect();
            // W_k[(u, v)] = conj(g_u) g_v a_rᴴ Q_k[block u, v] a_r
            let ws: Vec<Vec<Complex64>> = mats
                .iter()
                .map(|q| {
                    let mut w = vec![Complex64::new(0.0, 0.0); n * n];
                    for u in 0..n {
                        for v in 0..n {
                            let mut acc = Complex64::new(0.0, 0.0);
                            for i in 0..m {
                                let mut inner = Complex64::new(0.0, 0.0);
                                for j in 0..m {
                                    inner += q[(u * m + i, v * m + j)] * ar[j];
                                }
                                acc += ar[i].conj() * inner;
                            }
                            w[u * n + v] = g[u].conj() * g[v] * acc;
                        }
                    }
                    w
                })
                .collect();
            let mut forms = vec![Complex64::new(0.0, 0.0); mats.len()];
            d_table
                .iter()
                .map(|d| {
                    for (f, w) in forms.iter_mut().zip(&ws) {
                        let mut acc = Complex64::new(0.0, 0.0);
                        for u in 0..n {
                            let mut inner = Complex64::new(0.0, 0.0);
                            for v in 0..n {
                                inner += w[u * n + v] * d[v];
                            }
                            acc += d[u].conj() * inner;
                        }
                        *f = acc;
                    }
                    combine(&forms)
                })
                .collect()
        })
        .collect();
    DMatrix::from_fn(grid.theta_axis.len(), grid.r_axis.len(), |i, j| rows[i][j])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::joint_steering;

    #[test]
    fn default_grid_shape() {
        let cfg = RadarConfig::table1();
        let g = GridSpec::default_for(&cfg);
        assert_eq!(g.theta_axis.len(), 1801);
        assert_eq!(g.r_axis.len(), 1500);
        assert!(g.validate().is_ok());
        assert!((g.theta_axis[1200].to_degrees() - 30.0).abs() < 1e-9);
    }

    #[test]
    fn window_is_subset_of_default() {
        let cfg = RadarConfig::table1();
        let full = GridSpec::default_for(&cfg);
        let w = GridSpec::default_window(&cfg, 30.0, 1.0, 6000.0, 100.0);
        assert_eq!(w.theta_axis.len(), 21);
        for t in &w.theta_axis {
            assert!(full.theta_axis.contains(t));
        }
        for r in &w.r_axis {
            assert!(full.r_axis.contains(r));
        }
    }

    #[test]
    fn rejects_non_increasing_axes() {
        let g = GridSpec { theta_axis: vec![0.0, 0.0], r_axis: vec![0.0, 1.0] };
        assert!(g.validate().is_err());
    }

    #[test]
    fn contracted_form_matches_direct() {
        let cfg = RadarConfig::table1();
        let grid = GridSpec::uniform((-20.0, 40.0), 7, (100.0, 9000.0), 5).unwrap();
        let q = DMatrix::from_fn(16, 16, |i, j| Complex64::new((i * j) as f64 * 0.01, i as f64 - j as f64));
        let vals = grid_forms(&cfg, &grid, std::slice::from_ref(&q), |f| f[0].re + f[0].im);
        for (i, &t) in grid.theta_axis.iter().enumerate() {
            for (j, &r) in grid.r_axis.iter().enumerate() {
                let a = joint_steering(&cfg, t, r);
                let direct = a.dotc(&(&q * &a));
                assert!((vals[(i, j)] - (direct.re + direct.im)).abs() < 1e-9 * direct.norm().max(1.0));
            }
        }
    }

    #[test]
    fn peaks_prefer_lower_index_on_ties() {
        let values = DMatrix::from_row_slice(3, 3, &[1.0, 5.0, 1.0, 0.0, 0.0, 0.0, 1.0, 5.0, 1.0]);
        let grid = GridSpec::uniform((0.0, 2.0), 3, (0.0, 2.0), 3).unwrap();
        let s = Spectrum2D::new(values, &grid);
        assert_eq!(s.peak_index, (0, 1));
        assert_eq!(s.top_peaks(2), vec![(0, 1), (2, 1)]);
        assert_eq!(s.top_peaks(3)[2], (0, 0));
    }
}
