use super::figures::Figure;
use super::monte_carlo::RmseRow;
use super::tables::EqSnrRow;
use crate::crlb::CrlbRow;
use crate::error::{Error, Result};
use serde::Serialize;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

/// Rows that can be written as CSV with a fixed header.
pub trait Tabular {
    fn headers() -> Vec<&'static str>;
    fn record(&self) -> Vec<String>;
}

fn num(v: f64) -> String {
    v.to_string()
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

impl Tabular for RmseRow {
    fn headers() -> Vec<&'static str> {
        vec!["sweep_axis", "sweep_value", "estimator", "rmse_r_m", "rmse_theta_deg", "n_trials", "n_failed"]
    }
    fn record(&self) -> Vec<String> {
        vec![
            self.sweep_axis.name().to_string(),
            opt(self.sweep_value),
            self.estimator.name().to_string(),
            opt(self.rmse_r_m),
            num(self.rmse_theta_deg),
            self.n_trials.to_string(),
            self.n_failed.to_string(),
        ]
    }
}

impl Tabular for EqSnrRow {
    fn headers() -> Vec<&'static str> {
        vec!["sigma_over_df", "estimation_db_10khz", "estimation_db_1khz", "actual_db_10khz", "actual_db_1khz"]
    }
    fn record(&self) -> Vec<String> {
        vec![
            num(self.sigma_over_df),
            num(self.estimation_db_10khz),
            num(self.estimation_db_1khz),
            num(self.actual_db_10khz),
            num(self.actual_db_1khz),
        ]
    }
}

impl Tabular for CrlbRow {
    fn headers() -> Vec<&'static str> {
        vec!["sweep_value", "crlb_r_m2", "crlb_theta_rad2"]
    }
    fn record(&self) -> Vec<String> {
        vec![num(self.sweep_value), num(self.crlb_r_m2), num(self.crlb_theta_rad2)]
    }
}

/// A figure flattened to `series,x,y` rows.
pub struct FigurePoint<'a> {
    pub series: &'a str,
    pub x: f64,
    pub y: f64,
}

impl Tabular for FigurePoint<'_> {
    fn headers() -> Vec<&'static str> {
        vec!["series", "x", "y"]
    }
    fn record(&self) -> Vec<String> {
        vec![self.series.to_string(), num(self.x), num(self.y)]
    }
}

pub fn figure_points(fig: &Figure) -> Vec<FigurePoint<'_>> {
    fig.series
        .iter()
        .flat_map(|s| s.x.iter().zip(&s.y).map(move |(&x, &y)| FigurePoint { series: &s.label, x, y }))
        .collect()
}

/// Header row, then one record per row; comma separator, decimal dot.
pub fn write_csv<T: Tabular, W: Write>(rows: &[T], out: W) -> Result<()> {
    let csv_err = |e: csv::Error| Error::numeric(format!("csv: {e}"));
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(T::headers()).map_err(csv_err)?;
    for r in rows {
        w.write_record(r.record()).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::numeric(format!("csv: {e}")))?;
    Ok(())
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.to_path_buf(), source }
}

pub fn write_csv_file<T: Tabular>(rows: &[T], path: &Path) -> Result<()> {
    let f = fs::File::create(path).map_err(io_err(path))?;
    write_csv(rows, std::io::BufWriter::new(f)).map_err(|e| match e {
        Error::Numeric(msg) => Error::Io { path: path.to_path_buf(), source: std::io::Error::other(msg) },
        other => other,
    })
}

pub fn write_json_file<T: Serialize + ?Sized>(value: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::numeric(format!("json encoding: {e}")))?;
    fs::write(path, text + "\n").map_err(io_err(path))
}

pub fn write_svg_file(fig: &Figure, path: &Path) -> Result<()> {
    fs::write(path, render_svg(fig)).map_err(io_err(path))
}

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-2 {
        format!("{v:.2e}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

/// Self-contained SVG line chart: axes with five ticks each, axis labels,
/// a legend, and one polyline per finite run of each series.
pub fn render_svg(fig: &Figure) -> String {
    let (w, h) = (760.0, 480.0);
    let (left, right, top, bottom) = (80.0, 200.0, 40.0, 60.0);
    let (pw, ph) = (w - left - right, h - top - bottom);
    let finite: Vec<(f64, f64)> = fig
        .series
        .iter()
        .flat_map(|s| s.x.iter().copied().zip(s.y.iter().copied()))
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .collect();
    let bounds = |vals: Vec<f64>| {
        let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !lo.is_finite() {
            (0.0, 1.0)
        } else if hi - lo <= f64::EPSILON * lo.abs().max(1.0) {
            (lo - 0.5 * lo.abs().max(1.0), hi + 0.5 * hi.abs().max(1.0))
        } else {
            let pad = 0.05 * (hi - lo);
            (lo - pad, hi + pad)
        }
    };
    let (x0, x1) = bounds(finite.iter().map(|p| p.0).collect());
    let (y0, y1) = bounds(finite.iter().map(|p| p.1).collect());
    let sx = |x: f64| left + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| top + ph - (y - y0) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#, left + pw / 2.0, escape(&fig.title));
    let _ = writeln!(s, r#"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
    for k in 0..=4 {
        let fx = x0 + (x1 - x0) * k as f64 / 4.0;
        let fy = y0 + (y1 - y0) * k as f64 / 4.0;
        let (px, py) = (sx(fx), sy(fy));
        let _ = writeln!(s, r#"<line x1="{px:.2}" y1="{}" x2="{px:.2}" y2="{}" stroke="black"/>"#, top + ph, top + ph + 5.0);
        let _ = writeln!(s, r#"<text x="{px:.2}" y="{}" text-anchor="middle">{}</text>"#, top + ph + 18.0, tick_label(fx));
        let _ = writeln!(s, r#"<line x1="{}" y1="{py:.2}" x2="{left}" y2="{py:.2}" stroke="black"/>"#, left - 5.0);
        let _ = writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#, left - 8.0, py + 4.0, tick_label(fy));
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, left + pw / 2.0, h - 15.0, escape(&fig.x_label));
    let _ = writeln!(
        s,
        r#"<text x="20" y="{}" text-anchor="middle" transform="rotate(-90 20 {})">{}</text>"#,
        top + ph / 2.0,
        top + ph / 2.0,
        escape(&fig.y_label)
    );
    for (k, series) in fig.series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let mut runs: Vec<Vec<(f64, f64)>> = vec![Vec::new()];
        for (&x, &y) in series.x.iter().zip(&series.y) {
            if x.is_finite() && y.is_finite() {
                runs.last_mut().unwrap().push((sx(x), sy(y)));
            } else if !runs.last().unwrap().is_empty() {
                runs.push(Vec::new());
            }
        }
        for run in runs.iter().filter(|r| !r.is_empty()) {
            let pts: Vec<String> = run.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                pts.join(" ")
            );
        }
        let ly = top + 10.0 + 18.0 * k as f64;
        let lx = left + pw + 15.0;
        let _ = writeln!(s, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#, lx + 20.0);
        let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, lx + 26.0, ly + 4.0, escape(&series.label));
    }
    s.push_str("</svg>\n");
    s
}

/// Writes `<experiment>-<stamp>.<ext>` files into one directory.
#[derive(Debug, Clone)]
pub struct Emitter {
    pub dir: PathBuf,
    pub stamp: String,
}

impl Emitter {
    /// Creates `dir` if needed and fixes the timestamp for this run.
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        Ok(Self { dir, stamp: chrono::Utc::now().format("%Y%m%dT%H%M%SZ").to_string() })
    }

    pub fn path(&self, experiment: &str, ext: &str) -> PathBuf {
        self.dir.join(format!("{experiment}-{}.{ext}", self.stamp))
    }

    pub fn csv<T: Tabular>(&self, experiment: &str, rows: &[T]) -> Result<PathBuf> {
        let p = self.path(experiment, "csv");
        write_csv_file(rows, &p)?;
        Ok(p)
    }

    pub fn json<T: Serialize + ?Sized>(&self, experiment: &str, value: &T) -> Result<PathBuf> {
        let p = self.path(experiment, "json");
        write_json_file(value, &p)?;
        Ok(p)
    }

    pub fn svg(&self, experiment: &str, fig: &Figure) -> Result<PathBuf> {
        let p = self.path(experiment, "svg");
        write_svg_file(fig, &p)?;
        Ok(p)
    }

    /// Provenance record `<experiment>-<stamp>.scenario.json`.
    pub fn provenance<T: Serialize + ?Sized>(&self, experiment: &str, scenario: &T) -> Result<PathBuf> {
        let p = self.path(experiment, "scenario.json");
        write_json_file(scenario, &p)?;
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::figures::Series;

    #[test]
    fn empty_table_is_header_only() {
        let mut buf = Vec::new();
        write_csv::<RmseRow, _>(&[], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "sweep_axis,sweep_value,estimator,rmse_r_m,rmse_theta_deg,n_trials,n_failed\n"
        );
    }

    #[test]
    fn two_point_series_has_two_vertices() {
        let fig = Figure {
            name: "t".into(),
            title: "T".into(),
            x_label: "x".into(),
            y_label: "y".into(),
            series: vec![Series { label: "a".into(), x: vec![0.0, 1.0], y: vec![2.0, 3.0] }],
            notes: vec![],
        };
        let svg = render_svg(&fig);
        let poly = svg.lines().find(|l| l.starts_with("<polyline")).unwrap();
        let pts = poly.split("points=\"").nth(1).unwrap().trim_end_matches("\"/>");
        assert_eq!(pts.split(' ').count(), 2);
        assert!(svg.contains(">x</text>") && svg.contains(">y</text>") && svg.contains(">a</text>"));
    }

    #[test]
    fn io_errors_carry_path() {
        let err = write_json_file(&1, Path::new("/nonexistent-dir/x.json")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent-dir/x.json"));
    }
}
