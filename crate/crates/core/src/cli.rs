//! Command-line front end.
//!
//! Scenario resolution order: built-in defaults, then `--config`, then each
//! `--set key.path=value`, then the dedicated flags (`--seed`, `--trials`,
//! `--pulses`). Every command prints one JSON document on standard output
//! holding the resolved scenario and its results or output paths.

use crate::crlb::{crlb_curve, fim, CrlbSweep};
use crate::error::Error;
use crate::estimators::{run_method, EstimatorOptions, Method};
use crate::experiments::emit::figure_points;
use crate::experiments::{
    eqsnr_table, monte_carlo, reproduce_curves, CurveOptions, Emitter, FigureKind, OffsetKind, Scenario,
    Sweep, SweepAxis, EQSNR_SIGMAS,
};
use crate::model::{draw_pulse, white_noise_variance, SignalMatrix};
use crate::noise_stats::{covariance_model, equalized_snr_model, structure_report};
use crate::quadrature::QuadOptions;
use crate::rng::child_seed;
use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "fdamimo", version, about = "FDA-MIMO range-angle estimation under carrier frequency offsets")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Scenario JSON file (SI units, angles in degrees).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Dotted override, e.g. `offsets.sigma_t=250`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub overrides: Vec<String>,
    /// Output directory.
    #[arg(long, default_value = "out", global = true)]
    pub out: PathBuf,
    /// Master seed for every random draw.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Monte-Carlo trials.
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    /// Pulses per trial (equalized-SNR commands: pulses per point).
    #[arg(long, global = true)]
    pub pulses: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TableChoice {
    Tx,
    Rx,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AxisChoice {
    /// σ_t, given as σ_t/Δf
    SigmaT,
    /// σ_r, given as σ_r/Δf
    SigmaR,
    /// white-noise SNR in dB
    Snr,
}

#[derive(Debug, Args, Default)]
pub struct SweepArgs {
    /// Sweep axis.
    #[arg(long, value_enum)]
    pub axis: Option<AxisChoice>,
    /// Offset ratios as `start:step:count`.
    #[arg(long = "sigma-over-df", value_name = "START:STEP:COUNT")]
    pub sigma_over_df: Option<String>,
    /// Explicit comma-separated sweep values.
    #[arg(long, value_delimiter = ',')]
    pub values: Vec<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw pulses for the scenario and report the offset-noise structure.
    Simulate,
    /// Reproduce the equalized-SNR tables.
    Eqsnr {
        #[arg(long, value_enum, default_value = "both")]
        table: TableChoice,
        #[arg(long = "sigma-over-df", value_name = "START:STEP:COUNT")]
        sigma_over_df: Option<String>,
    },
    /// Run estimators on one trial of the scenario.
    Estimate {
        /// Estimator; repeatable. Defaults to the scenario's list.
        #[arg(long)]
        method: Vec<String>,
    },
    /// Fisher information and CRLBs, optionally along a sweep.
    Crlb {
        #[command(flatten)]
        sweep: SweepArgs,
    },
    /// Monte-Carlo RMSE table.
    Mc {
        #[arg(long)]
        method: Vec<String>,
        #[command(flatten)]
        sweep: SweepArgs,
    },
    /// Reproduce figure curves as CSV, SVG and JSON.
    Figures {
        /// Figure name or `all`.
        #[arg(long, default_value = "all")]
        figure: String,
        #[arg(long = "sigma-over-df", value_name = "START:STEP:COUNT")]
        sigma_over_df: Option<String>,
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,
    },
}

/// Parses `start:step:count`.
pub fn parse_range(spec: &str) -> Result<Vec<f64>, Error> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || Error::Config(format!("expected START:STEP:COUNT, got {spec:?}"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let start: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let step: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let count: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if count == 0 {
        return Err(bad());
    }
    Ok((0..count).map(|k| start + step * k as f64).collect())
}

fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, p) => *b = p,
    }
}

/// Applies `a.b.c=value`; the value is read as JSON when it parses, else as
/// a string.
pub fn apply_override(doc: &mut Value, assignment: &str) -> Result<(), Error> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {assignment:?} is not KEY=VALUE")))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(Error::Config(format!("bad override path {path:?}")));
    }
    let mut node = doc;
    for key in &keys[..keys.len() - 1] {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| Error::Config(format!("override path {path:?} crosses a non-object")))?;
        node = obj.entry(key.to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    node.as_object_mut()
        .ok_or_else(|| Error::Config(format!("override path {path:?} crosses a non-object")))?
        .insert(keys[keys.len() - 1].to_string(), value);
    Ok(())
}

/// Resolves the scenario from defaults, config file and overrides.
pub fn resolve_scenario(common: &Common) -> Result<Scenario, Error> {
    let mut doc = serde_json::to_value(Scenario::default()).expect("default scenario serializes");
    if let Some(path) = &common.config {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.clone(), source })?;
        let file: Value =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if !file.is_object() {
            return Err(Error::Config(format!("{}: top level must be an object", path.display())));
        }
        merge(&mut doc, file);
    }
    for o in &common.overrides {
        apply_override(&mut doc, o)?;
    }
    let mut scn: Scenario = serde_json::from_value(doc).map_err(|e| Error::Config(format!("scenario: {e}")))?;
    if let Some(s) = common.seed {
        scn.seed = s;
    }
    if let Some(t) = common.trials {
        scn.n_trials = t;
    }
    if let Some(p) = common.pulses {
        scn.n_pulses = p;
    }
    scn.validate()?;
    Ok(scn)
}

fn parse_methods(names: &[String], fallback: &[Method]) -> Result<Vec<Method>, Error> {
    if names.is_empty() {
        return Ok(fallback.to_vec());
    }
    names.iter().map(|n| n.parse()).collect()
}

fn sweep_values(range: &Option<String>, values: &[f64]) -> Result<Option<Vec<f64>>, Error> {
    match (range, values.is_empty()) {
        (Some(r), _) => parse_range(r).map(Some),
        (None, false) => Ok(Some(values.to_vec())),
        (None, true) => Ok(None),
    }
}

fn configure_threads() -> Result<(), Error> {
    if let Ok(v) = std::env::var("FDAMIMO_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| Error::Config(format!("FDAMIMO_THREADS must be a positive integer, got {v:?}")))?;
        // A pool may already exist when called twice in one process; that is fine.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn paths(list: &[PathBuf]) -> Vec<String> {
    list.iter().map(|p| p.display().to_string()).collect()
}

fn execute(cli: &Cli) -> anyhow::Result<Value> {
    configure_threads()?;
    let mut scn = resolve_scenario(&cli.common)?;
    let out = &cli.common.out;
    match &cli.command {
        Command::Simulate => {
            let cfg = &scn.radar;
            let targets = scn.target_list();
            let offsets = scn.offsets.with_seed(child_seed(scn.seed, 0));
            let pulses = (0..scn.n_pulses as u64)
                .map(|p| draw_pulse(cfg, &targets, &offsets, scn.snr(), p))
                .collect::<crate::Result<Vec<SignalMatrix>>>()?;
            let sigma0_sq = white_noise_variance(cfg, &targets, scn.snr());
            let cov = covariance_model(cfg, &targets[0], &offsets, sigma0_sq)?;
            let report = json!({
                "equalized_snr_model_db": crate::estimators::json_f64(equalized_snr_model(cfg, &targets[0], &offsets)?),
                "validity": offsets.validity(cfg),
                "structure": structure_report(&cov)?,
                "pulses": pulses,
            });
            let em = Emitter::new(out)?;
            let written = vec![em.json("simulate", &report)?, em.provenance("simulate", &scn)?];
            Ok(json!({ "scenario": scn, "outputs": paths(&written) }))
        }
        Command::Eqsnr { table, sigma_over_df } => {
            let sigmas = sweep_values(sigma_over_df, &[])?.unwrap_or_else(|| EQSNR_SIGMAS.to_vec());
            let pulses = cli.common.pulses.unwrap_or(1000);
            let kinds: Vec<OffsetKind> = match table {
                TableChoice::Tx => vec![OffsetKind::Tx],
                TableChoice::Rx => vec![OffsetKind::Rx],
                TableChoice::Both => vec![OffsetKind::Tx, OffsetKind::Rx],
            };
            let em = Emitter::new(out)?;
            let mut written = Vec::new();
            let mut tables = Vec::new();
            for kind in kinds {
                let t = eqsnr_table(kind, &sigmas, pulses, scn.seed, QuadOptions::default())?;
                let name = format!("eqsnr-{}", kind.name());
                written.push(em.csv(&name, &t.rows)?);
                written.push(em.json(&name, &t)?);
                tables.push(t);
            }
            written.push(em.provenance("eqsnr", &scn)?);
            Ok(json!({ "scenario": scn, "tables": tables, "outputs": paths(&written) }))
        }
        Command::Estimate { method } => {
            let methods = parse_methods(method, &scn.estimators)?;
            scn.estimators = methods.clone();
            let cfg = &scn.radar;
            let targets = scn.target_list();
            let offsets = scn.offsets.with_seed(child_seed(scn.seed, 0));
            let x = crate::model::draw_stack(cfg, &targets, &offsets, scn.snr(), scn.n_pulses)?;
            let grid = scn.grid_spec();
            let opts = EstimatorOptions {
                tau: scn.tau,
                sigma0_sq: white_noise_variance(cfg, &targets, scn.snr()),
                anm: scn.anm,
            };
            let mut estimates = Vec::new();
            for m in methods {
                let n = if m == Method::MusicRows { scn.distinct_directions() } else { targets.len() };
                estimates.extend(run_method(m, cfg, &x, &grid, n, &opts)?);
            }
            Ok(json!({ "scenario": scn, "estimates": estimates }))
        }
        Command::Crlb { sweep } => {
            let cfg = &scn.radar;
            let target = scn.target_list()[0];
            let offsets = scn.offsets.with_seed(scn.seed);
            let sigma0_sq = white_noise_variance(cfg, &[target], scn.snr());
            let values = sweep_values(&sweep.sigma_over_df, &sweep.values)?;
            match (sweep.axis, values) {
                (None, None) => {
                    let f = fim(cfg, &target, &offsets, sigma0_sq, scn.n_pulses)?;
                    Ok(json!({ "scenario": scn, "fim": f }))
                }
                (Some(axis), Some(values)) => {
                    let (kind, vals): (CrlbSweep, Vec<f64>) = match axis {
                        AxisChoice::SigmaT => (CrlbSweep::SigmaT, values.iter().map(|v| v * cfg.delta_f).collect()),
                        AxisChoice::SigmaR => (CrlbSweep::SigmaR, values.iter().map(|v| v * cfg.delta_f).collect()),
                        AxisChoice::Snr => (CrlbSweep::Snr, values),
                    };
                    let curve = crlb_curve(cfg, &target, &offsets, sigma0_sq, scn.n_pulses, kind, &vals)?;
                    let em = Emitter::new(out)?;
                    let written = vec![em.csv("crlb", &curve.rows)?, em.json("crlb", &curve)?, em.provenance("crlb", &scn)?];
                    Ok(json!({ "scenario": scn, "curve": curve, "outputs": paths(&written) }))
                }
                _ => Err(Error::Config("a sweep needs both --axis and values".into()).into()),
            }
        }
        Command::Mc { method, sweep } => {
            scn.estimators = parse_methods(method, &scn.estimators)?;
            if let Some(values) = sweep_values(&sweep.sigma_over_df, &sweep.values)? {
                let axis = match sweep.axis {
                    Some(AxisChoice::SigmaT) => SweepAxis::SigmaTOverDf,
                    Some(AxisChoice::SigmaR) => SweepAxis::SigmaROverDf,
                    Some(AxisChoice::Snr) => SweepAxis::SnrDb,
                    None => return Err(Error::Config("sweep values need --axis".into()).into()),
                };
                scn.sweep = Sweep { axis, values };
            }
            scn.validate()?;
            let table = monte_carlo(&scn)?;
            let em = Emitter::new(out)?;
            let written = vec![em.csv("mc", &table.rows)?, em.json("mc", &table)?, em.provenance("mc", &scn)?];
            Ok(json!({ "scenario": scn, "rows": table.rows, "outputs": paths(&written) }))
        }
        Command::Figures { figure, sigma_over_df, values } => {
            let kinds: Vec<FigureKind> = if figure == "all" {
                FigureKind::ALL.to_vec()
            } else {
                vec![figure.parse()?]
            };
            let opts = CurveOptions { axis: sweep_values(sigma_over_df, values)?, ..CurveOptions::default() };
            let em = Emitter::new(out)?;
            let mut written = Vec::new();
            for kind in kinds {
                for fig in reproduce_curves(kind, &scn, &opts)? {
                    written.push(em.csv(&fig.name, &figure_points(&fig))?);
                    written.push(em.svg(&fig.name, &fig)?);
                    written.push(em.json(&fig.name, &fig)?);
                    written.push(em.provenance(&fig.name, &json!({ "scenario": scn, "curve_options": opts }))?);
                }
            }
            Ok(json!({ "scenario": scn, "outputs": paths(&written) }))
        }
    }
}

/// Exit code for an error: 2 for configuration problems, 1 otherwise.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    match err.downcast_ref::<Error>() {
        Some(Error::Config(_)) => 2,
        _ => 1,
    }
}

/// Parses `argv`, runs the command and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli).context("fdamimo") {
        Ok(v) => {
            use std::io::Write;
            // A closed reader (`| head`) is not a failure of the run.
            let _ = writeln!(std::io::stdout().lock(), "{}", serde_json::to_string_pretty(&v).expect("json output"));
            0
        }
        Err(e) => {
            eprintln!("error: {}", e.root_cause());
            exit_code(&e)
        }
    }
}
