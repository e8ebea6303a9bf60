//! Scenario files, the Monte-Carlo driver, table and figure reproduction,
//! and CSV/JSON/SVG output.

pub mod emit;
pub mod figures;
pub mod monte_carlo;
pub mod scenario;
pub mod tables;

pub use emit::{render_svg, write_csv, Emitter, Tabular};
pub use figures::{reproduce_curves, CurveOptions, Figure, FigureKind, Series};
pub use monte_carlo::{match_errors, monte_carlo, run_trial, RmseRow, RmseTable, TrialErrors};
pub use scenario::{GridMode, OffsetSpec, Scenario, Sweep, SweepAxis, TargetSpec};
pub use tables::{eqsnr_scene, eqsnr_table, reproduce_eqsnr_tables, EqSnrRow, EqSnrTable, OffsetKind, EQSNR_SIGMAS};
