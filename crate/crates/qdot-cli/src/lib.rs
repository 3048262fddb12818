//! Command-line pipeline around `qdot-core`: configuration, sweeps, CSV
//! output and SVG figures.

pub mod config;
pub mod csv_io;
pub mod figures;
pub mod sweep;

pub use config::{parse_config, ConfigError, RunConfig, SweepParameter, SweepSpec};
pub use csv_io::{read_csv, write_csv, CsvMeta};
pub use figures::{render_figures, write_figures, Figure};
pub use sweep::{run_point, run_sweep, sweep_points, SweepRow};
