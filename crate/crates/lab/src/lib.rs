//! Config-driven runs and parameter sweeps on top of `kirchhoff-core`.
//!
//! A run writes `trace.csv`, `summary.json` and `constants.json` into its
//! output directory; a sweep adds `phase_table.csv` and `sweep_index.json`
//! and gives every grid point its own `row_NNNN/` subdirectory.

pub mod config;
pub mod error;
pub mod output;
pub mod run;
pub mod sweep;

pub use config::{Analysis, RunConfig};
pub use error::{LabError, LabResult};
pub use run::{run, Workspace};
pub use sweep::{sweep, Axis, SweepTable};
