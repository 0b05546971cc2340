//! On-disk formats: grid files (JSON sidecar + raw little-endian payload)
//! and the TOML run configuration. Experiment tables are written by
//! [`crate::statlab::ExperimentTable`].

mod config;
mod grid;

pub use config::{FrameConfig, MotherConfig, RunConfig};
pub use grid::{grid_paths, AxisDesc, Dtype, GridData, GridFile, GridHeader, FORMAT_VERSION};
