//! Files, presets, sweeps and the command-line driver around `semiquantum-core`.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod presets;
pub mod svg;
pub mod sweep;
pub mod table;

pub use config::RunConfig;
pub use error::{ExitCode, LabError};
pub use presets::PresetId;
