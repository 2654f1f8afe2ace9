//! Declarative runs: TOML configuration, material presets, parallel sweeps
//! and CSV/JSON output with a manifest of content hashes.

pub mod config;
pub mod execute;
pub mod presets;

pub use config::{
    Detuning, Format, GammaStar, Observable, OutputSpec, RunConfig, SweepSpec, SweepVariable, SystemTemplate, Task,
};
pub use execute::{execute, resolve_params, resolve_workers, sweep_inputs, PointInput, PointOutcome, RunOptions, RunReport, WORKERS_ENV};
pub use presets::{bowtie_mode_volume, find_preset, list_presets, MaterialPreset, PRESETS};
