//! Configuration, run orchestration, checkpoints and output files.

mod checkpoint;
mod commands;
mod config;
mod series;
mod svg;

pub use checkpoint::{
    load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, Checkpoint, CHECKPOINT_FORMAT_VERSION,
};
pub use commands::{
    asymptotic_bound, diag_command, drifting_frame, grid_csv, load_history, profile_command, resume_command,
    run_command, summarize, write_atomic, DiagSummary, ProfileSummary, RunOutcome, ASYMPTOTIC_BOUND_CONSTANT,
    CHECKPOINT_FILE, CONFIG_FILE, DIAG_FILE, METADATA_FILE, PARTICLES_FILE, PROFILE_FILE, SERIES_FILE, SNAPSHOT_DIR,
};
pub use config::{
    parse_config, FluidFamily, GridConfig, InitConfig, IoConfig, ParticleConfig, ProfileConfig, RunConfig,
    SpatialFamily, TimeConfig, VelocityFamily, MIN_DECAY_EXPONENT,
};
pub use series::{parse_series, read_series, series_csv, series_dim};
pub use svg::{line_chart, run_charts, Curve};
