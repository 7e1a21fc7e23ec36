//! File formats: profile, frame and residual tables (CSV), triangle meshes
//! (OBJ), run summaries (`key = value` text) and run configuration (TOML).

pub mod config;
pub mod obj;
pub mod summary;
pub mod tables;

pub use config::{config_help, parse_config, ConfigKey, RunConfig, CONFIG_KEYS};
pub use obj::{obj_string, write_obj};
pub use summary::Summary;
pub use tables::{
    parse_profile, read_profile, write_frames, write_profile, write_residuals, FRAME_COLUMNS,
    RESIDUAL_COLUMNS,
};

/// Formats a double with 17 significant digits, enough to read it back exactly.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}
