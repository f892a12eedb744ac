//! Configuration, file formats and the command-line driver.

pub mod app;
pub mod config;
pub mod io;

pub use app::run_cli;
pub use config::{ConfigError, Formats, OutputConfig, RunConfig};
pub use io::{decode_field, encode_field, encode_image, read_field, write_field, write_image, EnergyLog, FieldFileError};
