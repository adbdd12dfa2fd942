use std::path::Path;

use crate::spin::{build_spin_system, SpinSystem, SystemConfig};

use super::IoError;

pub fn parse_config_str(text: &str) -> Result<SystemConfig, IoError> {
    toml::from_str(text).map_err(|e| IoError::Config(e.to_string().trim_end().to_string()))
}

pub fn parse_config(path: &Path) -> Result<SystemConfig, IoError> {
    let text = std::fs::read_to_string(path).map_err(|source| IoError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config_str(&text)
}

/// Reads and validates a spin-system file.
pub fn read_system(path: &Path) -> Result<SpinSystem, IoError> {
    Ok(build_spin_system(&parse_config(path)?)?)
}
