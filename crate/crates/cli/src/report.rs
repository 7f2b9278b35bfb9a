//! Output helpers shared by the subcommands.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use dialogsynth_core::corpus::atomic_write;
use serde::Serialize;

/// `explicit` if given, else `file_name` inside the output directory
/// (created on demand).
pub fn output_path(output_dir: &Path, explicit: Option<&Path>, file_name: &str) -> Result<PathBuf> {
    let path = match explicit {
        Some(p) => p.to_path_buf(),
        None => output_dir.join(file_name),
    };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    Ok(path)
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    atomic_write(path, text.as_bytes())?;
    Ok(())
}

/// Prints a compact JSON summary on stdout.
pub fn print_summary<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string(value)?);
    Ok(())
}
