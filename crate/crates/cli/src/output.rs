use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::Args;
use serde::Serialize;

use crate::manifest::{sidecar_path, RunManifest};

#[derive(Debug, Clone, Default, Args)]
pub struct OutputArgs {
    /// Write the JSON result here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the run manifest here (default: `<out>.manifest.json` when --out is given).
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

pub fn to_json<T: Serialize>(value: &T) -> anyhow::Result<String> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}

/// Writes `contents` to `path`, or to stdout when `path` is `None`.
pub fn emit(path: Option<&Path>, contents: &str) -> anyhow::Result<()> {
    match path {
        Some(p) => std::fs::write(p, contents).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(contents.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

/// Writes the manifest to the explicit path if given, and next to every file output.
pub fn write_manifests<P: Serialize>(
    manifest: &RunManifest<'_, P>,
    explicit: Option<&Path>,
    outputs: &[Option<&Path>],
) -> anyhow::Result<()> {
    if let Some(p) = explicit {
        manifest.write(p)?;
    }
    for out in outputs.iter().flatten() {
        manifest.write(&sidecar_path(out))?;
    }
    Ok(())
}

/// Formats a float for CSV; non-finite values become empty cells.
pub fn csv_num(x: f64) -> String {
    if x.is_finite() {
        x.to_string()
    } else {
        String::new()
    }
}
