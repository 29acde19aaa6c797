use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;

/// Provenance record written next to every output file.
///
/// `params` holds the fully resolved parameters; passing the manifest back
/// through `--config` reproduces the run.
#[derive(Debug, Serialize)]
pub struct RunManifest<'a, P: Serialize> {
    pub command: &'a str,
    pub version: &'static str,
    /// UTC, RFC 3339. Honors `SOURCE_DATE_EPOCH` when set.
    pub timestamp: String,
    pub seed: Option<u64>,
    pub convention: Option<&'a str>,
    pub params: &'a P,
}

impl<'a, P: Serialize> RunManifest<'a, P> {
    pub fn new(command: &'a str, params: &'a P) -> Self {
        Self {
            command,
            version: env!("CARGO_PKG_VERSION"),
            timestamp: timestamp(),
            seed: None,
            convention: None,
            params,
        }
    }

    pub fn write(&self, path: &Path) -> anyhow::Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
    }
}

fn timestamp() -> String {
    let fixed = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.trim().parse::<i64>().ok())
        .and_then(|secs| chrono::DateTime::from_timestamp(secs, 0));
    fixed
        .unwrap_or_else(chrono::Utc::now)
        .to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

/// `out.csv` → `out.csv.manifest.json`
pub fn sidecar_path(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}
