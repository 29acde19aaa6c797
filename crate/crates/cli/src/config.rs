//! Layered parameters: command-line flags, then a config file, then defaults.
//!
//! Every subcommand's argument struct doubles as its config-file schema, so a
//! run manifest (which records the fully resolved parameters) can be fed back
//! through `--config` to reproduce a run.

use std::path::Path;

use anyhow::{bail, Context};
use serde::de::DeserializeOwned;

use crate::UsageError;

/// Field-wise `Option::or` between two layers of the same parameter set.
pub trait Layered: Sized {
    fn or(self, fallback: Self) -> Self;
}

macro_rules! layered {
    ($ty:ty { $($field:ident),* $(,)? } $(flatten { $($nested:ident),* })?) => {
        impl $crate::config::Layered for $ty {
            fn or(self, fallback: Self) -> Self {
                Self {
                    $($field: self.$field.or(fallback.$field),)*
                    $($($nested: self.$nested.or(fallback.$nested),)*)?
                }
            }
        }
    };
}
pub(crate) use layered;

/// Reads a TOML or JSON config file for `command`.
///
/// JSON files produced as run manifests are accepted: their `params` object is
/// used, and their `command` must match.
pub fn load<T: DeserializeOwned>(path: &Path, command: &str) -> anyhow::Result<T> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config file {}", path.display()))?;
    let is_json = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"));

    let parsed = if is_json {
        let mut value: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| UsageError(format!("{}: {e}", path.display())))?;
        if let Some(obj) = value.as_object_mut() {
            if let Some(recorded) = obj.get("command").and_then(|c| c.as_str()) {
                if recorded != command {
                    bail!(UsageError(format!(
                        "{} is a manifest for `{recorded}`, not `{command}`",
                        path.display()
                    )));
                }
            }
            if let Some(params) = obj.remove("params") {
                value = params;
            }
        }
        serde_json::from_value(value).map_err(|e| UsageError(format!("{}: {e}", path.display())))?
    } else {
        toml::from_str(&text).map_err(|e| UsageError(format!("{}: {e}", path.display())))?
    };
    Ok(parsed)
}
