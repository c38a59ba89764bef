//! Flag/config-file merging. Every subcommand's flags are optional; the
//! effective settings are the config file overlaid with the given flags,
//! with the seed falling back to `REGIST_SEED` and then 0.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

pub const SEED_ENV: &str = "REGIST_SEED";

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Runtime(e) => write!(f, "{e:#}"),
        }
    }
}

impl<E: Into<anyhow::Error>> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError::Runtime(e.into())
    }
}

pub fn usage<T>(msg: impl Into<String>) -> Result<T, CliError> {
    Err(CliError::Usage(msg.into()))
}

/// Top-level keys shared by all commands, and the command's own section.
fn load_file(path: &Path, section: &str) -> Result<(Map<String, Value>, Map<String, Value>), CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let value: Value =
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
    let Value::Object(mut map) = value else {
        return usage("config file must hold a JSON object");
    };
    // a run manifest replays its own command's settings
    if let (Some(Value::String(command)), Some(Value::Object(config))) = (map.get("command"), map.get("config")) {
        if command != section {
            return usage(format!("manifest records a '{command}' run, not '{section}'"));
        }
        return Ok((Map::new(), config.clone()));
    }
    let own = match map.remove(section) {
        Some(Value::Object(sub)) => sub,
        Some(_) => return usage(format!("config section '{section}' must be an object")),
        None => Map::new(),
    };
    map.retain(|k, _| !is_section(k));
    Ok((map, own))
}

/// Resolves settings of type `S` from an optional config file and the flag
/// struct `F`, whose unset options serialize as `null`. Top-level config
/// keys that are not flags of this command are ignored; keys in the
/// command's own section must be flags. The section wins over top-level keys.
pub fn resolve<F: Serialize, S: DeserializeOwned>(config: Option<&Path>, section: &str, flags: &F) -> Result<S, CliError> {
    let Value::Object(given) = serde_json::to_value(flags).expect("flags serialize") else {
        unreachable!("flag structs serialize to objects")
    };
    let (mut map, own) = match config {
        Some(p) => load_file(p, section)?,
        None => Default::default(),
    };
    if let Some(key) = own.keys().find(|k| !given.contains_key(*k)) {
        return usage(format!("unknown key '{key}' in config section '{section}'"));
    }
    map.retain(|k, _| given.contains_key(k));
    map.extend(own);
    map.extend(given.into_iter().filter(|(_, v)| !v.is_null()));
    if !map.contains_key("seed") {
        if let Ok(s) = std::env::var(SEED_ENV) {
            let seed: u64 = s.trim().parse().map_err(|_| CliError::Usage(format!("{SEED_ENV}={s} is not a seed")))?;
            map.insert("seed".into(), seed.into());
        }
    }
    serde_json::from_value(Value::Object(map)).map_err(|e| CliError::Usage(e.to_string()))
}

fn is_section(key: &str) -> bool {
    matches!(key, "simulate" | "reconstruct" | "ensemble" | "evaluate" | "tree" | "serve")
}

pub fn require<T: Clone>(value: &Option<T>, flag: &str) -> Result<T, CliError> {
    value.clone().ok_or_else(|| CliError::Usage(format!("missing required --{flag}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;

    #[derive(Serialize)]
    struct Flags {
        views: Option<usize>,
        seed: Option<u64>,
        scene: Option<String>,
    }

    #[derive(Deserialize, Debug, PartialEq)]
    #[serde(default)]
    struct Settings {
        views: usize,
        seed: u64,
        scene: String,
    }

    impl Default for Settings {
        fn default() -> Self {
            Self { views: 8, seed: 0, scene: "orbit".into() }
        }
    }

    #[test]
    fn flags_override_file_and_sections_override_top_level() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"views": 4, "seed": 3, "scene": "line", "simulate": {"views": 6}}"#).unwrap();
        let s: Settings = resolve(Some(&path), "simulate", &Flags { views: None, seed: None, scene: None }).unwrap();
        assert_eq!(s, Settings { views: 6, seed: 3, scene: "line".into() });
        let s: Settings = resolve(Some(&path), "tree", &Flags { views: Some(9), seed: None, scene: None }).unwrap();
        assert_eq!(s.views, 9);
        std::fs::write(&path, r#"{"colour": 1, "simulate": {"colour": 2}}"#).unwrap();
        let e = resolve::<_, Settings>(Some(&path), "simulate", &Flags { views: None, seed: None, scene: None });
        assert!(matches!(e, Err(CliError::Usage(_))));
        let s: Settings = resolve(Some(&path), "tree", &Flags { views: None, seed: Some(1), scene: None }).unwrap();
        assert_eq!(s.seed, 1);
    }
}
