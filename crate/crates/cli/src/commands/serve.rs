use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use anyhow::Context;
use increg_core::io::read_scene;
use increg_core::predictor::wire::serve;
use increg_core::predictor::OraclePredictor;
use serde::{Deserialize, Serialize};

use super::NoiseSettings;
use crate::settings::{require, resolve, CliError};
use crate::ServeFlags;

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(default)]
struct Settings {
    scene: Option<PathBuf>,
    seed: u64,
    #[serde(flatten)]
    noise: NoiseSettings,
}

/// Answers predictor requests on stdin/stdout until the client hangs up.
pub fn run(config: Option<&Path>, flags: &crate::ServeFlags) -> Result<(), CliError> {
    let s: Settings = resolve::<ServeFlags, _>(config, "serve", flags)?;
    let scene = require(&s.scene, "scene")?;
    let truth = read_scene(&scene).with_context(|| format!("reading scene {}", scene.display()))?;
    let oracle = OraclePredictor::new(&truth, s.noise.oracle(s.seed)).map_err(|e| CliError::Usage(e.to_string()))?;
    let stats = serve(BufReader::new(std::io::stdin().lock()), BufWriter::new(std::io::stdout().lock()), &oracle)?;
    log::info!("served {} requests, {} errors", stats.requests, stats.errors);
    Ok(())
}
