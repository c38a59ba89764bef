use std::path::{Path, PathBuf};

use anyhow::Context;
use increg_core::io::{read_similarity, RunManifest, SIMILARITY_FILE};
use increg_core::registration::RegistrationPlan;
use increg_core::view_graph::{spanning_forest, TreeKind};
use serde::{Deserialize, Serialize};

use super::{create_out, finish_manifest, graph_error};
use crate::settings::{require, resolve, usage, CliError};
use crate::TreeFlags;

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(default)]
struct Settings {
    sim: Option<PathBuf>,
    scene: Option<PathBuf>,
    tree: TreeKind,
    root: Option<usize>,
    roots: Option<usize>,
    compress: usize,
    seed: u64,
    dot: bool,
    out: Option<PathBuf>,
}

pub fn run(config: Option<&Path>, flags: &TreeFlags) -> Result<(), CliError> {
    let s: Settings = resolve(config, "tree", flags)?;
    let out = require(&s.out, "out")?;
    let sim_path = match (&s.sim, &s.scene) {
        (Some(p), _) => p.clone(),
        (None, Some(dir)) => dir.join(SIMILARITY_FILE),
        (None, None) => return usage("one of --sim or --scene is required"),
    };
    let sim = read_similarity(&sim_path).with_context(|| format!("reading {}", sim_path.display()))?;
    let forest = spanning_forest(&sim, s.tree, s.root, s.roots.unwrap_or(1), s.seed).map_err(graph_error)?;
    let plan = RegistrationPlan::new(&forest, s.compress, Some(&sim))?;
    let summary = plan.forest().summary();
    create_out(&out)?;
    let mut written = vec![out.join("tree.json")];
    std::fs::write(&written[0], serde_json::to_string_pretty(&summary)? + "\n")?;
    if s.dot {
        written.push(out.join("tree.dot"));
        std::fs::write(&written[1], plan.forest().to_dot())?;
    }
    let mut manifest = RunManifest::new("tree", serde_json::to_value(&s)?, s.seed);
    manifest.bootstrap = plan.bootstrap().to_vec();
    manifest.tree = Some(summary.clone());
    finish_manifest(&out, manifest, &written)?;
    println!("views {}  roots {:?}  max depth {}", summary.n, summary.roots, summary.max_depth);
    Ok(())
}
