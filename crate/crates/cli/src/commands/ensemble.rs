use std::path::{Path, PathBuf};
use std::time::Instant;

use increg_core::ensemble::{optimize_ensemble, EnsembleConfig, EnsembleRun};
use increg_core::io::{save_poses, PoseFile, RunManifest, POSES_FILE};
use serde::{Deserialize, Serialize};

use super::{create_out, finish_manifest, poses_path, read_poses};
use crate::settings::{require, resolve, usage, CliError};
use crate::EnsembleFlags;

#[derive(Debug, Serialize, Deserialize)]
#[serde(default)]
struct Settings {
    runs: Vec<PathBuf>,
    max_iters: usize,
    cost_tol: f64,
    depth_decay: f64,
    seed: u64,
    out: Option<PathBuf>,
}

impl Default for Settings {
    fn default() -> Self {
        let cfg = EnsembleConfig::default();
        Self { runs: Vec::new(), max_iters: cfg.max_iters, cost_tol: cfg.cost_tol, depth_decay: cfg.depth_decay, seed: 0, out: None }
    }
}

#[derive(Serialize)]
struct SequenceRecord {
    run: String,
    scale: f64,
    quaternion_wxyz: [f64; 4],
    translation: [f64; 3],
}

pub fn run(config: Option<&Path>, flags: &EnsembleFlags) -> Result<(), CliError> {
    let s: Settings = resolve(config, "ensemble", flags)?;
    let out = require(&s.out, "out")?;
    if s.runs.len() < 2 {
        return usage(format!("--runs needs at least two reconstructions, got {}", s.runs.len()));
    }
    if !(s.cost_tol.is_finite() && s.cost_tol >= 0.0 && s.depth_decay.is_finite() && s.depth_decay >= 0.0) {
        return usage("--cost-tol and --depth-decay must be non-negative numbers");
    }
    let mut runs = Vec::new();
    let mut intrinsics = None;
    for path in &s.runs {
        let file = read_poses(path)?;
        intrinsics = intrinsics.or(file.intrinsics);
        runs.push(EnsembleRun { poses: file.poses()?, depths: file.depths() });
    }
    let cfg = EnsembleConfig { num_runs: runs.len(), max_iters: s.max_iters, cost_tol: s.cost_tol, depth_decay: s.depth_decay };
    let t = Instant::now();
    let global = optimize_ensemble(&runs, &cfg)?;
    let elapsed = t.elapsed();

    create_out(&out)?;
    let mut poses = PoseFile::from_poses(&global.poses, None);
    poses.intrinsics = intrinsics;
    let written = vec![out.join(POSES_FILE), out.join("cost_trace.csv"), out.join("sequence.json")];
    save_poses(&written[0], &poses)?;
    let mut trace = String::from("iteration,cost\n");
    for (i, c) in global.trace.iter().enumerate() {
        trace.push_str(&format!("{i},{c}\n"));
    }
    std::fs::write(&written[1], trace)?;
    let sequence: Vec<_> = global
        .sequence
        .iter()
        .zip(&s.runs)
        .map(|(t, p)| SequenceRecord {
            run: poses_path(p).display().to_string(),
            scale: t.scale,
            quaternion_wxyz: t.rotation.to_quaternion_wxyz(),
            translation: [t.translation.x, t.translation.y, t.translation.z],
        })
        .collect();
    std::fs::write(&written[2], serde_json::to_string_pretty(&sequence)? + "\n")?;

    let mut manifest = RunManifest::new("ensemble", serde_json::to_value(&s)?, s.seed);
    manifest.timings_s.insert("optimize".into(), elapsed.as_secs_f64());
    manifest.extra.insert("cost".into(), global.cost.into());
    manifest.extra.insert("iterations".into(), (global.trace.len() - 1).into());
    finish_manifest(&out, manifest, &written)?;
    println!("merged {} runs  cost {:.6e}  iterations {}", runs.len(), global.cost, global.trace.len() - 1);
    Ok(())
}
