use std::path::{Path, PathBuf};

use anyhow::Context;
use increg_core::evaluation::{
    acc_comp, accuracy_curves, center_alignment, pose_report, relative_pose_errors, MetricReport, MAA_THRESHOLDS,
};
use increg_core::geometry::Se3Pose;
use increg_core::io::{load_pointmap, read_scene, RunManifest};
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::{create_out, finish_manifest, read_poses};
use crate::settings::{require, resolve, usage, CliError};
use crate::EvaluateFlags;

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(default)]
struct Settings {
    pred: Option<PathBuf>,
    gt: Option<PathBuf>,
    clouds: bool,
    out: Option<PathBuf>,
}

/// Valid points of every `view_XXX.pmap` in a reconstruction directory.
fn predicted_cloud(dir: &Path, n: usize) -> Result<Vec<Vector3<f64>>, CliError> {
    let mut pts = Vec::new();
    for v in 0..n {
        let path = dir.join(format!("view_{v:03}.pmap"));
        if path.exists() {
            let (pm, _) = load_pointmap::<f64>(&path).with_context(|| format!("reading {}", path.display()))?;
            pts.extend(pm.iter_valid().map(|(_, p)| *p));
        }
    }
    Ok(pts)
}

fn cloud_metrics(pred_dir: &Path, gt_dir: &Path, pred: &[Option<Se3Pose<f64>>], gt: &[Se3Pose<f64>]) -> Result<(f64, f64), CliError> {
    if !pred_dir.is_dir() || !gt_dir.is_dir() {
        return usage("--clouds needs --pred and --gt to be directories");
    }
    let truth = read_scene(gt_dir).with_context(|| format!("reading scene {}", gt_dir.display()))?;
    let align = center_alignment(pred, gt)?;
    let pred_pts: Vec<_> = predicted_cloud(pred_dir, pred.len())?.iter().map(|p| align.apply(p)).collect();
    let gt_pts: Vec<_> = truth.views.iter().flat_map(|v| v.render.world.iter_valid().map(|(_, p)| *p)).collect();
    Ok(acc_comp(&pred_pts, &gt_pts)?)
}

pub fn run(config: Option<&Path>, flags: &EvaluateFlags) -> Result<(), CliError> {
    let s: Settings = resolve(config, "evaluate", flags)?;
    let out = require(&s.out, "out")?;
    let pred_path = require(&s.pred, "pred")?;
    let gt_path = require(&s.gt, "gt")?;
    let pred_file = read_poses(&pred_path)?;
    let gt_file = read_poses(&gt_path)?;
    let pred = pred_file.poses()?;
    let gt: Vec<Se3Pose<f64>> = gt_file
        .poses()?
        .into_iter()
        .enumerate()
        .map(|(i, p)| p.ok_or_else(|| anyhow::anyhow!("ground-truth pose {i} is missing")))
        .collect::<Result<_, _>>()?;
    if pred.len() != gt.len() {
        return usage(format!("{} predicted poses but {} ground-truth poses", pred.len(), gt.len()));
    }
    let depths = pred_file.depths();
    // depth-0 views are tree roots; the lowest-id one is the global reference
    let reference = depths.iter().position(|d| *d == Some(0));
    let mut report: MetricReport = pose_report(&pred, &gt, reference.map(|r| (depths.as_slice(), r)))?;
    if s.clouds {
        let (acc, comp) = cloud_metrics(&pred_path, &gt_path, &pred, &gt)?;
        report.acc = Some(acc);
        report.comp = Some(comp);
    }
    let errs = relative_pose_errors(&pred, &gt)?;
    let thresholds: Vec<f64> = MAA_THRESHOLDS.map(f64::from).collect();
    let curves = accuracy_curves(&errs, &thresholds);

    create_out(&out)?;
    let written = vec![out.join("report.json"), out.join("curves.csv")];
    std::fs::write(&written[0], serde_json::to_string_pretty(&report)? + "\n")?;
    let mut csv = String::from("threshold_deg,rra,rta\n");
    for ((t, r), a) in curves.thresholds.iter().zip(&curves.rra).zip(&curves.rta) {
        csv.push_str(&format!("{t},{r},{a}\n"));
    }
    std::fs::write(&written[1], csv)?;
    finish_manifest(&out, RunManifest::new("evaluate", serde_json::to_value(&s)?, 0), &written)?;
    let mut line = format!("mAA@30 = {:.4}  RRA@5 = {:.4}  RTA@5 = {:.4}", report.maa30, report.rra[0], report.rta[0]);
    if let (Some(a), Some(c)) = (report.acc, report.comp) {
        line.push_str(&format!("  Acc = {a:.4}  Comp = {c:.4}"));
    }
    println!("{line}");
    Ok(())
}
