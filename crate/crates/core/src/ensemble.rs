//! Combines several reconstructions of the same views, each in its own
//! frame, into one pose set by alternating minimization of
//! `Σₖ Σᵢ wₖᵢ [d(Rᵢ, R′ₖRₖᵢ)² + ‖tᵢ − (sₖR′ₖtₖᵢ + t′ₖ)‖²]`
//! where `wₖᵢ` decays with the view's depth in run `k`.
//!
//! Every update is accepted only when it does not increase its share of the
//! cost, so the cost trace is non-increasing.

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{rotation_geodesic_sq, umeyama_sim3, GeometryError, Rotation, Se3Pose, Sim3Transform};

const KARCHER_ITERS: usize = 50;
const KARCHER_TOL: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnsembleError {
    #[error("need at least two runs, got {0}")]
    TooFewRuns(usize),
    #[error("runs disagree on the number of views")]
    ViewCountMismatch,
    #[error("run {run}: {source}")]
    Degenerate { run: usize, source: GeometryError },
}

/// Poses of one reconstruction with the tree depth of each view; missing
/// views carry no weight.
#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleRun {
    pub poses: Vec<Option<Se3Pose<f64>>>,
    pub depths: Vec<Option<usize>>,
}

impl EnsembleRun {
    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    /// `w(d)` for every view, zero where the pose or depth is missing.
    pub fn weights(&self, decay: f64) -> Vec<f64> {
        let d_max = self.depths.iter().zip(&self.poses).filter_map(|(d, p)| p.and(*d)).max().unwrap_or(0);
        self.poses
            .iter()
            .zip(&self.depths)
            .map(|(p, d)| match (p, d) {
                (Some(_), Some(d)) => depth_weight_with(*d, d_max, decay),
                _ => 0.0,
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnsembleConfig {
    pub num_runs: usize,
    pub max_iters: usize,
    pub cost_tol: f64,
    /// `w(d) = exp(−decay·d/d_max)`.
    pub depth_decay: f64,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self { num_runs: 3, max_iters: 100, cost_tol: 1e-9, depth_decay: 5.0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GlobalPoseSet {
    /// `None` for views missing from every run.
    pub poses: Vec<Option<Se3Pose<f64>>>,
    /// Maps each run's frame into the global one.
    pub sequence: Vec<Sim3Transform<f64>>,
    pub cost: f64,
    /// Cost at initialization followed by the cost after every iteration.
    pub trace: Vec<f64>,
}

/// `exp(−5·d/d_max)`, or 1 when `d_max = 0`.
pub fn depth_weight(d: usize, d_max: usize) -> f64 {
    depth_weight_with(d, d_max, 5.0)
}

fn depth_weight_with(d: usize, d_max: usize, decay: f64) -> f64 {
    if d_max == 0 {
        1.0
    } else {
        (-decay * d as f64 / d_max as f64).exp()
    }
}

fn term(global: &Se3Pose<f64>, seq: &Sim3Transform<f64>, local: &Se3Pose<f64>) -> f64 {
    let rot = rotation_geodesic_sq(&global.rotation, &(seq.rotation * local.rotation));
    rot + (global.center - seq.apply(&local.center)).norm_squared()
}

fn run_cost(run: &EnsembleRun, w: &[f64], globals: &[Option<Se3Pose<f64>>], seq: &Sim3Transform<f64>) -> f64 {
    run.poses
        .iter()
        .zip(w)
        .zip(globals)
        .filter(|((_, w), _)| **w > 0.0)
        .map(|((p, w), g)| match (p, g) {
            (Some(p), Some(g)) => w * term(g, seq, p),
            _ => 0.0,
        })
        .sum()
}

/// The objective evaluated with the default depth weights.
pub fn ensemble_cost(runs: &[EnsembleRun], global: &GlobalPoseSet) -> f64 {
    cost_with(runs, &weights(runs, 5.0), &global.poses, &global.sequence)
}

fn cost_with(runs: &[EnsembleRun], w: &[Vec<f64>], globals: &[Option<Se3Pose<f64>>], seq: &[Sim3Transform<f64>]) -> f64 {
    runs.iter().zip(w).zip(seq).map(|((r, w), s)| run_cost(r, w, globals, s)).sum()
}

fn weights(runs: &[EnsembleRun], decay: f64) -> Vec<Vec<f64>> {
    runs.iter().map(|r| r.weights(decay)).collect()
}

/// Weighted Karcher mean on SO(3), started from the projected chordal mean.
pub fn weighted_rotation_mean(rotations: &[Rotation<f64>], w: &[f64]) -> Option<Rotation<f64>> {
    let total: f64 = w.iter().sum();
    if !(total > 0.0) {
        return None;
    }
    let chordal = rotations.iter().zip(w).fold(Matrix3::zeros(), |acc, (r, w)| acc + r.matrix() * *w);
    let mut mean = Rotation::project(&chordal);
    for _ in 0..KARCHER_ITERS {
        let delta = rotations
            .iter()
            .zip(w)
            .fold(Vector3::zeros(), |acc, (r, w)| acc + (mean.transpose() * *r).log() * *w)
            / total;
        mean = mean * Rotation::exp(&delta);
        if delta.norm() < KARCHER_TOL {
            break;
        }
    }
    Some(mean)
}

/// Candidate sequence transforms for one run given the global poses.
fn step_a_candidates(
    run: &EnsembleRun,
    w: &[f64],
    globals: &[Option<Se3Pose<f64>>],
) -> Result<Vec<Sim3Transform<f64>>, GeometryError> {
    let mut src = Vec::new();
    let mut dst = Vec::new();
    let mut ws = Vec::new();
    let mut rel = Vec::new();
    for ((p, w), g) in run.poses.iter().zip(w).zip(globals) {
        if let (Some(p), Some(g), true) = (p, g, *w > 0.0) {
            src.push(p.center);
            dst.push(g.center);
            ws.push(*w);
            rel.push(g.rotation * p.rotation.transpose());
        }
    }
    let mut out = vec![umeyama_sim3(&src, &dst, &ws)?];
    // rotation from the rotation term, then scale and translation in closed form
    if let Some(r) = weighted_rotation_mean(&rel, &ws) {
        let total: f64 = ws.iter().sum();
        let y: Vec<Vector3<f64>> = src.iter().map(|x| r.apply(x)).collect();
        let y_bar = y.iter().zip(&ws).fold(Vector3::zeros(), |a, (y, w)| a + y * *w) / total;
        let t_bar = dst.iter().zip(&ws).fold(Vector3::zeros(), |a, (t, w)| a + t * *w) / total;
        let (mut num, mut den) = (0.0, 0.0);
        for ((y, t), w) in y.iter().zip(&dst).zip(&ws) {
            num += w * (t - t_bar).dot(&(y - y_bar));
            den += w * (y - y_bar).norm_squared();
        }
        let s = num / den;
        if s > 0.0 && s.is_finite() {
            out.push(Sim3Transform { scale: s, rotation: r, translation: t_bar - y_bar * s });
        }
    }
    Ok(out)
}

fn step_b(
    runs: &[EnsembleRun],
    w: &[Vec<f64>],
    seq: &[Sim3Transform<f64>],
    v: usize,
    current: Option<Se3Pose<f64>>,
) -> Option<Se3Pose<f64>> {
    let mut rots = Vec::new();
    let mut ws = Vec::new();
    let mut center = Vector3::zeros();
    for ((run, w), s) in runs.iter().zip(w).zip(seq) {
        if let (Some(p), true) = (run.poses[v], w[v] > 0.0) {
            rots.push(s.rotation * p.rotation);
            ws.push(w[v]);
            center += s.apply(&p.center) * w[v];
        }
    }
    let total: f64 = ws.iter().sum();
    let rotation = weighted_rotation_mean(&rots, &ws)?;
    let candidate = Se3Pose::new(rotation, center / total);
    let view_cost = |g: &Se3Pose<f64>| {
        runs.iter()
            .zip(w)
            .zip(seq)
            .filter_map(|((r, w), s)| r.poses[v].map(|p| w[v] * term(g, s, &p)))
            .sum::<f64>()
    };
    match current {
        Some(c) if view_cost(&c) < view_cost(&candidate) => Some(c),
        _ => Some(candidate),
    }
}

/// Alternating minimization of the ensemble objective. The run with the
/// largest total weight fixes the gauge: its sequence transform stays the
/// identity, since shrinking every center and scale together would otherwise
/// lower the cost without bound.
pub fn optimize_ensemble(runs: &[EnsembleRun], cfg: &EnsembleConfig) -> Result<GlobalPoseSet, EnsembleError> {
    if runs.len() < 2 {
        return Err(EnsembleError::TooFewRuns(runs.len()));
    }
    let n = runs[0].len();
    if runs.iter().any(|r| r.len() != n || r.depths.len() != n) {
        return Err(EnsembleError::ViewCountMismatch);
    }
    let w = weights(runs, cfg.depth_decay);
    let init = (0..runs.len())
        .max_by(|&a, &b| w[a].iter().sum::<f64>().total_cmp(&w[b].iter().sum::<f64>()).then(b.cmp(&a)))
        .expect("at least two runs");
    let mut globals = runs[init].poses.clone();
    for (v, g) in globals.iter_mut().enumerate() {
        if g.is_none() {
            *g = runs.iter().find_map(|r| r.poses[v]);
        }
    }
    let mut seq = vec![Sim3Transform::identity(); runs.len()];
    let mut cost = cost_with(runs, &w, &globals, &seq);
    let mut trace = vec![cost];

    for _ in 0..cfg.max_iters {
        let updated: Vec<Sim3Transform<f64>> = runs
            .par_iter()
            .zip(&w)
            .zip(&seq)
            .enumerate()
            .map(|(k, ((run, wk), current))| {
                if k == init {
                    return Ok(*current);
                }
                let candidates =
                    step_a_candidates(run, wk, &globals).map_err(|source| EnsembleError::Degenerate { run: k, source })?;
                let mut best = (*current, run_cost(run, wk, &globals, current));
                for c in candidates {
                    let value = run_cost(run, wk, &globals, &c);
                    if value < best.1 {
                        best = (c, value);
                    }
                }
                Ok(best.0)
            })
            .collect::<Result<_, EnsembleError>>()?;
        seq = updated;
        globals = (0..n).into_par_iter().map(|v| step_b(runs, &w, &seq, v, globals[v])).collect();
        let next = cost_with(runs, &w, &globals, &seq);
        debug_assert!(next <= cost * (1.0 + 1e-12) + 1e-300);
        let done = (cost - next).abs() < cfg.cost_tol;
        cost = next;
        trace.push(cost);
        if done {
            break;
        }
    }
    Ok(GlobalPoseSet { poses: globals, sequence: seq, cost, trace })
}
