//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits non-zero if any fails.

use std::sync::Mutex;
use std::time::{Duration, Instant};

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use increg_core::ensemble::{optimize_ensemble, EnsembleConfig, EnsembleRun};
use increg_core::evaluation::{
    accuracy_curves, depth_profile, maa30, relative_pose_errors, terminal_error, view_errors, MAA_THRESHOLDS,
};
use increg_core::geometry::{random_rotation_uniform, ConfidenceMap, Pointmap, Rotation, Se3Pose, Sim3Transform};
use increg_core::image::RgbImage;
use increg_core::io::{pmap_to_pointmap, pointmap_to_pmap, read_pmap, write_pmap, PoseFile};
use increg_core::predictor::{
    OracleNoiseConfig, OraclePredictor, PairPrediction, PredictorError, PredictorRequest, PredictorResponse,
    StereoPredictor, ViewInput,
};
use increg_core::registration::{
    reconstruct, reconstruct_infer_then_align, ReconstructionResult, RegistrationOptions, RegistrationPlan,
};
use increg_core::scene_sim::{make_scene, SceneBundle};
use increg_core::stereo_model::{confidence_loss, LossConfig};
use increg_core::view_graph::{
    build_forest, build_mst, compress_forest, kmedoids_roots, mst_edges, spanning_forest, SimilarityMatrix,
    SpanningForest, TreeKind, ViewId,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn images(b: &SceneBundle) -> Vec<RgbImage> {
    b.truth.views.iter().map(|v| v.render.image.clone()).collect()
}

fn run_plan(b: &SceneBundle, forest: &SpanningForest, k: usize, noise: OracleNoiseConfig) -> (RegistrationPlan, ReconstructionResult) {
    let oracle = OraclePredictor::new(&b.truth, noise).unwrap();
    let plan = RegistrationPlan::new(forest, k, Some(&b.truth.overlap)).unwrap();
    let res = reconstruct(&plan, &oracle, &images(b), &RegistrationOptions::default()).unwrap();
    (plan, res)
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn maa(res: &ReconstructionResult, b: &SceneBundle) -> f64 {
    maa30(&relative_pose_errors(&res.poses, &b.truth.poses()).unwrap())
}

/// Line scene rooted at its first view, so the tree is a single deep chain.
fn drift_setup(seed: u64) -> (SceneBundle, SpanningForest) {
    let b = make_scene("line", 50, seed).unwrap();
    let tree = spanning_forest(&b.truth.overlap, TreeKind::Mst, Some(0), 1, 0).unwrap();
    (b, tree)
}

fn drift_noise(seed: u64) -> OracleNoiseConfig {
    OracleNoiseConfig { sigma_rot: 0.005, sigma_point: 0.01, seed, ..OracleNoiseConfig::default() }
}

fn zero_noise_exactness() -> Outcome {
    let mut worst_err = 0.0f64;
    let mut worst_time = Duration::ZERO;
    let mut min_maa = 1.0f64;
    let mut runs = 0;
    for (preset, n) in [("orbit", 8), ("grid", 30), ("line", 50)] {
        let b = make_scene(preset, n, 1).unwrap();
        let sim = &b.truth.overlap;
        let forests = [
            spanning_forest(sim, TreeKind::Mst, None, 1, 0).unwrap(),
            spanning_forest(sim, TreeKind::Spt, None, 1, 0).unwrap(),
            spanning_forest(sim, TreeKind::Mst, Some(n - 1), 1, 0).unwrap(),
            spanning_forest(sim, TreeKind::Mst, None, 3, 0).unwrap(),
        ];
        for forest in &forests {
            for k in 0..3 {
                let t = Instant::now();
                let (plan, res) = run_plan(&b, forest, k, OracleNoiseConfig::exact());
                worst_time = worst_time.max(t.elapsed());
                let to_root = b.truth.views[plan.global_root()].pose.world_to_camera_sim3();
                for v in 0..n {
                    let expected = to_root.apply_pointmap(&b.truth.views[v].render.world);
                    let got = &res.entry(v).expect("registered").global_pointmap;
                    worst_err = worst_err.max(got.max_abs_diff(&expected));
                }
                min_maa = min_maa.min(maa(&res, &b));
                runs += 1;
            }
        }
    }
    outcome(
        worst_err < 1e-6 && min_maa == 1.0 && worst_time < Duration::from_secs(5),
        format!("{runs} runs, max pointmap error {worst_err:.2e}, min mAA@30 {min_maa}, slowest {worst_time:.2?}"),
    )
}

fn gradient_suite() -> Outcome {
    let cfg = LossConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    let t = Instant::now();
    for _ in 0..100 {
        let (w, h) = (rng.random_range(1..5), rng.random_range(1..4));
        let n = w * h;
        let gt: Vec<Vector3<f64>> = (0..n).map(|_| Vector3::from_fn(|_, _| rng.random_range(-2.0..2.0))).collect();
        // keep every residual away from the kink at Δ = 0
        let pred: Vec<Vector3<f64>> = gt
            .iter()
            .map(|g| {
                let dir = Vector3::from_fn(|_, _| rng.random_range(-1.0..1.0)).normalize();
                g + dir * rng.random_range(0.1..1.5)
            })
            .collect();
        let conf: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..5.0)).collect();
        let loss = |p: &[Vector3<f64>], c: &[f64]| {
            let pm = Pointmap::new(w, h, p.to_vec(), vec![true; n]).unwrap();
            let gm = Pointmap::new(w, h, gt.clone(), vec![true; n]).unwrap();
            confidence_loss(&pm, &ConfidenceMap::new(w, h, c.to_vec()).unwrap(), &gm, &cfg).unwrap()
        };
        let analytic = loss(&pred, &conf);
        let step = 1e-6;
        let mut ana = Vec::new();
        let mut num = Vec::new();
        for i in 0..n {
            for a in 0..3 {
                let (mut up, mut down) = (pred.clone(), pred.clone());
                up[i][a] += step;
                down[i][a] -= step;
                num.push((loss(&up, &conf).value - loss(&down, &conf).value) / (2.0 * step));
                ana.push(analytic.grad_pred[i][a]);
            }
            let (mut up, mut down) = (conf.clone(), conf.clone());
            up[i] += step;
            down[i] -= step;
            num.push((loss(&pred, &up).value - loss(&pred, &down).value) / (2.0 * step));
            ana.push(analytic.grad_conf[i]);
        }
        let diff = ana.iter().zip(&num).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let scale = num.iter().map(|v| v * v).sum::<f64>().sqrt();
        worst = worst.max(diff / scale);
    }
    let elapsed = t.elapsed();
    outcome(
        worst < 1e-5 && cfg.alpha == 0.5 && elapsed < Duration::from_secs(1),
        format!("100 cases, worst relative error {worst:.2e}, alpha {}, {elapsed:.2?}", cfg.alpha),
    )
}

/// Every labelled tree on `n` vertices via Prüfer decoding.
fn all_spanning_trees(n: usize) -> Vec<Vec<(usize, usize)>> {
    if n == 2 {
        return vec![vec![(0, 1)]];
    }
    let len = n - 2;
    let total = n.pow(len as u32);
    (0..total)
        .map(|mut code| {
            let seq: Vec<usize> = (0..len)
                .map(|_| {
                    let d = code % n;
                    code /= n;
                    d
                })
                .collect();
            let mut degree = vec![1usize; n];
            seq.iter().for_each(|&v| degree[v] += 1);
            let mut edges = Vec::with_capacity(n - 1);
            for &v in &seq {
                let leaf = (0..n).find(|&u| degree[u] == 1).unwrap();
                edges.push((leaf, v));
                degree[leaf] -= 1;
                degree[v] -= 1;
            }
            let rest: Vec<usize> = (0..n).filter(|&u| degree[u] == 1).collect();
            edges.push((rest[0], rest[1]));
            edges
        })
        .collect()
}

fn mst_oracle() -> Outcome {
    let t = Instant::now();
    let mut failures = 0;
    for seed in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(2..=6);
        let sim = SimilarityMatrix::from_fn(n, |_, _| rng.random_range(0.0..1.0)).unwrap();
        let weight = |edges: &[(usize, usize)]| edges.iter().map(|&(a, b)| sim.distance(a, b)).sum::<f64>();
        let best = all_spanning_trees(n).iter().map(|e| weight(e)).fold(f64::INFINITY, f64::min);
        let got = weight(&mst_edges(&sim));
        let tree = build_mst(&sim);
        let tree_weight = weight(&tree.into_forest().edges());
        if (got - best).abs() > 1e-12 || (tree_weight - best).abs() > 1e-12 {
            failures += 1;
        }
    }
    let elapsed = t.elapsed();
    outcome(failures == 0 && elapsed < Duration::from_secs(10), format!("200 graphs, {failures} mismatches, {elapsed:.2?}"))
}

fn compression_law() -> Outcome {
    let t = Instant::now();
    let mut bad_chains = 0;
    for d in 1..=64usize {
        let chain = SpanningForest::from_parents((0..=d).map(|v| v.checked_sub(1)).collect()).unwrap();
        for k in 0..=6u32 {
            if compress_forest(&chain, k as usize).max_depth() != d.div_ceil(1 << k) {
                bad_chains += 1;
            }
        }
    }
    let mut bad_trees = 0;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(2..80);
        // parents drawn among earlier vertices, then relabelled
        let perm = {
            let mut p: Vec<usize> = (0..n).collect();
            for i in (1..n).rev() {
                p.swap(i, rng.random_range(0..=i));
            }
            p
        };
        let mut parent = vec![None; n];
        for v in 1..n {
            let p = rng.random_range(v.saturating_sub(4)..v);
            parent[perm[v]] = Some(perm[p]);
        }
        let tree = SpanningForest::from_parents(parent).unwrap();
        let k = rng.random_range(1..4);
        let out = compress_forest(&tree, k);
        let ancestor = |mut v: usize, a: usize| {
            while let Some(p) = tree.parent(v) {
                if p == a {
                    return true;
                }
                v = p;
            }
            false
        };
        let ok = (0..n).all(|v| match (tree.parent(v), out.parent(v)) {
            (None, None) => true,
            (Some(_), Some(q)) => ancestor(v, q),
            _ => false,
        });
        if !ok {
            bad_trees += 1;
        }
    }
    let elapsed = t.elapsed();
    outcome(
        bad_chains == 0 && bad_trees == 0 && elapsed < Duration::from_secs(1),
        format!("chains d<=64 k<=6: {bad_chains} wrong depths; 100 random trees: {bad_trees} non-ancestor parents; {elapsed:.2?}"),
    )
}

fn drift_mitigation() -> Outcome {
    let t = Instant::now();
    let mut wins = 0;
    let mut term = [Vec::new(), Vec::new()];
    let mut maas = [Vec::new(), Vec::new()];
    let mut depth = [0, 0];
    for seed in 0..20u64 {
        let (b, tree) = drift_setup(seed);
        let mut m = [0.0; 2];
        for k in 0..2 {
            let (plan, res) = run_plan(&b, &tree, k, drift_noise(seed));
            m[k] = maa(&res, &b);
            let errs = view_errors(&res.poses, &b.truth.poses(), plan.global_root()).unwrap();
            term[k].push(terminal_error(&depth_profile(&errs, &res.depths())).unwrap().pose_deg);
            maas[k].push(m[k]);
            depth[k] = depth[k].max(plan.forest().max_depth());
        }
        if m[1] > m[0] {
            wins += 1;
        }
    }
    let elapsed = t.elapsed();
    let (t0, t1) = (mean(&term[0]), mean(&term[1]));
    outcome(
        wins >= 15 && t1 < t0 && elapsed < Duration::from_secs(120),
        format!(
            "k=1 beats k=0 in {wins}/20 seeds (mean mAA@30 {:.4} vs {:.4}); terminal error {t1:.3} vs {t0:.3} deg; max depth {} vs {}; {elapsed:.1?}",
            mean(&maas[1]),
            mean(&maas[0]),
            depth[1],
            depth[0]
        ),
    )
}

fn direct_vs_align() -> Outcome {
    let t = Instant::now();
    let mut wins = 0;
    let mut direct = Vec::new();
    let mut aligned = Vec::new();
    for seed in 0..20u64 {
        let (b, tree) = drift_setup(seed);
        let plan = RegistrationPlan::new(&tree, 0, Some(&b.truth.overlap)).unwrap();
        let oracle = OraclePredictor::new(&b.truth, drift_noise(seed)).unwrap();
        let opts = RegistrationOptions::default();
        let d = maa(&reconstruct(&plan, &oracle, &images(&b), &opts).unwrap(), &b);
        let a = maa(&reconstruct_infer_then_align(&plan, &oracle, &images(&b), &opts).unwrap(), &b);
        if d >= a {
            wins += 1;
        }
        direct.push(d);
        aligned.push(a);
    }
    let elapsed = t.elapsed();
    outcome(
        wins >= 15 && elapsed < Duration::from_secs(120),
        format!(
            "direct >= infer-then-align in {wins}/20 seeds (mean mAA@30 {:.4} vs {:.4}); {elapsed:.1?}",
            mean(&direct),
            mean(&aligned)
        ),
    )
}

fn ensemble_improvement() -> Outcome {
    let t = Instant::now();
    let mut wins = 0;
    let mut monotone = 0;
    let mut single = Vec::new();
    let mut merged = Vec::new();
    for seed in 0..20u64 {
        let b = make_scene("grid", 30, seed).unwrap();
        let sim = &b.truth.overlap;
        let roots = kmedoids_roots(sim, 3, seed).unwrap();
        let gt = b.truth.poses();
        let mut runs = Vec::new();
        let mut run_maa = Vec::new();
        for (k, &root) in roots.iter().enumerate() {
            let tree = spanning_forest(sim, TreeKind::Mst, Some(root), 1, 0).unwrap();
            let noise = OracleNoiseConfig { sigma_rot: 0.01, sigma_point: 0.01, seed: 3 * seed + k as u64, ..Default::default() };
            let (_, res) = run_plan(&b, &tree, 0, noise);
            run_maa.push(maa(&res, &b));
            runs.push(EnsembleRun { poses: res.poses.clone(), depths: res.depths() });
        }
        let out = optimize_ensemble(&runs, &EnsembleConfig::default()).unwrap();
        if out.trace.windows(2).all(|w| w[1] <= w[0]) {
            monotone += 1;
        }
        let m = maa30(&relative_pose_errors(&out.poses, &gt).unwrap());
        if m >= mean(&run_maa) {
            wins += 1;
        }
        single.push(mean(&run_maa));
        merged.push(m);
    }
    // construct-and-recover on clean poses under known similarities
    let mut residual = 0.0f64;
    for seed in 0..5u64 {
        let b = make_scene("grid", 30, seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let runs: Vec<_> = (0..3)
            .map(|k| {
                let g = Sim3Transform::new(
                    rng.random_range(0.3..3.0),
                    random_rotation_uniform(&mut rng),
                    Vector3::from_fn(|_, _| rng.random_range(-5.0..5.0)),
                )
                .unwrap();
                let depths = (0..30).map(|i: usize| Some(i.abs_diff(10 * k))).collect();
                EnsembleRun { poses: b.truth.poses().iter().map(|p| Some(g.apply_pose(p))).collect(), depths }
            })
            .collect();
        residual = residual.max(optimize_ensemble(&runs, &EnsembleConfig::default()).unwrap().cost);
    }
    let elapsed = t.elapsed();
    outcome(
        wins >= 15 && monotone == 20 && residual < 1e-12,
        format!(
            "ensemble >= mean single run in {wins}/20 seeds (mAA@30 {:.4} vs {:.4}); monotone {monotone}/20; clean residual {residual:.1e}; {elapsed:.1?}",
            mean(&merged),
            mean(&single)
        ),
    )
}

fn confidence_decay() -> Outcome {
    let mut decaying = 0;
    let mut flat = 0;
    let mut total = 0;
    for seed in 0..10u64 {
        for (preset, n) in [("line", 30), ("grid", 20), ("orbit", 12)] {
            let b = make_scene(preset, n, seed).unwrap();
            let tree = build_mst(&b.truth.overlap).into_forest();
            for k in 0..2 {
                let noisy = OracleNoiseConfig { sigma_rot: 0.005, sigma_point: 0.01, conf_decay_eta: 2.0, seed, ..Default::default() };
                let (_, res) = run_plan(&b, &tree, k, noisy);
                let by_depth: Vec<f64> = res.confidence_by_depth().into_iter().flatten().collect();
                if by_depth.windows(2).all(|w| w[1] <= w[0]) {
                    decaying += 1;
                }
                let (_, res) = run_plan(&b, &tree, k, OracleNoiseConfig { conf_decay_eta: 0.0, ..noisy });
                let by_depth: Vec<f64> = res.confidence_by_depth().into_iter().flatten().collect();
                if by_depth.iter().all(|c| (c - by_depth[0]).abs() < 1e-12) {
                    flat += 1;
                }
                total += 1;
            }
        }
    }
    outcome(
        decaying == total && flat == total,
        format!("eta > 0 non-increasing in {decaying}/{total} runs; eta = 0 depth-constant in {flat}/{total}"),
    )
}

/// Independent relative-pose errors straight from rotation matrices.
fn brute_force_maa(pred: &[Option<Se3Pose<f64>>], gt: &[Se3Pose<f64>]) -> f64 {
    let angle = |m: Matrix3<f64>| ((m.trace() - 1.0) / 2.0).clamp(-1.0, 1.0).acos().to_degrees();
    let dir_angle = |a: Vector3<f64>, b: Vector3<f64>| {
        if a.norm() == 0.0 && b.norm() == 0.0 {
            0.0
        } else if a.norm() == 0.0 || b.norm() == 0.0 {
            180.0
        } else {
            (a.dot(&b) / (a.norm() * b.norm())).clamp(-1.0, 1.0).acos().to_degrees()
        }
    };
    let mut errs = Vec::new();
    for i in 0..gt.len() {
        for j in i + 1..gt.len() {
            let (Some(pi), Some(pj)) = (pred[i], pred[j]) else { continue };
            let (ri, rj) = (pi.rotation.matrix(), pj.rotation.matrix());
            let (gi, gj) = (gt[i].rotation.matrix(), gt[j].rotation.matrix());
            let rot = angle((ri.transpose() * rj).transpose() * (gi.transpose() * gj));
            let tp = ri.transpose() * (pj.center - pi.center);
            let tg = gi.transpose() * (gt[j].center - gt[i].center);
            errs.push((rot, dir_angle(tp, tg)));
        }
    }
    let total: f64 = (1..=30)
        .map(|tau| {
            let tau = tau as f64;
            let rra = errs.iter().filter(|e| e.0 < tau).count() as f64 / errs.len() as f64;
            let rta = errs.iter().filter(|e| e.1 < tau).count() as f64 / errs.len() as f64;
            rra.min(rta)
        })
        .sum();
    total / 30.0
}

fn metric_oracle() -> Outcome {
    let mut worst = 0.0f64;
    let mut worst_gauge = 0.0f64;
    for seed in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(3..15);
        let gt: Vec<Se3Pose<f64>> = (0..n)
            .map(|_| Se3Pose::new(random_rotation_uniform(&mut rng), Vector3::from_fn(|_, _| rng.random_range(-3.0..3.0))))
            .collect();
        let sigma = rng.random_range(0.0..0.5);
        let pred: Vec<Option<Se3Pose<f64>>> = gt
            .iter()
            .map(|p| {
                (rng.random::<f64>() > 0.1).then(|| {
                    let w = Vector3::from_fn(|_, _| rng.random_range(-sigma..sigma));
                    Se3Pose::new(p.rotation * Rotation::exp(&w), p.center + w * 2.0)
                })
            })
            .collect();
        let Ok(errs) = relative_pose_errors(&pred, &gt) else { continue };
        worst = worst.max((maa30(&errs) - brute_force_maa(&pred, &gt)).abs());
        let g = Sim3Transform::new(
            rng.random_range(0.1..10.0),
            random_rotation_uniform(&mut rng),
            Vector3::from_fn(|_, _| rng.random_range(-10.0..10.0)),
        )
        .unwrap();
        let moved: Vec<_> = pred.iter().map(|p| p.map(|p| g.apply_pose(&p))).collect();
        let moved_errs = relative_pose_errors(&moved, &gt).unwrap();
        for (a, b) in errs.pairs.iter().zip(&moved_errs.pairs) {
            worst_gauge = worst_gauge.max((a.rotation_deg - b.rotation_deg).abs()).max((a.translation_deg - b.translation_deg).abs());
        }
        let thresholds: Vec<f64> = MAA_THRESHOLDS.map(f64::from).collect();
        let (c0, c1) = (accuracy_curves(&errs, &thresholds), accuracy_curves(&moved_errs, &thresholds));
        for (x, y) in c0.rra.iter().chain(&c0.rta).zip(c1.rra.iter().chain(&c1.rta)) {
            worst_gauge = worst_gauge.max((x - y).abs());
        }
    }
    outcome(
        worst < 1e-12 && worst_gauge < 1e-9,
        format!("50 instances: max |mAA - brute force| {worst:.1e}; max gauge deviation {worst_gauge:.1e}"),
    )
}

/// Records which target each predict call served.
struct Recorder<P> {
    inner: P,
    predicted: Mutex<Vec<ViewId>>,
    pairs: Mutex<Vec<(ViewId, ViewId)>>,
}

impl<P: StereoPredictor> StereoPredictor for Recorder<P> {
    fn init_pair(&self, a: ViewInput<'_>, b: ViewInput<'_>) -> Result<PairPrediction, PredictorError> {
        self.pairs.lock().unwrap().push((a.id, b.id));
        self.inner.init_pair(a, b)
    }
    fn predict(&self, req: &PredictorRequest<'_>) -> Result<PredictorResponse, PredictorError> {
        self.predicted.lock().unwrap().push(req.tgt_view_id);
        self.inner.predict(req)
    }
}

fn inference_count() -> Outcome {
    let mut bad = 0;
    let mut summary = Vec::new();
    for seed in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(8..25);
        let b = make_scene("grid", n, seed).unwrap();
        let sim = SimilarityMatrix::from_fn(n, |_, _| rng.random_range(0.0..1.0)).unwrap();
        let k_roots = rng.random_range(1..=4.min(n / 2));
        let forest = build_forest(&sim, &kmedoids_roots(&sim, k_roots, seed).unwrap()).unwrap();
        let plan = RegistrationPlan::new(&forest, rng.random_range(0..3), Some(&sim)).unwrap();
        let rec = Recorder {
            inner: OraclePredictor::new(&b.truth, OracleNoiseConfig::exact()).unwrap(),
            predicted: Mutex::new(Vec::new()),
            pairs: Mutex::new(Vec::new()),
        };
        let res = reconstruct(&plan, &rec, &images(&b), &RegistrationOptions::default()).unwrap();
        let predicted = rec.predicted.into_inner().unwrap();
        let f = plan.forest();
        let per_tree_ok = f.roots().iter().all(|&r| {
            let members = f.members(r).len();
            predicted.iter().filter(|&&v| f.root_of(v) == r).count() == members - 1
        });
        let unique = {
            let mut p = predicted.clone();
            p.sort_unstable();
            p.dedup();
            p.len() == predicted.len()
        };
        let pairs = rec.pairs.into_inner().unwrap().len();
        if !(per_tree_ok && unique && res.predict_calls == predicted.len() && pairs == f.roots().len()) {
            bad += 1;
        }
        summary.push(format!("{}:{}", n, f.roots().len()));
    }
    outcome(bad == 0, format!("10 forests (views:trees {}), {bad} violations", summary.join(" ")))
}

fn io_round_trips() -> Outcome {
    let mut bad_pmap = 0;
    let mut bad_pose = 0;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (w, h) = (rng.random_range(1..20), rng.random_range(1..20));
        let valid: Vec<bool> = (0..w * h).map(|_| rng.random::<f64>() > 0.2).collect();
        let bits = |rng: &mut ChaCha8Rng| loop {
            let v = f32::from_bits(rng.random());
            if v.is_finite() {
                return v;
            }
        };
        let xyz: Vec<Vector3<f32>> =
            valid.iter().map(|v| if *v { Vector3::new(bits(&mut rng), bits(&mut rng), bits(&mut rng)) } else { Vector3::zeros() }).collect();
        let pm = Pointmap::new(w, h, xyz, valid).unwrap();
        let conf = ConfidenceMap::new(w, h, (0..w * h).map(|_| bits(&mut rng).abs().max(f32::MIN_POSITIVE)).collect()).unwrap();
        let mut buf = Vec::new();
        write_pmap(&mut buf, &pointmap_to_pmap(&pm, Some(&conf)).unwrap()).unwrap();
        let (back, back_conf) = pmap_to_pointmap::<f32>(&read_pmap(&mut buf.as_slice()).unwrap()).unwrap();
        let same = back.valid() == pm.valid()
            && back.xyz().iter().zip(pm.xyz()).all(|(a, b)| a.iter().zip(b.iter()).all(|(x, y)| x.to_bits() == y.to_bits()))
            && back_conf.unwrap().values().iter().zip(conf.values()).all(|(a, b)| a.to_bits() == b.to_bits());
        if !same {
            bad_pmap += 1;
        }

        let n = rng.random_range(1..30);
        let poses: Vec<Option<Se3Pose<f64>>> = (0..n)
            .map(|_| {
                (rng.random::<f64>() > 0.1)
                    .then(|| Se3Pose::new(random_rotation_uniform(&mut rng), Vector3::from_fn(|_, _| rng.random_range(-1e4..1e4))))
            })
            .collect();
        let depths: Vec<Option<usize>> = (0..n).map(|_| Some(rng.random_range(0..50))).collect();
        let file = PoseFile::from_poses(&poses, Some(&depths));
        let text = serde_json::to_string(&file).unwrap();
        let back: PoseFile = serde_json::from_str(&text).unwrap();
        let same = back.validate().is_ok()
            && back.views.len() == file.views.len()
            && back.views.iter().zip(&file.views).all(|(a, b)| {
                a.id == b.id
                    && a.valid == b.valid
                    && a.depth == b.depth
                    && a.quaternion_wxyz.iter().zip(&b.quaternion_wxyz).all(|(x, y)| x.to_bits() == y.to_bits())
                    && a.center.iter().zip(&b.center).all(|(x, y)| x.to_bits() == y.to_bits())
            });
        if !same {
            bad_pose += 1;
        }
    }
    outcome(bad_pmap == 0 && bad_pose == 0, format!("100 payloads each: {bad_pmap} PMAP and {bad_pose} pose JSON mismatches"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("zero-noise exactness", zero_noise_exactness),
        ("loss gradient suite", gradient_suite),
        ("MST oracle equivalence", mst_oracle),
        ("tree compression law", compression_law),
        ("drift mitigation", drift_mitigation),
        ("direct vs infer-then-align", direct_vs_align),
        ("ensemble improvement", ensemble_improvement),
        ("confidence decay", confidence_decay),
        ("metric oracle", metric_oracle),
        ("inference-count contract", inference_count),
        ("I/O round-trips", io_round_trips),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let o = check();
        println!("{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if !o.pass {
            failed += 1;
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
