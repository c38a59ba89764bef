use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_increg");

fn increg(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env_remove("REGIST_SEED").output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = increg(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    increg(args).status.code().expect("exit code")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn simulate(dir: &Path, scene: &str, views: &str, seed: &str) {
    ok(&["simulate", "--scene", scene, "--views", views, "--seed", seed, "--out", p(dir)]);
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

#[test]
fn simulate_writes_a_reproducible_bundle() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    simulate(&a, "orbit", "8", "1");
    simulate(&b, "orbit", "8", "1");
    let mut names: Vec<String> = std::fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    assert_eq!(names.iter().filter(|n| n.ends_with("_world.pmap")).count(), 8);
    assert_eq!(names.iter().filter(|n| n.ends_with("_camera.pmap")).count(), 8);
    for f in ["poses.json", "sim.csv", "manifest.json"] {
        assert!(names.iter().any(|n| n == f), "{f} missing");
    }
    for n in &names {
        assert_eq!(std::fs::read(a.join(n)).unwrap(), std::fs::read(b.join(n)).unwrap(), "{n} differs");
    }
    assert_eq!(json(&a.join("manifest.json"))["outputs"].as_array().unwrap().len(), names.len());
}

#[test]
fn usage_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("x");
    assert_eq!(code(&["simulate", "--views", "1", "--out", p(&out)]), 2);
    assert_eq!(code(&["simulate", "--views", "4"]), 2);
    assert_eq!(code(&["simulate", "--scene", "torus", "--out", p(&out)]), 2);
    assert_eq!(code(&["tree", "--sim", "nowhere.csv"]), 2);
    assert_eq!(code(&["reconstruct", "--out", p(&out)]), 2);
    assert_eq!(code(&["frobnicate"]), 2);
    assert_eq!(code(&["simulate", "--views", "three"]), 2);
}

#[test]
fn runtime_failures_exit_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("x");
    let missing = tmp.path().join("missing");
    assert_eq!(code(&["reconstruct", "--scene", p(&missing), "--out", p(&out)]), 1);
    let bad = tmp.path().join("bad.csv");
    std::fs::write(&bad, "1,0.2,0.3\n0.2,1,0.1\n").unwrap();
    assert_eq!(code(&["tree", "--sim", p(&bad), "--out", p(&out)]), 1);
}

#[test]
fn zero_noise_pipeline_is_exact() {
    let tmp = tempfile::tempdir().unwrap();
    let (scene, rec, ev) = (tmp.path().join("scene"), tmp.path().join("rec"), tmp.path().join("ev"));
    simulate(&scene, "orbit", "8", "1");
    let line = ok(&["reconstruct", "--scene", p(&scene), "--out", p(&rec)]);
    assert!(line.contains("registered 8/8"), "{line}");
    for f in ["poses.json", "intrinsics.json", "cloud.ply", "manifest.json", "view_000.pmap", "view_007.pmap"] {
        assert!(rec.join(f).exists(), "{f} missing");
    }
    let manifest = json(&rec.join("manifest.json"));
    assert_eq!(manifest["predict_calls"], 7);
    assert_eq!(manifest["init_pair_calls"], 1);
    assert!(manifest["timings_s"]["inference"].is_number());
    let summary = ok(&["evaluate", "--pred", p(&rec), "--gt", p(&scene), "--clouds", "--out", p(&ev)]);
    assert!(summary.starts_with("mAA@30 = 1.0000"), "{summary}");
    let report = json(&ev.join("report.json"));
    assert!(report["acc"].as_f64().unwrap() < 1e-5);
    assert!(report["comp"].as_f64().unwrap() < 1e-5);
    let curves = std::fs::read_to_string(ev.join("curves.csv")).unwrap();
    assert_eq!(curves.lines().count(), 31);
}

#[test]
fn compressed_line_tree_has_depth_25() {
    let tmp = tempfile::tempdir().unwrap();
    let scene = tmp.path().join("line");
    simulate(&scene, "line", "50", "1");
    let out = tmp.path().join("t");
    let line = ok(&["tree", "--scene", p(&scene), "--root", "0", "--compress", "1", "--dot", "--out", p(&out)]);
    assert!(line.contains("max depth 25"), "{line}");
    assert_eq!(json(&out.join("tree.json"))["max_depth"], 25);
    assert!(std::fs::read_to_string(out.join("tree.dot")).unwrap().starts_with("digraph"));
}

#[test]
fn config_file_flags_and_seed_fallback() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"seed": 4, "simulate": {"views": 5, "scene": "grid"}, "tree": {"compress": 1}}"#).unwrap();
    let a = tmp.path().join("a");
    ok(&["--config", p(&cfg), "simulate", "--views", "6", "--out", p(&a)]);
    let m = json(&a.join("manifest.json"));
    assert_eq!(m["config"]["views"], 6);
    assert_eq!(m["config"]["scene"], "grid");
    assert_eq!(m["seed"], 4);

    let b = tmp.path().join("b");
    let out = Command::new(BIN).args(["simulate", "--views", "3", "--out", p(&b)]).env("REGIST_SEED", "11").output().unwrap();
    assert!(out.status.success());
    assert_eq!(json(&b.join("manifest.json"))["seed"], 11);
    let c = tmp.path().join("c");
    let out = Command::new(BIN).args(["--config", p(&cfg), "simulate", "--out", p(&c)]).env("REGIST_SEED", "11").output().unwrap();
    assert!(out.status.success());
    assert_eq!(json(&c.join("manifest.json"))["seed"], 4);

    std::fs::write(&cfg, r#"{"simulate": {"viewz": 5}}"#).unwrap();
    assert_eq!(code(&["--config", p(&cfg), "simulate", "--out", p(&a)]), 2);
}

#[test]
fn manifest_replays_and_threads_do_not_matter() {
    let tmp = tempfile::tempdir().unwrap();
    let scene = tmp.path().join("scene");
    simulate(&scene, "grid", "12", "2");
    let noise = ["--sigma-rot", "0.01", "--sigma-point", "0.01", "--conf-eta", "1", "--seed", "9"];
    let r1 = tmp.path().join("r1");
    let mut args = vec!["--threads", "1", "reconstruct", "--scene", p(&scene), "--compress", "1", "--out", p(&r1)];
    args.extend(noise);
    ok(&args);
    let r4 = tmp.path().join("r4");
    let mut args = vec!["--threads", "4", "reconstruct", "--scene", p(&scene), "--compress", "1", "--out", p(&r4)];
    args.extend(noise);
    ok(&args);
    let replay = tmp.path().join("replay");
    ok(&["--config", p(&r1.join("manifest.json")), "reconstruct", "--out", p(&replay)]);
    let reference = std::fs::read(r1.join("poses.json")).unwrap();
    assert_eq!(reference, std::fs::read(r4.join("poses.json")).unwrap());
    assert_eq!(reference, std::fs::read(replay.join("poses.json")).unwrap());
    assert_eq!(std::fs::read(r1.join("view_005.pmap")).unwrap(), std::fs::read(replay.join("view_005.pmap")).unwrap());
    assert_eq!(code(&["--config", p(&r1.join("manifest.json")), "simulate", "--out", p(&replay)]), 2);
}

#[test]
fn external_predictor_matches_the_in_process_oracle() {
    let tmp = tempfile::tempdir().unwrap();
    let scene = tmp.path().join("scene");
    simulate(&scene, "orbit", "6", "3");
    let (local, remote) = (tmp.path().join("local"), tmp.path().join("remote"));
    ok(&["reconstruct", "--scene", p(&scene), "--out", p(&local)]);
    ok(&[
        "reconstruct", "--scene", p(&scene), "--out", p(&remote), "--predictor", "external", "--predictor-cmd", BIN,
        "--predictor-arg", "serve", "--predictor-arg", "--scene", "--predictor-arg", p(&scene),
    ]);
    let (a, b) = (json(&local.join("poses.json")), json(&remote.join("poses.json")));
    for (va, vb) in a["views"].as_array().unwrap().iter().zip(b["views"].as_array().unwrap()) {
        assert_eq!(va["valid"], vb["valid"]);
        for key in ["quaternion_wxyz", "center"] {
            for (x, y) in va[key].as_array().unwrap().iter().zip(vb[key].as_array().unwrap()) {
                assert!((x.as_f64().unwrap() - y.as_f64().unwrap()).abs() < 1e-4);
            }
        }
    }
    let bad = tmp.path().join("bad");
    assert_eq!(code(&["reconstruct", "--scene", p(&scene), "--out", p(&bad), "--predictor", "external"]), 2);
    assert_eq!(
        code(&["reconstruct", "--scene", p(&scene), "--out", p(&bad), "--predictor", "external", "--predictor-cmd", "/nonexistent/host"]),
        1
    );
}

#[test]
fn ensemble_merges_forest_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let scene = tmp.path().join("scene");
    simulate(&scene, "grid", "16", "4");
    let mut runs = Vec::new();
    for (k, root) in ["0", "7", "15"].iter().enumerate() {
        let out = tmp.path().join(format!("run{k}"));
        ok(&["reconstruct", "--scene", p(&scene), "--root", root, "--sigma-rot", "0.01", "--sigma-point", "0.01", "--out", p(&out)]);
        runs.push(out);
    }
    let ens = tmp.path().join("ens");
    let mut args = vec!["ensemble", "--out", p(&ens), "--runs"];
    args.extend(runs.iter().map(|r| p(r)));
    ok(&args);
    let trace: Vec<f64> = std::fs::read_to_string(ens.join("cost_trace.csv"))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(trace.len() >= 2 && trace.windows(2).all(|w| w[1] <= w[0]));
    let summary = ok(&["evaluate", "--pred", p(&ens), "--gt", p(&scene), "--out", p(&tmp.path().join("ev"))]);
    assert!(summary.starts_with("mAA@30"));
    assert_eq!(code(&["ensemble", "--out", p(&ens), "--runs", p(&runs[0])]), 2);
}
