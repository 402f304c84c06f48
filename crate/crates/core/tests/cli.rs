use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sigrecog::sampler::load_trajectories;
use sigrecog::trajtree::read_tree;

fn asset(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("assets")
        .join(name)
}

fn run(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_sigrecog"));
    cmd.args(args).env_remove("SIGRECOG_MODE");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Builds a tree on the rooms map and writes an observation file from one
/// of its trajectories.
fn fixture(dir: &Path) -> (PathBuf, PathBuf) {
    let tree = dir.join("rooms.tree");
    let trajs = dir.join("rooms.traj");
    let map = asset("rooms20.map");
    let o = run(
        &[
            "build-tree",
            "--map",
            map.to_str().unwrap(),
            "--start",
            "1,10",
            "--goal",
            "18,1",
            "--goal",
            "18,18",
            "--goal",
            "1,1",
            "-k",
            "3",
            "--seed",
            "11",
            "--out",
            tree.to_str().unwrap(),
            "--save-trajectories",
            trajs.to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let all = load_trajectories(&trajs).unwrap();
    let (t, _) = &all[all.len() - 1];
    let lines: Vec<String> = t
        .points()
        .take(t.len() - 1)
        .enumerate()
        .map(|(i, p)| format!("{i} {} {}", p[0], p[1]))
        .collect();
    let obs = dir.join("obs.txt");
    fs::write(&obs, lines.join("\n")).unwrap();
    (tree, obs)
}

#[test]
fn build_and_recognize() {
    let dir = tempfile::tempdir().unwrap();
    let (tree, obs) = fixture(dir.path());
    let parsed = read_tree(fs::read(&tree).unwrap().as_slice()).unwrap();
    assert_eq!(parsed.goal_ids().len(), 3);

    let o = run(
        &[
            "recognize",
            "--tree",
            tree.to_str().unwrap(),
            "--observations",
            obs.to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = stdout(&o);
    let mut lines = out.lines();
    assert_eq!(lines.next().unwrap(), "t,g0,g1,g2,argmax,predicted");
    let last = lines.last().unwrap();
    assert!(last.ends_with(",g2,g2"), "{last}");
    assert!(stderr(&o).contains("rank 1 g2"));
}

#[test]
fn json_lines_and_cost_dump() {
    let dir = tempfile::tempdir().unwrap();
    let (tree, obs) = fixture(dir.path());
    let costs = dir.path().join("costs");
    let o = run(
        &[
            "recognize",
            "--tree",
            tree.to_str().unwrap(),
            "--observations",
            obs.to_str().unwrap(),
            "--format",
            "json-lines",
            "--dump-costs",
            costs.to_str().unwrap(),
        ],
        &[("SIGRECOG_MODE", "dtw")],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for line in stdout(&o).lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        let total: f64 = v["posterior"]
            .as_object()
            .unwrap()
            .values()
            .map(|p| p.as_f64().unwrap())
            .sum();
        assert!((total - 1.0).abs() < 1e-9);
    }
    let dumped = fs::read_dir(&costs).unwrap().count();
    assert_eq!(dumped, 9);
    let csv = fs::read_to_string(costs.join("branch_0.csv")).unwrap();
    assert!(csv.lines().count() > 1);
}

#[test]
fn bad_mode_from_environment_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let (tree, obs) = fixture(dir.path());
    let o = run(
        &[
            "recognize",
            "--tree",
            tree.to_str().unwrap(),
            "--observations",
            obs.to_str().unwrap(),
        ],
        &[("SIGRECOG_MODE", "fuzzy")],
    );
    assert_eq!(code(&o), 1);
}

#[test]
fn config_file_overrides_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tool.toml");
    fs::write(&cfg, "k = 2\n[engine]\ndepth = 3\n").unwrap();
    let out = dir.path().join("t.tree");
    let trajs = dir.path().join("t.traj");
    let o = run(
        &[
            "build-tree",
            "--config",
            cfg.to_str().unwrap(),
            "--depth",
            "1",
            "-k",
            "4",
            "--map",
            asset("rooms20.map").to_str().unwrap(),
            "--start",
            "1,10",
            "--goal",
            "1,1",
            "--out",
            out.to_str().unwrap(),
            "--save-trajectories",
            trajs.to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let tree = read_tree(fs::read(&out).unwrap().as_slice()).unwrap();
    assert_eq!(tree.depth(), 3);
    assert_eq!(load_trajectories(&trajs).unwrap().len(), 2);
}

#[test]
fn input_errors_exit_one() {
    let o = run(
        &[
            "recognize",
            "--tree",
            "/nonexistent.tree",
            "--observations",
            "x",
        ],
        &[],
    );
    assert_eq!(code(&o), 1);
    assert_eq!(code(&run(&["frobnicate"], &[])), 1);
    assert_eq!(code(&run(&["--help"], &[])), 0);

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "[engine]\nunknown_key = 1\n[[problems]]\n").unwrap();
    assert_eq!(
        code(&run(&["bench", "--config", bad.to_str().unwrap()], &[])),
        1
    );
}

#[test]
fn bench_reports_and_flags_collapsed_trees() {
    let demo = asset("demo.toml");
    let o = run(&["bench", "--config", demo.to_str().unwrap()], &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("PPV (%)") && text.contains("rooms-west"));

    let o = run(
        &[
            "bench",
            "--config",
            demo.to_str().unwrap(),
            "--format",
            "csv",
            "--prune",
            "1e12",
        ],
        &[],
    );
    assert_eq!(code(&o), 2);
    let csv = stdout(&o);
    assert!(csv.starts_with("scope,name,mode,depth,k,merge,prune,fraction,n,ppv"));
    assert!(stderr(&o).contains("validation failed"));
}

#[test]
fn grid_search_prints_every_cell() {
    let demo = asset("demo.toml");
    let o = run(
        &[
            "grid-search",
            "--config",
            demo.to_str().unwrap(),
            "-k",
            "3,4",
            "--merge",
            "0,0.5",
            "--prune",
            "0,1e12",
        ],
        &[],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = stdout(&o);
    let mut lines = out.lines();
    assert_eq!(
        lines.next().unwrap(),
        "mode,depth,k,merge,prune,ppv,acc,spr,violations"
    );
    assert_eq!(lines.count(), 8);
    assert!(stderr(&o).contains("best plain"));
}
