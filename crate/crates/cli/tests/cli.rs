use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tvfcgcg::cut::solve_mincut;
use tvfcgcg::mesh::{generate_square_mesh, load_mesh, save_field, save_mesh, FieldKind, TriMesh};
use tvfcgcg_cli::oracle::brute_force_cut;

fn tvfcgcg(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tvfcgcg"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn small_config(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("small.toml");
    fs::write(
        &path,
        r#"
[mesh]
n = 6
jitter = 0.1
seed = 3

[problem]
variant = "elliptic"
y_d = "indicator 0 0 1 1"

[solver]
include_omega = true

[output]
directory = "out"
"#,
    )
    .unwrap();
    path
}

#[test]
fn run_writes_a_self_describing_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let config = small_config(tmp.path());
    let out = tvfcgcg(&["run", config.to_str().unwrap()], tmp.path());
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let dir = tmp.path().join("out");
    for name in [
        "config.toml",
        "mesh.trimesh",
        "trace.csv",
        "summary.json",
        "solution.p0field",
        "state.p1field",
    ] {
        assert!(dir.join(name).is_file(), "missing {name}");
    }
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["converged"], true);
    assert!(summary["final_indicator"].as_f64().unwrap() < 1e-10);
    let trace = fs::read_to_string(dir.join("trace.csv")).unwrap();
    assert!(
        trace.starts_with("k,J,surrogate,j_k,n_components,active_size,pde_solves,cuts,wall_ms\n")
    );
    // The copied config reproduces the run.
    let again = tvfcgcg(
        &["run", "out/config.toml", "--out", "again", "--no-wall-time"],
        tmp.path(),
    );
    assert_eq!(again.status.code(), Some(0));
}

#[test]
fn repeated_runs_give_identical_traces() {
    let tmp = tempfile::tempdir().unwrap();
    let config = small_config(tmp.path());
    let c = config.to_str().unwrap();
    for dir in ["a", "b"] {
        let out = tvfcgcg(&["run", c, "--out", dir, "--no-wall-time"], tmp.path());
        assert_eq!(out.status.code(), Some(0));
    }
    let a = fs::read(tmp.path().join("a/trace.csv")).unwrap();
    let b = fs::read(tmp.path().join("b/trace.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn overrides_take_precedence() {
    let tmp = tempfile::tempdir().unwrap();
    let config = small_config(tmp.path());
    let out = tvfcgcg(
        &[
            "run",
            config.to_str().unwrap(),
            "--out",
            "o",
            "--mode",
            "dinkelbach",
            "--tol",
            "1e-6",
            "--max-iter",
            "50",
        ],
        tmp.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let copied = tvfcgcg_cli::ExperimentConfig::load(&tmp.path().join("o/config.toml")).unwrap();
    assert_eq!(copied.solver.mode, tvfcgcg::InsertionMode::Dinkelbach);
    assert_eq!(copied.solver.max_iter, 50);
    assert_eq!(copied.solver.tolerance, 1e-6);
}

#[test]
fn max_iter_exhaustion_is_a_solver_failure() {
    let tmp = tempfile::tempdir().unwrap();
    let config = small_config(tmp.path());
    let out = tvfcgcg(
        &["run", config.to_str().unwrap(), "--max-iter", "1"],
        tmp.path(),
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn compare_writes_both_modes() {
    let tmp = tempfile::tempdir().unwrap();
    let config = small_config(tmp.path());
    let out = tvfcgcg(
        &["compare", config.to_str().unwrap(), "--out", "cmp"],
        tmp.path(),
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let dir = tmp.path().join("cmp");
    assert!(dir.join("onecut/trace.csv").is_file());
    assert!(dir.join("dinkelbach/trace.csv").is_file());
    let cmp: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("comparison.json")).unwrap()).unwrap();
    assert_eq!(cmp["onecut_one_cut_per_iteration"], true);
    assert!(cmp["objective_gap"].as_f64().unwrap().abs() < 1e-6);
    let paired = fs::read_to_string(dir.join("comparison.csv")).unwrap();
    assert!(paired.lines().any(|l| l.starts_with("onecut,")));
    assert!(paired.lines().any(|l| l.starts_with("dinkelbach,")));
}

#[test]
fn config_errors_exit_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.toml");
    fs::write(
        &bad,
        "[mesh]\nn = 4\n[problem]\nvariant = \"elliptic\"\nalpha = -1\ny_d = \"zero\"\n",
    )
    .unwrap();
    let out = tvfcgcg(&["run", bad.to_str().unwrap()], tmp.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("problem.alpha"));

    let out = tvfcgcg(&["run", "does-not-exist.toml"], tmp.path());
    assert_eq!(out.status.code(), Some(1));

    let out = tvfcgcg(&["run", "x.toml", "--frobnicate"], tmp.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));

    let out = tvfcgcg(&["--help"], tmp.path());
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn bad_thread_count_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let config = small_config(tmp.path());
    let out = Command::new(env!("CARGO_BIN_EXE_tvfcgcg"))
        .args(["run", config.to_str().unwrap()])
        .env("TVFCGCG_THREADS", "zero")
        .current_dir(tmp.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn mesh_subcommand_writes_the_coarsest_mesh() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tvfcgcg(&["mesh", "1", "0", "0", "m.trimesh"], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    let mesh = load_mesh(tmp.path().join("m.trimesh")).unwrap();
    assert_eq!(mesh.num_triangles(), 4);
    assert_eq!(mesh.num_vertices(), 5);
    assert!((mesh.total_area() - 4.0).abs() < 1e-14);
}

fn weights_for(mesh: &TriMesh, seed: u64) -> Vec<f64> {
    // Cheap deterministic pseudo-random weights; scale chosen so that cuts are nontrivial.
    let mut s = seed
        .wrapping_mul(6364136223846793005)
        .wrapping_add(1442695040888963407);
    (0..mesh.num_triangles())
        .map(|_| {
            s = s
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64 - 0.35) * 6.0
        })
        .collect()
}

#[test]
fn oracle_cut_agrees_with_graph_cut() {
    let tmp = tempfile::tempdir().unwrap();
    let mesh = generate_square_mesh(2, 0.2, 7).unwrap();
    assert_eq!(mesh.num_triangles(), 16);
    save_mesh(&mesh, tmp.path().join("m.trimesh")).unwrap();
    for seed in 0..4 {
        let w = weights_for(&mesh, seed);
        save_field(FieldKind::P0, &w, tmp.path().join("w.p0field")).unwrap();
        let out = tvfcgcg(&["oracle-cut", "m.trimesh", "w.p0field"], tmp.path());
        let stdout = String::from_utf8_lossy(&out.stdout);
        assert_eq!(out.status.code(), Some(0), "{stdout}");
        assert!(stdout.contains("agree: true"));

        let oracle = brute_force_cut(&mesh, &w, 1e-12).unwrap();
        let cut = solve_mincut(&mesh, &w).unwrap();
        assert!((oracle.energy - cut.energy).abs() < 1e-10);
        assert_eq!(oracle.maximal_minimizer, cut.subset);
    }
}

#[test]
fn oracle_cut_rejects_large_meshes() {
    let tmp = tempfile::tempdir().unwrap();
    let mesh = generate_square_mesh(4, 0.0, 0).unwrap();
    save_mesh(&mesh, tmp.path().join("m.trimesh")).unwrap();
    save_field(
        FieldKind::P0,
        &vec![1.0; mesh.num_triangles()],
        tmp.path().join("w.p0field"),
    )
    .unwrap();
    let out = tvfcgcg(&["oracle-cut", "m.trimesh", "w.p0field"], tmp.path());
    assert_eq!(out.status.code(), Some(1));
}
