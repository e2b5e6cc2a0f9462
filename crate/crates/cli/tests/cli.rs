use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use mge_core::mesh::CartesianMesh;
use mge_core::output::read_flux_output;
use mge_core::problem::parse_problem_file;

fn mge(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mge"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn fixture(dir: &Path, name: &str, extra: &[&str]) {
    let mut args = vec!["fixture"];
    args.extend_from_slice(extra);
    let out = mge(&args, dir);
    assert!(out.status.success());
    fs::write(dir.join(name), out.stdout).unwrap();
}

fn rows(path: &Path) -> usize {
    fs::read_to_string(path).unwrap().lines().count() - 1
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn preconditioning_shortens_the_history() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    fixture(dir, "fixture10.prob", &[]);

    let base = mge(&["run", "fixture10.prob", "--precond", "off", "--out", "base"], dir);
    assert_eq!(base.status.code(), Some(0), "{}", String::from_utf8_lossy(&base.stderr));
    let text = fs::read_to_string(dir.join("base/convergence.csv")).unwrap();
    assert!(text.starts_with("iter,res_norm,seconds\n"));
    let res: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(res.windows(2).all(|w| w[1] <= w[0]));

    let pre = mge(
        &["run", "fixture10.prob", "--precond", "on", "--weight", "1", "--relax", "2", "--vcycles", "2", "--out", "pre"],
        dir,
    );
    assert_eq!(pre.status.code(), Some(0));
    assert!(rows(&dir.join("pre/convergence.csv")) < rows(&dir.join("base/convergence.csv")));

    let m = manifest(&dir.join("pre"));
    assert_eq!(m["status"], "converged");
    assert_eq!(m["solver_config"]["precond_enabled"], true);
    assert_eq!(m["solver_config"]["relaxations"], 2);
    assert_eq!(m["iterations"]["block_krylov"].as_u64().unwrap() as usize, rows(&dir.join("pre/convergence.csv")));

    let problem = parse_problem_file(&fs::read_to_string(dir.join("fixture10.prob")).unwrap()).unwrap();
    let mesh: &CartesianMesh = &problem.mesh;
    let phi = read_flux_output(&dir.join("pre/flux.csv"), mesh).unwrap();
    assert_eq!(phi.num_groups(), 10);
    assert!(phi.as_slice().iter().all(|&v| v > 0.0));
}

#[test]
fn reduced_quadrature_with_reflection_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    fixture(dir, "reflect.prob", &["--bc", "reflect"]);
    let out = mge(&["run", "reflect.prob", "--pc-sn", "2", "--precond", "on"], dir);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("vacuum"), "{err}");
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    fixture(dir, "f.prob", &[]);
    assert_eq!(mge(&["run", "missing.prob"], dir).status.code(), Some(1));
    assert_eq!(mge(&["run", "f.prob", "--weight", "-1"], dir).status.code(), Some(1));
    assert_eq!(mge(&["run", "f.prob", "--solver", "gs", "--precond", "on"], dir).status.code(), Some(1));
    fs::write(dir.join("bad.prob"), "[mesh] 1 1\n").unwrap();
    let bad = mge(&["run", "bad.prob"], dir);
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("line 1"));

    let text = fs::read_to_string(dir.join("f.prob")).unwrap().replace("max_iters=1000", "max_iters=2");
    fs::write(dir.join("short.prob"), text).unwrap();
    // A capped within-group cascade solve is also exit 2, without outputs.
    let cascade = mge(&["run", "short.prob", "--out", "cascade"], dir);
    assert_eq!(cascade.status.code(), Some(2));
    let out = mge(&["run", "short.prob", "--block", "all", "--out", "short"], dir);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(manifest(&dir.join("short"))["status"], "max-iters");
    assert_eq!(rows(&dir.join("short/convergence.csv")), 2);
}

#[test]
fn flags_override_file_values() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    fixture(dir, "f.prob", &[]);
    let out = mge(
        &["run", "f.prob", "--tol", "1e-8", "--sets", "2", "--block", "all", "--depth", "2", "--pc-sn", "2", "--precond", "on", "--out", "o"],
        dir,
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let m = manifest(&dir.join("o"));
    let c = &m["solver_config"];
    assert_eq!(c["tol"], 1e-8);
    assert_eq!(c["num_sets"], 2);
    assert_eq!(c["block_mode"], "all-groups");
    assert_eq!(c["depth"]["fixed"], 2);
    assert_eq!(c["pc_quadrature"]["order"], 2);
    assert_eq!(m["vcycle_depth"], 2);
    assert_eq!(m["set_blocks"], serde_json::json!([[0, 5], [5, 10]]));
}

#[test]
fn eigenvalue_and_gauss_seidel_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    fixture(dir, "fis.prob", &["--fission"]);
    let out = mge(&["run", "fis.prob", "--eigen", "--precond", "on", "--out", "eig"], dir);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.join("eig/convergence.csv")).unwrap();
    assert!(csv.starts_with("outer,k,delta_k,l2_fission,linf_fission,krylov_iters,seconds\n"));
    let m = manifest(&dir.join("eig"));
    assert!(m["k"].as_f64().unwrap() > 0.0);
    assert_eq!(m["iterations"]["outer"].as_u64().unwrap() as usize, rows(&dir.join("eig/convergence.csv")));

    let gs = mge(&["run", "fis.prob", "--solver", "gs", "--out", "gs"], dir);
    assert_eq!(gs.status.code(), Some(0));
    assert_eq!(manifest(&dir.join("gs"))["solver"], "gs");
}

/// Everything but the wall-clock column.
fn without_seconds(path: &Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head).to_string())
        .collect()
}

#[test]
fn reruns_are_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    fixture(dir, "f.prob", &["--fission"]);
    for args in [
        vec!["run", "f.prob", "--precond", "on"],
        vec!["run", "f.prob", "--eigen", "--precond", "on"],
    ] {
        for out in ["a", "b"] {
            let mut a = args.clone();
            a.extend_from_slice(&["--out", out]);
            assert_eq!(mge(&a, dir).status.code(), Some(0));
        }
        assert_eq!(without_seconds(&dir.join("a/convergence.csv")), without_seconds(&dir.join("b/convergence.csv")));
        assert_eq!(fs::read(dir.join("a/flux.csv")).unwrap(), fs::read(dir.join("b/flux.csv")).unwrap());
    }
}
