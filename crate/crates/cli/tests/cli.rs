use std::path::Path;
use std::process::{Command, Output};

use groundspace::oracle::gen_planted_csp;
use groundspace::Hamiltonian;

fn groundspace(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_groundspace"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn planted(dir: &Path) -> (String, Vec<usize>) {
    let inst = gen_planted_csp::<f64>(3, 2, 1, true).unwrap();
    inst.hamiltonian.write(dir.join("planted.json")).unwrap();
    ("planted.json".into(), inst.assignment)
}

#[test]
fn solve_planted_instance_succeeds_with_dim_one() {
    let dir = tempfile::tempdir().unwrap();
    let (file, _) = planted(dir.path());
    let out = groundspace(
        &["solve", "--instance", &file, "--gamma", "1", "--dbound", "1", "--delta", "0.1", "--seed", "4", "--repeats", "2", "--out", "run"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("run.summary.json")).unwrap()).unwrap();
    assert_eq!(summary["dim"], 1);
    assert!(dir.path().join("run.mps.json").exists());
    assert!(dir.path().join("run.log.json").exists());
}

#[test]
fn expectations_decode_planted_signs() {
    let dir = tempfile::tempdir().unwrap();
    let (file, bits) = planted(dir.path());
    let solve = groundspace(
        &["solve", "--instance", &file, "--gamma", "1", "--dbound", "1", "--seed", "9", "--out", "run"],
        dir.path(),
    );
    assert_eq!(solve.status.code(), Some(0));
    let out = groundspace(&["expectations", "--mps", "run.mps.json", "--k", "1", "--out", "table.tsv"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("table.tsv")).unwrap();
    assert!(text.starts_with("sigma_word\ti\tj\tre\tim"));
    let signs: Vec<usize> = text
        .lines()
        .filter(|l| l.starts_with('Z'))
        .map(|l| {
            let re: f64 = l.split('\t').nth(3).unwrap().parse().unwrap();
            usize::from(re < 0.0)
        })
        .collect();
    assert_eq!(signs, bits);
}

#[test]
fn malformed_instance_exits_with_input_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.json"), "{\"width\": 2").unwrap();
    let out = groundspace(&["solve", "--instance", "bad.json", "--dbound", "1", "--out", "x"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("parse error"));
    let missing = groundspace(&["gap", "--instance", "nope.json"], dir.path());
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn zero_dbound_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let (file, _) = planted(dir.path());
    let out = groundspace(&["solve", "--instance", &file, "--dbound", "0", "--out", "x"], dir.path());
    assert_eq!(out.status.code(), Some(64));
    let unknown = groundspace(&["frobnicate"], dir.path());
    assert_eq!(unknown.status.code(), Some(64));
    let help = groundspace(&["--help"], dir.path());
    assert_eq!(help.status.code(), Some(0));
}

#[test]
fn unreachable_threshold_exits_with_solver_failure() {
    // κ = (P~ Q_even)^0 is the identity, so I − κ†κ vanishes on Y and every
    // run keeps all of Y: the residual energy is that of a random subspace.
    let dir = tempfile::tempdir().unwrap();
    let (file, _) = planted(dir.path());
    let out = groundspace(
        &["solve", "--instance", &file, "--gamma", "1", "--dbound", "1", "--delta", "0.01", "--agsp", "1", "1", "0", "--seed", "1", "--out", "x"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn missing_seed_is_drawn_and_printed() {
    let dir = tempfile::tempdir().unwrap();
    let out = groundspace(&["gen", "planted-csp", "--width", "2", "--height", "1", "--out", "g.json"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("seed: "));
    Hamiltonian::read(dir.path().join("g.json")).unwrap();
}

#[test]
fn gap_and_verify_agsp_report() {
    let dir = tempfile::tempdir().unwrap();
    let (file, _) = planted(dir.path());
    let gap = groundspace(&["gap", "--instance", &file], dir.path());
    assert_eq!(gap.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&gap.stdout).starts_with("gamma=1e0"));
    let verify = groundspace(
        &["verify-agsp", "--instance", &file, "--m", "1", "--t", "1", "--p", "2", "--gamma", "1", "--out", "k.json"],
        dir.path(),
    );
    assert_eq!(verify.status.code(), Some(0), "{}", String::from_utf8_lossy(&verify.stderr));
    let report: serde_json::Value = serde_json::from_slice(&verify.stdout).unwrap();
    assert!(report["measured_delta"].as_f64().unwrap() <= report["delta_bound"].as_f64().unwrap());
    assert!(report["identity_defect"].as_f64().unwrap() < 1e-6);
    groundspace::Mpo::read_json(dir.path().join("k.json")).unwrap();
}

#[test]
fn random_ff_generator_writes_instance() {
    let dir = tempfile::tempdir().unwrap();
    let out = groundspace(
        &["gen", "random-ff", "--width", "3", "--height", "1", "--q", "2", "--seed", "2", "--degeneracy", "1", "--out", "ff.json"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let h = Hamiltonian::read(dir.path().join("ff.json")).unwrap();
    assert_eq!(h.width(), 3);
}
