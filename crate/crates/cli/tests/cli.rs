use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lagplace_cli::json::{
    self, CensusJson, CertificateJson, CheckJson, DegreeJson, Lemma3Json, MatrixJson, SolutionsJson, SystemJson,
};
use lagplace_core::orthoconstruct::SymmetricMatrixSpace;
use lagplace_core::rng::{complex_normal_matrix, phase_rng};
use lagplace_core::solver::{random_generic_system, PlacementSystem};
use serde::de::DeserializeOwned;
use serde::Serialize;
use tempfile::TempDir;

fn lagplace(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lagplace")).args(args).env_remove("LAGPLACE_THREADS").output().unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// Parses, re-serializes and checks the bytes are unchanged.
fn round_trip<T: Serialize + DeserializeOwned>(text: &str) -> T {
    let value: T = json::from_str(text, "output").unwrap();
    assert_eq!(json::to_string(&value).unwrap(), text);
    value
}

fn symmetric_json(sys: &PlacementSystem) -> String {
    match sys {
        PlacementSystem::Symmetric(s) => json::to_string(&SystemJson::Symmetric {
            a: MatrixJson::from_matrix(s.a()),
            b: MatrixJson::from_matrix(s.b()),
        })
        .unwrap(),
        PlacementSystem::Hamiltonian(_) => unreachable!(),
    }
}

#[test]
fn degree_prints_exact_integers() {
    let out = lagplace(&["degree", "--n", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let d: DegreeJson = round_trip(&stdout(&out));
    assert_eq!((d.n, d.d.as_str(), d.d_tilde.as_str()), (3, "16", "2"));
    assert_eq!(d.manifest.command, "degree");
    let d5: DegreeJson = round_trip(&stdout(&lagplace(&["degree", "--n", "5"])));
    assert_eq!(d5.d, "292864");
    let d1: DegreeJson = round_trip(&stdout(&lagplace(&["degree", "--n", "1"])));
    assert_eq!((d1.d.as_str(), d1.d_tilde.as_str()), ("1", "1"));
}

#[test]
fn out_of_range_and_usage_errors_exit_2() {
    assert_eq!(lagplace(&["degree", "--n", "21"]).status.code(), Some(2));
    assert_eq!(lagplace(&["degree", "--n", "0"]).status.code(), Some(2));
    assert_eq!(lagplace(&["degree"]).status.code(), Some(2));
    assert_eq!(lagplace(&["census", "--n", "3", "--hamiltonian"]).status.code(), Some(2));
}

#[test]
fn malformed_inputs_exit_2_with_diagnostic() {
    let dir = TempDir::new().unwrap();
    let bad = write(&dir, "bad.json", "{\"kind\": \"symmetric\", \"a\": ");
    let target = write(&dir, "t.json", "{\"roots\": [[-1, 0]]}");
    let out = lagplace(&["place", "--system", arg(&bad), "--target", arg(&target)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("malformed system"));

    let ragged =
        write(&dir, "ragged.json", r#"{"kind":"symmetric","a":[[[0,0],[1,0]],[[1,0]]],"b":[[[1,0]],[[0,0]]]}"#);
    assert_eq!(lagplace(&["check", "--system", arg(&ragged)]).status.code(), Some(2));

    let missing = dir.path().join("missing.json");
    assert_eq!(lagplace(&["check", "--system", arg(&missing)]).status.code(), Some(2));

    let cfg = write(&dir, "cfg.json", "{\"no_such_field\": 1}");
    assert_eq!(lagplace(&["degree", "--n", "2", "--config", arg(&cfg)]).status.code(), Some(2));

    let out = Command::new(env!("CARGO_BIN_EXE_lagplace"))
        .args(["degree", "--n", "2"])
        .env("LAGPLACE_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn place_scalar_toy_problem() {
    let dir = TempDir::new().unwrap();
    let sys = write(&dir, "sys.json", r#"{"kind":"symmetric","a":[[[0,0]]],"b":[[[1,0]]]}"#);
    let target = write(&dir, "t.json", r#"{"coefficients":[[2,0],[1,0]]}"#);
    let out = lagplace(&["place", "--system", arg(&sys), "--target", arg(&target)]);
    assert_eq!(out.status.code(), Some(0));
    let sol: SolutionsJson = round_trip(&stdout(&out));
    assert_eq!(sol.gains.len(), 1);
    assert!((sol.gains[0].0[0][0].0 + 2.0).abs() < 1e-12);
}

#[test]
fn place_without_finite_solution_exits_3() {
    let dir = TempDir::new().unwrap();
    let sys = write(&dir, "sys.json", r#"{"kind":"symmetric","a":[[[0,0]]],"b":[[[0,0]]]}"#);
    let target = write(&dir, "t.json", r#"{"roots":[[-2,0]]}"#);
    let out = lagplace(&["place", "--system", arg(&sys), "--target", arg(&target)]);
    assert_eq!(out.status.code(), Some(3));
    let sol: SolutionsJson = round_trip(&stdout(&out));
    assert!(sol.gains.is_empty());
}

#[test]
fn failed_paths_exit_4() {
    let dir = TempDir::new().unwrap();
    let sys = write(&dir, "sys.json", r#"{"kind":"canonical_diagonal","n":2}"#);
    let target = write(&dir, "t.json", r#"{"roots":[[-1,0],[-2,0],[-3,0]]}"#);
    let cfg = write(&dir, "cfg.json", r#"{"max_steps_per_path":1}"#);
    let out = lagplace(&["place", "--system", arg(&sys), "--target", arg(&target), "--config", arg(&cfg)]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn place_generic_n2_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let sys = write(&dir, "sys.json", &symmetric_json(&random_generic_system(2, 3, false, 7).unwrap()));
    let target = write(&dir, "t.json", r#"{"roots":[[-1,0],[-2,0],[-3,0]]}"#);
    let out_path = dir.path().join("out.json");
    let run = |seed: &str| {
        let out = lagplace(&[
            "place",
            "--system",
            arg(&sys),
            "--target",
            arg(&target),
            "--seed",
            seed,
            "--out",
            arg(&out_path),
        ]);
        assert_eq!(out.status.code(), Some(0));
        let mut sol: SolutionsJson = round_trip(&std::fs::read_to_string(&out_path).unwrap());
        assert!(sol.manifest.timings.contains_key("solve"));
        sol.manifest.timings.clear();
        sol
    };
    let first = run("11");
    assert_eq!(first.gains.len(), 2);
    assert_eq!(first.seed, 11);
    assert_eq!(json::to_string(&first).unwrap(), json::to_string(&run("11")).unwrap());
}

#[test]
fn thread_cap_is_recorded() {
    let out = Command::new(env!("CARGO_BIN_EXE_lagplace"))
        .args(["degree", "--n", "2"])
        .env("LAGPLACE_THREADS", "2")
        .output()
        .unwrap();
    let d: DegreeJson = round_trip(&stdout(&out));
    assert_eq!(d.manifest.config.threads, Some(2));
}

#[test]
fn check_reports_verdicts() {
    let dir = TempDir::new().unwrap();
    let degenerate = write(
        &dir,
        "deg.json",
        r#"{"kind":"symmetric","a":[[[1,0],[0,0]],[[0,0],[2,0]]],"b":[[[1,0],[0,0]],[[0,0],[1,0]]]}"#,
    );
    let report: CheckJson = round_trip(&stdout(&lagplace(&["check", "--system", arg(&degenerate)])));
    assert_eq!(report.degeneracy, "degenerate");
    assert!(report.structure.passes);

    let canonical = write(&dir, "can.json", r#"{"kind":"canonical_diagonal","n":2}"#);
    let report: CheckJson = round_trip(&stdout(&lagplace(&["check", "--system", arg(&canonical)])));
    assert_eq!(report.certificate_passes, Some(true));
    assert!(report.minimality.minimal);

    let generic = write(&dir, "gen.json", &symmetric_json(&random_generic_system(2, 3, false, 3).unwrap()));
    let report: CheckJson = round_trip(&stdout(&lagplace(&["check", "--system", arg(&generic)])));
    assert_eq!(report.jacobian_rank, Some(3));
    assert_eq!(report.degeneracy, "possible");

    let asym =
        write(&dir, "asym.json", r#"{"kind":"symmetric","a":[[[0,0],[1,0]],[[0,0],[0,0]]],"b":[[[1,0]],[[0,0]]]}"#);
    let report: CheckJson = round_trip(&stdout(&lagplace(&["check", "--system", arg(&asym)])));
    assert!(!report.structure.passes);
    assert_eq!(report.jacobian_rank, None);
}

#[test]
fn census_small_n() {
    let out = lagplace(&["census", "--n", "1", "--trials", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let census: CensusJson = round_trip(&stdout(&out));
    assert!(census.pass);
    assert!(census.trials.iter().all(|t| t.finite_count == 1));

    let census: CensusJson = round_trip(&stdout(&lagplace(&["census", "--n", "2", "--trials", "5"])));
    assert!(census.pass, "{census:?}");
    assert_eq!(census.distribution.len(), 1);
    assert_eq!((census.distribution[0].finite_count, census.distribution[0].trials), (2, 5));
}

#[test]
fn lemma3_on_feedback_space() {
    let dir = TempDir::new().unwrap();
    let mut rng = phase_rng(4, "cli-test");
    let space = SymmetricMatrixSpace::feedback_space(&complex_normal_matrix(&mut rng, 3, 2)).unwrap();
    let basis = json::BasisJson { basis: space.basis().iter().map(MatrixJson::from_matrix).collect() };
    let path = write(&dir, "basis.json", &json::to_string(&basis).unwrap());
    let out = lagplace(&["lemma3", "--basis", arg(&path)]);
    assert_eq!(out.status.code(), Some(0));
    let res: Lemma3Json = round_trip(&stdout(&out));
    assert_eq!(res.transformed_basis.len(), 3);
    assert!(res.condition.is_finite());
}

#[test]
fn certify_with_search() {
    let out = lagplace(&["certify", "--n", "2", "--search-starts", "20", "--seed", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let cert: CertificateJson = round_trip(&stdout(&out));
    assert!(cert.passes);
    assert_eq!(cert.cells.len(), 4);
    assert_eq!(cert.base_locus_search.map(|s| s.starts), Some(20));
    assert_eq!(lagplace(&["certify", "--n", "5"]).status.code(), Some(2));
}
