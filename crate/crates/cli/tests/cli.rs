//! End-to-end tests driving the installed binary through temp files.

use std::path::{Path, PathBuf};
use std::process::Command;

use qforge_core::sv::read_qsv1;
use qforge_core::{fd_gradient, Circuit, GradientTask};

struct Run {
    code: i32,
    stdout: Vec<u8>,
    stderr: String,
}

fn qforge(dir: &Path, args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_qforge"))
        .args(args)
        .current_dir(dir)
        .env_remove("QFORGE_THREADS")
        .output()
        .expect("binary runs");
    Run {
        code: out.status.code().expect("no signal"),
        stdout: out.stdout,
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

fn write(dir: &Path, name: &str, content: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, content).unwrap();
    path
}

fn stdout_json(run: &Run) -> serde_json::Value {
    assert_eq!(run.code, 0, "stderr: {}", run.stderr);
    serde_json::from_slice(&run.stdout).expect("stdout is JSON")
}

fn schema_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/schemas")
}

fn assert_schema(value: &serde_json::Value, schema_file: &str) {
    let text = std::fs::read_to_string(schema_dir().join(schema_file)).unwrap();
    let schema: serde_json::Value = serde_json::from_str(&text).unwrap();
    let validator = jsonschema::validator_for(&schema).expect("schema compiles");
    let errors: Vec<String> = validator.iter_errors(value).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{schema_file}: {errors:?}");
}

const BELL: &str = r#"{
  "n_qubits": 2,
  "gates": [
    {"kind": "h", "targets": [0], "controls": []},
    {"kind": "x", "targets": [1], "controls": [0]}
  ]
}"#;

const HAM_ZZ: &str = r#"[{"pauli": "Z0 Z1", "coeff_re": 1.0, "coeff_im": 0.0}]"#;

#[test]
fn run_dumps_the_bell_state() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "bell.json", BELL);
    let r = qforge(dir.path(), &["run", "bell.json", "--dump-state", "out.qsv1"]);
    let v = stdout_json(&r);
    assert_schema(&v, "run.schema.json");
    assert!((v["norm"].as_f64().unwrap() - 1.0).abs() < 1e-12);

    let mut f = std::fs::File::open(dir.path().join("out.qsv1")).unwrap();
    let (_, psi) = read_qsv1(&mut f).unwrap();
    let want = 0.5f64.sqrt();
    let amps = psi.amps();
    assert!((amps[0].re - want).abs() < 1e-12);
    assert!(amps[1].norm() < 1e-12);
    assert!(amps[2].norm() < 1e-12);
    assert!((amps[3].re - want).abs() < 1e-12);
}

#[test]
fn run_reports_unit_trace_on_the_dm_backend() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "bell.json", BELL);
    let r = qforge(dir.path(), &["run", "bell.json", "--backend", "dm"]);
    let v = stdout_json(&r);
    assert_schema(&v, "run.schema.json");
    assert!((v["trace"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!(v.get("norm").is_none());
}

#[test]
fn sample_counts_sum_to_shots() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "bell.json", BELL);
    for backend in ["sv", "dm"] {
        let r = qforge(
            dir.path(),
            &[
                "sample",
                "bell.json",
                "--shots",
                "100000",
                "--seed",
                "1",
                "--backend",
                backend,
            ],
        );
        let v = stdout_json(&r);
        assert_schema(&v, "sample.schema.json");
        let counts = v["counts"].as_object().unwrap();
        let total: u64 = counts.values().map(|c| c.as_u64().unwrap()).sum();
        assert_eq!(total, 100_000);
        // A Bell state only ever produces the two correlated outcomes.
        assert!(counts.keys().all(|k| k == "00" || k == "11"));
    }
}

#[test]
fn expval_matches_the_bell_correlation() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "bell.json", BELL);
    write(dir.path(), "zz.json", HAM_ZZ);
    let r = qforge(dir.path(), &["expval", "bell.json", "zz.json"]);
    let v = stdout_json(&r);
    assert_schema(&v, "expval.schema.json");
    assert!((v["value"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn grad_csv_cross_checks_against_finite_differences() {
    let dir = tempfile::tempdir().unwrap();
    let circuit = r#"{
      "n_qubits": 2,
      "gates": [
        {"kind": "rx", "targets": [0], "controls": [], "arg": {"terms": {"a": 1.0}, "const": 0.0}},
        {"kind": "ry", "targets": [1], "controls": [], "arg": {"terms": {"b": 0.5}, "const": 0.1}},
        {"kind": "rzz", "targets": [0, 1], "controls": [], "arg": {"terms": {"a": -0.5, "b": 1.0}, "const": 0.0}}
      ]
    }"#;
    let ham = r#"[
      {"pauli": "Z0", "coeff_re": 0.75, "coeff_im": 0.0},
      {"pauli": "X0 Z1", "coeff_re": -0.5, "coeff_im": 0.0}
    ]"#;
    let batch = "a,b\n0.3,0.9\n-1.1,0.25\n0.0,0.0\n";
    write(dir.path(), "c.json", circuit);
    write(dir.path(), "h.json", ham);
    write(dir.path(), "batch.csv", batch);

    let r = qforge(dir.path(), &["grad", "c.json", "h.json", "batch.csv"]);
    assert_eq!(r.code, 0, "stderr: {}", r.stderr);
    let text = String::from_utf8(r.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("row,value,d_a,d_b"));
    let parsed: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|f| f.parse().unwrap()).collect())
        .collect();
    assert_eq!(parsed.len(), 3);

    let c = Circuit::from_json(circuit).unwrap();
    let h = qforge_core::ops::PauliSum::from_ham_json(ham).unwrap();
    let rows = vec![vec![0.3, 0.9], vec![-1.1, 0.25], vec![0.0, 0.0]];
    let task = GradientTask::new(c, vec![h], rows).unwrap();
    let fd = fd_gradient(&task, 1e-6).unwrap();
    for (i, row) in parsed.iter().enumerate() {
        assert_eq!(row[0] as usize, i);
        assert!((row[1] - fd.values[i][0]).abs() < 1e-9);
        assert!((row[2] - fd.grads[i][0][0]).abs() < 1e-6);
        assert!((row[3] - fd.grads[i][0][1]).abs() < 1e-6);
    }
}

#[test]
fn grad_rejects_malformed_batches() {
    let dir = tempfile::tempdir().unwrap();
    let circuit = r#"{
      "n_qubits": 1,
      "gates": [{"kind": "rx", "targets": [0], "controls": [], "arg": {"terms": {"a": 1.0}, "const": 0.0}}]
    }"#;
    write(dir.path(), "c.json", circuit);
    write(dir.path(), "h.json", r#"[{"pauli": "Z0", "coeff_re": 1.0, "coeff_im": 0.0}]"#);

    write(dir.path(), "missing.csv", "wrong\n0.5\n");
    let r = qforge(dir.path(), &["grad", "c.json", "h.json", "missing.csv"]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("wrong"), "stderr: {}", r.stderr);

    write(dir.path(), "notnum.csv", "a\nhello\n");
    let r = qforge(dir.path(), &["grad", "c.json", "h.json", "notnum.csv"]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("hello"));
}

#[test]
fn qaoa_single_edge_reaches_the_closed_form_optimum() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "edge.txt", "0 1\n");
    let r = qforge(
        dir.path(),
        &["qaoa", "edge.txt", "-p", "1", "--iters", "300", "--seed", "7"],
    );
    let v = stdout_json(&r);
    assert_schema(&v, "qaoa.schema.json");
    assert!(
        (v["best_expected_cut"].as_f64().unwrap() - 1.0).abs() < 1e-6,
        "expected cut {}",
        v["best_expected_cut"]
    );
    assert_eq!(v["best_bitstring_cut"].as_f64().unwrap(), 1.0);
    let trace = v["trace"].as_array().unwrap();
    assert!(!trace.is_empty());
}

#[test]
fn compile_reports_layouts_on_coupled_targets() {
    let dir = tempfile::tempdir().unwrap();
    let circuit = r#"{
      "n_qubits": 3,
      "gates": [
        {"kind": "h", "targets": [0], "controls": []},
        {"kind": "x", "targets": [2], "controls": [0]},
        {"kind": "rz", "targets": [2], "controls": [], "arg": {"terms": {}, "const": 0.4}},
        {"kind": "rz", "targets": [2], "controls": [], "arg": {"terms": {}, "const": 0.6}}
      ]
    }"#;
    write(dir.path(), "c.json", circuit);
    let r = qforge(
        dir.path(),
        &["compile", "c.json", "--passes", "cancel,merge", "--coupling", "line:3"],
    );
    let v = stdout_json(&r);
    assert_schema(&v, "compile.schema.json");
    assert_schema(&v["circuit"], "circuit.schema.json");
    // The two RZ gates merge; mapping the non-adjacent CNOT inserts swaps.
    assert!(v["swaps_inserted"].as_u64().unwrap() >= 1);
    let layout = &v["layout"];
    assert_eq!(layout["initial"], serde_json::json!([0, 1, 2]));
    assert_eq!(layout["final"].as_array().unwrap().len(), 3);

    let mapped = Circuit::from_json(&v["circuit"].to_string()).unwrap();
    let merged = mapped
        .gates()
        .iter()
        .filter(|g| g.kind == qforge_core::GateKind::Rz)
        .count();
    assert_eq!(merged, 1);
}

#[test]
fn compile_without_coupling_omits_the_layout() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "bell.json", BELL);
    let r = qforge(dir.path(), &["compile", "bell.json", "--passes", "decompose"]);
    let v = stdout_json(&r);
    assert_schema(&v, "compile.schema.json");
    assert_schema(&v["circuit"], "circuit.schema.json");
    assert!(v.get("layout").is_none());
}

#[test]
fn noise_runs_are_confined_to_the_dm_backend() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "bell.json", BELL);
    write(
        dir.path(),
        "noise.json",
        r#"{"default": {"type": "depolarizing", "p": 0.1}}"#,
    );
    let r = qforge(dir.path(), &["run", "bell.json", "--noise", "noise.json"]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("--noise"));

    let r = qforge(
        dir.path(),
        &["run", "bell.json", "--noise", "noise.json", "--backend", "dm"],
    );
    let v = stdout_json(&r);
    assert!((v["trace"].as_f64().unwrap() - 1.0).abs() < 1e-10);
}

#[test]
fn trajectory_expval_agrees_with_the_exact_channel() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "bell.json", BELL);
    write(dir.path(), "zz.json", HAM_ZZ);
    write(
        dir.path(),
        "noise.json",
        r#"{"default": {"type": "bitflip", "p": 0.05}}"#,
    );
    let exact = stdout_json(&qforge(
        dir.path(),
        &["expval", "bell.json", "zz.json", "--noise", "noise.json", "--backend", "dm"],
    ));
    let est = stdout_json(&qforge(
        dir.path(),
        &[
            "expval", "bell.json", "zz.json", "--noise", "noise.json", "--shots", "4000",
            "--seed", "11",
        ],
    ));
    assert_schema(&est, "expval.schema.json");
    let mean = est["value"].as_f64().unwrap();
    let se = est["std_err"].as_f64().unwrap();
    let truth = exact["value"].as_f64().unwrap();
    assert!(
        (mean - truth).abs() <= 5.0 * se.max(1e-6),
        "mean {mean} exact {truth} se {se}"
    );
}

#[test]
fn identical_seeds_reproduce_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "bell.json", BELL);
    write(dir.path(), "zz.json", HAM_ZZ);
    write(dir.path(), "edge.txt", "0 1\n");
    let cases: Vec<Vec<&str>> = vec![
        vec!["run", "bell.json"],
        vec!["sample", "bell.json", "--shots", "5000", "--seed", "3"],
        vec!["expval", "bell.json", "zz.json"],
        vec!["qaoa", "edge.txt", "-p", "1", "--iters", "50", "--seed", "5"],
        vec!["compile", "bell.json", "--passes", "decompose"],
    ];
    for case in cases {
        let a = qforge(dir.path(), &case);
        let b = qforge(dir.path(), &case);
        assert_eq!(a.code, 0, "{case:?} stderr: {}", a.stderr);
        assert_eq!(a.stdout, b.stdout, "{case:?} output differs");
    }
}

#[test]
fn exit_codes_separate_input_and_engine_failures() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "bell.json", BELL);

    // Missing file and malformed flag values are input problems.
    assert_eq!(qforge(dir.path(), &["run", "nope.json"]).code, 2);
    let r = qforge(dir.path(), &["run", "bell.json", "--params", "theta"]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("--params"));
    assert_eq!(
        qforge(dir.path(), &["run", "bell.json", "--backend", "tensor"]).code,
        2
    );

    // A Hamiltonian touching qubits the circuit lacks is an engine error.
    write(
        dir.path(),
        "wide.json",
        r#"[{"pauli": "Z5", "coeff_re": 1.0, "coeff_im": 0.0}]"#,
    );
    let r = qforge(dir.path(), &["expval", "bell.json", "wide.json"]);
    assert_eq!(r.code, 3);
    assert!(r.stderr.contains("5"), "stderr: {}", r.stderr);

    // Unparseable circuit JSON names the file.
    write(dir.path(), "broken.json", "{\"n_qubits\": 2");
    let r = qforge(dir.path(), &["run", "broken.json"]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("broken.json"));
}

#[test]
fn qforge_threads_env_is_the_fallback() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "bell.json", BELL);
    let with_env = |v: &str| {
        Command::new(env!("CARGO_BIN_EXE_qforge"))
            .args(["run", "bell.json"])
            .current_dir(dir.path())
            .env("QFORGE_THREADS", v)
            .output()
            .unwrap()
    };
    let ok = with_env("2");
    assert_eq!(ok.status.code(), Some(0));
    let bad = with_env("lots");
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("QFORGE_THREADS"));
}

#[test]
fn bench_rows_have_positive_times_and_fixed_shape() {
    let dir = tempfile::tempdir().unwrap();
    let r = qforge(
        dir.path(),
        &["bench", "--qubits", "4..6", "--reps", "3", "--seed", "9"],
    );
    assert_eq!(r.code, 0, "stderr: {}", r.stderr);
    let text = String::from_utf8(r.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("suite,n_qubits,gates,reps,median_s,min_s,threads,precision")
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 6, "3 qubit counts x 2 suites");
    for row in &rows {
        assert_eq!(row.len(), 8);
        assert!(row[4].parse::<f64>().unwrap() > 0.0);
        assert!(row[5].parse::<f64>().unwrap() > 0.0);
        assert_eq!(row[3], "3");
        assert_eq!(row[7], "double");
    }
    assert_eq!(rows.iter().filter(|r| r[0] == "random_complex").count(), 3);
    assert_eq!(rows.iter().filter(|r| r[0] == "random_simple").count(), 3);
}

#[test]
fn bench_suites_share_the_generator() {
    use qforge_cli::bench::{build_suite_circuit, Suite};
    // Same seed, same circuit, gate for gate.
    let a = build_suite_circuit(Suite::RandomComplex, 5, 8, 42).unwrap();
    let b = build_suite_circuit(Suite::RandomComplex, 5, 8, 42).unwrap();
    assert_eq!(a.gates(), b.gates());

    // The simple suite is exactly the decomposition of the complex one.
    for seed in [0u64, 1, 2] {
        let complex = build_suite_circuit(Suite::RandomComplex, 4, 6, seed).unwrap();
        let simple = build_suite_circuit(Suite::RandomSimple, 4, 6, seed).unwrap();
        let direct =
            qforge_core::optimize_circuit(&complex, &[qforge_core::Pass::Decompose]).unwrap();
        assert_eq!(simple.gates(), direct.gates());

        let env = qforge_core::Bindings::new();
        let ua = qforge_core::circuit_unitary(&complex, &env).unwrap();
        let ub = qforge_core::circuit_unitary(&simple, &env).unwrap();
        assert!(ua.approx_eq_up_to_phase(&ub, 1e-10));
    }
}
