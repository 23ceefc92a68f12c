//! Black-box checks of the binary: exit codes, config-file precedence,
//! output determinism, and input diagnostics.

use std::path::Path;
use std::process::{Command, Output};

use traceform::bell::chsh_observable;
use traceform::BellDiagonalState;

const B_MATRIX: &str = "0.5 0 0 0.5\n0 -0.5 0.5 0\n0 0.5 -0.5 0\n0.5 0 0 0.5\n";
const B_SQUARED: &str = "0.5 0 0 0.5\n0 0.5 -0.5 0\n0 -0.5 0.5 0\n0.5 0 0 0.5\n";

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_traceform"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary spawns")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

fn data_rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn field(row: &[String], i: usize) -> f64 {
    row[i].parse().expect("numeric field")
}

#[test]
fn bell_sweeps_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    for out in ["a.csv", "b.csv"] {
        let o = run(
            dir.path(),
            &["bell", "--functional", "shannon", "--b-range", "0:0.9:0.1", "--out", out],
        );
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b.csv")).unwrap();
    assert_eq!(a, b);
    assert!(!a.is_empty());
}

#[test]
fn bell_rows_round_trip_the_constrained_expectation() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &["bell", "--functional", "tsallis:q=1.5", "--b-range", "0:0.9:0.1", "--out", "sweep.csv"],
    );
    assert_eq!(code(&o), 0);
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let rows = data_rows(&csv);
    assert_eq!(rows.len(), 10);
    let observable = chsh_observable();
    for row in &rows {
        let state = BellDiagonalState::new(field(row, 1), field(row, 2), field(row, 3)).unwrap();
        let recovered = state.density().unwrap().expectation(&observable).unwrap();
        assert!(
            (recovered - field(row, 0)).abs() < 1e-10,
            "row {row:?} reproduces b as {recovered}"
        );
    }
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("run.toml"),
        "functional = \"tsallis:q=2\"\nb_range = \"0.3:0.3:0.1\"\nout = \"from_config.csv\"\n",
    )
    .unwrap();

    let o = run(dir.path(), &["bell", "--config", "run.toml"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("from_config.csv")).unwrap();
    let p_plus = field(&data_rows(&csv)[0], 1);
    assert!((p_plus - 0.4).abs() < 1e-10, "q=2 value at b=0.3, got {p_plus}");

    let o = run(
        dir.path(),
        &["bell", "--config", "run.toml", "--functional", "shannon", "--out", "override.csv"],
    );
    assert_eq!(code(&o), 0);
    let csv = std::fs::read_to_string(dir.path().join("override.csv")).unwrap();
    let p_plus = field(&data_rows(&csv)[0], 1);
    assert!(
        (p_plus - 0.4225).abs() < 1e-4,
        "shannon value at b=0.3, got {p_plus}"
    );
}

#[test]
fn usage_problems_exit_one_with_a_message() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("typo.toml"), "functionnal = \"shannon\"\n").unwrap();
    std::fs::write(dir.path().join("b.txt"), B_MATRIX).unwrap();
    let cases: &[&[&str]] = &[
        &["bell", "--b-range", "0:0.9:0.1"],
        &["bell", "--out", "x.csv"],
        &["bell", "--b-range", "0:0.9:-0.1", "--out", "x.csv"],
        &["bell", "--b-range", "0:0.9:0.1", "--out", "x.csv", "--functional", "tsallis:q=-1"],
        &["phase", "--family", "renyi", "--q-range", "1:2:0.5", "--out", "x.csv"],
        &["phase", "--q-range", "1:2:0.5", "--out", "x.csv"],
        &["bell", "--b-range", "0:0.9:0.1", "--out", "x.csv", "--config", "typo.toml"],
        &["bell", "--b-range", "0:0.9:0.1", "--out", "x.csv", "--config", "missing.toml"],
        &["infer", "--observable", "b.txt", "--out", "x.csv"],
        &["infer", "--observable", "missing.txt", "--target", "0.1", "--out", "x.csv"],
        &["thermo"],
        &["no-such-command"],
    ];
    for args in cases {
        let o = run(dir.path(), args);
        assert_eq!(code(&o), 1, "args {args:?}");
        assert!(!o.stderr.is_empty(), "args {args:?} said nothing");
    }
}

#[test]
fn malformed_matrix_diagnostics_name_the_offending_row() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.txt"), "1 0\n0 x\n").unwrap();
    let o = run(
        dir.path(),
        &["infer", "--observable", "bad.txt", "--target", "0.1", "--out", "x.csv"],
    );
    assert_eq!(code(&o), 1);
    let msg = String::from_utf8_lossy(&o.stderr);
    assert!(msg.contains("bad.txt"), "{msg}");
    assert!(msg.contains("row 2"), "{msg}");
}

#[test]
fn unattainable_targets_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("b.txt"), B_MATRIX).unwrap();
    let o = run(
        dir.path(),
        &["infer", "--observable", "b.txt", "--target", "1.5", "--out", "x.csv"],
    );
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn dispersion_inference_matches_the_constraint_determined_state() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("b.txt"), B_MATRIX).unwrap();
    std::fs::write(dir.path().join("b2.txt"), B_SQUARED).unwrap();
    for functional in ["shannon", "tsallis:q=3", "exponential:q=-4"] {
        let o = run(
            dir.path(),
            &[
                "infer", "--functional", functional, "--observable", "b.txt", "--observable",
                "b2.txt", "--target", "0.4", "--target", "0.6", "--out", "sol.csv",
            ],
        );
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        let csv = std::fs::read_to_string(dir.path().join("sol.csv")).unwrap();
        let row = &data_rows(&csv)[0];
        for (i, want) in [0.5, 0.2, 0.2, 0.1].iter().enumerate() {
            assert!(
                (field(row, i) - want).abs() < 1e-8,
                "{functional}: eig_{i} = {}",
                row[i]
            );
        }
    }
}

#[test]
fn thermo_passes_on_the_bell_point_and_writes_the_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &["thermo", "--functional", "tsallis:q=2", "--bell-b", "0.3", "--out", "table.csv"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let table = std::fs::read_to_string(dir.path().join("table.csv")).unwrap();
    let rows = data_rows(&table);
    assert_eq!(rows.len(), 5, "four identity checks plus the slope check");
    for row in &rows {
        assert_eq!(row[3], "true", "{row:?}");
    }
}

#[test]
fn trace_only_problem_runs_the_suite_on_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["thermo", "--dim", "3"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let table = String::from_utf8_lossy(&o.stdout);
    let rows = data_rows(&table);
    assert_eq!(rows.len(), 4);
    for row in &rows {
        assert_eq!(row[3], "true", "{row:?}");
    }
}

#[test]
fn projector_only_constraint_yields_werner_rows() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &["bell", "--alpha", "0", "--b-range", "0.3:0.3:0.1", "--out", "w.csv"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("w.csv")).unwrap();
    let row = &data_rows(&csv)[0];
    let rest = (1.0 - 0.3) / 3.0;
    assert!((field(row, 1) - 0.3).abs() < 1e-8, "{row:?}");
    assert!((field(row, 2) - rest).abs() < 1e-8, "{row:?}");
    assert!((field(row, 3) - rest).abs() < 1e-8, "{row:?}");
}
