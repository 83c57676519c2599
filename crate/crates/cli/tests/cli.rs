use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use symtomo::io::{DensityGridFile, TomogramTable, HEADER_KEYS};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_symtomo")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn table(o: &Output) -> TomogramTable {
    assert_eq!(code(o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    TomogramTable::from_csv(&String::from_utf8(o.stdout.clone()).unwrap()).unwrap()
}

fn row_of<'a>(t: &'a TomogramTable, col: &str, want: f64) -> Vec<&'a Vec<f64>> {
    let i = t.columns.iter().position(|c| c == col).unwrap();
    t.rows.iter().filter(|r| r[i] == want).collect()
}

#[test]
fn eval_ground_pair_at_origin() {
    let t = table(&run(&["eval", "--state", "0,0", "--grid", "-1:1:3", "--frames", "1,0/1,0"]));
    assert_eq!(t.rows.len(), 9);
    let origin: Vec<_> = t.rows.iter().filter(|r| r[0] == 0.0 && r[3] == 0.0).collect();
    assert_eq!(origin.len(), 1);
    assert!((origin[0][7] - 0.3183099).abs() < 1e-7);
    let numeric = table(&run(&["eval", "--numeric", "--state", "0,0", "--grid", "0", "--frames", "1,0/1,0"]));
    assert!((numeric.rows[0][7] - 1.0 / std::f64::consts::PI).abs() < 1e-6);
}

#[test]
fn eval_first_excited_vanishes_at_zero_xi2() {
    let t = table(&run(&["eval", "--state", "0,1", "--grid", "-1.5:1.5:5"]));
    let rows = row_of(&t, "xi2", 0.0);
    assert_eq!(rows.len(), 5);
    for r in rows {
        assert!(r[7].abs() < 1e-15);
    }
}

#[test]
fn header_keys_are_ordered() {
    let o = run(&["eval", "--state", "1", "--grid", "0"]);
    let text = String::from_utf8(o.stdout).unwrap();
    let keys: Vec<&str> = text.lines().take(8).map(|l| l.trim_start_matches("# ").split(':').next().unwrap()).collect();
    assert_eq!(keys, HEADER_KEYS);
}

#[test]
fn seeded_output_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for p in [&a, &b] {
        let o = run(&["eval", "--state", "0.6@0,1;0:0.8@2,0", "--samples", "25", "--seed", "42", "--out", p.to_str().unwrap()]);
        assert_eq!(code(&o), 0);
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let c = dir.path().join("c.csv");
    run(&["eval", "--state", "0.6@0,1;0:0.8@2,0", "--samples", "25", "--seed", "43", "--out", c.to_str().unwrap()]);
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());
}

#[test]
fn written_tables_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for (name, fmt) in [("t.csv", "csv"), ("t.json", "json")] {
        let p = dir.path().join(name);
        let o = run(&["symmetrize", "--state", "0,1", "--grid", "-1:1:3", "--format", fmt, "--out", p.to_str().unwrap()]);
        assert_eq!(code(&o), 0);
        let t = TomogramTable::read(&p).unwrap();
        assert_eq!(t.columns.last().map(String::as_str), Some("interference"));
        assert_eq!(t.render(fmt.parse().unwrap()).unwrap(), fs::read_to_string(&p).unwrap());
    }
}

#[test]
fn pauli_table_is_zero() {
    let t = table(&run(&["symmetrize", "--state", "0,0", "--class", "minus", "--grid", "-2:2:5"]));
    let v = t.column("value").unwrap();
    assert_eq!(v.len(), 25);
    assert!(v.iter().all(|x| x.abs() <= 1e-12));
}

#[test]
fn routes_agree_on_first_excited_pair() {
    for class in ["plus", "minus"] {
        let args = |route: &'static str| {
            vec!["symmetrize", "--state", "0,1", "--class", class, "--route", route, "--grid", "-1.5:1.5:4", "--frames", "1,0.5/0.5,1;0.8,-0.3/0.2,1.1"]
        };
        let a = table(&run(&args("a"))).column("value").unwrap();
        let b = table(&run(&args("b"))).column("value").unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() / x.abs().max(1e-6) <= 1e-3, "{class}: {x} vs {y}");
        }
    }
}

#[test]
fn interference_column_integrates_to_zero() {
    let t = table(&run(&["symmetrize", "--state", "0,1", "--class", "plus", "--grid", "-6:6:49"]));
    let h: f64 = 12.0 / 48.0;
    let edge = |x: f64| if x.abs() == 6.0 { 0.5 } else { 1.0 };
    let inter = t.column("interference").unwrap();
    let direct = t.column("direct").unwrap();
    let mut si = 0.0;
    let mut sd = 0.0;
    for (k, r) in t.rows.iter().enumerate() {
        let w = edge(r[0]) * edge(r[3]) * h * h;
        si += w * inter[k];
        sd += w * direct[k];
    }
    assert!(si.abs() <= 2e-3, "{si}");
    assert!((sd - 0.5).abs() <= 2e-3, "{sd}");
}

#[test]
fn degenerate_route_b_frame_is_numeric_failure() {
    let o = run(&["symmetrize", "--state", "0,1", "--route", "b", "--grid", "0:1:2", "--frames", "1,0.5/0.5,1;1,2/2,4"]);
    assert_eq!(code(&o), 3);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("degenerate frame at point 5"), "{err}");
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        vec!["eval"],
        vec!["eval", "--state", "a@0"],
        vec!["symmetrize", "--state", "0,1", "--class", "sideways"],
        vec!["symmetrize", "--state", "0,1", "--class", "rho1", "--route", "b"],
        vec!["frobnicate"],
        vec!["verify", "--filter", "no-such-group"],
        vec!["eval", "--state", "0", "--frames", "1,0/0,1"],
    ] {
        assert_eq!(code(&run(&args)), 2, "{args:?}");
    }
}

#[test]
fn reconstruct_ground_state() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("rho.json");
    let o = run(&["reconstruct", "--state", "0", "--grid", "-1:1:3", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let g = DensityGridFile::read(&out).unwrap();
    assert!(Path::new(&dir.path().join("rho.bin")).exists());
    assert_eq!(g.values.len(), 9);
    // (x, x') = (0, 0) is the centre of the 3 x 3 grid.
    assert!((g.values[4].re - 0.5641896).abs() < 1e-4);
    assert!(g.diagnostics["hermiticity_residual"] <= 1e-6);
    assert_eq!(g.meta.get("command"), Some("reconstruct"));
}

#[test]
fn reconstruct_symmetrized_pair_records_printed_constant() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("rho.json");
    let o = run(&["reconstruct", "--state", "0,1", "--class", "plus", "--grid", "-1:1:3", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let g = DensityGridFile::read(&out).unwrap();
    assert_eq!(g.values.len(), 81);
    assert!(g.diagnostics["max_abs_error_vs_projector"] <= 1e-4);
    assert!(g.diagnostics["hermiticity_residual"] <= 1e-6);
    assert!((g.diagnostics["printed_rho01_ratio"] - 2.0 * std::f64::consts::PI).abs() < 1e-6);
    assert!(g.diagnostics["printed_rho01_ratio_rel_spread"] <= 1e-6);
}

#[test]
fn evolve_keeps_fock_states_stationary() {
    let t = table(&run(&["evolve", "--state", "1,2", "--grid", "-1:1:3", "--time", "0,0.3,1,2.5"]));
    let v = t.column("value").unwrap();
    assert_eq!(v.len(), 36);
    for k in 0..9 {
        for j in 1..4 {
            assert!((v[k] - v[k + 9 * j]).abs() < 1e-12);
        }
    }
}

#[test]
fn evolve_superposition_moves_the_mean() {
    let t = table(&run(&[
        "evolve",
        "--state",
        "0.7071067811865476@0;0.7071067811865476@1",
        "--grid",
        "-8:8:161",
        "--time",
        "0,1.5707963267948966",
        "--frames",
        "1,0",
    ]));
    let v = t.column("value").unwrap();
    let xi = t.column("xi1").unwrap();
    let mean = |range: std::ops::Range<usize>| range.map(|i| xi[i] * v[i] * 0.1).sum::<f64>();
    assert!((mean(0..161) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-6);
    assert!(mean(161..322).abs() < 1e-6);
}

#[test]
fn config_file_sets_state_and_quadrature() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "state = \"0,1\"\ngrid = \"0:1:2\"\nseed = 9\ntrunc_l = 7.5\n").unwrap();
    let t = table(&run(&["eval", "--config", cfg.to_str().unwrap()]));
    assert_eq!(t.rows.len(), 4);
    assert_eq!(t.meta.get("seed"), Some("9"));
    assert!(t.meta.get("quadrature").unwrap().contains("trunc_l=7.5"));
    // Flags override the file.
    let t = table(&run(&["eval", "--config", cfg.to_str().unwrap(), "--state", "0"]));
    assert_eq!(t.rows.len(), 2);
    fs::write(&cfg, "bogus = 1\n").unwrap();
    assert_eq!(code(&run(&["eval", "--config", cfg.to_str().unwrap()])), 2);
}

#[test]
fn verify_filter_and_exit_status() {
    let o = run(&["verify", "--filter", "group-law"]);
    assert_eq!(code(&o), 0);
    let out = String::from_utf8(o.stdout).unwrap();
    assert_eq!(out.lines().count(), 1);
    assert!(out.starts_with("PASS 4"));
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let o = run(&["verify", "--filter", "9", "--out", report.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(doc["all_passed"], false);
    assert_eq!(doc["criteria"][0]["id"], "9a");
    assert_eq!(doc["criteria"][0]["passed"], true);
    assert_eq!(doc["criteria"][1]["passed"], false);
}
