use std::path::Path;
use std::process::Command;

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_stm");

fn stm(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(BIN).args(args).output().expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn strip_wall_time(json: &str) -> Value {
    let mut v: Value = serde_json::from_str(json).unwrap();
    v["provenance"]["wall_time_seconds"] = Value::Null;
    v
}

#[test]
fn identical_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let path = dir.path().join(name);
        let code = stm(&[
            "scatter",
            "--k",
            "0.2,0.4",
            "--grid-n",
            "60",
            "--format",
            "csv",
            "--output",
            path.to_str().unwrap(),
        ])
        .0;
        assert_eq!(code, 0);
        std::fs::read(path).unwrap()
    };
    assert_eq!(run("a.csv"), run("b.csv"));

    let args = [
        "spectrum", "--eps2", "0.001", "--levels", "2", "--grid-n", "80",
    ];
    let (a, b) = (stm(&args).1, stm(&args).1);
    assert_eq!(strip_wall_time(&a), strip_wall_time(&b));
    let mask = |s: &str| {
        s.lines()
            .filter(|l| !l.contains("wall_time"))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(mask(&a), mask(&b));
}

#[test]
fn json_floats_round_trip_exactly() {
    let (code, out, _) = stm(&["spectrum", "--eps2", "0", "--levels", "2", "--grid-n", "80"]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    let levels: Vec<f64> = serde_json::from_value(v["results"]["levels"].clone()).unwrap();

    let problem = stm_core::bound_state::BoundStateProblem::new(
        stm_core::twobody::ChannelConfig::unitarity(),
        stm_core::quadrature::MomentumGrid::new(80, 0.1).unwrap(),
    )
    .unwrap();
    let direct = stm_core::bound_state::find_levels(&problem, 2).unwrap();
    assert_eq!(levels.len(), 2);
    for (a, b) in levels.iter().zip(&direct.levels) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
}

#[test]
fn csv_values_round_trip_exactly() {
    let (code, out, _) = stm(&[
        "feshbach",
        "--abg",
        "1",
        "--b0",
        "100",
        "--delta-b",
        "10",
        "--b",
        "101,133.3",
        "--format",
        "csv",
    ]);
    assert_eq!(code, 0);
    let row = out.lines().last().unwrap();
    let a: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
    assert_eq!(
        a.to_bits(),
        (1.0f64 * (1.0 + 10.0 / (133.3 - 100.0))).to_bits()
    );
}

#[test]
fn exit_codes() {
    assert_eq!(
        stm(&[
            "feshbach",
            "--abg",
            "1",
            "--b0",
            "100",
            "--delta-b",
            "10",
            "--b",
            "100"
        ])
        .0,
        1
    );
    assert_eq!(stm(&["spectrum", "--no-such-flag"]).0, 1);
    assert_eq!(stm(&["nonsense"]).0, 1);
    assert_eq!(stm(&["spectrum", "--eps2", "-1"]).0, 1);
    assert_eq!(stm(&["scatter", "--k", "5"]).0, 1);
    assert_eq!(stm(&["selftest"]).0, 0);
    assert_eq!(stm(&["--help"]).0, 0);
    let (code, _, err) = stm(&["selftest", "--output", "/nonexistent-dir/x.json"]);
    assert_eq!(code, 1);
    assert!(err.contains("nonexistent"));
}

#[test]
fn usage_goes_to_stderr() {
    let (_, out, err) = stm(&["spectrum", "--bogus"]);
    assert!(out.is_empty());
    assert!(err.contains("Usage"));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "eps2 = 5\nk = 0.3\ngrid_n = 40\nformat = csv\n").unwrap();
    let (code, out, err) = stm(&["scatter", "--config", cfg.to_str().unwrap(), "--eps2", "1"]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("\"eps2\":1.0"));
    assert!(out.contains("\"grid_n\":40"));
    assert!(out.starts_with("# stm"));
}

#[test]
fn unit_scale_multiplies_energies_by_its_square() {
    let base = stm(&["spectrum", "--eps2", "0", "--levels", "1", "--grid-n", "60"]).1;
    let scaled = stm(&[
        "spectrum",
        "--eps2",
        "0",
        "--levels",
        "1",
        "--grid-n",
        "60",
        "--unit-scale",
        "2",
    ])
    .1;
    let level = |s: &str| -> f64 {
        let v: Value = serde_json::from_str(s).unwrap();
        v["results"]["levels"][0].as_f64().unwrap()
    };
    assert_eq!(level(&scaled), 4.0 * level(&base));
}

#[test]
fn threads_flag_does_not_change_results() {
    let args = |t: &'static str| {
        [
            "scatter",
            "--k",
            "0.25",
            "--grid-n",
            "50",
            "--format",
            "csv",
            "--threads",
            t,
        ]
    };
    assert_eq!(stm(&args("1")).1, stm(&args("3")).1);
    assert_eq!(stm(&args("0")).0, 1);
}

#[test]
fn empty_scaling_curve_is_header_only() {
    let (code, out, _) = stm(&[
        "scaling-curve",
        "--eps2",
        "0.5",
        "--level",
        "0",
        "--grid-n",
        "40",
        "--format",
        "csv",
    ]);
    assert_eq!(code, 0);
    let data: Vec<&str> = out.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data, vec!["eps2,level_N_energy,level_N1_energy,x,y"]);
}

#[test]
fn wavefunction_density_is_normalized() {
    let (code, out, err) = stm(&["wavefunction", "--eps2", "0.01", "--grid-n", "120"]);
    assert_eq!(code, 0, "{err}");
    let v: Value = serde_json::from_str(&out).unwrap();
    let q: Vec<f64> = serde_json::from_value(v["results"]["q"].clone()).unwrap();
    let d: Vec<f64> = serde_json::from_value(v["results"]["density"].clone()).unwrap();
    let qs = v["provenance"]["config"]["q_map_scale"].as_f64().unwrap();
    let grid = stm_core::quadrature::MomentumGrid::new(q.len(), qs).unwrap();
    let total: f64 = 4.0
        * std::f64::consts::PI
        * grid
            .iter()
            .zip(&d)
            .map(|((q, w), n)| w * q * q * n)
            .sum::<f64>();
    assert!((total - 1.0).abs() < 1e-9);
    assert!(Path::new(BIN).exists());
}
