use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn linswap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_linswap"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(text: &[u8]) -> serde_json::Value {
    serde_json::from_slice(text).expect("valid JSON")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn regret_run_writes_one_row_per_round_and_a_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run.csv");
    let cfg = configs().join("regret_simplex.json");
    let o = linswap(&[
        "regret-run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(&out).unwrap();
    assert_eq!(csv.lines().count(), 401);
    assert!(csv.starts_with("round,action_0,action_1,action_2,loss_0"));
    let summary = json(&fs::read(dir.path().join("run.summary.json")).unwrap());
    assert_eq!(summary["rounds"], 400);
    let reg = summary["final_regret_exact"].as_f64().unwrap();
    assert!(reg >= -1e-6 && reg <= summary["bound_value"].as_f64().unwrap());
    // The last running swap regret in the CSV is the exact final regret.
    let last: f64 = csv
        .lines()
        .last()
        .unwrap()
        .rsplit(',')
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert!((last - reg).abs() < 1e-6);
}

#[test]
fn regret_run_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let body = write(dir.path(), "body.json", r#"{"shape": "simplex", "dim": 3}"#);
    let cfg = write(
        dir.path(),
        "cfg.json",
        &format!(r#"{{"body": "{body}", "rounds": 30, "adversary": "uniform"}}"#),
    );
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = linswap(&[
            "regret-run",
            "--config",
            &cfg,
            "--seed",
            "9",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success());
        (
            fs::read(&out).unwrap(),
            fs::read(out.with_extension("summary.json")).unwrap(),
        )
    };
    assert_eq!(run("a.csv"), run("b.csv"));
}

#[test]
fn single_round_and_worst_column_adversary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "cfg.json",
        r#"{"body": {"shape": "box", "lo": [0, 0], "hi": [1, 1]}, "rounds": 1, "adversary": "adaptive-worst-column"}"#,
    );
    let o = linswap(&["regret-run", "--config", &cfg]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(String::from_utf8(o.stdout).unwrap().lines().count(), 2);
    assert!(json(&o.stderr)["final_regret_exact"].is_number());
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(
        dir.path(),
        "bad.json",
        r#"{"body": {"shape": "simplex", "dim": 3}, "rounds": "#,
    );
    assert_eq!(
        linswap(&["regret-run", "--config", &bad]).status.code(),
        Some(2)
    );
    let missing = dir.path().join("missing.json");
    assert_eq!(
        linswap(&["lce", "--config", missing.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
    let no_seed = write(
        dir.path(),
        "noseed.json",
        r#"{"body": {"shape": "simplex", "dim": 3}, "rounds": 5, "adversary": "uniform"}"#,
    );
    assert_eq!(
        linswap(&["regret-run", "--config", &no_seed]).status.code(),
        Some(2)
    );
    let zero = write(
        dir.path(),
        "zero.json",
        r#"{"body": {"shape": "simplex", "dim": 3}, "rounds": 0, "adversary": "constant", "seed": 1}"#,
    );
    assert_eq!(
        linswap(&["regret-run", "--config", &zero]).status.code(),
        Some(2)
    );
    assert_eq!(linswap(&["regret-run"]).status.code(), Some(2));
    assert_eq!(linswap(&["nonsense"]).status.code(), Some(2));
}

#[test]
fn solver_errors_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    // No fixed-point search can certify a residual this small.
    let cfg = write(
        dir.path(),
        "cfg.json",
        r#"{"body": {"shape": "simplex", "dim": 3}, "rounds": 3, "adversary": "constant", "seed": 1, "fp_tol": 1e-300}"#,
    );
    assert_eq!(
        linswap(&["regret-run", "--config", &cfg]).status.code(),
        Some(3)
    );
}

#[test]
fn lce_solution_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sol.json");
    let cfg = configs().join("lce_shapley.json");
    let o = linswap(&[
        "lce",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let sol = json(&fs::read(&out).unwrap());
    let w: f64 = sol["weights"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .sum();
    assert!((w - 1.0).abs() < 1e-10);
    for g in sol["gaps"].as_array().unwrap() {
        assert!(g.as_f64().unwrap() <= 1e-3 + 1e-6);
    }
    let game = configs().join("shapley.json");
    let vcfg = write(
        dir.path(),
        "verify.json",
        &format!(
            r#"{{"game": "{}", "solution": "{}", "eps": 0.001}}"#,
            game.display(),
            out.display()
        ),
    );
    let o = linswap(&["verify", "--config", &vcfg]);
    assert!(o.status.success());
    assert_eq!(json(&o.stdout)["within_eps"], true);
}

#[test]
fn constant_game_gives_one_atom() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "cfg.json",
        r#"{"game": {"players": 2,
            "bodies": [{"shape": "simplex", "dim": 2}, {"shape": "simplex", "dim": 3}],
            "utilities": {"kind": "normal_form", "tensors": [[0.5, 0.5, 0.5, 0.5, 0.5, 0.5], [0, 0, 0, 0, 0, 0]]}},
            "eps": 0.001}"#,
    );
    let o = linswap(&["lce", "--config", &cfg]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(json(&o.stdout)["atoms"].as_array().unwrap().len(), 1);
}

#[test]
fn verify_reports_the_pure_deviation_gain() {
    let cfg = configs().join("verify_pennies_heads.json");
    let o = linswap(&["verify", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success());
    let r = json(&o.stdout);
    assert_eq!(r["within_eps"], false);
    assert!((r["max_gap"].as_f64().unwrap() - 2.0).abs() < 1e-9);
}

#[test]
fn selfplay_gaps_shrink() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sp.csv");
    let game = configs().join("matching_pennies.json");
    let cfg = write(
        dir.path(),
        "cfg.json",
        &format!(r#"{{"game": "{}", "rounds": 400}}"#, game.display()),
    );
    let o = linswap(&[
        "selfplay",
        "--config",
        &cfg,
        "--seed",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(&out).unwrap();
    assert_eq!(csv.lines().count(), 401);
    assert!(csv.starts_with("round,gap_0,gap_1,max_gap,baseline_max_gap"));
    let summary = json(&fs::read(dir.path().join("sp.summary.json")).unwrap());
    let max = |row: &str| row.split(',').nth(3).unwrap().parse::<f64>().unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert!(max(rows[399]) < max(rows[9]));
    assert!(summary["final_max_gap"].as_f64().unwrap() < 0.2);
}

#[test]
fn selfplay_single_player_single_round() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "cfg.json",
        r#"{"game": {"players": 1, "bodies": [{"shape": "simplex", "dim": 3}],
            "utilities": {"kind": "normal_form", "tensors": [[0.2, 0.9, -0.4]]}},
            "rounds": 1, "seed": 4, "baseline": false}"#,
    );
    let o = linswap(&["selfplay", "--config", &cfg]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert_eq!(text.lines().next().unwrap(), "round,gap_0,max_gap");
}

#[test]
fn hardness_demo() {
    let o = linswap(&["demo-hardness"]);
    assert!(o.status.success());
    let r = json(&o.stdout);
    assert_eq!(r["scale"].as_f64(), Some(0.875));
    assert_eq!(r["cap"].as_f64(), Some(0.75));
    assert_eq!(r["origin_fixed_on_both"], true);
    let cfg = configs().join("hardness_d3.json");
    let r = json(&linswap(&["demo-hardness", "--config", cfg.to_str().unwrap()]).stdout);
    assert!((r["scale"].as_f64().unwrap() - 11.0 / 12.0).abs() < 1e-15);
    assert_eq!(r["image_in_capped_ball"], false);
    let dir = tempfile::tempdir().unwrap();
    let one = write(dir.path(), "one.json", r#"{"dim": 1}"#);
    assert_eq!(
        linswap(&["demo-hardness", "--config", &one]).status.code(),
        Some(2)
    );
}
