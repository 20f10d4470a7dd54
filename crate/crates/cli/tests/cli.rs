use std::fs;
use std::process::{Command, Output};

fn mpclab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mpclab"))
        .args(args)
        .env("MPCLAB_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn alpha_c1_example() {
    let o = mpclab(&["alpha", "--beta", "exp", "--C", "1", "--sigma", "0.5", "--N", "4", "--m", "2"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "0.9375\n");
}

#[test]
fn alpha_saturated_finite() {
    let o = mpclab(&["alpha", "--beta", "finite", "--c", "0.5", "--N", "3", "--m", "1"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "1 (saturated)\n");
}

#[test]
fn oracle_matches_closed_form() {
    let o = mpclab(&["oracle", "--beta", "finite", "--c", "2", "--N", "3", "--m", "1", "--format", "csv"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("variant,alpha_lp,alpha_closed,gap"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').skip(1).map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 3);
    for r in rows {
        assert!((r[0] - 2.0 / 3.0).abs() <= 1e-8);
        assert!(r[2] <= 1e-8);
    }
    let human = stdout(&mpclab(&["oracle", "--beta", "finite", "--c", "2", "--N", "3", "--m", "1"]));
    assert!(human.lines().all(|l| l.contains("0.666667")));
}

#[test]
fn exit_codes() {
    assert_eq!(mpclab(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(mpclab(&["alpha", "--beta", "exp", "--C", "2", "--N", "4", "--m", "1"]).status.code(), Some(1));
    assert_eq!(
        mpclab(&["alpha", "--beta", "exp", "--C", "2", "--sigma", "0.5", "--N", "4", "--m", "4"]).status.code(),
        Some(1)
    );
    assert_eq!(mpclab(&["--help"]).status.code(), Some(0));
    let non_sub = ["alpha", "--beta", "finite", "--c", "1,0.5,0.6", "--N", "4", "--m", "2"];
    assert_eq!(mpclab(&non_sub).status.code(), Some(1));
    let mut allowed = non_sub.to_vec();
    allowed.push("--allow-non-submultiplicative");
    let o = mpclab(&allowed);
    assert!(o.status.success());
    assert!(stdout(&o).ends_with("(lower bound)\n"));
}

#[test]
fn verify_passes() {
    let o = mpclab(&["verify"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.lines().count() >= 10);
    assert!(!text.contains("FAIL"));
}

#[test]
fn sweep_and_region_are_deterministic() {
    let sweep = ["sweep-m", "--beta", "exp", "--C", "2", "--sigma", "0.625", "--N", "8"];
    let a = mpclab(&sweep);
    assert_eq!(a.stdout, mpclab(&sweep).stdout);
    let text = stdout(&a);
    assert!(text.starts_with("m,alpha\n"));
    assert_eq!(text.lines().count(), 8);

    let region = ["region", "--N", "4", "--m", "2", "--c-count", "17", "--sigma-count", "11"];
    let r1 = mpclab(&region);
    let r2 = Command::new(env!("CARGO_BIN_EXE_mpclab"))
        .args(region)
        .env("MPCLAB_THREADS", "3")
        .output()
        .unwrap();
    assert!(r1.status.success());
    assert_eq!(r1.stdout, r2.stdout);
    let text = stdout(&r1);
    assert!(text.starts_with("C,sigma,alpha,stable\n"));
    assert_eq!(text.lines().count(), 1 + 17 * 11);
    assert!(String::from_utf8(r1.stderr).unwrap().starts_with("area "));
}

#[test]
fn region_writes_gnuplot_script() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("region.csv");
    let gp = dir.path().join("region.gp");
    let o = mpclab(&[
        "region", "--N", "2", "--m", "1", "--c-count", "5", "--sigma-count", "5",
        "--output", csv.to_str().unwrap(), "--gnuplot", gp.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("area "));
    let script = fs::read_to_string(&gp).unwrap();
    assert!(script.contains(csv.to_str().unwrap()));
    assert_eq!(fs::read_to_string(&csv).unwrap().lines().count(), 26);

    let no_file = mpclab(&["region", "--N", "2", "--m", "1", "--gnuplot", gp.to_str().unwrap()]);
    assert_eq!(no_file.status.code(), Some(1));
}

#[test]
fn min_horizon_reports_bound() {
    let o = mpclab(&["min-horizon", "--gamma", "10", "--format", "csv"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    let n_min: usize = row[3].parse().unwrap();
    let bound: f64 = row[4].parse().unwrap();
    assert_eq!(n_min, bound.ceil() as usize);
    assert_eq!(mpclab(&["min-horizon", "--gamma", "10", "--m", "sometimes"]).status.code(), Some(1));
}

#[test]
fn simulate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.json");
    fs::write(
        &cfg,
        r#"{"system": {"kind": "pendulum"}, "horizon": 6,
            "schedule": {"set": [1, 2, 3], "rule": "random", "seed": 1},
            "segments": 5,
            "initial_states": [[0.05, 0.0, 1.0, 0.0], [-0.05, 0.05, -1.0, 0.05]]}"#,
    )
    .unwrap();
    let cfg = cfg.to_str().unwrap();
    let a = mpclab(&["simulate", "--config", cfg, "--seed", "11"]);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, mpclab(&["simulate", "--config", cfg, "--seed", "11"]).stdout);
    assert_eq!(stdout(&a).lines().count(), 3);

    let out = dir.path().join("runs");
    let o = mpclab(&["simulate", "--config", cfg, "--output", out.to_str().unwrap()]);
    assert!(o.status.success());
    let run0 = fs::read_to_string(out.join("run_0000.csv")).unwrap();
    assert!(run0.starts_with("n,x0,x1,x2,x3,u0,cost,segment_index\n"));
    assert!(out.join("summary.csv").exists());
}
