mod common;

use common::{divlab, verify_goldens};

fn parse_csv(text: &str) -> Vec<Vec<String>> {
    text.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn goldens_reproduce_across_runs_and_threads() {
    let n = verify_goldens().unwrap();
    assert!(n > 0);
}

#[test]
fn chernoff_table_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let out = divlab(None)
        .args(["chernoff", "--law", "poisson1", "--grid", "0.1:5:50", "--output"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let rows = parse_csv(&std::fs::read_to_string(dir.path().join("chernoff.csv")).unwrap());
    assert_eq!(rows.len(), 50);
    for r in rows {
        let x: f64 = r[0].parse().unwrap();
        let v: f64 = r[1].parse().unwrap();
        assert!((v - (x * x.ln() - x + 1.0)).abs() <= 1e-8, "x={x}");
    }
}

#[test]
fn estimate_with_unit_weights_is_the_mean() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    let xs: Vec<f64> = (0..40).map(|i| ((i * 37) % 11) as f64 / 3.0 - 1.5).collect();
    std::fs::write(&data, xs.iter().map(|x| format!("{x}\n")).collect::<String>()).unwrap();
    let out = divlab(None)
        .args(["estimate", "--model", "gauss_loc", "--gamma", "0", "--weights", "unit", "--data"])
        .arg(&data)
        .arg("--output")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("estimate.json")).unwrap()).unwrap();
    let theta = v["report"]["theta_hat"][0].as_f64().unwrap();
    assert!((theta - xs.iter().sum::<f64>() / 40.0).abs() <= 1e-6);
}

#[test]
fn invalid_gamma_exits_2_naming_the_field() {
    let out = divlab(None).args(["estimate", "--gamma", "half"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("gamma"));
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"command": "estimate", "gamma": "half"}"#).unwrap();
    let out = divlab(None).args(["estimate", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("gamma"));
}

#[test]
fn unknown_config_keys_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"command": "chernoff", "lawz": "exp1"}"#).unwrap();
    let out = divlab(None).args(["chernoff", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("lawz"));
}

#[test]
fn empty_result_writes_header_only_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"command": "sanov", "theta": [0.3], "n_grid": []}"#).unwrap();
    let out = divlab(None)
        .args(["sanov", "--config"])
        .arg(&cfg)
        .arg("--output")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(std::fs::read_to_string(dir.path().join("sanov.csv")).unwrap(), "n,rate,target,gap\n");
}

#[test]
fn dry_run_prints_the_plan_and_writes_nothing() {
    for sub in ["divergence", "chernoff", "estimate", "sanov", "bahadur", "clt"] {
        let dir = tempfile::tempdir().unwrap();
        let mut cmd = divlab(None);
        cmd.arg(sub).arg("--dry-run").arg("--output").arg(dir.path());
        if matches!(sub, "sanov" | "bahadur") {
            cmd.args(["--theta", "0.4", "--theta-prime", "0.6"]);
        }
        let out = cmd.output().unwrap();
        assert!(out.status.success(), "{sub}: {}", String::from_utf8_lossy(&out.stderr));
        let plan: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        assert_eq!(plan["command"], sub);
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
    }
}

#[test]
fn unwritable_output_exits_2() {
    let out = divlab(None)
        .args(["chernoff", "--output", "/nonexistent/dir/for/divlab"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"command": "chernoff", "law": "exp1", "grid": "1:2:2"}"#).unwrap();
    let out = divlab(None)
        .args(["chernoff", "--dry-run", "--law", "normal11", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    let plan: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(plan["config"]["law"], "normal11");
    assert_eq!(plan["config"]["grid"], "1:2:2");
}
