use std::path::Path;
use std::process::Command;

const MODEL: &str = r#"
n = 2
theta_lo = 0.0
theta_hi = 1.0

[prior]
kind = "iid"
marginal = { kind = "uniform", lo = 0.0, hi = 1.0 }
"#;

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn screenlab(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_screenlab")).args(args).env_remove("SCREENLAB_THREADS").output().unwrap()
}

fn setup(config: &str) -> (tempfile::TempDir, String) {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "model.toml", MODEL);
    let cfg = write(dir.path(), "config.toml", config);
    (dir, cfg.to_str().unwrap().to_string())
}

#[test]
fn robust_report_is_byte_identical_across_runs() {
    let (dir, cfg) = setup("command = \"robust\"\nmodel = \"model.toml\"\nseeds = [3, 4]\n");
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for out in [&a, &b] {
        let o = screenlab(&["robust", "--config", &cfg, "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let pa = std::fs::read(dir.path().join("a_price_cdf.csv")).unwrap();
    let pb = std::fs::read(dir.path().join("b_price_cdf.csv")).unwrap();
    assert_eq!(pa, pb);
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(&a).unwrap()).unwrap();
    assert_eq!(v["argmin"], "buyer_optimal");
}

#[test]
fn threads_do_not_change_the_report() {
    let (dir, cfg) = setup("command = \"verify_guarantee\"\nmodel = \"model.toml\"\nseeds = [0, 1, 2]\n");
    let mut outs = Vec::new();
    for t in ["1", "3"] {
        let out = dir.path().join(format!("g{t}.json"));
        let o = Command::new(env!("CARGO_BIN_EXE_screenlab"))
            .args(["verify-guarantee", "--config", &cfg, "--out", out.to_str().unwrap()])
            .env("SCREENLAB_THREADS", t)
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        outs.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(outs[0], outs[1]);
}

#[test]
fn csv_comparative_statics_to_stdout() {
    let (_dir, cfg) = setup("command = \"comparative_statics\"\nmodel = \"model.toml\"\n");
    let o = screenlab(&["comparative-statics", "--config", &cfg, "--format", "csv", "--n-max", "3"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,per_good_price,average_consumer_surplus,total_profit");
    assert_eq!(lines.len(), 4);
    assert!(lines[2].starts_with("2,0.24091"));
}

#[test]
fn buyer_optimal_writes_plot_pairs() {
    let (dir, cfg) = setup("command = \"buyer_optimal\"\nmodel = \"model.toml\"\n[output]\npath = \"out/bo.json\"\n");
    let o = screenlab(&["buyer_optimal", "--config", &cfg]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let plot = std::fs::read_to_string(dir.path().join("out/bo_grand_bundle_cdf.csv")).unwrap();
    assert!(plot.starts_with("s,signal_cdf,prior_cdf\n0,0,0\n"));
    assert_eq!(plot.lines().count(), 513);
}

#[test]
fn bad_tolerance_is_a_config_error() {
    let (_dir, cfg) = setup("command = \"robust\"\nmodel = \"model.toml\"\n[tolerances]\nguarantee = 0.0\n");
    let o = screenlab(&["robust", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("tolerance guarantee"));
}

#[test]
fn free_disposal_violation_names_the_bound() {
    let model = MODEL.replace("[prior]", "[kappa]\n\"0b01\" = 3.0\n\n[prior]");
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "model.toml", &model);
    let cfg = write(dir.path(), "c.toml", "command = \"buyer_optimal\"\nmodel = \"model.toml\"\n");
    let o = screenlab(&["buyer_optimal", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("free disposal") && err.contains("bound"), "{err}");
}

#[test]
fn command_mismatch_and_small_grid_are_config_errors() {
    let (_dir, cfg) = setup("command = \"robust\"\nmodel = \"model.toml\"\n");
    assert_eq!(screenlab(&["buyer_optimal", "--config", &cfg]).status.code(), Some(2));
    assert_eq!(screenlab(&["robust", "--config", &cfg, "--grid", "2"]).status.code(), Some(2));
    assert_eq!(screenlab(&["robust", "--config", &cfg, "--format", "xml"]).status.code(), Some(2));
}

#[test]
fn four_goods_exceed_minmax_limits() {
    let model = MODEL.replace("n = 2", "n = 4");
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "model.toml", &model);
    let cfg = write(dir.path(), "c.toml", "command = \"verify_minmax\"\nmodel = \"model.toml\"\n");
    let o = screenlab(&["verify_minmax", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn failed_check_exits_with_verification_code() {
    // the 60-cell correlated signal overstates π* by far more than 1e-6
    let (dir, cfg) = setup(
        "command = \"verify_minmax\"\nmodel = \"model.toml\"\ngrid = 5\ncells = 60\nseeds = [0]\ncoarseness = [2]\n[tolerances]\nminmax = 1e-6\n",
    );
    let out = dir.path().join("mm.json");
    let o = screenlab(&["verify_minmax", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("FAILED"));
    // the report is still written, with the witness pair
    assert!(out.exists());
    assert!(dir.path().join("mm_witness_signal.json").exists());
    assert!(dir.path().join("mm_witness_mechanism.json").exists());
}

#[test]
fn export_lp_writes_cplex_text() {
    let (dir, cfg) = setup("command = \"export_lp\"\nmodel = \"model.toml\"\ngrid = 3\n");
    let out = dir.path().join("m.lp");
    let o = screenlab(&["export-lp", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(out).unwrap();
    assert!(text.contains("Maximize") && text.contains("Subject To") && text.ends_with("End\n"));
    // 9 feasibility rows and 72 incentive rows
    assert_eq!(text.matches(" <= ").count(), 81);
}

#[test]
fn json_config_is_accepted() {
    let (dir, _) = setup("");
    let cfg = write(dir.path(), "c.json", r#"{"command": "buyer_optimal", "model": "model.toml"}"#);
    let o = screenlab(&["buyer_optimal", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}
