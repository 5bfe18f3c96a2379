use std::path::Path;
use std::process::{Command, Output};

fn slowdiv(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_slowdiv"))
        .arg("--out")
        .arg(out)
        .args(args)
        .env_remove("SLOWDIV_PRECISION_BITS")
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn unknown_flag_exits_one_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = slowdiv(
        &out,
        &[
            "density",
            "--shape",
            "triangle",
            "--a",
            "1",
            "--no-such-flag",
        ],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(!out.exists());
}

#[test]
fn unknown_subcommand_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = slowdiv(&dir.path().join("run"), &["frobnicate"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn help_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let o = slowdiv(&dir.path().join("run"), &["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("nonergodic"));
}

#[test]
fn triangle_difference_density_is_two_thirds() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = slowdiv(&out, &["density", "--shape", "triangle", "--a", "1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&out.join("density.json"));
    assert_eq!(r["dens_exact"], "2/3");
    assert_eq!(r["count"], 1);
    let m = json(&out.join("manifest.json"));
    assert_eq!(m["subcommand"], "density");
    assert_eq!(m["outputs"][0]["file"], "density.json");
    assert_eq!(m["outputs"][0]["sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn malformed_rational_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = slowdiv(&out, &["density", "--shape", "triangle", "--a", "sqrt(2)"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!out.exists());
}

#[test]
fn convergents_csv_columns() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = slowdiv(
        &out,
        &["convergents", "--w", "+h+(2,-4)", "--bound", "1000"],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(out.join("convergents.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("k,a_k,p_k,q_k,length,cross_with_owner"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert!(rows.len() >= 5);
    // |v_k| increasing from k = 1 on, and the last one past the bound
    let lens: Vec<f64> = rows.iter().map(|r| r[4].parse().unwrap()).collect();
    assert!(lens[1..].windows(2).all(|w| w[0] < w[1]));
    assert!(*lens.last().unwrap() > 1000.0);
}

#[test]
fn nonergodic_certificate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("build");
    let o = slowdiv(
        &out,
        &["nonergodic", "--e0", "4", "--depth", "2", "--mode", "path"],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in [
        "nonergodic.csv",
        "nonergodic_tree.json",
        "nonergodic_cert.json",
        "manifest.json",
    ] {
        assert!(out.join(f).exists(), "{f}");
    }
    let csv = std::fs::read_to_string(out.join("nonergodic.csv")).unwrap();
    assert_eq!(
        csv.lines().next(),
        Some("j,norm_w,cross,peak_t,peak_m,valley_t,valley_m,rate_estimate")
    );
    assert_eq!(csv.lines().count(), 4);

    let check = dir.path().join("check");
    let cert = out.join("nonergodic_cert.json");
    let o = slowdiv(&check, &["verify", "--cert", cert.to_str().unwrap()]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert_eq!(json(&check.join("verify.json"))["passed"], true);
}

#[test]
fn tampered_certificate_exits_four() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("build");
    let o = slowdiv(&out, &["slow", "--steps", "8"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut cert = json(&out.join("slow_cert.json"));
    cert["body"]["m"][3] = serde_json::Value::String("1.5".into());
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, serde_json::to_string(&cert).unwrap()).unwrap();
    let check = dir.path().join("check");
    let o = slowdiv(&check, &["verify", "--cert", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("step 4: m"));
    assert_eq!(json(&check.join("verify.json"))["passed"], false);
}

#[test]
fn slow_run_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = slowdiv(out, &["slow", "--steps", "12", "--seed", "7"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in [
        "slow.csv",
        "slow_cert.json",
        "slow_clauses.json",
        "manifest.json",
    ] {
        assert_eq!(
            std::fs::read(a.join(f)).unwrap(),
            std::fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
    let csv = std::fs::read_to_string(a.join("slow.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("j,rule,t,m,r,norm_w"));
    assert_eq!(csv.lines().count(), 13);
}

#[test]
fn density_battery_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "density",
        "--battery",
        "--sector-count",
        "20",
        "--strip-count",
        "10",
        "--seed",
        "3",
    ];
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = slowdiv(out, &args);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let ta = std::fs::read(a.join("density_battery.csv")).unwrap();
    assert_eq!(ta, std::fs::read(b.join("density_battery.csv")).unwrap());
    let text = String::from_utf8(ta).unwrap();
    assert_eq!(text.lines().count(), 31);
}

#[test]
fn precision_override_below_minimum_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = Command::new(env!("CARGO_BIN_EXE_slowdiv"))
        .arg("--out")
        .arg(&out)
        .args(["density", "--shape", "triangle", "--a", "1"])
        .env("SLOWDIV_PRECISION_BITS", "8")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(!out.exists());
}

#[test]
fn predict_from_slow_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("build");
    assert!(slowdiv(&out, &["slow", "--steps", "10"]).status.success());
    let p = dir.path().join("predict");
    let cert = out.join("slow_cert.json");
    let o = slowdiv(&p, &["predict", "--cert", cert.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&p.join("predict.json"));
    assert_eq!(v["convention"], "full_log");
    assert!(!v["profile"]["steps"].as_array().unwrap().is_empty());
}
