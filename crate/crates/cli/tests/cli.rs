use std::path::Path;
use std::process::{Command, Output};

use lpevo::verify::VerificationReport;

fn lpevo(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lpevo"))
        .arg("--out")
        .arg(out)
        .args(args)
        .env_remove("LPEVO_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn plancherel_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = lpevo(dir.path(), &["verify", "plancherel", "--gamma1", "1", "--gamma2", "2", "--kappa2", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let r = VerificationReport::from_json(&read(&dir.path().join("plancherel.json"))).unwrap();
    assert!(r.summary.max > 0.98 && r.summary.max < 1.02);
    assert_eq!(r.config["run"]["gamma2"], 2.0);
}

#[test]
fn unknown_estimate_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(lpevo(dir.path(), &["verify", "bogus"]).status.code(), Some(2));
    assert_eq!(lpevo(dir.path(), &["frobnicate"]).status.code(), Some(2));
    assert_eq!(lpevo(dir.path(), &["verify", "plancherel", "--param", "gamma1"]).status.code(), Some(2));
}

#[test]
fn hypothesis_violation_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = lpevo(dir.path(), &["verify", "lp-main", "--q", "2", "--p", "1.5"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn failing_verdict_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    // the dyadic blocks up to j = 6 do not fit below Nyquist on this grid
    let o = lpevo(dir.path(), &["verify", "kernel-decay", "--grid-n", "64", "--box-l", "1"]);
    assert_eq!(o.status.code(), Some(1));
    let r = VerificationReport::from_json(&read(&dir.path().join("kernel-decay.json"))).unwrap();
    assert!(!r.passed());
}

#[test]
fn empty_suite_is_valid_json() {
    let dir = tempfile::tempdir().unwrap();
    let o = lpevo(dir.path(), &["suite"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&read(&dir.path().join("suite.json"))).unwrap();
    assert_eq!(v["estimates"].as_array().unwrap().len(), 0);
    assert_eq!(v["schema_version"], 1);
}

#[test]
fn kernel_csv_header() {
    let dir = tempfile::tempdir().unwrap();
    let o = lpevo(dir.path(), &["kernel", "--symbol", "power", "--gamma", "2", "--grid-n", "256"]);
    assert_eq!(o.status.code(), Some(0));
    let csv = read(&dir.path().join("kernel.csv"));
    assert_eq!(csv.lines().next(), Some("x,re,im"));
    assert_eq!(csv.lines().count(), 257);
    let v: serde_json::Value = serde_json::from_str(&read(&dir.path().join("kernel.json"))).unwrap();
    // heat kernel at the origin, (4π)^{-1/2}
    let at0 = v["at_origin"][0].as_f64().unwrap();
    assert!((at0 - (4.0 * std::f64::consts::PI).powf(-0.5)).abs() < 1e-6);
}

fn refit(csv: &str) -> f64 {
    let pts: Vec<(f64, f64)> = csv
        .lines()
        .skip(1)
        .map(|l| {
            let mut it = l.split(',').map(|s| s.parse::<f64>().unwrap());
            (it.next().unwrap(), it.next().unwrap())
        })
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[test]
fn decay_csvs_refit_to_reported_slopes() {
    let dir = tempfile::tempdir().unwrap();
    let o = lpevo(dir.path(), &["verify", "kernel-decay", "--gamma1", "1", "--gamma2", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let r = VerificationReport::from_json(&read(&dir.path().join("kernel-decay.json"))).unwrap();
    let mut checked = 0;
    for fit in &r.fits {
        let slug: String = fit.name.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '_' }).collect();
        let data = read(&dir.path().join(format!("kernel-decay_{slug}_data.csv")));
        let fitted = read(&dir.path().join(format!("kernel-decay_{slug}_fit.csv")));
        assert!(data.starts_with("x,y\n") && fitted.starts_with("x,y_fit\n"));
        let a = refit(&data);
        let b = refit(&fitted);
        assert!((a - fit.slope).abs() <= 1e-9 * fit.slope.abs().max(1.0), "{}: {a} vs {}", fit.name, fit.slope);
        assert!((b - fit.slope).abs() <= 1e-9 * fit.slope.abs().max(1.0));
        checked += 1;
    }
    assert!(checked >= 2);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"seed": 4, "p": 4, "n_vars": 6}"#).unwrap();
    let o = lpevo(dir.path(), &["--config", cfg.to_str().unwrap(), "verify", "khintchine", "--p", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let r = VerificationReport::from_json(&read(&dir.path().join("khintchine.json"))).unwrap();
    assert_eq!(r.config["run"]["p"], 2.0);
    assert_eq!(r.config["run"]["seed"], 4);
    assert_eq!(r.config["estimate"]["n_vars"], 6);

    std::fs::write(&cfg, r#"{"seed": "four"}"#).unwrap();
    let o = lpevo(dir.path(), &["--config", cfg.to_str().unwrap(), "suite"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn out_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_lpevo"))
        .args(["verify", "khintchine", "--samples", "500"])
        .env("LPEVO_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(dir.path().join("khintchine.json").exists());
}

#[test]
fn full_suite_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let oa = lpevo(a.path(), &["suite", "--all", "--seed", "7"]);
    let ob = lpevo(b.path(), &["suite", "--all", "--seed", "7"]);
    assert_eq!(oa.status.code(), Some(0), "{}", String::from_utf8_lossy(&oa.stdout));
    assert_eq!(oa.status.code(), ob.status.code());
    let mut names: Vec<_> = std::fs::read_dir(a.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .filter(|n| n.to_string_lossy().ends_with(".json"))
        .collect();
    names.sort();
    assert_eq!(names.len(), 10);
    for n in names {
        assert_eq!(read(&a.path().join(&n)), read(&b.path().join(&n)), "{n:?}");
    }
}
