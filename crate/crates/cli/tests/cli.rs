use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("spinchain-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn spinchain(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spinchain"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("SPINCHAIN_THREADS")
        .output()
        .unwrap()
}

fn manifest(out: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn validate_passes_and_writes_report() {
    let out = scratch("validate");
    let r = spinchain(&["validate"], &out);
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    let csv = std::fs::read_to_string(out.join("validation.csv")).unwrap();
    assert!(csv.starts_with("check [name],measured [dimensionless]"));
    assert_eq!(manifest(&out)["command"], "validate");
}

#[test]
fn planted_pairing_bug_is_a_tolerance_failure() {
    let out = scratch("flip");
    let r = spinchain(&["validate", "--flip-pairing"], &out);
    assert_eq!(r.status.code(), Some(2));
    let csv = std::fs::read_to_string(out.join("validation.csv")).unwrap();
    let oracle_line = csv.lines().find(|l| l.starts_with("oracle agreement")).unwrap();
    assert!(oracle_line.ends_with(",0"), "{oracle_line}");
}

#[test]
fn oversized_inputs_hit_the_resource_guard() {
    let out = scratch("guard");
    assert_eq!(spinchain(&["validate", "--N", "14"], &out).status.code(), Some(3));
    assert_eq!(spinchain(&["relax", "--n-max", "5000000"], &out).status.code(), Some(3));
    assert_eq!(spinchain(&["relax", "--nodes", "99999999"], &out).status.code(), Some(3));
}

#[test]
fn bad_input_is_a_plain_error() {
    let out = scratch("bad");
    let cfg = out.join("bad.cfg");
    std::fs::write(&cfg, "bogus = 1\n").unwrap();
    let r = spinchain(&["sweep", "--config", cfg.to_str().unwrap()], &out);
    assert_eq!(r.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&r.stderr).contains("bogus"));
}

#[test]
fn flags_override_the_config_file() {
    let out = scratch("precedence");
    let cfg = out.join("run.cfg");
    std::fs::write(&cfg, "# sweep\na = 0.5\nbeta = 7\ntau = 0.5:1.5:0.5\n").unwrap();
    let r = spinchain(&["sweep", "--config", cfg.to_str().unwrap(), "--a", "0.9"], &out);
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    let m = manifest(&out);
    assert_eq!(m["config"]["a"], 0.9);
    assert_eq!(m["config"]["beta"], 7.0);
    assert_eq!(m["config"]["tau"], serde_json::json!([0.5, 1.0, 1.5]));
    assert!(m["elapsed_seconds"].as_f64().unwrap() >= 0.0);
    assert!(m["version"].is_string());
}

#[test]
fn csv_carries_units_and_full_precision() {
    let out = scratch("format");
    let r = spinchain(&["sweep", "--tau", "0.5:2:0.5"], &out);
    assert_eq!(r.status.code(), Some(0));
    let csv = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    let mut lines = csv.lines();
    let header = lines.next().unwrap();
    assert!(header.split(',').all(|h| h.ends_with(']') && h.contains(" [")), "{header}");
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    let mantissa = first[1].split('e').next().unwrap().trim_start_matches('-');
    assert_eq!(mantissa.replace('.', "").len(), 17, "{}", first[1]);
}

#[test]
fn output_is_independent_of_thread_count() {
    let files = ["sweep.csv", "sweep_crossings.csv", "sweep_kinks.csv"];
    let run = |threads: &str| {
        let out = scratch(&format!("threads{threads}"));
        let r = spinchain(&["sweep", "--tau", "4:8:0.25", "--threads", threads], &out);
        assert_eq!(r.status.code(), Some(0));
        files.map(|f| std::fs::read(out.join(f)).unwrap())
    };
    assert_eq!(run("1"), run("3"));
}

#[test]
fn thread_count_falls_back_to_environment() {
    let out = scratch("env");
    let r = Command::new(env!("CARGO_BIN_EXE_spinchain"))
        .args(["sweep", "--tau", "1:2:0.5", "--out"])
        .arg(&out)
        .env("SPINCHAIN_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(r.status.code(), Some(0));
    assert_eq!(manifest(&out)["threads"], 2);
}

#[test]
fn revival_on_a_short_ring() {
    let out = scratch("revival");
    let r = spinchain(&["revival", "--N", "60"], &out);
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    let summary = std::fs::read_to_string(out.join("revival_summary.csv")).unwrap();
    let row: Vec<&str> = summary.lines().nth(1).unwrap().split(',').collect();
    let err: f64 = row[4].parse().unwrap();
    assert!(err.abs() < 0.1, "{summary}");
    assert!(out.join("revival_N60.csv").exists());
}

#[test]
fn uniform_field_does_not_relax() {
    let out = scratch("relax");
    let r = spinchain(&["relax", "--a", "0.8", "--b", "0.8", "--tau", "1", "--n-max", "100"], &out);
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    let csv = std::fs::read_to_string(out.join("relax_tau1.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let d: f64 = line.split(',').nth(3).unwrap().parse().unwrap();
        assert!(d < 1e-12, "{line}");
    }
    let fit = std::fs::read_to_string(out.join("relax_fit.csv")).unwrap();
    assert_eq!(fit.lines().nth(1).unwrap().split(',').nth(2), Some("NaN"));
    assert_eq!(manifest(&out)["results"]["fits"][0]["stationary"], true);
}

#[test]
fn uniform_field_has_no_revival() {
    let out = scratch("flat");
    let r = spinchain(&["revival", "--a", "0.8", "--b", "0.8", "--N", "40"], &out);
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    let summary = std::fs::read_to_string(out.join("revival_summary.csv")).unwrap();
    assert_eq!(summary.lines().nth(1).unwrap().split(',').nth(1), Some("-1"));
    assert_eq!(manifest(&out)["results"]["detected"], 0);
}

#[test]
fn unknown_flag_is_a_usage_error_not_a_tolerance_failure() {
    let out = scratch("usage");
    let r = spinchain(&["sweep", "--bogus"], &out);
    assert_eq!(r.status.code(), Some(1));
    assert_eq!(spinchain(&["--help"], &out).status.code(), Some(0));
}
