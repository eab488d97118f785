use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_noisy-portfolio");

fn write_config(dir: &Path, name: &str, extra: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    let body = format!(
        "label = small\nproblem = sphere-d2-z0\nsolvers = fabian1\nmode = solo\nbudget = 5000\n\
         repetitions = 3\nbase_seed = 11\noutput = {}\n{extra}",
        dir.join("out").display()
    );
    fs::write(&path, body).unwrap();
    path
}

fn np(args: &[&str], seed: Option<&str>) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.args(args).env_remove("NP_SEED");
    if let Some(s) = seed {
        cmd.env("NP_SEED", s);
    }
    cmd.output().unwrap()
}

fn outputs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir.join("out/small"))
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn run_writes_traces_and_aggregate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "a.conf", "");
    let out = np(&["run", cfg.to_str().unwrap(), "--workers", "2"], None);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let names: Vec<String> = outputs(dir.path()).into_iter().map(|f| f.0).collect();
    assert_eq!(names, ["aggregate.csv", "run_000.csv", "run_001.csv", "run_002.csv"]);
    let agg = fs::read_to_string(dir.path().join("out/small/aggregate.csv")).unwrap();
    assert!(agg.starts_with("label,mean_slope,stderr,optimal_hits,diverged,reps,budget,seed\nsmall,"));
    assert!(String::from_utf8_lossy(&out.stdout).contains("small: slope"));
}

#[test]
fn reruns_are_byte_identical_and_seed_overrides_apply() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "a.conf", "");
    let cfg = cfg.to_str().unwrap();
    assert!(np(&["run", cfg], None).status.success());
    let first = outputs(dir.path());
    assert!(np(&["run", cfg, "--workers", "1"], None).status.success());
    assert_eq!(first, outputs(dir.path()));
    assert!(np(&["run", cfg], Some("11")).status.success());
    assert_eq!(first, outputs(dir.path()));
    assert!(np(&["run", cfg], Some("12")).status.success());
    assert_ne!(first, outputs(dir.path()));
}

#[test]
fn config_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), "bad.conf", "colour = blue\n");
    assert_eq!(np(&["run", bad.to_str().unwrap()], None).status.code(), Some(2));
    let missing = dir.path().join("missing.conf");
    assert_eq!(np(&["run", missing.to_str().unwrap()], None).status.code(), Some(2));
    let ok = write_config(dir.path(), "ok.conf", "");
    assert_eq!(np(&["run", ok.to_str().unwrap()], Some("twelve")).status.code(), Some(2));
    assert_eq!(np(&["validate-schedule", "--a", "-1", "--b", "2"], None).status.code(), Some(2));
    assert_eq!(np(&["lag-necessity", "--lag", "sometimes"], None).status.code(), Some(2));
}

#[test]
fn check_mode_exits_with_3_outside_the_band() {
    let dir = tempfile::tempdir().unwrap();
    let far = write_config(dir.path(), "far.conf", "check.min_slope = 5\ncheck.max_slope = 6\n");
    assert_eq!(np(&["run", far.to_str().unwrap(), "--check"], None).status.code(), Some(3));
    // without --check the band is ignored
    assert_eq!(np(&["run", far.to_str().unwrap()], None).status.code(), Some(0));
    let wide = write_config(dir.path(), "wide.conf", "check.min_slope = -10\ncheck.max_slope = 10\n");
    let out = np(&["run", wide.to_str().unwrap(), "--check"], None);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("check passed"));
}

#[test]
fn theory_subcommands_report() {
    let out = np(&["validate-schedule", "--a", "4.2", "--b", "2.2", "--lag", "pow:0.238", "--alpha-star", "1"], None);
    assert!(out.status.success());
    assert!(!out.stdout.is_empty());

    let out = np(&["lag-necessity", "--nmax", "60", "--reps", "20"], None);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("misranking frequency"));

    let out = np(&["shift", "--m", "2", "--budget", "5000", "--reps", "3"], None);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("log regret,solo log evals,nopa offset,inopa offset"));
}
