use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn oppband(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oppband"))
        .args(args)
        .current_dir(dir)
        .env_remove("OPPBAND_OUT")
        .output()
        .unwrap()
}

fn write_config(dir: &Path) {
    fs::write(
        dir.join("exp.toml"),
        "steps = 800\nmax_cycles = 50\n\n[seeds]\ncount = 3\nbase = 21\n\n[data]\nn_events = 6000\n",
    )
    .unwrap();
}

fn listing(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn replay_is_deterministic_and_echoes_its_config() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path());
    for out in ["a", "b"] {
        let o = oppband(&["replay", "--config", "exp.toml", "--out", out], dir.path());
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let a = listing(&dir.path().join("a"));
    let b = listing(&dir.path().join("b"));
    let names: Vec<&str> = a.iter().map(|(n, _)| n.as_str()).collect();
    assert!(names.contains(&"purchase_s3_final.csv"), "{names:?}");
    assert!(names.contains(&"resolved_config.toml"));
    let strip = |files: Vec<(String, Vec<u8>)>| -> Vec<(String, Vec<u8>)> {
        files.into_iter().filter(|(n, _)| n != "resolved_config.toml").collect()
    };
    assert_eq!(strip(a), strip(b));

    let echoed = fs::read_to_string(dir.path().join("a/resolved_config.toml")).unwrap();
    let cfg = oppbandit::config::ExperimentConfig::from_toml(&echoed).unwrap();
    assert_eq!(cfg.steps, 800);
    assert_eq!(cfg.seeds.base, 21);
}

#[test]
fn out_dir_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path());
    let o = Command::new(env!("CARGO_BIN_EXE_oppband"))
        .args(["generate", "--config", "exp.toml"])
        .current_dir(dir.path())
        .env("OPPBAND_OUT", "from_env")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("from_env/events.csv").exists());
}

#[test]
fn generated_log_replays_from_file() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path());
    assert!(oppband(&["generate", "--config", "exp.toml", "--out", "gen"], dir.path()).status.success());
    fs::write(
        dir.path().join("file.toml"),
        "steps = 500\n\n[seeds]\ncount = 2\n\n[data]\nlog = \"gen/events.csv\"\n",
    )
    .unwrap();
    let o = oppband(&["replay", "--config", "file.toml", "--out", "rep"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("optimal\t2\t0\t0"), "{stdout}");
}

#[test]
fn sweep_writes_one_row_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path());
    let o = oppband(
        &["sweep", "--config", "exp.toml", "--out", "s", "--alpha", "0.5", "--alpha", "2"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = fs::read_to_string(dir.path().join("s/purchase_s3_sweep.csv")).unwrap();
    assert_eq!(table.lines().count(), 5, "{table}");
    let best = fs::read_to_string(dir.path().join("s/purchase_s3_sweep_best.csv")).unwrap();
    assert_eq!(best.lines().count(), 3, "{best}");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path());
    assert_eq!(oppband(&["--help"], dir.path()).status.code(), Some(0));
    assert_eq!(oppband(&["replay", "--bogus"], dir.path()).status.code(), Some(1));
    assert_eq!(
        oppband(&["replay", "--config", "exp.toml", "--alpha", "1", "--alpha", "2"], dir.path()).status.code(),
        Some(1)
    );
    assert_eq!(oppband(&["replay", "--config", "missing.toml"], dir.path()).status.code(), Some(1));
    assert_eq!(oppband(&["replay", "--config", "exp.toml", "--rho", "0.7"], dir.path()).status.code(), Some(1));

    fs::write(dir.path().join("bad.csv"), "timestamp,oops\n1,2\n").unwrap();
    fs::write(dir.path().join("bad.toml"), "[data]\nlog = \"bad.csv\"\n").unwrap();
    assert_eq!(oppband(&["replay", "--config", "bad.toml", "--out", "x"], dir.path()).status.code(), Some(2));

    // a single-arm log gives a policy on three arms nothing to match
    let mut log = String::from("timestamp,customer_id,load,normalized_load,arm,reward\n");
    for i in 0..40 {
        log.push_str(&format!("{i},,{},{},0,0\n", i + 1, i as f64 / 39.0));
    }
    log.push_str("40,,1,0,2,0\n");
    fs::write(dir.path().join("thin.csv"), log).unwrap();
    fs::write(
        dir.path().join("thin.toml"),
        "steps = 50\nmax_cycles = 2\n\n[data]\nlog = \"thin.csv\"\n\n[[policies]]\nkind = \"fixed\"\narm = 1\n",
    )
    .unwrap();
    let o = oppband(&["replay", "--config", "thin.toml", "--out", "y"], dir.path());
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}
