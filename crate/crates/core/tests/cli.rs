use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use dyncf::eval_harness::{ModelState, StreamConfig, SyntheticStream};
use dyncf::io::{ingest, save_events, Checkpoint};

fn small_stream(dir: &Path) -> PathBuf {
    let stream = SyntheticStream::generate(StreamConfig {
        initial_users: 120,
        total_users: 200,
        initial_items: 50,
        total_items: 70,
        train_days: 15,
        chunk_days: 6,
        seed: 9,
        ..StreamConfig::default()
    })
    .unwrap();
    let path = dir.join("events.csv");
    save_events(&stream.log, &path).unwrap();
    path
}

fn write_config(dir: &Path) -> PathBuf {
    let path = dir.join("run.toml");
    fs::write(
        &path,
        r#"seed = 5

[data]
path = "events.csv"
train_frac = 0.7
valid_frac = 0.1
n_chunks = 3

[model]
kind = "psirec"
rank = 6
ranks = [5, 5, 2]
window = 4
"#,
    )
    .unwrap();
    path
}

fn run(args: &[&str]) -> anyhow::Result<()> {
    dyncf::cli::run(std::iter::once("dyncf").chain(args.iter().copied()))
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn train_writes_a_loadable_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    small_stream(dir.path());
    let cfg = write_config(dir.path());
    for (kind, tensor) in [("psirec", false), ("tirec", true)] {
        let out = dir.path().join(kind);
        run(&["train", "--config", s(&cfg), "--seed", "3", "--model", kind, "--output", s(&out)]).unwrap();
        let ck = Checkpoint::load(&out.join("model.ckpt")).unwrap();
        assert_eq!(matches!(ck.state, ModelState::Tensor(_)), tensor);
        assert_eq!(ck.config["seed"], 3);
        assert_eq!(ck.config["model"]["kind"], kind);
    }
}

#[test]
fn replay_then_report() {
    let dir = tempfile::tempdir().unwrap();
    small_stream(dir.path());
    let cfg = write_config(dir.path());
    let mut runs = Vec::new();
    for kind in ["psirec", "svd", "tireca"] {
        let out = dir.path().join("runs").join(kind);
        run(&["replay", "--config", s(&cfg), "--seed", "1", "--model", kind, "--output", s(&out), "--quiet"]).unwrap();
        for f in ["report.csv", "summary.json", "timing.csv"] {
            assert!(out.join(f).is_file(), "{kind}: {f} missing");
        }
        let report = fs::read_to_string(out.join("report.csv")).unwrap();
        assert!(report.starts_with("chunk,metric,value\n"));
        assert!(report.lines().any(|l| l.starts_with("2,hr,")));
        runs.push(out);
    }
    let table = dir.path().join("table.txt");
    let mut args = vec!["report", "--output", s(&table)];
    args.extend(runs.iter().map(|p| s(p)));
    run(&args).unwrap();
    let text = fs::read_to_string(&table).unwrap();
    for label in ["psirec", "puresvd", "tireca"] {
        assert!(text.contains(label), "{text}");
    }
}

#[test]
fn sweep_covers_the_grid_on_validation_days() {
    let dir = tempfile::tempdir().unwrap();
    small_stream(dir.path());
    let cfg = write_config(dir.path());
    let out = dir.path().join("sweep");
    run(&["sweep", "--config", s(&cfg), "--seed", "2", "--output", s(&out), "--quiet", "--ranks-grid", "2,4,60"])
        .unwrap();
    let table = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let rows: Vec<&str> = table.lines().collect();
    assert_eq!(rows.len(), 4, "{table}");
    assert!(rows[1].starts_with("r2,") && rows[1].ends_with(",ok"));
    // rank 60 exceeds the item count and is reported, not fatal
    assert!(!rows[3].ends_with(",ok"), "{table}");
    assert!(out.join("r4").join("summary.json").is_file());
}

#[test]
fn preprocess_with_preset_is_stable() {
    let dir = tempfile::tempdir().unwrap();
    let raw = small_stream(dir.path());
    let once = dir.path().join("core.csv");
    let twice = dir.path().join("core2.csv");
    run(&["preprocess", "--input", s(&raw), "--output", s(&once), "--preset", "amzb"]).unwrap();
    run(&["preprocess", "--input", s(&once), "--output", s(&twice), "--min-interactions", "5"]).unwrap();
    assert_eq!(fs::read(&once).unwrap(), fs::read(&twice).unwrap());
    let log = ingest(&once).unwrap();
    assert!(!log.is_empty() && log.len() <= ingest(&raw).unwrap().len());
}

#[test]
fn synth_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    run(&["synth", "--output", s(&a), "--seed", "4", "--chunk-days", "3"]).unwrap();
    run(&["synth", "--output", s(&b), "--seed", "4", "--chunk-days", "3"]).unwrap();
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn bad_inputs_fail_with_a_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    small_stream(dir.path());
    let cfg = write_config(dir.path());
    let text = fs::read_to_string(&cfg).unwrap();
    fs::write(&cfg, text.replace("n_chunks = 3\n", "")).unwrap();
    let err = run(&["replay", "--config", s(&cfg), "--seed", "1"]).unwrap_err();
    assert!(format!("{err:#}").contains("data.n_chunks"), "{err:#}");

    let bin = env!("CARGO_BIN_EXE_dyncf");
    let out = Command::new(bin).args(["replay", "--config", s(&cfg)]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--seed"));

    let out = Command::new(bin)
        .args(["replay", "--config", s(&cfg), "--seed", "1"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("data.n_chunks"));

    let bogus = dir.path().join("bogus.ckpt");
    fs::write(&bogus, b"DYNCFCKP but not really").unwrap();
    let err = Checkpoint::load(&bogus).unwrap_err().to_string();
    assert!(err.contains("bogus.ckpt"), "{err}");
}
