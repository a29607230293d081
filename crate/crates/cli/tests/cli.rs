use std::path::Path;
use std::process::Command;

fn imrl() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_imrl"));
    c.env_remove("IMRL_SEED_OFFSET");
    c
}

fn tiny_config(dir: &Path, episodes: usize) -> std::path::PathBuf {
    let p = dir.join("config.json");
    let cfg = format!(
        r#"{{"env": {{"categories": 3, "item_dim": 3, "demo_dim": 2, "num_items": 12, "episode_length": 5, "base_offset": -1.0}},
            "agent": {{"hidden_width": 8, "hidden_layers": 1, "batch_size": 8, "buffer_capacity": 1000}},
            "seeds": [1, 2], "episodes": {episodes}, "eval_every": 2, "eval_episodes": 2, "checkpoint_every": 2}}"#
    );
    std::fs::write(&p, cfg).unwrap();
    p
}

#[test]
fn train_writes_metrics_and_checkpoints() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path(), 4);
    let out = dir.path().join("run");
    let st = imrl().args(["train", "--config"]).arg(&cfg).arg("--out").arg(&out).output().unwrap().status;
    assert!(st.success());
    let text = std::fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert!(text.starts_with("# imrl-metrics v1\n"));
    // Two seeds, two evaluations each.
    assert_eq!(text.lines().count(), 2 + 4);
    assert!(out.join("checkpoints/seed1/ep000004/run.json").exists());

    let ev = imrl()
        .args(["eval", "--checkpoint"])
        .arg(out.join("checkpoints/seed1/ep000004"))
        .args(["--episodes", "2"])
        .output()
        .unwrap();
    assert!(ev.status.success());
    assert!(String::from_utf8_lossy(&ev.stdout).contains("CTR"));
}

#[test]
fn zero_episodes_gives_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path(), 0);
    let out = dir.path().join("run");
    assert!(imrl().args(["train", "--config"]).arg(&cfg).arg("--out").arg(&out).output().unwrap().status.success());
    let text = std::fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert_eq!(text.lines().count(), 2);
}

#[test]
fn conflicting_flags_are_refused() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path(), 2);
    let st = imrl()
        .args(["train", "--no-empowerment", "--kl-intrinsic", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("x"))
        .output()
        .unwrap()
        .status;
    assert!(!st.success());
}

#[test]
fn seed_offset_changes_output_and_is_validated() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path(), 2);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(imrl().args(["train", "--config"]).arg(&cfg).arg("--out").arg(&a).output().unwrap().status.success());
    let st = imrl()
        .env("IMRL_SEED_OFFSET", "100")
        .args(["train", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&b)
        .output()
        .unwrap()
        .status;
    assert!(st.success());
    assert!(b.join("metrics_seed101.csv").exists());
    assert!(!a.join("metrics_seed101.csv").exists());
    let bad = imrl()
        .env("IMRL_SEED_OFFSET", "minus one")
        .args(["train", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("c"))
        .output()
        .unwrap()
        .status;
    assert!(!bad.success());
}

#[test]
fn plot_renders_svg_and_rejects_foreign_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path(), 4);
    let out = dir.path().join("run");
    assert!(imrl().args(["train", "--config"]).arg(&cfg).arg("--out").arg(&out).output().unwrap().status.success());
    let svg = dir.path().join("curves.svg");
    let st = imrl().arg("plot").arg(out.join("metrics.csv")).arg("--out").arg(&svg).output().unwrap().status;
    assert!(st.success());
    assert!(std::fs::read_to_string(&svg).unwrap().contains("<svg"));
    assert!(svg.with_extension("csv").exists());

    let foreign = dir.path().join("other.csv");
    std::fs::write(&foreign, "a,b\n1,2\n").unwrap();
    let st = imrl().arg("plot").arg(&foreign).arg("--out").arg(dir.path().join("x.svg")).output().unwrap().status;
    assert!(!st.success());
}

#[test]
fn quick_validate_passes() {
    let out = imrl().args(["validate", "--quick"]).output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{text}");
    assert!(text.contains("PASS gradient J_V"));
    assert!(!text.contains("FAIL"));
}
