use std::path::PathBuf;

use imrl_core::harness::{plot_files, write_metrics, MetricsRecord, Variant};

fn record(variant: Variant, seed: u64, episode: usize, ctr: f64) -> MetricsRecord {
    MetricsRecord {
        variant,
        seed,
        episode,
        env_steps: episode * 10,
        ctr,
        episode_return: ctr * 10.0,
        threshold_t: 1.0,
        buffer_size: episode * 10,
        augmented_count: 0,
        j_q: 0.1,
        j_v: 0.1,
        j_pi: -0.5,
        j_p: 1.0,
        alpha_t: 0.2,
        eval_fingerprint: "00".into(),
    }
}

/// Regenerate with `IMRL_UPDATE_SNAPSHOTS=1 cargo test --test plot_snapshot`.
#[test]
fn svg_matches_reference() {
    let dir = tempfile::tempdir().unwrap();
    let mut rows = Vec::new();
    for (v, rate) in [(Variant::Imrl, 0.02), (Variant::ImrlA, 0.01)] {
        for seed in 0..3u64 {
            for k in 1..=10 {
                let ep = 10 * k;
                let ctr = (rate * k as f64 + 0.005 * seed as f64).min(1.0);
                rows.push(record(v, seed, ep, ctr));
            }
        }
    }
    let csv = dir.path().join("metrics.csv");
    write_metrics(&csv, &rows).unwrap();
    let out = dir.path().join("curves.svg");
    plot_files(&[csv.as_path()], &out).unwrap();
    let svg = std::fs::read_to_string(&out).unwrap();

    let reference = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/curves.svg");
    if std::env::var_os("IMRL_UPDATE_SNAPSHOTS").is_some() {
        std::fs::write(&reference, &svg).unwrap();
    }
    let expected = std::fs::read_to_string(&reference).unwrap();
    assert_eq!(svg, expected);
}
