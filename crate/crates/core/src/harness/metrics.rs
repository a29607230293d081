//! Versioned metrics CSV: a `# imrl-metrics v<N>` line followed by a header
//! row and one row per evaluation.

use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::Variant;
use crate::{Error, Result};

pub const METRICS_VERSION: u32 = 1;
const MAGIC: &str = "# imrl-metrics v";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub variant: Variant,
    pub seed: u64,
    /// Training episodes completed before this evaluation.
    pub episode: usize,
    pub env_steps: usize,
    /// Clicks over steps across the evaluation episodes.
    pub ctr: f64,
    /// Mean return of the evaluation episodes.
    pub episode_return: f64,
    pub threshold_t: f64,
    pub buffer_size: usize,
    /// Augmented transitions added since training began.
    pub augmented_count: usize,
    pub j_q: f64,
    pub j_v: f64,
    pub j_pi: f64,
    pub j_p: f64,
    pub alpha_t: f64,
    /// Digest of the evaluation users; equal across variants sharing a seed.
    pub eval_fingerprint: String,
}

impl MetricsRecord {
    pub fn all_finite(&self) -> bool {
        [
            self.ctr,
            self.episode_return,
            self.threshold_t,
            self.j_q,
            self.j_v,
            self.j_pi,
            self.j_p,
            self.alpha_t,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

/// Row-at-a-time writer; every row is flushed so an aborted run keeps what
/// it produced.
pub struct MetricsWriter {
    path: PathBuf,
    inner: csv::Writer<File>,
}

impl MetricsWriter {
    pub fn create(path: &Path) -> Result<Self> {
        let mut file = File::create(path).map_err(|e| Error::io(path, e))?;
        writeln!(file, "{MAGIC}{METRICS_VERSION}").map_err(|e| Error::io(path, e))?;
        let mut inner = csv::WriterBuilder::new().has_headers(false).from_writer(file);
        inner.write_record(HEADER)?;
        inner.flush().map_err(|e| Error::io(path, e))?;
        Ok(Self {
            path: path.to_path_buf(),
            inner,
        })
    }

    pub fn append(&mut self, r: &MetricsRecord) -> Result<()> {
        self.inner.serialize(r)?;
        self.inner.flush().map_err(|e| Error::io(&self.path, e))
    }
}

const HEADER: [&str; 15] = [
    "variant",
    "seed",
    "episode",
    "env_steps",
    "ctr",
    "episode_return",
    "threshold_t",
    "buffer_size",
    "augmented_count",
    "j_q",
    "j_v",
    "j_pi",
    "j_p",
    "alpha_t",
    "eval_fingerprint",
];

pub fn write_metrics(path: &Path, records: &[MetricsRecord]) -> Result<()> {
    let mut w = MetricsWriter::create(path)?;
    for r in records {
        w.append(r)?;
    }
    Ok(())
}

pub fn read_metrics(path: &Path) -> Result<Vec<MetricsRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    let mut first = String::new();
    reader.read_line(&mut first).map_err(|e| Error::io(path, e))?;
    let found = first.trim_end();
    let version = found.strip_prefix(MAGIC).and_then(|v| v.parse::<u32>().ok());
    if version != Some(METRICS_VERSION) {
        return Err(Error::UnsupportedVersion {
            path: path.to_path_buf(),
            found: found.to_string(),
        });
    }
    let mut rest = String::new();
    reader.read_to_string(&mut rest).map_err(|e| Error::io(path, e))?;
    let mut csv_reader = csv::Reader::from_reader(rest.as_bytes());
    let header = csv_reader.headers()?.clone();
    if header.iter().ne(HEADER.iter().copied()) {
        return Err(Error::Schema(format!("{} has an unexpected header", path.display())));
    }
    csv_reader
        .deserialize()
        .map(|r| r.map_err(|e| Error::Schema(format!("{}: {e}", path.display()))))
        .collect()
}

/// Mean CTR over the last tenth of evaluations (at least one).
pub fn final_window_ctr(records: &[MetricsRecord]) -> Option<f64> {
    if records.is_empty() {
        return None;
    }
    let k = (records.len() / 10).max(1);
    let tail = &records[records.len() - k..];
    Some(tail.iter().map(|r| r.ctr).sum::<f64>() / k as f64)
}

/// Training episode at which the trailing `window`-evaluation mean CTR first
/// reaches `fraction` of the final-window CTR. Runs whose final CTR is zero
/// converge at their first evaluation.
pub fn episodes_to_fraction(records: &[MetricsRecord], fraction: f64, window: usize) -> Option<usize> {
    let target = fraction * final_window_ctr(records)?;
    let w = window.max(1);
    (0..records.len()).find_map(|i| {
        let lo = (i + 1).saturating_sub(w);
        let slice = &records[lo..=i];
        let mean = slice.iter().map(|r| r.ctr).sum::<f64>() / slice.len() as f64;
        (mean >= target).then_some(records[i].episode)
    })
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() || values.iter().any(|v| v.is_nan()) {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}
