use std::path::Path;

use serde::Serialize;

use super::metrics::{episodes_to_fraction, final_window_ctr, median, MetricsRecord};
use super::train::{run_train, TrainOutcome};
use super::{ExperimentConfig, Variant};
use crate::{Error, Result};

/// Trailing window (in evaluations) of the convergence statistic.
pub const CONVERGENCE_WINDOW: usize = 5;
pub const CONVERGENCE_FRACTION: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationRow {
    pub variant: Variant,
    pub seed: u64,
    pub final_ctr: f64,
    /// Training episodes until the smoothed CTR reaches 90% of `final_ctr`.
    pub episodes_to_90: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariantSummary {
    pub variant: Variant,
    pub median_final_ctr: f64,
    pub median_episodes_to_90: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationOutcome {
    pub rows: Vec<AblationRow>,
    pub runs: Vec<TrainOutcome>,
}

impl AblationOutcome {
    pub fn summary(&self, v: Variant) -> Option<VariantSummary> {
        let rows: Vec<&AblationRow> = self.rows.iter().filter(|r| r.variant == v).collect();
        let ctr: Vec<f64> = rows.iter().map(|r| r.final_ctr).collect();
        let conv: Vec<f64> = rows.iter().map(|r| r.episodes_to_90 as f64).collect();
        Some(VariantSummary {
            variant: v,
            median_final_ctr: median(&ctr)?,
            median_episodes_to_90: median(&conv)?,
        })
    }

    pub fn records(&self, v: Variant) -> Vec<MetricsRecord> {
        self.runs
            .iter()
            .filter(|r| r.variant == v)
            .flat_map(TrainOutcome::merged)
            .collect()
    }
}

pub fn comparison_rows(variant: Variant, per_seed: &[(u64, Vec<MetricsRecord>)]) -> Vec<AblationRow> {
    per_seed
        .iter()
        .filter_map(|(seed, recs)| {
            Some(AblationRow {
                variant,
                seed: *seed,
                final_ctr: final_window_ctr(recs)?,
                episodes_to_90: episodes_to_fraction(recs, CONVERGENCE_FRACTION, CONVERGENCE_WINDOW)?,
            })
        })
        .collect()
}

/// Trains all four variants under the configuration's seeds (each in
/// `out/<variant>`), then writes `comparison.csv` with per-seed rows and
/// `summary.csv` with per-variant medians.
pub fn run_ablation(config: &ExperimentConfig, out: &Path) -> Result<AblationOutcome> {
    config.validate()?;
    let mut runs = Vec::new();
    let mut rows = Vec::new();
    for v in Variant::ALL {
        let outcome = run_train(&config.for_variant(v), &out.join(v.label()))?;
        rows.extend(comparison_rows(v, &outcome.per_seed));
        runs.push(outcome);
    }
    let result = AblationOutcome { rows, runs };
    let mut w = csv::Writer::from_path(out.join("comparison.csv"))?;
    for r in &result.rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(out, e))?;
    let mut w = csv::Writer::from_path(out.join("summary.csv"))?;
    for v in Variant::ALL {
        if let Some(s) = result.summary(v) {
            w.serialize(s)?;
        }
    }
    w.flush().map_err(|e| Error::io(out, e))?;
    Ok(result)
}
