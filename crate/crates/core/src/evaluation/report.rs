use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::metrics::CaseMetrics;
use crate::{Error, Result};

pub const REPORT_CSV_HEADER: &str = "case_id,dice,jaccard,asd,hd95";

/// Hex SHA-256 of the JSON serialization of a configuration.
pub fn config_fingerprint<T: Serialize>(cfg: &T) -> Result<String> {
    let bytes = serde_json::to_vec(cfg)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// One value per metric.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub dice: f64,
    pub jaccard: f64,
    pub asd: f64,
    pub hd95: f64,
}

impl MetricSummary {
    pub fn values(&self) -> [f64; 4] {
        [self.dice, self.jaccard, self.asd, self.hd95]
    }

    fn from_values(v: [f64; 4]) -> Self {
        Self {
            dice: v[0],
            jaccard: v[1],
            asd: v[2],
            hd95: v[3],
        }
    }
}

/// Mean and sample standard deviation; NaN for an empty slice, zero spread for one value.
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Per-case metrics with aggregates over the defined values of each metric.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub per_case: Vec<CaseMetrics>,
    pub mean: MetricSummary,
    pub sd: MetricSummary,
    pub config_fingerprint: String,
    /// Cases whose surface metrics were undefined.
    pub excluded: usize,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NaN".to_string(), |x| x.to_string())
}

impl MetricReport {
    pub fn new(per_case: Vec<CaseMetrics>, config_fingerprint: String) -> Self {
        let dice: Vec<f64> = per_case.iter().map(|c| c.dice).collect();
        let jac: Vec<f64> = per_case.iter().map(|c| c.jaccard).collect();
        let asd: Vec<f64> = per_case.iter().filter_map(|c| c.asd).collect();
        let hd: Vec<f64> = per_case.iter().filter_map(|c| c.hd95).collect();
        let excluded = per_case.len() - asd.len();
        if excluded > 0 {
            log::warn!("{excluded} case(s) without a defined surface excluded from ASD/95HD aggregates");
        }
        let stats = [mean_sd(&dice), mean_sd(&jac), mean_sd(&asd), mean_sd(&hd)];
        Self {
            mean: MetricSummary::from_values(stats.map(|s| s.0)),
            sd: MetricSummary::from_values(stats.map(|s| s.1)),
            per_case,
            config_fingerprint,
            excluded,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(REPORT_CSV_HEADER);
        s.push('\n');
        for c in &self.per_case {
            let _ = writeln!(s, "{},{},{},{},{}", c.case_id, c.dice, c.jaccard, fmt_opt(c.asd), fmt_opt(c.hd95));
        }
        for (id, m) in [("__mean__", &self.mean), ("__sd__", &self.sd)] {
            let _ = writeln!(s, "{id},{},{},{},{}", m.dice, m.jaccard, m.asd, m.hd95);
        }
        s
    }

    /// Writes `report.csv` and `report.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let csv = dir.join("report.csv");
        fs::write(&csv, self.to_csv()).map_err(|e| Error::io(&csv, e))?;
        let json = dir.join("report.json");
        fs::write(&json, serde_json::to_string_pretty(self)?).map_err(|e| Error::io(&json, e))
    }
}
