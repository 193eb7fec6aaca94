use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::plot::line_plot_png;
use super::report::{config_fingerprint, mean_sd, MetricSummary};
use crate::data::{split_labeled, Dataset};
use crate::trainer::{train, AblationFlags, RunOptions, TrainConfig};
use crate::{Error, Result};

pub const BETA_GRID: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];
pub const FRACTION_GRID: [f64; 6] = [0.05, 0.1, 0.15, 0.2, 0.3, 0.5];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridKind {
    Ablation,
    Beta,
    Fraction,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub name: String,
    /// Swept value; the row number for the ablation grid.
    pub param: f64,
    pub config: TrainConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RowResult {
    pub name: String,
    pub fingerprint: String,
    pub labeled: usize,
    pub unlabeled: usize,
    /// Test-set means, one per seed.
    pub per_seed: Vec<MetricSummary>,
    /// Mean and sample deviation of `per_seed`.
    pub mean: MetricSummary,
    pub sd: MetricSummary,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentGrid {
    pub kind: GridKind,
    pub seeds: Vec<u64>,
    pub rows: Vec<GridRow>,
    pub results: Vec<RowResult>,
}

#[derive(Clone, Debug, Default)]
pub struct GridOptions {
    /// Run row-seed jobs concurrently.
    pub parallel: bool,
    /// Destination of `grid.csv`, `grid.json` and `grid.png`.
    pub out: Option<PathBuf>,
}

fn row(name: &str, param: f64, config: TrainConfig) -> GridRow {
    GridRow {
        name: name.into(),
        param,
        config,
    }
}

/// The six loss combinations of the component study, numbered from 1.
pub fn ablation_rows(base: &TrainConfig) -> Vec<GridRow> {
    let sets = [
        ("seg", false, false, false),
        ("seg+dis", true, false, false),
        ("seg+itc", false, true, false),
        ("seg+dis+itc", true, true, false),
        ("seg+dis+ctc", true, false, true),
        ("full", true, true, true),
    ];
    sets.iter()
        .enumerate()
        .map(|(i, &(name, dis, itc, ctc))| {
            let ablation = AblationFlags {
                use_dis_supervision: dis,
                use_itc: itc,
                use_ctc: ctc,
                use_uncertainty_mask: itc && base.ablation.use_uncertainty_mask,
            };
            row(&format!("({}) {name}", i + 1), (i + 1) as f64, TrainConfig { ablation, ..base.clone() })
        })
        .collect()
}

pub fn beta_rows(base: &TrainConfig) -> Vec<GridRow> {
    BETA_GRID
        .iter()
        .map(|&beta| row(&format!("beta={beta}"), beta, TrainConfig { beta, ..base.clone() }))
        .collect()
}

pub fn fraction_rows(base: &TrainConfig) -> Vec<GridRow> {
    FRACTION_GRID
        .iter()
        .map(|&f| {
            row(
                &format!("fraction={f}"),
                f,
                TrainConfig {
                    labeled_fraction: f,
                    ..base.clone()
                },
            )
        })
        .collect()
}

struct Job {
    row: usize,
    labeled: usize,
    unlabeled: usize,
    mean: MetricSummary,
    seconds: f64,
}

/// Trains and evaluates every row once per seed. The labeled subset of
/// `pool` is drawn from each row's fraction and the seed.
pub fn run_grid(
    kind: GridKind,
    rows: Vec<GridRow>,
    pool: &Dataset,
    test: &Dataset,
    seeds: &[u64],
    opts: &GridOptions,
) -> Result<ExperimentGrid> {
    if seeds.is_empty() {
        return Err(Error::InvalidConfig("at least one seed is required".into()));
    }
    let pairs: Vec<(usize, u64)> = (0..rows.len()).flat_map(|r| seeds.iter().map(move |&s| (r, s))).collect();
    let job = |&(r, seed): &(usize, u64)| -> Result<Job> {
        let cfg = TrainConfig {
            seed,
            ..rows[r].config.clone()
        };
        let split = split_labeled(pool, cfg.labeled_fraction, seed)?;
        let out = train(&cfg, &split, Some(test), &RunOptions::default())?;
        let report = out.report.expect("complete run with a test set");
        log::info!("{} seed {seed}: dice {:.4} ({:.1}s)", rows[r].name, report.mean.dice, out.seconds);
        Ok(Job {
            row: r,
            labeled: split.labeled_indices().len(),
            unlabeled: split.unlabeled_indices().len(),
            mean: report.mean,
            seconds: out.seconds,
        })
    };
    let jobs: Vec<Job> = if opts.parallel {
        pairs.par_iter().map(job).collect::<Result<_>>()?
    } else {
        pairs.iter().map(job).collect::<Result<_>>()?
    };
    let mut results = Vec::with_capacity(rows.len());
    for (r, grid_row) in rows.iter().enumerate() {
        let mine: Vec<&Job> = jobs.iter().filter(|j| j.row == r).collect();
        let per_seed: Vec<MetricSummary> = mine.iter().map(|j| j.mean).collect();
        let stats: [(f64, f64); 4] =
            std::array::from_fn(|m| mean_sd(&per_seed.iter().map(|s| s.values()[m]).collect::<Vec<_>>()));
        results.push(RowResult {
            name: grid_row.name.clone(),
            fingerprint: config_fingerprint(&grid_row.config)?,
            labeled: mine[0].labeled,
            unlabeled: mine[0].unlabeled,
            per_seed,
            mean: MetricSummary {
                dice: stats[0].0,
                jaccard: stats[1].0,
                asd: stats[2].0,
                hd95: stats[3].0,
            },
            sd: MetricSummary {
                dice: stats[0].1,
                jaccard: stats[1].1,
                asd: stats[2].1,
                hd95: stats[3].1,
            },
            seconds: mine.iter().map(|j| j.seconds).sum(),
        });
    }
    let grid = ExperimentGrid {
        kind,
        seeds: seeds.to_vec(),
        rows,
        results,
    };
    if let Some(dir) = &opts.out {
        grid.write(dir)?;
    }
    Ok(grid)
}

pub fn run_ablation(base: &TrainConfig, pool: &Dataset, test: &Dataset, seeds: &[u64], opts: &GridOptions) -> Result<ExperimentGrid> {
    run_grid(GridKind::Ablation, ablation_rows(base), pool, test, seeds, opts)
}

pub fn sweep_beta(base: &TrainConfig, pool: &Dataset, test: &Dataset, seeds: &[u64], opts: &GridOptions) -> Result<ExperimentGrid> {
    run_grid(GridKind::Beta, beta_rows(base), pool, test, seeds, opts)
}

pub fn sweep_fraction(base: &TrainConfig, pool: &Dataset, test: &Dataset, seeds: &[u64], opts: &GridOptions) -> Result<ExperimentGrid> {
    run_grid(GridKind::Fraction, fraction_rows(base), pool, test, seeds, opts)
}

impl ExperimentGrid {
    pub fn row_result(&self, name: &str) -> Option<&RowResult> {
        self.results.iter().find(|r| r.name == name)
    }

    /// One line per row, metric columns last.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        s.push_str(match self.kind {
            GridKind::Ablation => "row,l_seg,l_dis,l_itc,l_ctc",
            GridKind::Beta => "beta",
            GridKind::Fraction => "labeled_fraction,labeled,unlabeled",
        });
        s.push_str(",dice,jaccard,asd,hd95\n");
        for (row, res) in self.rows.iter().zip(&self.results) {
            let f = row.config.ablation;
            match self.kind {
                GridKind::Ablation => {
                    let _ = write!(
                        s,
                        "{},1,{},{},{}",
                        row.param,
                        u8::from(f.use_dis_supervision),
                        u8::from(f.use_itc),
                        u8::from(f.use_ctc)
                    );
                }
                GridKind::Beta => {
                    let _ = write!(s, "{}", row.param);
                }
                GridKind::Fraction => {
                    let _ = write!(s, "{},{},{}", row.param, res.labeled, res.unlabeled);
                }
            }
            let m = res.mean;
            let _ = writeln!(s, ",{},{},{},{}", m.dice, m.jaccard, m.asd, m.hd95);
        }
        s
    }

    /// Writes `grid.csv`, `grid.json` and a Dice line plot `grid.png`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let csv = dir.join("grid.csv");
        fs::write(&csv, self.to_csv()).map_err(|e| Error::io(&csv, e))?;
        let json = dir.join("grid.json");
        fs::write(&json, serde_json::to_string_pretty(self)?).map_err(|e| Error::io(&json, e))?;
        let xs: Vec<f64> = self.rows.iter().map(|r| r.param).collect();
        let ys: Vec<f64> = self.results.iter().map(|r| r.mean.dice).collect();
        line_plot_png(&dir.join("grid.png"), &xs, &ys)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_sets_match_the_studies() {
        let base = TrainConfig::desk();
        let ab = ablation_rows(&base);
        assert_eq!(ab.len(), 6);
        assert_eq!(ab[0].config.ablation, AblationFlags::supervised_only());
        assert_eq!(ab[5].config.ablation, AblationFlags::full());
        assert!(!ab[2].config.ablation.regression_active() && ab[2].config.ablation.use_itc);
        let prints: std::collections::HashSet<String> =
            ab.iter().map(|r| config_fingerprint(&r.config).unwrap()).collect();
        assert_eq!(prints.len(), 6);
        assert_eq!(beta_rows(&base).len(), 5);
        assert_eq!(fraction_rows(&base).len(), 6);
    }

    #[test]
    fn csv_shapes() {
        let base = TrainConfig::desk();
        let rows = ablation_rows(&base);
        let results = rows
            .iter()
            .map(|r| RowResult {
                name: r.name.clone(),
                fingerprint: String::new(),
                labeled: 2,
                unlabeled: 8,
                per_seed: vec![],
                mean: MetricSummary::default(),
                sd: MetricSummary::default(),
                seconds: 0.0,
            })
            .collect();
        let g = ExperimentGrid {
            kind: GridKind::Ablation,
            seeds: vec![0],
            rows,
            results,
        };
        let csv = g.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 7);
        assert!(lines[0].ends_with("dice,jaccard,asd,hd95"));
        assert!(lines[6].starts_with("6,1,1,1,1,"));
        assert!(lines[1].starts_with("1,1,0,0,0,"));
    }
}
