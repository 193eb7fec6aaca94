use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use super::config::TrainConfig;
use super::state::{train_step, TrainState};
use crate::data::Dataset;
use crate::evaluation::{config_fingerprint, evaluate, MetricReport};
use crate::model::{load_checkpoint, save_checkpoint, CHECKPOINT_MANIFEST};
use crate::objectives::LossBreakdown;
use crate::{Error, Result};

pub const HISTORY_FILE: &str = "history.csv";

pub fn history_csv(history: &[LossBreakdown]) -> String {
    let mut s = String::from("step");
    for f in LossBreakdown::CSV_FIELDS {
        s.push(',');
        s.push_str(f);
    }
    s.push('\n');
    for (t, b) in history.iter().enumerate() {
        let _ = write!(s, "{t}");
        for v in b.values() {
            let _ = write!(s, ",{v}");
        }
        s.push('\n');
    }
    s
}

pub fn write_history(path: &Path, history: &[LossBreakdown]) -> Result<()> {
    fs::write(path, history_csv(history)).map_err(|e| Error::io(path, e))
}

pub fn read_history(path: &Path) -> Result<Vec<LossBreakdown>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let malformed = |reason: String| Error::MalformedHeader {
        path: path.to_path_buf(),
        reason,
    };
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| malformed("empty history".into()))?;
    let expected = history_csv(&[]);
    if header != expected.trim_end() {
        return Err(malformed(format!("unexpected header '{header}'")));
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let v: Vec<f64> = line
                .split(',')
                .map(|x| x.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| malformed(format!("row {i}: {e}")))?;
            if v.len() != 11 || v[0] as usize != i {
                return Err(malformed(format!("row {i} is malformed")));
            }
            Ok(LossBreakdown {
                sup_dice: v[1],
                sup_ce: v[2],
                sup_dis: v[3],
                itc: v[4],
                ctc: v[5],
                total: v[6],
                lambda_i: v[7],
                lambda_c: v[8],
                u_th: v[9],
                beta: v[10],
            })
        })
        .collect()
}

/// Where and how far to run.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Artifact directory for checkpoints, history and report.
    pub out: Option<PathBuf>,
    /// Continue from the checkpoint and history found in `out`.
    pub resume: bool,
    /// Stop after this many completed steps instead of `max_iters`.
    pub stop_at: Option<u64>,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub state: TrainState,
    /// Held-out report, produced when a test set is given and training completed.
    pub report: Option<MetricReport>,
    pub seconds: f64,
}

fn save_all(dir: &Path, state: &TrainState, cfg: &TrainConfig) -> Result<()> {
    save_checkpoint(dir, &state.checkpoint(cfg)?)?;
    write_history(&dir.join(HISTORY_FILE), &state.history)
}

/// Runs the training loop on raw (unnormalized) data and, once `max_iters`
/// steps are done, scores the student (or teacher) on `test_set`.
pub fn train(
    cfg: &TrainConfig,
    train_set: &Dataset,
    test_set: Option<&Dataset>,
    opts: &RunOptions,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let started = Instant::now();
    let data = train_set.normalized();
    let mut state = match (&opts.out, opts.resume) {
        (Some(dir), true) if dir.join(CHECKPOINT_MANIFEST).exists() => {
            let ckpt = load_checkpoint(dir)?;
            let history = read_history(&dir.join(HISTORY_FILE))?;
            log::info!("resuming from step {}", ckpt.manifest.step);
            TrainState::from_checkpoint(cfg, &ckpt, history)?
        }
        _ => TrainState::new(cfg)?,
    };
    let stop = opts.stop_at.unwrap_or(cfg.max_iters).min(cfg.max_iters);
    while state.step < stop {
        let b = train_step(&mut state, cfg, &data)?;
        let t = state.step;
        if cfg.log_every > 0 && (t % cfg.log_every == 0 || t == stop) {
            log::info!(
                "step {t}/{} loss {:.4} (dice {:.4} ce {:.4} dis {:.4} itc {:.4} ctc {:.4}) lr {:.2e}",
                cfg.max_iters,
                b.total,
                b.sup_dice,
                b.sup_ce,
                b.sup_dis,
                b.itc,
                b.ctc,
                cfg.lr_at(t - 1)
            );
        }
        if let Some(dir) = &opts.out {
            if cfg.checkpoint_every > 0 && t % cfg.checkpoint_every == 0 && t < stop {
                save_all(dir, &state, cfg)?;
            }
        }
    }
    if let Some(dir) = &opts.out {
        save_all(dir, &state, cfg)?;
    }
    let report = match test_set {
        Some(test) if state.step == cfg.max_iters => {
            let net = match cfg.infer.network {
                super::EvalNetwork::Student => &state.pair.student,
                super::EvalNetwork::Teacher => &state.pair.teacher,
            };
            let r = evaluate(net, test, &cfg.patch, &cfg.stride(), config_fingerprint(cfg)?)?;
            if let Some(dir) = &opts.out {
                r.write(dir)?;
            }
            Some(r)
        }
        _ => None,
    };
    Ok(TrainOutcome {
        state,
        report,
        seconds: started.elapsed().as_secs_f64(),
    })
}
