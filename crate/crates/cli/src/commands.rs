use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde_json::Value;

use crate::args::{
    AblateArgs, Command, EvalArgs, Family, GridArgs, Network, SdfArgs, SweepArgs, SynthArgs, TrainArgs, TrainFlags,
};
use crate::manifest::RunManifest;
use crate::UsageError;
use segcons::data::{generate_synthetic, load_volume, read_dataset, save_volume, split_labeled, write_dataset};
use segcons::data::{Dataset, ShapeFamily, SynthConfig, Volume, VolumeFile, DATASET_MANIFEST};
use segcons::evaluation::{evaluate_checkpoint, run_ablation, sweep_beta, sweep_fraction, GridOptions};
use segcons::geometry::{inverse_sdf_grid, sdf_normalize, sdf_transform, LabelMask};
use segcons::trainer::{train, AblationFlags, EvalNetwork, RunOptions, TrainConfig};
use segcons::Extents;

pub fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Synth(a) => synth(a),
        Command::Train(a) => train_cmd(a),
        Command::Eval(a) => eval(a),
        Command::Ablate(a) => ablate(a),
        Command::Sweep(a) => sweep(a),
        Command::Sdf(a) => sdf(a),
    }
}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn synth(a: SynthArgs) -> Result<()> {
    if a.out.exists() && fs::read_dir(&a.out)?.next().is_some() && !a.force {
        return Err(usage(format!(
            "output directory {} is not empty; pass --force to overwrite",
            a.out.display()
        )));
    }
    let cfg = SynthConfig {
        num_cases: a.cases + a.test_cases,
        extents: Extents::new(&[a.size, a.size])?,
        noise_sigma: a.noise,
        shape_family: match a.family {
            Family::Ellipse => ShapeFamily::Ellipse,
            Family::TwoLobe => ShapeFamily::TwoLobe,
        },
        seed: a.seed,
        ..SynthConfig::default()
    };
    cfg.validate()?;
    let mut config = serde_json::to_value(&cfg)?;
    config["test_cases"] = a.test_cases.into();
    let manifest = RunManifest::new("synth", config, vec![a.seed], &[DATASET_MANIFEST]);
    manifest.write(&a.out)?;
    let all = generate_synthetic(&cfg)?;
    let (train_set, test_set) = if a.test_cases == 0 {
        (all, Dataset::fully_labeled(Vec::new())?)
    } else {
        all.hold_out(a.test_cases)?
    };
    write_dataset(&a.out, &train_set, &test_set)?;
    log::info!("wrote {} training and {} test cases to {}", train_set.len(), test_set.len(), a.out.display());
    manifest.finish(&a.out)
}

/// Overlays `patch` onto `base`, merging nested objects key by key.
fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                merge(b.entry(k).or_insert(Value::Null), v);
            }
        }
        (b, p) => *b = p,
    }
}

/// Defaults, then the configuration file, then flags.
fn resolve_config(flags: &TrainFlags, beta: Option<f64>, seed: Option<u64>, ablate: &[String]) -> Result<TrainConfig> {
    let base = if flags.desk { TrainConfig::desk() } else { TrainConfig::default() };
    let mut cfg = match &flags.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let mut file: Value = serde_json::from_str(&text)
                .map_err(|e| usage(format!("config {} is not valid JSON: {e}", path.display())))?;
            if file.get("command").is_some() {
                file = file.get("config").cloned().unwrap_or(Value::Null);
            }
            let mut v = serde_json::to_value(&base)?;
            merge(&mut v, file);
            serde_json::from_value(v).map_err(|e| usage(format!("config {}: {e}", path.display())))?
        }
        None => base,
    };
    if let Some(n) = flags.iters {
        cfg = cfg.with_iters(n);
    }
    if let Some(v) = flags.labeled_fraction {
        cfg.labeled_fraction = v;
    }
    if let Some(v) = beta {
        cfg.beta = v;
    }
    if let Some(v) = flags.k {
        cfg.k = v;
    }
    if let Some(v) = flags.alpha {
        cfg.alpha = v;
    }
    if let Some(v) = flags.mc_passes {
        cfg.mc_passes = v;
    }
    if let Some(p) = flags.patch {
        cfg.patch = Extents::new(&vec![p; cfg.net.dims])?;
    }
    if let Some(v) = flags.teacher_noise {
        cfg.teacher_noise = Some(v);
    }
    if let Some(n) = flags.eval_network {
        cfg.infer.network = match n {
            Network::Student => EvalNetwork::Student,
            Network::Teacher => EvalNetwork::Teacher,
        };
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if !ablate.is_empty() {
        cfg.ablation = cfg.ablation.ablate(&ablate.join(","))?;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Flags that have no effect under the requested ablation.
fn conflicting_flags(flags: &TrainFlags, beta: Option<f64>, ablation: AblationFlags) -> Vec<(&'static str, &'static str)> {
    let mut out = Vec::new();
    if !ablation.use_itc {
        if flags.mc_passes.is_some() {
            out.push(("--mc-passes", "--ablate itc"));
        }
        if flags.teacher_noise.is_some() {
            out.push(("--teacher-noise", "--ablate itc"));
        }
        if beta.is_some() {
            out.push(("--beta", "--ablate itc"));
        }
    } else if beta.is_some() && !ablation.regression_active() {
        out.push(("--beta", "--ablate dis,ctc"));
    }
    if !ablation.use_ctc && flags.k.is_some() {
        out.push(("--k", "--ablate ctc"));
    }
    out
}

fn load_data(dir: &Path) -> Result<(Dataset, Dataset)> {
    read_dataset(dir).with_context(|| format!("reading dataset {}", dir.display()))
}

fn train_cmd(a: TrainArgs) -> Result<()> {
    let cfg = resolve_config(&a.flags, a.beta, a.seed, &a.ablate)?;
    let conflicts = conflicting_flags(&a.flags, a.beta, cfg.ablation);
    if let Some((x, y)) = conflicts.first() {
        return Err(usage(format!("{x} has no effect together with {y}")));
    }
    let manifest = RunManifest::new(
        "train",
        serde_json::to_value(&cfg)?,
        vec![cfg.seed],
        &["checkpoint.json", "history.csv", "report.csv"],
    );
    manifest.write(&a.out)?;
    let (pool, test) = load_data(&a.data)?;
    let split = split_labeled(&pool, cfg.labeled_fraction, cfg.seed)?;
    log::info!(
        "{} labeled / {} unlabeled training cases, {} test cases",
        split.labeled_indices().len(),
        split.unlabeled_indices().len(),
        test.len()
    );
    let test = (!test.is_empty()).then_some(&test);
    if test.is_none() {
        log::warn!("dataset has no test split; skipping the final report");
    }
    let out = train(
        &cfg,
        &split,
        test,
        &RunOptions {
            out: Some(a.out.clone()),
            resume: a.resume,
            stop_at: None,
        },
    )?;
    if let Some(r) = &out.report {
        println!(
            "dice {:.4} jaccard {:.4} asd {:.3} hd95 {:.3}",
            r.mean.dice, r.mean.jaccard, r.mean.asd, r.mean.hd95
        );
    }
    manifest.finish(&a.out)
}

fn eval(a: EvalArgs) -> Result<()> {
    let which = a.network.map(|n| match n {
        Network::Student => EvalNetwork::Student,
        Network::Teacher => EvalNetwork::Teacher,
    });
    let config = serde_json::json!({ "run": a.run, "data": a.data, "network": which });
    let manifest = RunManifest::new("eval", config, vec![], &["report.csv"]);
    manifest.write(&a.out)?;
    let (_, test) = load_data(&a.data)?;
    if test.is_empty() {
        bail!(segcons::Error::InvalidInput("dataset has no test split".into()));
    }
    let report = evaluate_checkpoint(&a.run, &test, which)?;
    report.write(&a.out)?;
    println!(
        "dice {:.4} jaccard {:.4} asd {:.3} hd95 {:.3}",
        report.mean.dice, report.mean.jaccard, report.mean.asd, report.mean.hd95
    );
    manifest.finish(&a.out)
}

fn grid_setup(g: &GridArgs, beta: Option<f64>, command: &str) -> Result<(TrainConfig, Vec<u64>, RunManifest)> {
    if g.seeds == 0 {
        return Err(usage("--seeds must be at least 1"));
    }
    let cfg = resolve_config(&g.flags, beta, Some(g.seed), &[])?;
    let seeds: Vec<u64> = (g.seed..g.seed + g.seeds).collect();
    let manifest = RunManifest::new(command, serde_json::to_value(&cfg)?, seeds.clone(), &["grid.csv", "grid.json", "grid.png"]);
    manifest.write(&g.out)?;
    Ok((cfg, seeds, manifest))
}

fn grid_options(g: &GridArgs) -> GridOptions {
    GridOptions {
        parallel: g.parallel,
        out: Some(g.out.clone()),
    }
}

fn ablate(a: AblateArgs) -> Result<()> {
    let (cfg, seeds, manifest) = grid_setup(&a.grid, a.beta, "ablate")?;
    let (pool, test) = load_data(&a.grid.data)?;
    let grid = run_ablation(&cfg, &pool, &test, &seeds, &grid_options(&a.grid))?;
    print!("{}", grid.to_csv());
    manifest.finish(&a.grid.out)
}

fn sweep(a: SweepArgs) -> Result<()> {
    let command = if a.beta_grid { "sweep-beta" } else { "sweep-fraction" };
    let (cfg, seeds, manifest) = grid_setup(&a.grid, None, command)?;
    let (pool, test) = load_data(&a.grid.data)?;
    let opts = grid_options(&a.grid);
    let grid = if a.beta_grid {
        sweep_beta(&cfg, &pool, &test, &seeds, &opts)?
    } else {
        sweep_fraction(&cfg, &pool, &test, &seeds, &opts)?
    };
    print!("{}", grid.to_csv());
    manifest.finish(&a.grid.out)
}

fn sdf(a: SdfArgs) -> Result<()> {
    let input = load_volume(&a.input)?;
    let output = match (input, a.invert) {
        (VolumeFile::Mask { id, mask }, false) => {
            let fg: Vec<bool> = mask.data().iter().map(|&v| v != 0).collect();
            let binary = LabelMask::from_bools(&fg, mask.extents().clone())?.with_spacing(mask.spacing().to_vec())?;
            let mut map = sdf_transform(&binary, 1)?;
            if a.normalize {
                map = sdf_normalize(&map);
            }
            let data = map.data().iter().map(|&v| v as f32).collect();
            VolumeFile::Image(Volume::new(id, data, mask.extents().clone())?.with_spacing(mask.spacing().to_vec())?)
        }
        (VolumeFile::Image(v), true) => {
            if a.k.is_nan() || a.k <= 0.0 {
                return Err(usage(format!("--k must be positive, got {}", a.k)));
            }
            let values: Vec<f64> = v.data().iter().map(|&x| f64::from(x)).collect();
            let fg: Vec<bool> = inverse_sdf_grid(&values, a.k).iter().map(|&p| p >= 0.5).collect();
            let mask = LabelMask::from_bools(&fg, v.extents().clone())?.with_spacing(v.spacing().to_vec())?;
            VolumeFile::Mask { id: v.id.clone(), mask }
        }
        (VolumeFile::Image(_), false) => {
            bail!(segcons::Error::DtypeMismatch {
                path: a.input.clone(),
                expected: "u8".into(),
                found: "f32".into()
            })
        }
        (VolumeFile::Mask { .. }, true) => {
            bail!(segcons::Error::DtypeMismatch {
                path: a.input.clone(),
                expected: "f32".into(),
                found: "u8".into()
            })
        }
    };
    save_volume(&a.out, &output)?;
    Ok(())
}
