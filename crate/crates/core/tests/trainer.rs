use segcons::data::{generate_synthetic, split_labeled, Dataset, SynthConfig};
use segcons::model::ema_update_params;
use segcons::trainer::{
    batch_for_step, history_csv, read_history, train, train_step, train_step_on, AblationFlags, RunOptions,
    TrainConfig, TrainState, HISTORY_FILE,
};
use segcons::Extents;
use sha2::{Digest, Sha256};

fn small_config(flags: AblationFlags) -> TrainConfig {
    let mut cfg = TrainConfig::desk().with_iters(6);
    cfg.patch = Extents::d2(16, 16);
    cfg.net.base_width = 4;
    cfg.mc_passes = 2;
    cfg.ablation = flags;
    cfg.log_every = 0;
    cfg
}

fn data(fraction: f64) -> Dataset {
    let ds = generate_synthetic(&SynthConfig {
        num_cases: 10,
        extents: Extents::d2(24, 24),
        ..SynthConfig::default()
    })
    .unwrap();
    split_labeled(&ds, fraction, 3).unwrap()
}

fn hash(values: &[f32]) -> Vec<u8> {
    let bytes: Vec<u8> = values.iter().flat_map(|v| v.to_le_bytes()).collect();
    Sha256::digest(&bytes).to_vec()
}

#[test]
fn supervised_only_never_evaluates_consistency() {
    let cfg = small_config(AblationFlags::supervised_only());
    let ds = data(1.0).normalized();
    let mut st = TrainState::new(&cfg).unwrap();
    for _ in 0..3 {
        let b = train_step(&mut st, &cfg, &ds).unwrap();
        assert_eq!((b.itc, b.ctc, b.sup_dis), (0.0, 0.0, 0.0));
        assert_eq!(b.total, b.sup_dice + b.sup_ce);
    }
    assert_eq!(st.counts.teacher_mc_passes, 0);
    assert_eq!((st.counts.itc, st.counts.ctc, st.counts.dist_supervision), (0, 0, 0));
    assert_eq!(st.counts.student_forwards, 3);
}

#[test]
fn full_method_runs_every_term() {
    let cfg = small_config(AblationFlags::full());
    let ds = data(0.3).normalized();
    let mut st = TrainState::new(&cfg).unwrap();
    for _ in 0..2 {
        let b = train_step(&mut st, &cfg, &ds).unwrap();
        assert!(b.identity_residual() < 1e-6);
        assert!(b.itc >= 0.0 && b.ctc > 0.0 && b.sup_dis > 0.0);
    }
    assert_eq!(st.counts.teacher_mc_passes, 4);
    assert_eq!((st.counts.itc, st.counts.ctc, st.counts.ema_updates), (2, 2, 2));
    assert_eq!(st.history.len(), 2);
}

#[test]
fn teacher_follows_ema_of_post_step_student() {
    let cfg = small_config(AblationFlags::full());
    let ds = data(0.3).normalized();
    let mut st = TrainState::new(&cfg).unwrap();
    train_step(&mut st, &cfg, &ds).unwrap();
    let teacher_before = st.pair.teacher.params().clone();
    let batch = batch_for_step(&cfg, &ds, st.step).unwrap();
    train_step_on(&mut st, &cfg, &batch).unwrap();
    let mut expected = teacher_before;
    ema_update_params(&mut expected, st.pair.student.params(), cfg.alpha).unwrap();
    assert_eq!(st.pair.teacher.params(), &expected);
}

#[test]
fn optimizer_never_touches_teacher() {
    let mut cfg = small_config(AblationFlags::full());
    cfg.alpha = 1.0;
    let ds = data(0.3).normalized();
    let mut st = TrainState::new(&cfg).unwrap();
    let before = hash(st.pair.teacher.params().as_slice());
    let student_before = hash(st.pair.student.params().as_slice());
    for _ in 0..3 {
        train_step(&mut st, &cfg, &ds).unwrap();
    }
    assert_eq!(hash(st.pair.teacher.params().as_slice()), before);
    assert_ne!(hash(st.pair.student.params().as_slice()), student_before);
}

#[test]
fn identical_seeds_identical_histories() {
    let cfg = small_config(AblationFlags::full());
    let ds = data(0.3);
    let test = data(1.0).truncated(2).unwrap();
    let a = train(&cfg, &ds, Some(&test), &RunOptions::default()).unwrap();
    let b = train(&cfg, &ds, Some(&test), &RunOptions::default()).unwrap();
    assert_eq!(history_csv(&a.state.history), history_csv(&b.state.history));
    assert_eq!(a.report, b.report);
    assert_eq!(a.state.history.len() as u64, cfg.max_iters);
    let c = train(&TrainConfig { seed: 9, ..cfg }, &ds, None, &RunOptions::default()).unwrap();
    assert_ne!(history_csv(&a.state.history), history_csv(&c.state.history));
}

#[test]
fn resume_reproduces_uninterrupted_run() {
    let cfg = small_config(AblationFlags::full());
    let ds = data(0.3);
    let whole = tempfile::tempdir().unwrap();
    let split = tempfile::tempdir().unwrap();
    let full = train(
        &cfg,
        &ds,
        None,
        &RunOptions {
            out: Some(whole.path().to_path_buf()),
            ..RunOptions::default()
        },
    )
    .unwrap();
    let first = train(
        &cfg,
        &ds,
        None,
        &RunOptions {
            out: Some(split.path().to_path_buf()),
            stop_at: Some(3),
            ..RunOptions::default()
        },
    )
    .unwrap();
    assert_eq!(first.state.step, 3);
    let resumed = train(
        &cfg,
        &ds,
        None,
        &RunOptions {
            out: Some(split.path().to_path_buf()),
            resume: true,
            ..RunOptions::default()
        },
    )
    .unwrap();
    assert_eq!(resumed.state.step, cfg.max_iters);
    assert_eq!(resumed.state.pair.student.params(), full.state.pair.student.params());
    assert_eq!(resumed.state.pair.teacher.params(), full.state.pair.teacher.params());
    let a = std::fs::read_to_string(whole.path().join(HISTORY_FILE)).unwrap();
    let b = std::fs::read_to_string(split.path().join(HISTORY_FILE)).unwrap();
    assert_eq!(a, b);
    assert_eq!(read_history(&whole.path().join(HISTORY_FILE)).unwrap(), full.state.history);
}

#[test]
fn zero_consistency_weights_match_supervised_update() {
    let mut sup = small_config(AblationFlags::supervised_only());
    sup.net.dropout_rate = 0.0;
    let ds = data(0.3).normalized();
    let mut a = TrainState::new(&sup).unwrap();
    train_step(&mut a, &sup, &ds).unwrap();
    let mut zero = small_config(AblationFlags {
        use_dis_supervision: false,
        ..AblationFlags::full()
    });
    zero.net.dropout_rate = 0.0;
    zero.lambda_i_max = 0.0;
    zero.lambda_c_max = 0.0;
    let mut b = TrainState::new(&zero).unwrap();
    let bd = train_step(&mut b, &zero, &ds).unwrap();
    assert!(bd.itc > 0.0 || bd.ctc > 0.0);
    for (x, y) in a.pair.student.params().as_slice().iter().zip(b.pair.student.params().as_slice()) {
        assert!((x - y).abs() <= 1e-6 * (1.0 + x.abs()), "{x} vs {y}");
    }
}
