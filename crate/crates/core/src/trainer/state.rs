use std::sync::Arc;

use rand_distr::{Distribution, Normal};

use super::config::{ThresholdMode, TrainConfig};
use super::optim::sgd_momentum_step;
use crate::data::{augment, sample_batch, Batch, Dataset};
use crate::geometry::{sdf_normalize, sdf_transform, LabelMask};
use crate::model::{
    softmax, softmax_backward, Checkpoint, CheckpointManifest, DualBranchNet, Params, TeacherStudentPair, Tensor,
};
use crate::objectives::{
    ce_loss, cross_task_consistency, dice_loss, dist_loss, intra_task_consistency, predictive_entropy,
    rampup_weight, threshold_schedule, total_loss, CertaintyMask, LossBreakdown, LossTerms,
};
use crate::rng::{purpose, stream};
use crate::{Error, Result};

/// How often each expensive component ran; used to verify ablation contracts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CallCounts {
    pub student_forwards: u64,
    pub teacher_mc_passes: u64,
    pub dist_supervision: u64,
    pub itc: u64,
    pub ctc: u64,
    pub ema_updates: u64,
}

/// Everything that evolves during training.
#[derive(Clone, Debug)]
pub struct TrainState {
    pub pair: TeacherStudentPair<f32>,
    pub velocity: Params<f32>,
    /// Completed steps.
    pub step: u64,
    pub history: Vec<LossBreakdown>,
    pub counts: CallCounts,
}

impl TrainState {
    pub fn new(cfg: &TrainConfig) -> Result<Self> {
        cfg.validate()?;
        let student = DualBranchNet::build(&cfg.net, cfg.seed)?;
        let velocity = Params::zeros(student.params().layout().clone());
        Ok(Self {
            pair: TeacherStudentPair::new(student, cfg.alpha)?,
            velocity,
            step: 0,
            history: Vec::new(),
            counts: CallCounts::default(),
        })
    }

    /// Restores a state from a checkpoint and the history recorded before it.
    pub fn from_checkpoint(cfg: &TrainConfig, ckpt: &Checkpoint, history: Vec<LossBreakdown>) -> Result<Self> {
        cfg.validate()?;
        if ckpt.manifest.net != cfg.net {
            return Err(Error::InvalidState("checkpoint network differs from the configured one".into()));
        }
        if history.len() as u64 != ckpt.manifest.step {
            return Err(Error::InvalidState(format!(
                "history has {} rows but the checkpoint is at step {}",
                history.len(),
                ckpt.manifest.step
            )));
        }
        let template = DualBranchNet::<f32>::build(&cfg.net, cfg.seed)?;
        let layout = template.params().layout().clone();
        if layout.entries() != ckpt.manifest.params.as_slice() {
            return Err(Error::InvalidState("checkpoint parameter index does not match the network".into()));
        }
        let load = |v: &Vec<f32>| Params::from_vec(Arc::clone(&layout), v.clone());
        let student = template.with_params(load(&ckpt.student)?)?;
        let teacher = template.with_params(load(&ckpt.teacher)?)?;
        Ok(Self {
            pair: TeacherStudentPair::from_parts(student, teacher, ckpt.manifest.alpha)?,
            velocity: load(&ckpt.momentum)?,
            step: ckpt.manifest.step,
            history,
            counts: CallCounts::default(),
        })
    }

    pub fn checkpoint(&self, cfg: &TrainConfig) -> Result<Checkpoint> {
        let p = self.pair.student.params();
        Ok(Checkpoint {
            manifest: CheckpointManifest {
                net: cfg.net.clone(),
                step: self.step,
                alpha: self.pair.alpha(),
                num_params: p.as_slice().len(),
                params: p.layout().entries().to_vec(),
                train_config: serde_json::to_value(cfg)?,
            },
            student: p.as_slice().to_vec(),
            teacher: self.pair.teacher.params().as_slice().to_vec(),
            momentum: self.velocity.as_slice().to_vec(),
        })
    }
}

/// Draws and augments the batch used at step `t`.
pub fn batch_for_step(cfg: &TrainConfig, ds: &Dataset, t: u64) -> Result<Batch> {
    let mut rng = stream(cfg.seed, t, purpose::BATCH);
    let mut batch = sample_batch(ds, &cfg.patch, cfg.composition, &mut rng)?;
    for i in 0..batch.len() {
        let (img, mask, _) = augment(&batch.images[i], batch.masks[i].as_deref(), &cfg.patch, &mut rng);
        batch.images[i] = img;
        batch.masks[i] = mask;
    }
    Ok(batch)
}

fn stack(images: &[Vec<f32>], spatial: [usize; 3]) -> Tensor<f32> {
    let data: Vec<f32> = images.iter().flatten().copied().collect();
    Tensor::from_vec(images.len(), 1, spatial, data)
}

/// Normalized signed distance targets of the non-background region of each mask.
fn dist_targets(masks: &[&Vec<u8>], cfg: &TrainConfig, spatial: [usize; 3]) -> Result<Tensor<f32>> {
    let mut data = Vec::new();
    for m in masks {
        let fg: Vec<bool> = m.iter().map(|&v| v != 0).collect();
        let mask = LabelMask::from_bools(&fg, cfg.patch.clone())?;
        let sdf = sdf_normalize(&sdf_transform(&mask, 1)?);
        data.extend(sdf.data().iter().map(|&v| v as f32));
    }
    Ok(Tensor::from_vec(masks.len(), 1, spatial, data))
}

/// Pads a gradient over the first `rows` members to the full batch.
fn pad_batch(t: Tensor<f32>, batch: usize) -> Tensor<f32> {
    if t.batch == batch {
        return t;
    }
    let mut out = Tensor::zeros(batch, t.channels, t.spatial);
    out.data[..t.data.len()].copy_from_slice(&t.data);
    out
}

fn axpy(y: &mut Tensor<f32>, a: f64, x: &Tensor<f32>) {
    let a = a as f32;
    for (v, &u) in y.data.iter_mut().zip(&x.data) {
        *v += a * u;
    }
}

fn with_context(e: Error, t: u64, ids: &[String]) -> Error {
    match e {
        Error::Numerical { term, detail } => Error::Numerical {
            term,
            detail: format!("{detail} (step {t}, batch [{}])", ids.join(", ")),
        },
        other => other,
    }
}

/// One optimization step: student pass, teacher Monte Carlo passes, losses,
/// an SGD update of the student and finally the EMA update of the teacher.
pub fn train_step(state: &mut TrainState, cfg: &TrainConfig, ds: &Dataset) -> Result<LossBreakdown> {
    let t = state.step;
    let batch = batch_for_step(cfg, ds, t)?;
    train_step_on(state, cfg, &batch).map_err(|e| with_context(e, t, &batch.ids))
}

pub fn train_step_on(state: &mut TrainState, cfg: &TrainConfig, batch: &Batch) -> Result<LossBreakdown> {
    let t = state.step;
    let flags = cfg.ablation;
    let spatial = cfg.patch.as3();
    let n_lab = batch.num_labeled();
    if n_lab == 0 {
        return Err(Error::InvalidInput("batch has no labeled members".into()));
    }
    let consistency = flags.any_consistency();
    let members = if consistency { batch.len() } else { n_lab };
    let images = stack(&batch.images[..members], spatial);
    let labels: Vec<u8> = batch.masks[..n_lab]
        .iter()
        .map(|m| m.as_ref().ok_or_else(|| Error::InvalidInput("labeled member without a mask".into())))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .copied()
        .collect();

    let student = &state.pair.student;
    let mut drop_rng = stream(cfg.seed, t, purpose::STUDENT_DROPOUT);
    let (out, trace) = student.forward_traced(&images, Some(&mut drop_rng))?;
    state.counts.student_forwards += 1;
    let probs = softmax(&out.seg_scores);

    let lab_scores = out.seg_scores.narrow(0..n_lab);
    let lab_probs = probs.narrow(0..n_lab);
    let dice = dice_loss(&lab_probs, &labels)?;
    let ce = ce_loss(&lab_scores, &labels)?;
    let mut d_probs = pad_batch(dice.grad, members);
    let mut d_scores = pad_batch(ce.grad, members);
    let mut d_dist = Tensor::zeros(members, 1, spatial);
    let mut terms = LossTerms {
        sup_dice: dice.value,
        sup_ce: ce.value,
        ..LossTerms::default()
    };

    if flags.use_dis_supervision {
        let masks: Vec<&Vec<u8>> = batch.masks[..n_lab].iter().flatten().collect();
        let target = dist_targets(&masks, cfg, spatial)?;
        let dl = dist_loss(&out.dist.narrow(0..n_lab), &target)?;
        terms.sup_dis = dl.value;
        axpy(&mut d_dist, 1.0, &pad_batch(dl.grad, members));
        state.counts.dist_supervision += 1;
    }

    let ramp_len = cfg.ramp_length();
    let lambda_i = rampup_weight(t, ramp_len, cfg.lambda_i_max, cfg.ramp_shape);
    let lambda_c = rampup_weight(t, ramp_len, cfg.lambda_c_max, cfg.ramp_shape);
    let c = cfg.net.num_categories;
    let u_th = match cfg.threshold {
        ThresholdMode::Ramp => threshold_schedule(t, ramp_len, c, cfg.ramp_shape),
        ThresholdMode::Fixed(v) => v,
    };
    let beta = cfg.effective_beta();

    if flags.use_itc {
        let teacher_in = match cfg.teacher_noise {
            Some(sigma) if sigma > 0.0 => {
                let mut rng = stream(cfg.seed, t, purpose::TEACHER_NOISE);
                let normal = Normal::new(0.0, sigma).map_err(|e| Error::InvalidConfig(e.to_string()))?;
                let bound = 2.0 * sigma;
                let mut noisy = images.clone();
                for v in &mut noisy.data {
                    *v += normal.sample(&mut rng).clamp(-bound, bound) as f32;
                }
                noisy
            }
            _ => images.clone(),
        };
        let mut mc_rng = stream(cfg.seed, t, purpose::TEACHER_MC);
        let mc = state.pair.teacher.mc_forward(&teacher_in, cfg.mc_passes, &mut mc_rng)?;
        state.counts.teacher_mc_passes += mc.passes() as u64;
        let t_probs = mc.mean_probs();
        let t_dist = mc.mean_dist();
        let mask = if flags.use_uncertainty_mask {
            predictive_entropy(&t_probs).certainty_mask(u_th)
        } else {
            CertaintyMask::all(members * t_probs.voxels())
        };
        let itc = intra_task_consistency(&probs, &out.dist, &t_probs, &t_dist, &mask, beta)?;
        terms.itc = itc.value;
        axpy(&mut d_probs, lambda_i, &itc.d_seg);
        if flags.regression_active() {
            axpy(&mut d_dist, lambda_i, &itc.d_dist);
        }
        state.counts.itc += 1;
    }

    if flags.use_ctc {
        let ctc = cross_task_consistency(&probs, &out.dist, cfg.k)?;
        terms.ctc = ctc.value;
        axpy(&mut d_probs, lambda_c, &ctc.d_seg);
        axpy(&mut d_dist, lambda_c, &ctc.d_dist);
        state.counts.ctc += 1;
    }

    let breakdown = total_loss(terms, lambda_i, lambda_c, u_th, beta)?;
    let residual = breakdown.identity_residual();
    if residual > 1e-6 * (1.0 + breakdown.total.abs()) {
        return Err(Error::numerical("total", format!("decomposition residual {residual:e}")));
    }

    d_scores.add_assign(&softmax_backward(&probs, &d_probs));
    let grads = state.pair.student.backward(&trace, &d_scores, &d_dist);
    if grads.as_slice().iter().any(|g| !g.is_finite()) {
        return Err(Error::numerical("gradient", "non-finite parameter gradient"));
    }
    sgd_momentum_step(
        state.pair.student.params_mut(),
        &mut state.velocity,
        &grads,
        cfg.lr_at(t),
        cfg.momentum,
    )?;
    state.pair.ema_update()?;
    state.counts.ema_updates += 1;
    state.step += 1;
    state.history.push(breakdown);
    Ok(breakdown)
}
