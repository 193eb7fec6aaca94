use serde::{Deserialize, Serialize};

use super::uncertainty::CertaintyMask;
use crate::geometry::inverse_sdf;
use crate::model::{softmax, Real, Tensor};
use crate::{Error, Result};

pub const DICE_EPS: f64 = 1e-5;

/// Loss value and its gradient with respect to one network output.
#[derive(Clone, Debug)]
pub struct LossGrad<F> {
    pub value: f64,
    pub grad: Tensor<F>,
}

/// Loss value and gradients with respect to the segmentation and distance outputs.
#[derive(Clone, Debug)]
pub struct PairLossGrad<F> {
    pub value: f64,
    pub d_seg: Tensor<F>,
    pub d_dist: Tensor<F>,
}

fn check_labels<F: Real>(t: &Tensor<F>, labels: &[u8]) -> Result<()> {
    let n = t.batch * t.voxels();
    if labels.len() != n {
        return Err(Error::InvalidInput(format!("{} labels for {n} voxels", labels.len())));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l as usize >= t.channels) {
        return Err(Error::InvalidInput(format!("label {bad} outside {} categories", t.channels)));
    }
    Ok(())
}

fn check_shape<F: Real>(a: &Tensor<F>, b: &Tensor<F>, what: &str) -> Result<()> {
    if !a.same_shape(b) {
        return Err(Error::InvalidInput(format!(
            "{what}: shape mismatch ({}x{}x{:?} vs {}x{}x{:?})",
            a.batch, a.channels, a.spatial, b.batch, b.channels, b.spatial
        )));
    }
    Ok(())
}

/// Soft Dice loss over the whole batch. Binary tasks use the foreground
/// channel; otherwise the loss is averaged over every non-background category.
///
/// `labels` holds one category per voxel in `[batch, spatial]` order.
pub fn dice_loss<F: Real>(probs: &Tensor<F>, labels: &[u8]) -> Result<LossGrad<F>> {
    check_labels(probs, labels)?;
    let s = probs.voxels();
    let cats: Vec<usize> = (1..probs.channels).collect();
    let mut grad = Tensor::zeros(probs.batch, probs.channels, probs.spatial);
    let mut value = 0.0;
    let w = 1.0 / cats.len() as f64;
    for &k in &cats {
        let (mut inter, mut sum) = (0.0, 0.0);
        for i in 0..probs.batch {
            let p = probs.channel(i, k);
            let lab = &labels[i * s..(i + 1) * s];
            for v in 0..s {
                let q = f64::from(u8::from(lab[v] as usize == k));
                let pv = p[v].as_f64();
                inter += pv * q;
                sum += pv + q;
            }
        }
        let num = 2.0 * inter + DICE_EPS;
        let den = sum + DICE_EPS;
        value += w * (1.0 - num / den);
        for i in 0..probs.batch {
            let lab = &labels[i * s..(i + 1) * s];
            let g = grad.channel_mut(i, k);
            for v in 0..s {
                let q = f64::from(u8::from(lab[v] as usize == k));
                g[v] = F::lit(-w * (2.0 * q * den - num) / (den * den));
            }
        }
    }
    Ok(LossGrad { value, grad })
}

/// Mean per-voxel negative log-softmax of the true category; gradient is
/// with respect to the scores.
pub fn ce_loss<F: Real>(scores: &Tensor<F>, labels: &[u8]) -> Result<LossGrad<F>> {
    check_labels(scores, labels)?;
    let s = scores.voxels();
    let c = scores.channels;
    let n = (scores.batch * s) as f64;
    let probs = softmax(scores);
    let mut grad = probs.clone();
    let mut value = 0.0;
    for i in 0..scores.batch {
        let x = scores.sample(i);
        let g = grad.sample_mut(i);
        for v in 0..s {
            let mut m = f64::NEG_INFINITY;
            for k in 0..c {
                m = m.max(x[k * s + v].as_f64());
            }
            let lse = m + (0..c).map(|k| (x[k * s + v].as_f64() - m).exp()).sum::<f64>().ln();
            let y = labels[i * s + v] as usize;
            value += lse - x[y * s + v].as_f64();
            g[y * s + v] -= F::one();
        }
    }
    let scale = F::lit(1.0 / n);
    for g in &mut grad.data {
        *g *= scale;
    }
    Ok(LossGrad { value: value / n, grad })
}

/// Mean squared error between predicted and target normalized distances.
pub fn dist_loss<F: Real>(pred: &Tensor<F>, target: &Tensor<F>) -> Result<LossGrad<F>> {
    check_shape(pred, target, "dist_loss")?;
    let n = pred.data.len() as f64;
    let mut value = 0.0;
    let mut grad = pred.clone();
    for (g, &t) in grad.data.iter_mut().zip(&target.data) {
        let d = g.as_f64() - t.as_f64();
        value += d * d;
        *g = F::lit(2.0 * d / n);
    }
    Ok(LossGrad { value: value / n, grad })
}

/// Masked student-teacher agreement on both tasks:
/// `beta * seg + (1 - beta) * dist`, where each term is a squared difference
/// summed over masked voxels and divided by the mask count. The segmentation
/// difference of a voxel is averaged over channels. Zero for an empty mask.
pub fn intra_task_consistency<F: Real>(
    student_probs: &Tensor<F>,
    student_dist: &Tensor<F>,
    teacher_probs: &Tensor<F>,
    teacher_dist: &Tensor<F>,
    mask: &CertaintyMask,
    beta: f64,
) -> Result<PairLossGrad<F>> {
    check_shape(student_probs, teacher_probs, "itc seg")?;
    check_shape(student_dist, teacher_dist, "itc dist")?;
    let s = student_probs.voxels();
    let c = student_probs.channels;
    let n = student_probs.batch * s;
    if mask.len() != n || student_dist.batch * student_dist.voxels() != n || student_dist.channels != 1 {
        return Err(Error::InvalidInput(format!("itc: mask of {} for {n} voxels", mask.len())));
    }
    let mut d_seg = Tensor::zeros(student_probs.batch, c, student_probs.spatial);
    let mut d_dist = Tensor::zeros(student_dist.batch, 1, student_dist.spatial);
    let count = mask.count();
    if count == 0 {
        return Ok(PairLossGrad {
            value: 0.0,
            d_seg,
            d_dist,
        });
    }
    let m = count as f64;
    let (mut seg, mut dist) = (0.0, 0.0);
    for i in 0..student_probs.batch {
        let ps = student_probs.sample(i);
        let pt = teacher_probs.sample(i);
        let ds = student_dist.sample(i);
        let dt = teacher_dist.sample(i);
        let gs = d_seg.sample_mut(i);
        let gd = d_dist.sample_mut(i);
        for v in 0..s {
            if !mask.data()[i * s + v] {
                continue;
            }
            for k in 0..c {
                let d = ps[k * s + v].as_f64() - pt[k * s + v].as_f64();
                seg += d * d / c as f64;
                gs[k * s + v] = F::lit(beta * 2.0 * d / (c as f64 * m));
            }
            let d = ds[v].as_f64() - dt[v].as_f64();
            dist += d * d;
            gd[v] = F::lit((1.0 - beta) * 2.0 * d / m);
        }
    }
    Ok(PairLossGrad {
        value: beta * seg / m + (1.0 - beta) * dist / m,
        d_seg,
        d_dist,
    })
}

/// Mean squared difference between the foreground probability (the sum of
/// non-background channels) and the mask recovered from the predicted
/// distance by the smooth inverse transform with steepness `k`.
pub fn cross_task_consistency<F: Real>(probs: &Tensor<F>, dist: &Tensor<F>, k: f64) -> Result<PairLossGrad<F>> {
    let s = probs.voxels();
    if dist.channels != 1 || dist.batch != probs.batch || dist.spatial != probs.spatial {
        return Err(Error::InvalidInput("ctc: distance map does not match probabilities".into()));
    }
    let c = probs.channels;
    let n = (probs.batch * s) as f64;
    let mut d_seg = Tensor::zeros(probs.batch, c, probs.spatial);
    let mut d_dist = Tensor::zeros(dist.batch, 1, dist.spatial);
    let mut value = 0.0;
    for i in 0..probs.batch {
        let p = probs.sample(i);
        let z = dist.sample(i);
        let gs = d_seg.sample_mut(i);
        let gd = d_dist.sample_mut(i);
        for v in 0..s {
            let fg: f64 = (1..c).map(|ch| p[ch * s + v].as_f64()).sum();
            let r = inverse_sdf(z[v].as_f64(), k);
            let d = fg - r;
            value += d * d;
            let g = 2.0 * d / n;
            for ch in 1..c {
                gs[ch * s + v] = F::lit(g);
            }
            gd[v] = F::lit(g * k * r * (1.0 - r));
        }
    }
    Ok(PairLossGrad {
        value: value / n,
        d_seg,
        d_dist,
    })
}

/// Unweighted loss terms of one step. Disabled terms are zero.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossTerms {
    pub sup_dice: f64,
    pub sup_ce: f64,
    pub sup_dis: f64,
    pub itc: f64,
    pub ctc: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub sup_dice: f64,
    pub sup_ce: f64,
    pub sup_dis: f64,
    pub itc: f64,
    pub ctc: f64,
    pub total: f64,
    pub lambda_i: f64,
    pub lambda_c: f64,
    pub u_th: f64,
    pub beta: f64,
}

impl LossBreakdown {
    pub const CSV_FIELDS: [&'static str; 10] = [
        "sup_dice", "sup_ce", "sup_dis", "itc", "ctc", "total", "lambda_i", "lambda_c", "u_th", "beta",
    ];

    pub fn values(&self) -> [f64; 10] {
        [
            self.sup_dice,
            self.sup_ce,
            self.sup_dis,
            self.itc,
            self.ctc,
            self.total,
            self.lambda_i,
            self.lambda_c,
            self.u_th,
            self.beta,
        ]
    }

    pub fn supervised(&self) -> f64 {
        self.sup_dice + self.sup_ce + self.sup_dis
    }

    /// `|total - (supervised + lambda_i * itc + lambda_c * ctc)|`.
    pub fn identity_residual(&self) -> f64 {
        (self.total - (self.supervised() + self.lambda_i * self.itc + self.lambda_c * self.ctc)).abs()
    }
}

/// Weighted sum of the terms; the first non-finite term is reported by name.
pub fn total_loss(terms: LossTerms, lambda_i: f64, lambda_c: f64, u_th: f64, beta: f64) -> Result<LossBreakdown> {
    let named = [
        ("sup_dice", terms.sup_dice),
        ("sup_ce", terms.sup_ce),
        ("sup_dis", terms.sup_dis),
        ("itc", terms.itc),
        ("ctc", terms.ctc),
        ("lambda_i", lambda_i),
        ("lambda_c", lambda_c),
    ];
    if let Some((name, v)) = named.iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::numerical(*name, format!("value {v}")));
    }
    Ok(LossBreakdown {
        sup_dice: terms.sup_dice,
        sup_ce: terms.sup_ce,
        sup_dis: terms.sup_dis,
        itc: terms.itc,
        ctc: terms.ctc,
        total: terms.sup_dice + terms.sup_ce + terms.sup_dis + lambda_i * terms.itc + lambda_c * terms.ctc,
        lambda_i,
        lambda_c,
        u_th,
        beta,
    })
}
