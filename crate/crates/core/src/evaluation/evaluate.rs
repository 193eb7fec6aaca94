use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;

use super::metrics::{case_metrics, CaseMetrics};
use super::report::{config_fingerprint, MetricReport};
use crate::data::Dataset;
use crate::geometry::LabelMask;
use crate::model::{load_checkpoint, Checkpoint, DualBranchNet, Params};
use crate::trainer::{sliding_window_predict, EvalNetwork, PatchPredictor, TrainConfig};
use crate::{Error, Extents, Result};

/// Segments every labeled case with overlapping windows and scores the
/// non-background region against its mask. Images are normalized first.
/// Cases are processed in parallel and reported in dataset order.
pub fn evaluate<P: PatchPredictor + Sync + ?Sized>(
    predictor: &P,
    test_set: &Dataset,
    patch: &Extents,
    stride: &Extents,
    config_fingerprint: String,
) -> Result<MetricReport> {
    let per_case: Vec<CaseMetrics> = test_set
        .cases()
        .par_iter()
        .filter(|c| c.mask.is_some())
        .map(|case| {
            let truth = case.mask.as_ref().expect("filtered");
            let image = case.image.normalized();
            let probs = sliding_window_predict(predictor, image.data(), image.extents(), patch, stride)?;
            let pred: Vec<bool> = probs.argmax().iter().map(|&c| c != 0).collect();
            let truth_fg: Vec<bool> = truth.data().iter().map(|&c| c != 0).collect();
            let extents = image.extents().clone();
            case_metrics(
                &case.image.id,
                &LabelMask::from_bools(&pred, extents.clone())?,
                &LabelMask::from_bools(&truth_fg, extents)?,
                1,
            )
        })
        .collect::<Result<_>>()?;
    if per_case.is_empty() {
        return Err(Error::InvalidInput("test set has no labeled cases".into()));
    }
    Ok(MetricReport::new(per_case, config_fingerprint))
}

/// Rebuilds the network selected by `which` from a checkpoint.
pub fn network_from_checkpoint(ckpt: &Checkpoint, which: EvalNetwork) -> Result<DualBranchNet<f32>> {
    let template = DualBranchNet::<f32>::build(&ckpt.manifest.net, 0)?;
    let layout = Arc::clone(template.params().layout());
    if layout.entries() != ckpt.manifest.params.as_slice() {
        return Err(Error::InvalidState("checkpoint parameter index does not match its network".into()));
    }
    let values = match which {
        EvalNetwork::Student => &ckpt.student,
        EvalNetwork::Teacher => &ckpt.teacher,
    };
    template.with_params(Params::from_vec(layout, values.clone())?)
}

/// Evaluates a saved run with the inference settings stored in its configuration.
pub fn evaluate_checkpoint(dir: &Path, test_set: &Dataset, which: Option<EvalNetwork>) -> Result<MetricReport> {
    let ckpt = load_checkpoint(dir)?;
    let cfg: TrainConfig = serde_json::from_value(ckpt.manifest.train_config.clone()).map_err(|e| {
        Error::MalformedHeader {
            path: dir.to_path_buf(),
            reason: format!("stored training configuration: {e}"),
        }
    })?;
    let net = network_from_checkpoint(&ckpt, which.unwrap_or(cfg.infer.network))?;
    evaluate(&net, test_set, &cfg.patch, &cfg.stride(), config_fingerprint(&cfg)?)
}
