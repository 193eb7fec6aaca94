use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::layers::{Conv, UpConv};
use super::params::{ParamLayout, Params};
use super::{Real, Tensor};
use crate::rng::SeededRng;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NetConfig {
    /// 2 for planar images, 3 for volumes.
    pub dims: usize,
    pub in_channels: usize,
    pub num_categories: usize,
    pub base_width: usize,
    /// Encoder levels including the bottleneck.
    pub depth: usize,
    pub dropout_rate: f64,
}

impl Default for NetConfig {
    fn default() -> Self {
        Self {
            dims: 2,
            in_channels: 1,
            num_categories: 2,
            base_width: 8,
            depth: 3,
            dropout_rate: 0.5,
        }
    }
}

impl NetConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(2..=3).contains(&self.dims) {
            return bad(format!("dims must be 2 or 3, got {}", self.dims));
        }
        if self.depth < 2 {
            return bad(format!("depth must be at least 2, got {}", self.depth));
        }
        if self.num_categories < 2 {
            return bad(format!("need at least 2 categories, got {}", self.num_categories));
        }
        if self.in_channels == 0 || self.base_width == 0 {
            return bad("channel counts must be positive".into());
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return bad(format!("dropout rate {} not in [0, 1)", self.dropout_rate));
        }
        Ok(())
    }

    fn width(&self, level: usize) -> usize {
        self.base_width << level
    }

    /// Factor by which every spatial axis must be divisible.
    pub fn size_multiple(&self) -> usize {
        1 << (self.depth - 1)
    }

    fn kernel3(&self) -> [usize; 3] {
        if self.dims == 2 {
            [1, 3, 3]
        } else {
            [3, 3, 3]
        }
    }

    fn pad1(&self) -> [usize; 3] {
        if self.dims == 2 {
            [0, 1, 1]
        } else {
            [1, 1, 1]
        }
    }

    fn factor2(&self) -> [usize; 3] {
        if self.dims == 2 {
            [1, 2, 2]
        } else {
            [2, 2, 2]
        }
    }

    /// Decoder levels that apply dropout to their input: the two coarsest.
    fn decoder_dropout(&self, level: usize) -> bool {
        level + 3 >= self.depth
    }
}

#[derive(Clone, Debug)]
struct Architecture {
    enc: Vec<Conv>,
    down: Vec<Conv>,
    bottleneck: Conv,
    /// Indexed by level; `up[l]` maps level `l + 1` to level `l`.
    up: Vec<UpConv>,
    dec: Vec<Conv>,
    seg_head: Conv,
    dist_head: Conv,
    layout: Arc<ParamLayout>,
}

impl Architecture {
    fn new(cfg: &NetConfig) -> Self {
        let mut layout = ParamLayout::default();
        let k3 = cfg.kernel3();
        let p1 = cfg.pad1();
        let f2 = cfg.factor2();
        let levels = cfg.depth - 1;
        let mut enc = Vec::new();
        let mut down = Vec::new();
        let mut cin = cfg.in_channels;
        for l in 0..levels {
            enc.push(Conv::new(&mut layout, &format!("enc{l}"), cin, cfg.width(l), k3, [1; 3], p1));
            down.push(Conv::new(
                &mut layout,
                &format!("down{l}"),
                cfg.width(l),
                cfg.width(l + 1),
                f2,
                f2,
                [0; 3],
            ));
            cin = cfg.width(l + 1);
        }
        let wb = cfg.width(levels);
        let bottleneck = Conv::new(&mut layout, "bottleneck", wb, wb, k3, [1; 3], p1);
        let mut up = Vec::new();
        let mut dec = Vec::new();
        for l in 0..levels {
            up.push(UpConv::new(&mut layout, &format!("up{l}"), cfg.width(l + 1), cfg.width(l), f2));
            dec.push(Conv::new(&mut layout, &format!("dec{l}"), 2 * cfg.width(l), cfg.width(l), k3, [1; 3], p1));
        }
        let seg_head = Conv::new(&mut layout, "seg_head", cfg.width(0), cfg.num_categories, [1; 3], [1; 3], [0; 3]);
        let dist_head = Conv::new(&mut layout, "dist_head", cfg.width(0), 1, k3, [1; 3], p1);
        Self {
            enc,
            down,
            bottleneck,
            up,
            dec,
            seg_head,
            dist_head,
            layout: Arc::new(layout),
        }
    }
}

/// Outputs of one forward pass.
#[derive(Clone, Debug, PartialEq)]
pub struct NetOutput<F> {
    /// Pre-softmax scores, `[batch, categories, ...]`.
    pub seg_scores: Tensor<F>,
    /// Tanh-bounded signed distance prediction, `[batch, 1, ...]`.
    pub dist: Tensor<F>,
}

/// Deterministic part of a pass: everything up to the first dropout.
#[derive(Clone, Debug)]
struct Encoded<F> {
    input: Tensor<F>,
    skips: Vec<Tensor<F>>,
    downs: Vec<Tensor<F>>,
    bottleneck: Tensor<F>,
}

#[derive(Clone, Debug)]
struct DecoderLevel<F> {
    up: Tensor<F>,
    cat: Tensor<F>,
    cat_mask: Option<Vec<F>>,
    out: Tensor<F>,
}

/// Activations retained for the backward pass.
#[derive(Clone, Debug)]
pub struct Trace<F> {
    enc: Encoded<F>,
    bottleneck_mask: Option<Vec<F>>,
    bottleneck_dropped: Tensor<F>,
    /// Indexed by level.
    dec: Vec<DecoderLevel<F>>,
    dist: Tensor<F>,
}

/// Monte Carlo dropout samples: one softmax map and one distance map per pass.
#[derive(Clone, Debug)]
pub struct McSamples<F> {
    pub probs: Vec<Tensor<F>>,
    pub dists: Vec<Tensor<F>>,
}

impl<F: Real> McSamples<F> {
    pub fn passes(&self) -> usize {
        self.probs.len()
    }

    fn mean(stack: &[Tensor<F>]) -> Tensor<F> {
        let mut acc = stack[0].clone();
        for t in &stack[1..] {
            acc.add_assign(t);
        }
        let scale = F::one() / F::lit(stack.len() as f64);
        acc.map(|v| v * scale)
    }

    pub fn mean_probs(&self) -> Tensor<F> {
        Self::mean(&self.probs)
    }

    pub fn mean_dist(&self) -> Tensor<F> {
        Self::mean(&self.dists)
    }
}

fn relu_in_place<F: Real>(t: &mut Tensor<F>) {
    for v in &mut t.data {
        if *v < F::zero() {
            *v = F::zero();
        }
    }
}

/// Zeroes `dy` where the post-activation output was clamped.
fn relu_backward<F: Real>(out: &Tensor<F>, dy: &mut Tensor<F>) {
    for (d, &o) in dy.data.iter_mut().zip(&out.data) {
        if o <= F::zero() {
            *d = F::zero();
        }
    }
}

/// Inverted dropout; returns the multiplicative mask.
fn dropout_in_place<F: Real>(t: &mut Tensor<F>, rate: f64, rng: &mut SeededRng) -> Vec<F> {
    let keep = F::lit(1.0 / (1.0 - rate));
    let mask: Vec<F> = (0..t.data.len())
        .map(|_| if rng.random::<f64>() < rate { F::zero() } else { keep })
        .collect();
    for (v, &m) in t.data.iter_mut().zip(&mask) {
        *v *= m;
    }
    mask
}

/// Per-voxel softmax over the channel axis with max subtraction.
pub fn softmax<F: Real>(scores: &Tensor<F>) -> Tensor<F> {
    let s = scores.voxels();
    let c = scores.channels;
    let mut out = scores.clone();
    for i in 0..scores.batch {
        let x = scores.sample(i);
        let o = out.sample_mut(i);
        for v in 0..s {
            let mut m = F::neg_infinity();
            for k in 0..c {
                m = m.max(x[k * s + v]);
            }
            let mut z = F::zero();
            for k in 0..c {
                let e = (x[k * s + v] - m).exp();
                o[k * s + v] = e;
                z += e;
            }
            for k in 0..c {
                o[k * s + v] /= z;
            }
        }
    }
    out
}

/// Chains a gradient with respect to softmax probabilities back to the scores.
pub fn softmax_backward<F: Real>(probs: &Tensor<F>, d_probs: &Tensor<F>) -> Tensor<F> {
    let s = probs.voxels();
    let c = probs.channels;
    let mut out = Tensor::zeros(probs.batch, c, probs.spatial);
    for i in 0..probs.batch {
        let p = probs.sample(i);
        let d = d_probs.sample(i);
        let o = out.sample_mut(i);
        for v in 0..s {
            let mut dot = F::zero();
            for k in 0..c {
                dot += p[k * s + v] * d[k * s + v];
            }
            for k in 0..c {
                o[k * s + v] = p[k * s + v] * (d[k * s + v] - dot);
            }
        }
    }
    out
}

/// Encoder-decoder with skip connections, a segmentation head and a
/// tanh-bounded distance regression head on the shared decoder.
#[derive(Clone, Debug)]
pub struct DualBranchNet<F> {
    cfg: NetConfig,
    arch: Arc<Architecture>,
    params: Params<F>,
}

impl<F: Real> DualBranchNet<F> {
    pub fn build(cfg: &NetConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let arch = Architecture::new(cfg);
        let mut params = Params::zeros(arch.layout.clone());
        let mut rng = crate::rng::stream(seed, 0, crate::rng::purpose::INIT);
        for c in arch.enc.iter().chain(&arch.down).chain([&arch.bottleneck]).chain(&arch.dec) {
            c.init(&mut params, 2.0, &mut rng);
        }
        for u in &arch.up {
            u.init(&mut params, 2.0, &mut rng);
        }
        arch.seg_head.init(&mut params, 1.0, &mut rng);
        arch.dist_head.init(&mut params, 1.0, &mut rng);
        Ok(Self {
            cfg: cfg.clone(),
            arch: Arc::new(arch),
            params,
        })
    }

    /// Same topology with the given parameter values.
    pub fn with_params(&self, params: Params<F>) -> Result<Self> {
        if !params.same_layout(&self.params) {
            return Err(Error::InvalidState("parameter layout does not match network".into()));
        }
        Ok(Self {
            cfg: self.cfg.clone(),
            arch: self.arch.clone(),
            params,
        })
    }

    pub fn config(&self) -> &NetConfig {
        &self.cfg
    }

    pub fn params(&self) -> &Params<F> {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut Params<F> {
        &mut self.params
    }

    pub fn num_params(&self) -> usize {
        self.params.as_slice().len()
    }

    pub fn cast<G: Real>(&self) -> DualBranchNet<G> {
        DualBranchNet {
            cfg: self.cfg.clone(),
            arch: self.arch.clone(),
            params: self.params.cast(),
        }
    }

    pub fn check_input(&self, images: &Tensor<F>) -> Result<()> {
        if images.channels != self.cfg.in_channels {
            return Err(Error::InvalidInput(format!(
                "expected {} input channels, got {}",
                self.cfg.in_channels, images.channels
            )));
        }
        let m = self.cfg.size_multiple();
        let real_axes = if self.cfg.dims == 2 { 1..3 } else { 0..3 };
        if self.cfg.dims == 2 && images.spatial[0] != 1 {
            return Err(Error::InvalidInput("2-D network given a 3-D input".into()));
        }
        for ax in real_axes {
            if !images.spatial[ax].is_multiple_of(m) {
                return Err(Error::InvalidInput(format!(
                    "spatial extents {:?} must be divisible by {m}",
                    images.spatial
                )));
            }
        }
        Ok(())
    }

    fn encode(&self, images: &Tensor<F>) -> Encoded<F> {
        let a = &self.arch;
        let p = &self.params;
        let mut skips = Vec::new();
        let mut downs: Vec<Tensor<F>> = Vec::new();
        for l in 0..a.enc.len() {
            let x = if l == 0 { images } else { &downs[l - 1] };
            let mut e = a.enc[l].forward(p, x);
            relu_in_place(&mut e);
            let mut d = a.down[l].forward(p, &e);
            relu_in_place(&mut d);
            skips.push(e);
            downs.push(d);
        }
        let mut bottleneck = a.bottleneck.forward(p, downs.last().expect("depth >= 2"));
        relu_in_place(&mut bottleneck);
        Encoded {
            input: images.clone(),
            skips,
            downs,
            bottleneck,
        }
    }

    fn decode(&self, enc: Encoded<F>, mut rng: Option<&mut SeededRng>, keep: bool) -> (NetOutput<F>, Option<Trace<F>>) {
        let a = &self.arch;
        let p = &self.params;
        let rate = self.cfg.dropout_rate;
        let mut y = enc.bottleneck.clone();
        let bottleneck_mask = match rng.as_deref_mut() {
            Some(r) if rate > 0.0 => Some(dropout_in_place(&mut y, rate, r)),
            _ => None,
        };
        let bottleneck_dropped = y.clone();
        let mut levels: Vec<Option<DecoderLevel<F>>> = vec![None; a.dec.len()];
        for l in (0..a.dec.len()).rev() {
            let mut u = a.up[l].forward(p, &y);
            relu_in_place(&mut u);
            let mut cat = Tensor::concat_channels(&u, &enc.skips[l]);
            let cat_mask = match rng.as_deref_mut() {
                Some(r) if rate > 0.0 && self.cfg.decoder_dropout(l) => Some(dropout_in_place(&mut cat, rate, r)),
                _ => None,
            };
            let mut out = a.dec[l].forward(p, &cat);
            relu_in_place(&mut out);
            y = out.clone();
            if keep {
                levels[l] = Some(DecoderLevel {
                    up: u,
                    cat,
                    cat_mask,
                    out,
                });
            }
        }
        let seg_scores = a.seg_head.forward(p, &y);
        // Rounded tanh reaches +-1 for large inputs; keep the open interval.
        let lim = F::one() - F::epsilon();
        let dist = a.dist_head.forward(p, &y).map(|v| v.tanh().max(-lim).min(lim));
        let output = NetOutput {
            seg_scores,
            dist: dist.clone(),
        };
        let trace = keep.then(|| Trace {
            enc,
            bottleneck_mask,
            bottleneck_dropped,
            dec: levels.into_iter().map(|l| l.expect("every level traced")).collect(),
            dist,
        });
        (output, trace)
    }

    fn check_output(&self, out: &NetOutput<F>, images: &Tensor<F>) -> Result<()> {
        for (name, t) in [("seg_scores", &out.seg_scores), ("dist", &out.dist)] {
            let bad = t.data.iter().filter(|v| !v.is_finite()).count();
            if bad > 0 {
                let max_in = images.data.iter().fold(0.0f64, |m, v| m.max(v.as_f64().abs()));
                return Err(Error::numerical(
                    "forward",
                    format!(
                        "{bad} non-finite values in {name}; max |input| = {max_in:e}, parameter norm = {:e}",
                        self.params.l2_norm()
                    ),
                ));
            }
        }
        Ok(())
    }

    /// One pass. Dropout is active iff `dropout` carries a generator.
    pub fn forward(&self, images: &Tensor<F>, dropout: Option<&mut SeededRng>) -> Result<NetOutput<F>> {
        self.check_input(images)?;
        let (out, _) = self.decode(self.encode(images), dropout, false);
        self.check_output(&out, images)?;
        Ok(out)
    }

    /// Forward pass that keeps the activations needed by [`DualBranchNet::backward`].
    pub fn forward_traced(
        &self,
        images: &Tensor<F>,
        dropout: Option<&mut SeededRng>,
    ) -> Result<(NetOutput<F>, Trace<F>)> {
        self.check_input(images)?;
        let (out, trace) = self.decode(self.encode(images), dropout, true);
        self.check_output(&out, images)?;
        Ok((out, trace.expect("trace requested")))
    }

    /// `passes` stochastic passes; the deterministic encoder runs once.
    pub fn mc_forward(&self, images: &Tensor<F>, passes: usize, rng: &mut SeededRng) -> Result<McSamples<F>> {
        if passes == 0 {
            return Err(Error::InvalidInput("at least one Monte Carlo pass is required".into()));
        }
        self.check_input(images)?;
        let enc = self.encode(images);
        let mut probs = Vec::with_capacity(passes);
        let mut dists = Vec::with_capacity(passes);
        for _ in 0..passes {
            let (out, _) = self.decode(enc.clone(), Some(&mut *rng), false);
            self.check_output(&out, images)?;
            probs.push(softmax(&out.seg_scores));
            dists.push(out.dist);
        }
        Ok(McSamples { probs, dists })
    }

    /// Parameter gradients given gradients with respect to the segmentation
    /// scores and the (post-tanh) distance output.
    pub fn backward(&self, trace: &Trace<F>, d_scores: &Tensor<F>, d_dist: &Tensor<F>) -> Params<F> {
        let a = &self.arch;
        let p = &self.params;
        let mut g = Params::zeros(a.layout.clone());
        let head_in = &trace.dec[0].out;

        let mut d_head = a
            .seg_head
            .backward(p, head_in, d_scores, &mut g, true)
            .expect("input gradient");
        let mut d_pre_tanh = d_dist.clone();
        for (d, &y) in d_pre_tanh.data.iter_mut().zip(&trace.dist.data) {
            *d *= F::one() - y * y;
        }
        let d_from_dist = a
            .dist_head
            .backward(p, head_in, &d_pre_tanh, &mut g, true)
            .expect("input gradient");
        d_head.add_assign(&d_from_dist);

        let levels = a.dec.len();
        let mut d_skips: Vec<Option<Tensor<F>>> = vec![None; levels];
        let mut d = d_head;
        for l in 0..levels {
            let lv = &trace.dec[l];
            relu_backward(&lv.out, &mut d);
            let mut d_cat = a.dec[l].backward(p, &lv.cat, &d, &mut g, true).expect("input gradient");
            if let Some(mask) = &lv.cat_mask {
                for (v, &m) in d_cat.data.iter_mut().zip(mask) {
                    *v *= m;
                }
            }
            let (mut d_up, d_skip) = d_cat.split_channels(lv.up.channels);
            d_skips[l] = Some(d_skip);
            relu_backward(&lv.up, &mut d_up);
            let up_in = if l + 1 < levels {
                &trace.dec[l + 1].out
            } else {
                &trace.bottleneck_dropped
            };
            d = a.up[l].backward(p, up_in, &d_up, &mut g);
        }
        if let Some(mask) = &trace.bottleneck_mask {
            for (v, &m) in d.data.iter_mut().zip(mask) {
                *v *= m;
            }
        }
        relu_backward(&trace.enc.bottleneck, &mut d);
        let enc = &trace.enc;
        d = a
            .bottleneck
            .backward(p, &enc.downs[levels - 1], &d, &mut g, true)
            .expect("input gradient");
        for l in (0..levels).rev() {
            relu_backward(&enc.downs[l], &mut d);
            let mut d_e = a.down[l].backward(p, &enc.skips[l], &d, &mut g, true).expect("input gradient");
            d_e.add_assign(d_skips[l].as_ref().expect("decoder visited every level"));
            relu_backward(&enc.skips[l], &mut d_e);
            let x = if l == 0 { &enc.input } else { &enc.downs[l - 1] };
            match a.enc[l].backward(p, x, &d_e, &mut g, l > 0) {
                Some(dx) => d = dx,
                None => break,
            }
        }
        g
    }
}
