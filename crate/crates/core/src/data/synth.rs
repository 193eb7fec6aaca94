use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Case, Dataset, Volume};
use crate::geometry::LabelMask;
use crate::rng::{self, purpose};
use crate::{Error, Extents, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShapeFamily {
    Ellipse,
    TwoLobe,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub num_cases: usize,
    pub extents: Extents,
    pub noise_sigma: f64,
    /// Foreground minus background intensity before noise.
    pub contrast: f64,
    pub shape_family: ShapeFamily,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            num_cases: 120,
            extents: Extents::d2(64, 64),
            noise_sigma: 1.0,
            contrast: 1.0,
            shape_family: ShapeFamily::Ellipse,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.extents.axes().iter().any(|&a| a < 16) {
            return Err(Error::InvalidConfig(format!(
                "synthetic extents must be at least 16 per axis, got {}",
                self.extents
            )));
        }
        if !(self.noise_sigma >= 0.0) || !self.noise_sigma.is_finite() {
            return Err(Error::InvalidConfig(format!("noise sigma {} must be >= 0", self.noise_sigma)));
        }
        if self.num_cases == 0 {
            return Err(Error::InvalidConfig("num_cases must be positive".into()));
        }
        Ok(())
    }
}

/// Rotated ellipsoid in voxel coordinates; rotation acts in the last two axes.
#[derive(Clone, Copy, Debug)]
struct Ellipsoid {
    center: [f64; 3],
    semi: [f64; 3],
    cos: f64,
    sin: f64,
}

impl Ellipsoid {
    fn random(rng: &mut impl Rng, dims: [usize; 3], center_lo: f64, center_hi: f64) -> Self {
        let min_plane = dims[1].min(dims[2]) as f64;
        let mut center = [0.0; 3];
        let mut semi = [0.5; 3];
        for ax in 0..3 {
            if dims[ax] > 1 {
                center[ax] = rng.random_range(center_lo..center_hi) * (dims[ax] - 1) as f64;
                let scale = if ax == 0 { dims[0] as f64 } else { min_plane };
                semi[ax] = rng.random_range(0.12..0.28) * scale;
            }
        }
        let angle = rng.random_range(0.0..std::f64::consts::PI);
        Self {
            center,
            semi,
            cos: angle.cos(),
            sin: angle.sin(),
        }
    }

    fn contains(&self, p: [f64; 3]) -> bool {
        let dz = p[0] - self.center[0];
        let dy = p[1] - self.center[1];
        let dx = p[2] - self.center[2];
        let u = self.cos * dy + self.sin * dx;
        let v = -self.sin * dy + self.cos * dx;
        (dz / self.semi[0]).powi(2) + (u / self.semi[1]).powi(2) + (v / self.semi[2]).powi(2) <= 1.0
    }
}

fn render_shape(rng: &mut impl Rng, extents: &Extents, family: ShapeFamily) -> Vec<bool> {
    let dims = extents.as3();
    let first = Ellipsoid::random(rng, dims, 0.3, 0.7);
    let second = match family {
        ShapeFamily::Ellipse => None,
        ShapeFamily::TwoLobe => {
            // Second lobe centered inside the first so the union stays connected.
            let mut lobe = Ellipsoid::random(rng, dims, 0.3, 0.7);
            let t = rng.random_range(0.0..std::f64::consts::TAU);
            let r = 0.8 * first.semi[1].min(first.semi[2]);
            lobe.center = first.center;
            lobe.center[1] += r * t.sin();
            lobe.center[2] += r * t.cos();
            for ax in 1..3 {
                lobe.semi[ax] *= 0.8;
            }
            Some(lobe)
        }
    };
    (0..extents.len())
        .map(|i| {
            let c = extents.coord3(i);
            let p = [c[0] as f64, c[1] as f64, c[2] as f64];
            first.contains(p) || second.is_some_and(|s| s.contains(p))
        })
        .collect()
}

/// Random smooth shapes rendered as intensity contrast plus Gaussian noise.
///
/// Deterministic in `cfg.seed`; each case draws from its own stream so the
/// first `n` cases do not depend on `num_cases`.
pub fn generate_synthetic(cfg: &SynthConfig) -> Result<Dataset> {
    cfg.validate()?;
    let noise = Normal::new(0.0, cfg.noise_sigma).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let mut cases = Vec::with_capacity(cfg.num_cases);
    for index in 0..cfg.num_cases {
        let mut rng = rng::stream(cfg.seed, index as u64, purpose::SYNTH);
        let mut fg = render_shape(&mut rng, &cfg.extents, cfg.shape_family);
        // Shapes that vanish on tiny grids get a single center voxel.
        if !fg.iter().any(|&b| b) {
            fg[cfg.extents.len() / 2] = true;
        }
        let image: Vec<f32> = fg
            .iter()
            .map(|&inside| {
                let base = if inside { cfg.contrast } else { 0.0 };
                (base + noise.sample(&mut rng)) as f32
            })
            .collect();
        let id = format!("case_{index:04}");
        cases.push(Case {
            image: Volume::new(id, image, cfg.extents.clone())?,
            mask: Some(LabelMask::from_bools(&fg, cfg.extents.clone())?),
        });
    }
    Dataset::fully_labeled(cases)
}
