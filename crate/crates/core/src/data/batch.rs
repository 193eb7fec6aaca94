use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::{Error, Extents, Result};

/// Labeled and unlabeled slots per mini-batch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchComposition {
    pub labeled: usize,
    pub unlabeled: usize,
}

impl Default for BatchComposition {
    fn default() -> Self {
        Self {
            labeled: 2,
            unlabeled: 2,
        }
    }
}

impl BatchComposition {
    pub fn total(&self) -> usize {
        self.labeled + self.unlabeled
    }
}

/// Cropped members, labeled slots first.
#[derive(Clone, Debug, PartialEq)]
pub struct Batch {
    pub patch: Extents,
    pub ids: Vec<String>,
    pub images: Vec<Vec<f32>>,
    /// Present only for labeled slots.
    pub masks: Vec<Option<Vec<u8>>>,
    pub labeled: Vec<bool>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn num_labeled(&self) -> usize {
        self.labeled.iter().filter(|&&l| l).count()
    }
}

/// Reflection about the edge voxels (edges not repeated).
pub fn reflect_index(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let m = i.rem_euclid(period);
    if m < n as isize {
        m as usize
    } else {
        (period - m) as usize
    }
}

/// Extracts a `patch`-shaped window starting at `origin`, reflecting indices
/// that fall outside the source grid.
pub fn crop<T: Copy>(data: &[T], extents: &Extents, origin: [isize; 3], patch: &Extents) -> Vec<T> {
    let src = extents.as3();
    let dst = patch.as3();
    let st = extents.strides3();
    let mut out = Vec::with_capacity(patch.len());
    for z in 0..dst[0] {
        let sz = reflect_index(origin[0] + z as isize, src[0]);
        for y in 0..dst[1] {
            let sy = reflect_index(origin[1] + y as isize, src[1]);
            let row = sz * st[0] + sy * st[1];
            for x in 0..dst[2] {
                let sx = reflect_index(origin[2] + x as isize, src[2]);
                out.push(data[row + sx]);
            }
        }
    }
    out
}

fn random_origin(rng: &mut impl Rng, extents: &Extents, patch: &Extents) -> [isize; 3] {
    let src = extents.as3();
    let dst = patch.as3();
    let mut origin = [0isize; 3];
    for ax in 0..3 {
        if src[ax] > dst[ax] {
            origin[ax] = rng.random_range(0..=src[ax] - dst[ax]) as isize;
        }
    }
    origin
}

fn pick(rng: &mut impl Rng, pool: &[usize], count: usize) -> Vec<usize> {
    if pool.is_empty() || count == 0 {
        return Vec::new();
    }
    if count <= pool.len() {
        index::sample(rng, pool.len(), count)
            .into_iter()
            .map(|i| pool[i])
            .collect()
    } else {
        (0..count).map(|_| pool[rng.random_range(0..pool.len())]).collect()
    }
}

/// Draws one two-stream batch with a random crop per member.
///
/// When the dataset has no unlabeled cases the unlabeled slots are filled
/// from the labeled pool with their masks withheld.
pub fn sample_batch(ds: &Dataset, patch: &Extents, comp: BatchComposition, rng: &mut impl Rng) -> Result<Batch> {
    if ds.labeled_indices().is_empty() && comp.labeled > 0 {
        return Err(Error::InvalidInput("dataset has no labeled cases".into()));
    }
    let labeled = pick(rng, ds.labeled_indices(), comp.labeled);
    let unlabeled_pool = if ds.unlabeled_indices().is_empty() {
        ds.labeled_indices()
    } else {
        ds.unlabeled_indices()
    };
    let unlabeled = pick(rng, unlabeled_pool, comp.unlabeled);

    let mut batch = Batch {
        patch: patch.clone(),
        ids: Vec::new(),
        images: Vec::new(),
        masks: Vec::new(),
        labeled: Vec::new(),
    };
    for (idx, is_labeled) in labeled
        .into_iter()
        .map(|i| (i, true))
        .chain(unlabeled.into_iter().map(|i| (i, false)))
    {
        let case = &ds.cases()[idx];
        let extents = case.image.extents();
        if extents.ndim() != patch.ndim() {
            return Err(Error::InvalidInput(format!(
                "patch {patch} does not match case {} extents {extents}",
                case.image.id
            )));
        }
        let origin = random_origin(rng, extents, patch);
        batch.ids.push(case.image.id.clone());
        batch.images.push(crop(case.image.data(), extents, origin, patch));
        batch.masks.push(if is_labeled {
            case.mask.as_ref().map(|m| crop(m.data(), extents, origin, patch))
        } else {
            None
        });
        batch.labeled.push(is_labeled);
    }
    Ok(batch)
}
