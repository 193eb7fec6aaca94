use rand::Rng;

use crate::Extents;

/// One element of the flip/right-angle-rotation group: flips are applied
/// first, then `rot` quarter turns in the last two axes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct Transform {
    /// Per-axis flips in [`Extents::as3`] order.
    pub flips: [bool; 3],
    pub rot: u8,
}

impl Transform {
    pub fn identity() -> Self {
        Self::default()
    }

    /// Uniform draw; quarter turns are only used when the rotation plane is square.
    pub fn sample(rng: &mut impl Rng, extents: &Extents) -> Self {
        let dims = extents.as3();
        let mut flips = [false; 3];
        for (ax, f) in flips.iter_mut().enumerate() {
            if dims[ax] > 1 {
                *f = rng.random();
            }
        }
        let rot = if dims[1] == dims[2] {
            rng.random_range(0..4u8)
        } else {
            2 * rng.random_range(0..2u8)
        };
        Self { flips, rot }
    }

    /// Every group element valid for `extents`.
    pub fn all(extents: &Extents) -> Vec<Self> {
        let dims = extents.as3();
        let rots: &[u8] = if dims[1] == dims[2] { &[0, 1, 2, 3] } else { &[0, 2] };
        let mut out = Vec::new();
        for bits in 0..8u8 {
            let flips = [bits & 1 != 0, bits & 2 != 0, bits & 4 != 0];
            if (0..3).any(|ax| flips[ax] && dims[ax] == 1) {
                continue;
            }
            for &rot in rots {
                out.push(Self { flips, rot });
            }
        }
        out
    }

    pub fn apply<T: Copy>(&self, data: &[T], extents: &Extents) -> Vec<T> {
        rotate(&flip(data, extents, self.flips), extents, self.rot)
    }

    /// Undoes [`Transform::apply`].
    pub fn invert<T: Copy>(&self, data: &[T], extents: &Extents) -> Vec<T> {
        flip(&rotate(data, extents, 4 - self.rot % 4), extents, self.flips)
    }
}

fn flip<T: Copy>(data: &[T], extents: &Extents, flips: [bool; 3]) -> Vec<T> {
    let [d, h, w] = extents.as3();
    let mut out = Vec::with_capacity(data.len());
    for z in 0..d {
        let sz = if flips[0] { d - 1 - z } else { z };
        for y in 0..h {
            let sy = if flips[1] { h - 1 - y } else { y };
            for x in 0..w {
                let sx = if flips[2] { w - 1 - x } else { x };
                out.push(data[(sz * h + sy) * w + sx]);
            }
        }
    }
    out
}

fn rotate<T: Copy>(data: &[T], extents: &Extents, quarter_turns: u8) -> Vec<T> {
    match quarter_turns % 4 {
        0 => data.to_vec(),
        2 => flip(data, extents, [false, true, true]),
        k => (0..k).fold(data.to_vec(), |acc, _| rot90(&acc, extents)),
    }
}

/// Quarter turn in the (h, w) plane, which must be square.
fn rot90<T: Copy>(data: &[T], extents: &Extents) -> Vec<T> {
    let [d, h, w] = extents.as3();
    assert_eq!(h, w, "quarter turns need a square plane");
    let n = h;
    let mut out = Vec::with_capacity(data.len());
    for z in 0..d {
        for i in 0..n {
            for j in 0..n {
                out.push(data[(z * n + j) * n + (n - 1 - i)]);
            }
        }
    }
    out
}

/// Applies one jointly sampled transform to an image and its optional mask.
pub fn augment(
    image: &[f32],
    mask: Option<&[u8]>,
    extents: &Extents,
    rng: &mut impl Rng,
) -> (Vec<f32>, Option<Vec<u8>>, Transform) {
    let t = Transform::sample(rng, extents);
    let img = t.apply(image, extents);
    let m = mask.map(|m| t.apply(m, extents));
    (img, m, t)
}
