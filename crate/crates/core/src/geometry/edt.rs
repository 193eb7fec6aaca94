//! Exact squared Euclidean distance transform by separable lower envelopes of
//! parabolas, one pass per axis.

use crate::Extents;

/// Squared distance from every voxel to the nearest `true` site.
///
/// `spacing` gives the physical size of each axis in [`Extents::as3`] order.
/// Voxels are `f64::INFINITY` when there are no sites at all.
pub fn squared_distance_to_sites(sites: &[bool], extents: &Extents, spacing: [f64; 3]) -> Vec<f64> {
    assert_eq!(sites.len(), extents.len());
    let mut grid: Vec<f64> = sites
        .iter()
        .map(|&s| if s { 0.0 } else { f64::INFINITY })
        .collect();
    let dims = extents.as3();
    let strides = extents.strides3();
    let longest = dims.iter().copied().max().unwrap_or(1);
    let mut scratch = Scratch::new(longest);

    for axis in (0..3).rev() {
        let n = dims[axis];
        if n == 1 {
            continue;
        }
        let s2 = spacing[axis] * spacing[axis];
        let stride = strides[axis];
        // Enumerate every line along `axis` by its starting voxel.
        for start in 0..grid.len() {
            if !(start / stride).is_multiple_of(n) {
                continue;
            }
            for q in 0..n {
                scratch.f[q] = grid[start + q * stride];
            }
            scratch.transform(n, s2);
            for q in 0..n {
                grid[start + q * stride] = scratch.d[q];
            }
        }
    }
    grid
}

struct Scratch {
    f: Vec<f64>,
    d: Vec<f64>,
    v: Vec<usize>,
    z: Vec<f64>,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Self {
            f: vec![0.0; n],
            d: vec![0.0; n],
            v: vec![0; n],
            z: vec![0.0; n + 1],
        }
    }

    fn transform(&mut self, n: usize, s2: f64) {
        let f = &self.f[..n];
        let Some(first) = f.iter().position(|x| x.is_finite()) else {
            self.d[..n].fill(f64::INFINITY);
            return;
        };
        let parabola_meet = |q: usize, p: usize| {
            let (qf, pf) = (q as f64, p as f64);
            ((f[q] + s2 * qf * qf) - (f[p] + s2 * pf * pf)) / (2.0 * s2 * (qf - pf))
        };
        let mut k = 0usize;
        self.v[0] = first;
        self.z[0] = f64::NEG_INFINITY;
        self.z[1] = f64::INFINITY;
        for q in first + 1..n {
            if !f[q].is_finite() {
                continue;
            }
            let mut s = parabola_meet(q, self.v[k]);
            while s <= self.z[k] {
                k -= 1;
                s = parabola_meet(q, self.v[k]);
            }
            k += 1;
            self.v[k] = q;
            self.z[k] = s;
            self.z[k + 1] = f64::INFINITY;
        }
        k = 0;
        for q in 0..n {
            while self.z[k + 1] < q as f64 {
                k += 1;
            }
            let p = self.v[k];
            let dq = q as f64 - p as f64;
            self.d[q] = s2 * dq * dq + f[p];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(sites: &[bool], e: &Extents, spacing: [f64; 3]) -> Vec<f64> {
        (0..sites.len())
            .map(|i| {
                let a = e.coord3(i);
                sites
                    .iter()
                    .enumerate()
                    .filter(|(_, &s)| s)
                    .map(|(j, _)| {
                        let b = e.coord3(j);
                        (0..3)
                            .map(|ax| ((a[ax] as f64 - b[ax] as f64) * spacing[ax]).powi(2))
                            .sum::<f64>()
                    })
                    .fold(f64::INFINITY, f64::min)
            })
            .collect()
    }

    #[test]
    fn matches_brute_force_with_anisotropic_spacing() {
        let e = Extents::d3(5, 6, 7);
        let sites: Vec<bool> = (0..e.len()).map(|i| (i * 37 + 11) % 23 == 0).collect();
        let spacing = [2.0, 0.5, 1.25];
        let fast = squared_distance_to_sites(&sites, &e, spacing);
        let slow = brute(&sites, &e, spacing);
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn no_sites_is_infinite() {
        let e = Extents::d2(3, 4);
        let d = squared_distance_to_sites(&[false; 12], &e, [1.0; 3]);
        assert!(d.iter().all(|v| v.is_infinite()));
    }
}
