//! Convolution layers with hand-written backward passes (im2col + GEMM).

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::params::{ParamId, ParamLayout, Params};
use super::{Real, Tensor};

fn spatial_len(s: [usize; 3]) -> usize {
    s.iter().product()
}

/// Strided, zero-padded convolution.
#[derive(Clone, Debug)]
pub(crate) struct Conv {
    pub cin: usize,
    pub cout: usize,
    pub kernel: [usize; 3],
    pub stride: [usize; 3],
    pub pad: [usize; 3],
    pub weight: ParamId,
    pub bias: ParamId,
}

impl Conv {
    pub fn new(
        layout: &mut ParamLayout,
        name: &str,
        cin: usize,
        cout: usize,
        kernel: [usize; 3],
        stride: [usize; 3],
        pad: [usize; 3],
    ) -> Self {
        let kvol = spatial_len(kernel);
        let weight = layout.push(format!("{name}.weight"), &[cout, cin * kvol]);
        let bias = layout.push(format!("{name}.bias"), &[cout]);
        Self {
            cin,
            cout,
            kernel,
            stride,
            pad,
            weight,
            bias,
        }
    }

    fn kvol(&self) -> usize {
        spatial_len(self.kernel)
    }

    pub fn fan_in(&self) -> usize {
        self.cin * self.kvol()
    }

    pub fn init<F: Real>(&self, params: &mut Params<F>, gain: f64, rng: &mut impl Rng) {
        let std = (gain / self.fan_in() as f64).sqrt();
        let normal = Normal::new(0.0, std).expect("positive std");
        for w in params.get_mut(self.weight) {
            *w = F::lit(normal.sample(rng));
        }
        params.get_mut(self.bias).fill(F::zero());
    }

    pub fn out_spatial(&self, input: [usize; 3]) -> [usize; 3] {
        let mut out = [0; 3];
        for ax in 0..3 {
            out[ax] = (input[ax] + 2 * self.pad[ax] - self.kernel[ax]) / self.stride[ax] + 1;
        }
        out
    }

    fn is_pointwise(&self) -> bool {
        self.kernel == [1, 1, 1] && self.stride == [1, 1, 1] && self.pad == [0, 0, 0]
    }

    fn im2col<F: Real>(&self, x: &[F], ins: [usize; 3], outs: [usize; 3], col: &mut [F]) {
        let [kd, kh, kw] = self.kernel;
        let so = spatial_len(outs);
        let si = spatial_len(ins);
        for ci in 0..self.cin {
            let src = &x[ci * si..(ci + 1) * si];
            for kz in 0..kd {
                for ky in 0..kh {
                    for kx in 0..kw {
                        let row = ((ci * kd + kz) * kh + ky) * kw + kx;
                        let dst = &mut col[row * so..(row + 1) * so];
                        self.gather_row(src, ins, outs, [kz, ky, kx], dst);
                    }
                }
            }
        }
    }

    fn gather_row<F: Real>(&self, src: &[F], ins: [usize; 3], outs: [usize; 3], k: [usize; 3], dst: &mut [F]) {
        let [od, oh, ow] = outs;
        let [sd, sh, sw] = self.stride;
        let [pd, ph, pw] = self.pad;
        for oz in 0..od {
            let iz = (oz * sd + k[0]) as isize - pd as isize;
            for oy in 0..oh {
                let iy = (oy * sh + k[1]) as isize - ph as isize;
                let d = &mut dst[(oz * oh + oy) * ow..(oz * oh + oy + 1) * ow];
                if iz < 0 || iz >= ins[0] as isize || iy < 0 || iy >= ins[1] as isize {
                    d.fill(F::zero());
                    continue;
                }
                let row = &src[(iz as usize * ins[1] + iy as usize) * ins[2]..][..ins[2]];
                if sw == 1 {
                    // Valid ox satisfy 0 <= ox + kx - pw < W.
                    let lo = pw.saturating_sub(k[2]).min(ow);
                    let hi = (ins[2] + pw).saturating_sub(k[2]).min(ow).max(lo);
                    d[..lo].fill(F::zero());
                    d[hi..].fill(F::zero());
                    let start = lo + k[2] - pw;
                    d[lo..hi].copy_from_slice(&row[start..start + (hi - lo)]);
                } else {
                    for (ox, v) in d.iter_mut().enumerate() {
                        let ix = (ox * sw + k[2]) as isize - pw as isize;
                        *v = if ix >= 0 && (ix as usize) < ins[2] {
                            row[ix as usize]
                        } else {
                            F::zero()
                        };
                    }
                }
            }
        }
    }

    fn col2im<F: Real>(&self, col: &[F], ins: [usize; 3], outs: [usize; 3], dx: &mut [F]) {
        let [kd, kh, kw] = self.kernel;
        let [od, oh, ow] = outs;
        let [sd, sh, sw] = self.stride;
        let [pd, ph, pw] = self.pad;
        let so = spatial_len(outs);
        let si = spatial_len(ins);
        for ci in 0..self.cin {
            let dst = &mut dx[ci * si..(ci + 1) * si];
            for kz in 0..kd {
                for ky in 0..kh {
                    for kx in 0..kw {
                        let row = ((ci * kd + kz) * kh + ky) * kw + kx;
                        let src = &col[row * so..(row + 1) * so];
                        for oz in 0..od {
                            let iz = (oz * sd + kz) as isize - pd as isize;
                            if iz < 0 || iz >= ins[0] as isize {
                                continue;
                            }
                            for oy in 0..oh {
                                let iy = (oy * sh + ky) as isize - ph as isize;
                                if iy < 0 || iy >= ins[1] as isize {
                                    continue;
                                }
                                let base = (iz as usize * ins[1] + iy as usize) * ins[2];
                                let s = &src[(oz * oh + oy) * ow..(oz * oh + oy + 1) * ow];
                                for (ox, &v) in s.iter().enumerate() {
                                    let ix = (ox * sw + kx) as isize - pw as isize;
                                    if ix >= 0 && (ix as usize) < ins[2] {
                                        dst[base + ix as usize] += v;
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    pub fn forward<F: Real>(&self, params: &Params<F>, x: &Tensor<F>) -> Tensor<F> {
        assert_eq!(x.channels, self.cin, "conv input channels");
        let outs = self.out_spatial(x.spatial);
        let so = spatial_len(outs);
        let kk = self.cin * self.kvol();
        let w = params.get(self.weight);
        let b = params.get(self.bias);
        let mut out = Tensor::zeros(x.batch, self.cout, outs);
        let mut col = if self.is_pointwise() { Vec::new() } else { vec![F::zero(); kk * so] };
        for i in 0..x.batch {
            let o = out.sample_mut(i);
            for (co, chunk) in o.chunks_mut(so).enumerate() {
                chunk.fill(b[co]);
            }
            let rhs: &[F] = if self.is_pointwise() {
                x.sample(i)
            } else {
                self.im2col(x.sample(i), x.spatial, outs, &mut col);
                &col
            };
            F::gemm(
                self.cout,
                kk,
                so,
                F::one(),
                (w, kk as isize, 1),
                (rhs, so as isize, 1),
                F::one(),
                (o, so as isize, 1),
            );
        }
        out
    }

    /// Accumulates parameter gradients into `grads`; returns the input
    /// gradient when `need_dx` is set.
    pub fn backward<F: Real>(
        &self,
        params: &Params<F>,
        x: &Tensor<F>,
        dy: &Tensor<F>,
        grads: &mut Params<F>,
        need_dx: bool,
    ) -> Option<Tensor<F>> {
        let outs = dy.spatial;
        let so = spatial_len(outs);
        let kk = self.cin * self.kvol();
        let w = params.get(self.weight);
        let mut col = if self.is_pointwise() { Vec::new() } else { vec![F::zero(); kk * so] };
        let mut dcol = if need_dx && !self.is_pointwise() {
            vec![F::zero(); kk * so]
        } else {
            Vec::new()
        };
        let mut dx = need_dx.then(|| Tensor::zeros(x.batch, self.cin, x.spatial));
        for i in 0..x.batch {
            let dyi = dy.sample(i);
            let rhs: &[F] = if self.is_pointwise() {
                x.sample(i)
            } else {
                self.im2col(x.sample(i), x.spatial, outs, &mut col);
                &col
            };
            {
                let (dw, db) = grads.pair_mut(self.weight, self.bias);
                F::gemm(
                    self.cout,
                    so,
                    kk,
                    F::one(),
                    (dyi, so as isize, 1),
                    (rhs, 1, so as isize),
                    F::one(),
                    (dw, kk as isize, 1),
                );
                for (co, chunk) in dyi.chunks(so).enumerate() {
                    db[co] += chunk.iter().copied().sum::<F>();
                }
            }
            if let Some(dx) = dx.as_mut() {
                if self.is_pointwise() {
                    F::gemm(
                        kk,
                        self.cout,
                        so,
                        F::one(),
                        (w, 1, kk as isize),
                        (dyi, so as isize, 1),
                        F::zero(),
                        (dx.sample_mut(i), so as isize, 1),
                    );
                } else {
                    F::gemm(
                        kk,
                        self.cout,
                        so,
                        F::one(),
                        (w, 1, kk as isize),
                        (dyi, so as isize, 1),
                        F::zero(),
                        (&mut dcol, so as isize, 1),
                    );
                    self.col2im(&dcol, x.spatial, outs, dx.sample_mut(i));
                }
            }
        }
        dx
    }
}

/// Transposed convolution whose kernel equals its stride (non-overlapping
/// upsampling).
#[derive(Clone, Debug)]
pub(crate) struct UpConv {
    pub cin: usize,
    pub cout: usize,
    pub factor: [usize; 3],
    pub weight: ParamId,
    pub bias: ParamId,
}

impl UpConv {
    pub fn new(layout: &mut ParamLayout, name: &str, cin: usize, cout: usize, factor: [usize; 3]) -> Self {
        let kvol = spatial_len(factor);
        let weight = layout.push(format!("{name}.weight"), &[cin, cout * kvol]);
        let bias = layout.push(format!("{name}.bias"), &[cout]);
        Self {
            cin,
            cout,
            factor,
            weight,
            bias,
        }
    }

    pub fn init<F: Real>(&self, params: &mut Params<F>, gain: f64, rng: &mut impl Rng) {
        let std = (gain / self.cin as f64).sqrt();
        let normal = Normal::new(0.0, std).expect("positive std");
        for w in params.get_mut(self.weight) {
            *w = F::lit(normal.sample(rng));
        }
        params.get_mut(self.bias).fill(F::zero());
    }

    fn out_spatial(&self, s: [usize; 3]) -> [usize; 3] {
        [s[0] * self.factor[0], s[1] * self.factor[1], s[2] * self.factor[2]]
    }

    /// Calls `f(column_row, input_voxel, output_voxel)` for every kernel tap.
    fn for_each_tap(&self, ins: [usize; 3], mut f: impl FnMut(usize, usize, usize)) {
        let [fd, fh, fw] = self.factor;
        let outs = self.out_spatial(ins);
        let kvol = fd * fh * fw;
        for co in 0..self.cout {
            for kz in 0..fd {
                for ky in 0..fh {
                    for kx in 0..fw {
                        let row = co * kvol + (kz * fh + ky) * fw + kx;
                        let mut s = 0;
                        for z in 0..ins[0] {
                            for y in 0..ins[1] {
                                let obase = (((z * fd + kz) * outs[1] + y * fh + ky) * outs[2]) + kx;
                                for x in 0..ins[2] {
                                    f(row, s, co * spatial_len(outs) + obase + x * fw);
                                    s += 1;
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    pub fn forward<F: Real>(&self, params: &Params<F>, x: &Tensor<F>) -> Tensor<F> {
        assert_eq!(x.channels, self.cin, "up-conv input channels");
        let si = x.voxels();
        let outs = self.out_spatial(x.spatial);
        let rows = self.cout * spatial_len(self.factor);
        let w = params.get(self.weight);
        let b = params.get(self.bias);
        let so = spatial_len(outs);
        let mut out = Tensor::zeros(x.batch, self.cout, outs);
        let mut cols = vec![F::zero(); rows * si];
        for i in 0..x.batch {
            F::gemm(
                rows,
                self.cin,
                si,
                F::one(),
                (w, 1, rows as isize),
                (x.sample(i), si as isize, 1),
                F::zero(),
                (&mut cols, si as isize, 1),
            );
            let o = out.sample_mut(i);
            let kvol = spatial_len(self.factor);
            self.for_each_tap(x.spatial, |row, s, dst| {
                o[dst] = cols[row * si + s] + b[row / kvol];
            });
            debug_assert_eq!(o.len(), self.cout * so);
        }
        out
    }

    pub fn backward<F: Real>(
        &self,
        params: &Params<F>,
        x: &Tensor<F>,
        dy: &Tensor<F>,
        grads: &mut Params<F>,
    ) -> Tensor<F> {
        let si = x.voxels();
        let rows = self.cout * spatial_len(self.factor);
        let so = dy.voxels();
        let w = params.get(self.weight);
        let mut dcols = vec![F::zero(); rows * si];
        let mut dx = Tensor::zeros(x.batch, self.cin, x.spatial);
        for i in 0..x.batch {
            let dyi = dy.sample(i);
            self.for_each_tap(x.spatial, |row, s, src| {
                dcols[row * si + s] = dyi[src];
            });
            let (dw, db) = grads.pair_mut(self.weight, self.bias);
            F::gemm(
                self.cin,
                si,
                rows,
                F::one(),
                (x.sample(i), si as isize, 1),
                (&dcols, 1, si as isize),
                F::one(),
                (dw, rows as isize, 1),
            );
            for (co, chunk) in dyi.chunks(so).enumerate() {
                db[co] += chunk.iter().copied().sum::<F>();
            }
            F::gemm(
                self.cin,
                rows,
                si,
                F::one(),
                (w, rows as isize, 1),
                (&dcols, si as isize, 1),
                F::zero(),
                (dx.sample_mut(i), si as isize, 1),
            );
        }
        dx
    }
}
