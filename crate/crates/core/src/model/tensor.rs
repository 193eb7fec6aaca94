use super::Real;

/// Dense activation tensor laid out as `[batch, channels, depth, height, width]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor<F> {
    pub batch: usize,
    pub channels: usize,
    pub spatial: [usize; 3],
    pub data: Vec<F>,
}

impl<F: Real> Tensor<F> {
    pub fn zeros(batch: usize, channels: usize, spatial: [usize; 3]) -> Self {
        let len = batch * channels * spatial.iter().product::<usize>();
        Self {
            batch,
            channels,
            spatial,
            data: vec![F::zero(); len],
        }
    }

    pub fn from_vec(batch: usize, channels: usize, spatial: [usize; 3], data: Vec<F>) -> Self {
        assert_eq!(data.len(), batch * channels * spatial.iter().product::<usize>());
        Self {
            batch,
            channels,
            spatial,
            data,
        }
    }

    pub fn voxels(&self) -> usize {
        self.spatial.iter().product()
    }

    /// Elements per batch member.
    pub fn sample_len(&self) -> usize {
        self.channels * self.voxels()
    }

    pub fn sample(&self, i: usize) -> &[F] {
        let n = self.sample_len();
        &self.data[i * n..(i + 1) * n]
    }

    pub fn sample_mut(&mut self, i: usize) -> &mut [F] {
        let n = self.sample_len();
        &mut self.data[i * n..(i + 1) * n]
    }

    pub fn channel(&self, i: usize, c: usize) -> &[F] {
        let s = self.voxels();
        let start = (i * self.channels + c) * s;
        &self.data[start..start + s]
    }

    pub fn channel_mut(&mut self, i: usize, c: usize) -> &mut [F] {
        let s = self.voxels();
        let start = (i * self.channels + c) * s;
        &mut self.data[start..start + s]
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.batch == other.batch && self.channels == other.channels && self.spatial == other.spatial
    }

    /// Members `range` as a new tensor.
    pub fn narrow(&self, range: std::ops::Range<usize>) -> Self {
        let n = self.sample_len();
        Self {
            batch: range.len(),
            channels: self.channels,
            spatial: self.spatial,
            data: self.data[range.start * n..range.end * n].to_vec(),
        }
    }

    pub fn map(&self, f: impl Fn(F) -> F) -> Self {
        Self {
            batch: self.batch,
            channels: self.channels,
            spatial: self.spatial,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn add_assign(&mut self, other: &Self) {
        assert!(self.same_shape(other));
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn cast<G: Real>(&self) -> Tensor<G> {
        Tensor {
            batch: self.batch,
            channels: self.channels,
            spatial: self.spatial,
            data: self.data.iter().map(|v| G::lit(v.as_f64())).collect(),
        }
    }

    /// Channel-wise concatenation of two tensors with matching batch and spatial extents.
    pub fn concat_channels(a: &Self, b: &Self) -> Self {
        assert_eq!(a.batch, b.batch);
        assert_eq!(a.spatial, b.spatial);
        let mut data = Vec::with_capacity(a.data.len() + b.data.len());
        for i in 0..a.batch {
            data.extend_from_slice(a.sample(i));
            data.extend_from_slice(b.sample(i));
        }
        Self {
            batch: a.batch,
            channels: a.channels + b.channels,
            spatial: a.spatial,
            data,
        }
    }

    /// Inverse of [`Tensor::concat_channels`]: the first `first` channels and the rest.
    pub fn split_channels(&self, first: usize) -> (Self, Self) {
        let s = self.voxels();
        let mut a = Vec::with_capacity(self.batch * first * s);
        let mut b = Vec::with_capacity(self.batch * (self.channels - first) * s);
        for i in 0..self.batch {
            let x = self.sample(i);
            a.extend_from_slice(&x[..first * s]);
            b.extend_from_slice(&x[first * s..]);
        }
        (
            Self::from_vec(self.batch, first, self.spatial, a),
            Self::from_vec(self.batch, self.channels - first, self.spatial, b),
        )
    }
}
