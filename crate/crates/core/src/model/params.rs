use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::Real;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: usize,
    pub len: usize,
}

/// Names, shapes and offsets of every parameter array in one flat buffer.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamLayout {
    entries: Vec<ParamEntry>,
    total: usize,
}

/// Index of a parameter array in its layout.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ParamId(usize);

impl ParamLayout {
    pub(crate) fn push(&mut self, name: impl Into<String>, shape: &[usize]) -> ParamId {
        let len = shape.iter().product();
        self.entries.push(ParamEntry {
            name: name.into(),
            shape: shape.to_vec(),
            offset: self.total,
            len,
        });
        self.total += len;
        ParamId(self.entries.len() - 1)
    }

    pub fn entries(&self) -> &[ParamEntry] {
        &self.entries
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn entry(&self, id: ParamId) -> &ParamEntry {
        &self.entries[id.0]
    }
}

/// Flat parameter (or gradient) buffer bound to a layout.
#[derive(Clone, Debug, PartialEq)]
pub struct Params<F> {
    layout: Arc<ParamLayout>,
    data: Vec<F>,
}

impl<F: Real> Params<F> {
    pub fn zeros(layout: Arc<ParamLayout>) -> Self {
        let data = vec![F::zero(); layout.total()];
        Self { layout, data }
    }

    pub fn from_vec(layout: Arc<ParamLayout>, data: Vec<F>) -> Result<Self> {
        if data.len() != layout.total() {
            return Err(Error::InvalidState(format!(
                "parameter buffer has {} values, layout needs {}",
                data.len(),
                layout.total()
            )));
        }
        Ok(Self { layout, data })
    }

    pub fn layout(&self) -> &Arc<ParamLayout> {
        &self.layout
    }

    pub fn as_slice(&self) -> &[F] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [F] {
        &mut self.data
    }

    pub fn get(&self, id: ParamId) -> &[F] {
        let e = self.layout.entry(id);
        &self.data[e.offset..e.offset + e.len]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut [F] {
        let e = self.layout.entry(id);
        &mut self.data[e.offset..e.offset + e.len]
    }

    /// Two disjoint arrays, `first` laid out before `second`.
    pub(crate) fn pair_mut(&mut self, first: ParamId, second: ParamId) -> (&mut [F], &mut [F]) {
        let a = self.layout.entry(first).clone();
        let b = self.layout.entry(second).clone();
        assert!(a.offset + a.len <= b.offset, "parameters must be ordered and disjoint");
        let (head, tail) = self.data.split_at_mut(b.offset);
        (&mut head[a.offset..a.offset + a.len], &mut tail[..b.len])
    }

    pub fn by_name(&self, name: &str) -> Option<&[F]> {
        self.layout
            .entries()
            .iter()
            .position(|e| e.name == name)
            .map(|i| self.get(ParamId(i)))
    }

    pub fn same_layout(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.layout, &other.layout) || *self.layout == *other.layout
    }

    pub fn cast<G: Real>(&self) -> Params<G> {
        Params {
            layout: self.layout.clone(),
            data: self.data.iter().map(|v| G::lit(v.as_f64())).collect(),
        }
    }

    pub fn l2_norm(&self) -> f64 {
        self.data.iter().map(|v| v.as_f64().powi(2)).sum::<f64>().sqrt()
    }
}
