use serde::{Deserialize, Serialize};

use crate::{Error, Extents, Result};

/// Dense scalar image grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Volume {
    pub id: String,
    extents: Extents,
    spacing: Vec<f64>,
    data: Vec<f32>,
}

impl Volume {
    pub fn new(id: impl Into<String>, data: Vec<f32>, extents: Extents) -> Result<Self> {
        if data.len() != extents.len() {
            return Err(Error::InvalidInput(format!(
                "volume has {} values but extents {extents} hold {}",
                data.len(),
                extents.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("volume contains non-finite values".into()));
        }
        let spacing = vec![1.0; extents.ndim()];
        Ok(Self {
            id: id.into(),
            extents,
            spacing,
            data,
        })
    }

    pub fn with_spacing(mut self, spacing: Vec<f64>) -> Result<Self> {
        if spacing.len() != self.extents.ndim() || spacing.iter().any(|&s| !(s > 0.0)) {
            return Err(Error::InvalidInput(format!(
                "spacing {spacing:?} does not fit extents {}",
                self.extents
            )));
        }
        self.spacing = spacing;
        Ok(self)
    }

    pub fn extents(&self) -> &Extents {
        &self.extents
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    /// Zero-mean, unit-variance copy. Constant volumes are only centered.
    pub fn normalized(&self) -> Volume {
        let n = self.data.len() as f64;
        let mean = self.data.iter().map(|&v| v as f64).sum::<f64>() / n;
        let var = self
            .data
            .iter()
            .map(|&v| (v as f64 - mean).powi(2))
            .sum::<f64>()
            / n;
        let scale = if var > 0.0 { 1.0 / var.sqrt() } else { 1.0 };
        Volume {
            id: self.id.clone(),
            extents: self.extents.clone(),
            spacing: self.spacing.clone(),
            data: self
                .data
                .iter()
                .map(|&v| ((v as f64 - mean) * scale) as f32)
                .collect(),
        }
    }
}
