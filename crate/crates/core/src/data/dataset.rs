use std::collections::HashSet;

use rand::seq::SliceRandom;

use super::Volume;
use crate::geometry::LabelMask;
use crate::rng::{self, purpose};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Case {
    pub image: Volume,
    pub mask: Option<LabelMask>,
}

/// Ordered cases partitioned into labeled and unlabeled id sets.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    cases: Vec<Case>,
    labeled: Vec<usize>,
    unlabeled: Vec<usize>,
}

impl Dataset {
    /// Builds a dataset with an explicit partition; labeled cases must carry masks.
    pub fn new(cases: Vec<Case>, labeled_ids: &[String]) -> Result<Self> {
        let mut seen = HashSet::new();
        for c in &cases {
            if !seen.insert(c.image.id.as_str()) {
                return Err(Error::InvalidInput(format!("duplicate case id {}", c.image.id)));
            }
            if let Some(m) = &c.mask {
                if m.extents() != c.image.extents() {
                    return Err(Error::InvalidInput(format!(
                        "case {}: mask extents {} differ from image {}",
                        c.image.id,
                        m.extents(),
                        c.image.extents()
                    )));
                }
            }
        }
        let wanted: HashSet<&str> = labeled_ids.iter().map(String::as_str).collect();
        if let Some(missing) = wanted.iter().find(|id| !seen.contains(**id)) {
            return Err(Error::InvalidInput(format!("labeled id {missing} is not a case")));
        }
        let mut labeled = Vec::new();
        let mut unlabeled = Vec::new();
        for (i, c) in cases.iter().enumerate() {
            if wanted.contains(c.image.id.as_str()) {
                if c.mask.is_none() {
                    return Err(Error::InvalidInput(format!("labeled case {} has no mask", c.image.id)));
                }
                labeled.push(i);
            } else {
                unlabeled.push(i);
            }
        }
        Ok(Self {
            cases,
            labeled,
            unlabeled,
        })
    }

    /// Every case with a mask is labeled.
    pub fn fully_labeled(cases: Vec<Case>) -> Result<Self> {
        let ids: Vec<String> = cases
            .iter()
            .filter(|c| c.mask.is_some())
            .map(|c| c.image.id.clone())
            .collect();
        Self::new(cases, &ids)
    }

    pub fn cases(&self) -> &[Case] {
        &self.cases
    }

    pub fn len(&self) -> usize {
        self.cases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cases.is_empty()
    }

    pub fn labeled_indices(&self) -> &[usize] {
        &self.labeled
    }

    pub fn unlabeled_indices(&self) -> &[usize] {
        &self.unlabeled
    }

    pub fn labeled_ids(&self) -> Vec<String> {
        self.labeled.iter().map(|&i| self.cases[i].image.id.clone()).collect()
    }

    pub fn unlabeled_ids(&self) -> Vec<String> {
        self.unlabeled.iter().map(|&i| self.cases[i].image.id.clone()).collect()
    }

    pub fn is_labeled(&self, index: usize) -> bool {
        self.labeled.binary_search(&index).is_ok()
    }

    /// Same partition with every image replaced by its normalized copy.
    pub fn normalized(&self) -> Dataset {
        Dataset {
            cases: self
                .cases
                .iter()
                .map(|c| Case {
                    image: c.image.normalized(),
                    mask: c.mask.clone(),
                })
                .collect(),
            labeled: self.labeled.clone(),
            unlabeled: self.unlabeled.clone(),
        }
    }

    /// Keeps the first `n` cases.
    pub fn truncated(&self, n: usize) -> Result<Dataset> {
        let cases = self.cases[..n.min(self.cases.len())].to_vec();
        let ids: Vec<String> = self
            .labeled_ids()
            .into_iter()
            .filter(|id| cases.iter().any(|c| &c.image.id == id))
            .collect();
        Dataset::new(cases, &ids)
    }

    /// Splits off the last `n` cases as a second, fully labeled dataset.
    pub fn hold_out(&self, n: usize) -> Result<(Dataset, Dataset)> {
        if n >= self.cases.len() {
            return Err(Error::InvalidConfig(format!(
                "cannot hold out {n} of {} cases",
                self.cases.len()
            )));
        }
        let cut = self.cases.len() - n;
        let head = self.truncated(cut)?;
        let tail = Dataset::fully_labeled(self.cases[cut..].to_vec())?;
        Ok((head, tail))
    }
}

/// Deterministic shuffled split: `round(fraction * len)` cases are labeled.
pub fn split_labeled(ds: &Dataset, fraction: f64, seed: u64) -> Result<Dataset> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidConfig(format!("labeled fraction {fraction} not in (0, 1]")));
    }
    let candidates: Vec<usize> = (0..ds.len()).filter(|&i| ds.cases[i].mask.is_some()).collect();
    let wanted = (fraction * ds.len() as f64).round() as usize;
    if wanted == 0 {
        return Err(Error::InvalidConfig(format!(
            "fraction {fraction} of {} cases leaves no labeled case",
            ds.len()
        )));
    }
    if wanted > candidates.len() {
        return Err(Error::InvalidConfig(format!(
            "{wanted} labeled cases requested but only {} have masks",
            candidates.len()
        )));
    }
    let mut order = candidates;
    order.shuffle(&mut rng::stream(seed, 0, purpose::SPLIT));
    let mut chosen = order[..wanted].to_vec();
    chosen.sort_unstable();
    let ids: Vec<String> = chosen.iter().map(|&i| ds.cases[i].image.id.clone()).collect();
    Dataset::new(ds.cases.clone(), &ids)
}
