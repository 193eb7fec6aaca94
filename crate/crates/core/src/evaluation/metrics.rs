use serde::{Deserialize, Serialize};

use crate::geometry::{surface_distances, LabelMask};
use crate::{Error, Result};

/// Voxel counts behind the overlap metrics.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OverlapCounts {
    pub intersection: usize,
    pub a: usize,
    pub b: usize,
}

impl OverlapCounts {
    pub fn of(a: &[bool], b: &[bool]) -> Self {
        assert_eq!(a.len(), b.len(), "masks must have equal length");
        let mut c = OverlapCounts {
            intersection: 0,
            a: 0,
            b: 0,
        };
        for (&x, &y) in a.iter().zip(b) {
            c.a += usize::from(x);
            c.b += usize::from(y);
            c.intersection += usize::from(x && y);
        }
        c
    }

    pub fn union(&self) -> usize {
        self.a + self.b - self.intersection
    }

    /// `2|A n B| / (|A| + |B|)`; 1 when both are empty.
    pub fn dice(&self) -> f64 {
        if self.a + self.b == 0 {
            1.0
        } else {
            2.0 * self.intersection as f64 / (self.a + self.b) as f64
        }
    }

    /// `|A n B| / |A u B|`; 1 when both are empty.
    pub fn jaccard(&self) -> f64 {
        if self.union() == 0 {
            1.0
        } else {
            self.intersection as f64 / self.union() as f64
        }
    }
}

fn same_grid(a: &LabelMask, b: &LabelMask) -> Result<()> {
    if a.extents() != b.extents() {
        return Err(Error::InvalidInput(format!(
            "mask extents differ: {} vs {}",
            a.extents(),
            b.extents()
        )));
    }
    Ok(())
}

pub fn dice(a: &LabelMask, b: &LabelMask, foreground: u8) -> Result<f64> {
    same_grid(a, b)?;
    Ok(OverlapCounts::of(&a.foreground(foreground), &b.foreground(foreground)).dice())
}

pub fn jaccard(a: &LabelMask, b: &LabelMask, foreground: u8) -> Result<f64> {
    same_grid(a, b)?;
    Ok(OverlapCounts::of(&a.foreground(foreground), &b.foreground(foreground)).jaccard())
}

/// Percentile `q` in `[0, 100]` with linear interpolation between order
/// statistics at rank `q / 100 * (n - 1)`.
pub fn percentile_linear(values: &[f64], q: f64) -> f64 {
    assert!(!values.is_empty(), "percentile of an empty set");
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = q / 100.0 * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let frac = rank - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Mean of the pooled two-directional surface distances.
pub fn asd(a: &LabelMask, b: &LabelMask, foreground: u8) -> Result<f64> {
    let pooled = surface_distances(a, b, foreground)?.pooled();
    Ok(pooled.iter().sum::<f64>() / pooled.len() as f64)
}

/// 95th percentile of the pooled two-directional surface distances.
pub fn hd95(a: &LabelMask, b: &LabelMask, foreground: u8) -> Result<f64> {
    Ok(percentile_linear(&surface_distances(a, b, foreground)?.pooled(), 95.0))
}

/// Metrics of one case. Surface metrics are `None` when either mask is empty.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseMetrics {
    pub case_id: String,
    pub dice: f64,
    pub jaccard: f64,
    pub asd: Option<f64>,
    pub hd95: Option<f64>,
}

pub fn case_metrics(case_id: &str, pred: &LabelMask, truth: &LabelMask, foreground: u8) -> Result<CaseMetrics> {
    same_grid(pred, truth)?;
    let counts = OverlapCounts::of(&pred.foreground(foreground), &truth.foreground(foreground));
    let (asd, hd95) = match surface_distances(pred, truth, foreground) {
        Ok(set) => {
            let pooled = set.pooled();
            (
                Some(pooled.iter().sum::<f64>() / pooled.len() as f64),
                Some(percentile_linear(&pooled, 95.0)),
            )
        }
        Err(Error::UndefinedSurface(why)) => {
            log::warn!("case {case_id}: surface metrics undefined ({why}); excluded from aggregates");
            (None, None)
        }
        Err(e) => return Err(e),
    };
    Ok(CaseMetrics {
        case_id: case_id.to_string(),
        dice: counts.dice(),
        jaccard: counts.jaccard(),
        asd,
        hd95,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Extents;

    fn mask(n: usize, on: &[usize]) -> LabelMask {
        let fg: Vec<bool> = (0..n * n).map(|i| on.contains(&i)).collect();
        LabelMask::from_bools(&fg, Extents::d2(n, n)).unwrap()
    }

    fn square(n: usize, y0: usize, x0: usize, s: usize) -> LabelMask {
        let on: Vec<usize> = (0..n * n)
            .filter(|i| (y0..y0 + s).contains(&(i / n)) && (x0..x0 + s).contains(&(i % n)))
            .collect();
        mask(n, &on)
    }

    #[test]
    fn overlap_examples() {
        let a = mask(4, &[0, 1, 2, 3]);
        assert_eq!(dice(&a, &a, 1).unwrap(), 1.0);
        assert_eq!(jaccard(&a, &a, 1).unwrap(), 1.0);
        let b = mask(4, &[8, 9]);
        assert_eq!(dice(&a, &b, 1).unwrap(), 0.0);
        assert_eq!(jaccard(&a, &b, 1).unwrap(), 0.0);
        let c = mask(4, &[2, 3, 4, 5]);
        assert_eq!(dice(&a, &c, 1).unwrap(), 0.5);
        assert!((jaccard(&a, &c, 1).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        let e = mask(4, &[]);
        assert_eq!(dice(&e, &e, 1).unwrap(), 1.0);
        assert_eq!(jaccard(&e, &e, 1).unwrap(), 1.0);
    }

    #[test]
    fn percentile_matches_linear_rule() {
        let v = [4.0, 1.0, 3.0, 2.0, 5.0];
        assert_eq!(percentile_linear(&v, 0.0), 1.0);
        assert_eq!(percentile_linear(&v, 100.0), 5.0);
        assert_eq!(percentile_linear(&v, 50.0), 3.0);
        assert!((percentile_linear(&v, 95.0) - 4.8).abs() < 1e-12);
        assert_eq!(percentile_linear(&[7.0], 95.0), 7.0);
    }

    #[test]
    fn surface_examples() {
        let a = square(12, 3, 3, 5);
        assert_eq!(asd(&a, &a, 1).unwrap(), 0.0);
        assert_eq!(hd95(&a, &a, 1).unwrap(), 0.0);
        let b = square(12, 3, 4, 5);
        assert_eq!(hd95(&a, &b, 1).unwrap(), 1.0);
        assert_eq!(hd95(&b, &a, 1).unwrap(), 1.0);
        assert_eq!(asd(&a, &b, 1).unwrap(), asd(&b, &a, 1).unwrap());
    }

    #[test]
    fn empty_prediction_gives_sentinel() {
        let truth = square(8, 2, 2, 3);
        let m = case_metrics("x", &mask(8, &[]), &truth, 1).unwrap();
        assert_eq!(m.dice, 0.0);
        assert!(m.asd.is_none() && m.hd95.is_none());
    }
}
