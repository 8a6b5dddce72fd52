//! Jaccard measure, Hausdorff distance and percentage of area difference.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::imaging::{Contour, Mask};

/// Contours are densified to this spacing before the Hausdorff search.
pub const HAUSDORFF_SPACING: f64 = 0.1;

pub fn jaccard(auto: &Mask, manual: &Mask) -> Result<f64> {
    if auto.dims() != manual.dims() {
        return Err(Error::DimensionMismatch { expected: manual.dims(), found: auto.dims() });
    }
    let (mut inter, mut union) = (0usize, 0usize);
    for (&a, &m) in auto.bits().iter().zip(manual.bits()) {
        inter += (a && m) as usize;
        union += (a || m) as usize;
    }
    if union == 0 {
        return Err(Error::EmptyMasks);
    }
    Ok(inter as f64 / union as f64)
}

/// Squared directed distance with early break once a point cannot raise the
/// running maximum.
fn directed(from: &[crate::imaging::Point], to: &[crate::imaging::Point]) -> f64 {
    let mut cmax = 0.0f64;
    for p in from {
        let mut cmin = f64::INFINITY;
        for q in to {
            let dx = p.x - q.x;
            let dy = p.y - q.y;
            let d = dx * dx + dy * dy;
            if d < cmin {
                cmin = d;
                if cmin <= cmax {
                    break;
                }
            }
        }
        cmax = cmax.max(cmin);
    }
    cmax
}

/// Symmetric Hausdorff distance between the point sets of two densified
/// contours.
pub fn hausdorff(c1: &Contour, c2: &Contour) -> Result<f64> {
    if c1.is_empty() || c2.is_empty() {
        return Err(Error::EmptyContour);
    }
    let a: Vec<_> = c1.densified(HAUSDORFF_SPACING).points().to_vec();
    let b: Vec<_> = c2.densified(HAUSDORFF_SPACING).points().to_vec();
    Ok(libm::sqrt(directed(&a, &b).max(directed(&b, &a))))
}

/// `|auto − manual| / manual`.
pub fn pad(auto_area: f64, manual_area: f64) -> Result<f64> {
    if !(manual_area > 0.0) {
        return Err(Error::ZeroManualArea);
    }
    Ok((auto_area - manual_area).abs() / manual_area)
}

/// Scores of one structure against its annotation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructureScores {
    pub jm: f64,
    pub hd_px: f64,
    pub hd_mm: Option<f64>,
    pub pad: f64,
}

/// JM and PAD on masks, HD on contours, all against the manual annotation.
pub fn score_structure(auto_mask: &Mask, auto_contour: &Contour, manual: &Contour, mm_per_px: Option<f64>) -> Result<StructureScores> {
    let (w, h) = auto_mask.dims();
    let manual_mask = manual.fill_mask(w, h);
    let jm = jaccard(auto_mask, &manual_mask)?;
    let hd_px = hausdorff(auto_contour, manual)?;
    let pad = pad(auto_mask.count() as f64, manual_mask.count() as f64)?;
    Ok(StructureScores { jm, hd_px, hd_mm: mm_per_px.map(|s| hd_px * s), pad })
}

/// Mean and sample standard deviation; `None` for an empty slice.
pub fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Some((mean, libm::sqrt(var)))
}
