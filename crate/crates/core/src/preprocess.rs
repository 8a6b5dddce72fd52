//! Ring-down and calibration-square removal via the sequence minimum image.
//!
//! Both artifacts are bright and present at the same place in every frame of a
//! pullback, so they survive a pixel-wise minimum while tissue speckle does not.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::imaging::{Frame, Mask, Sequence};
use crate::stats::histogram_lower_median;

/// Default minimum-image threshold on the 8-bit scale.
pub const DEFAULT_RINGDOWN_THRESHOLD: u8 = 40;

const FILL_MIN_SAMPLES: usize = 5;
const FILL_START_RADIUS: usize = 3;
const FILL_MAX_RADIUS: usize = 7;

/// Where the artifacts are, and the minimum image they were found in.
#[derive(Debug, Clone, PartialEq)]
pub struct ArtifactModel {
    pub min_image: Frame,
    pub mask: Mask,
    pub threshold: u8,
}

impl ArtifactModel {
    /// Minimum image, then thresholding, in one step.
    pub fn from_sequence(seq: &Sequence, threshold: u8) -> Self {
        let min_image = minimum_image(seq);
        let mask = detect_artifact_mask(&min_image, threshold);
        ArtifactModel { min_image, mask, threshold }
    }
}

/// Pixel-wise minimum over all frames of the sequence.
pub fn minimum_image(seq: &Sequence) -> Frame {
    let mut frames = seq.frames().iter();
    let mut out = frames.next().expect("sequence is non-empty").clone();
    for f in frames {
        for (o, &v) in out.pixels_mut().iter_mut().zip(f.pixels()) {
            *o = (*o).min(v);
        }
    }
    out.mm_per_px = None;
    out
}

/// Pixels whose minimum-image intensity is at least `threshold`.
pub fn detect_artifact_mask(min_image: &Frame, threshold: u8) -> Mask {
    let (w, h) = min_image.dims();
    let bits = min_image.pixels().iter().map(|&v| v >= threshold).collect();
    Mask::from_bits(w, h, bits).expect("dimensions come from the frame")
}

/// Replaces every masked pixel with the median of nearby unmasked pixels.
///
/// The window starts at 7×7 and grows by two pixels per side up to 15×15
/// until it holds at least five unmasked samples; otherwise the frame's
/// global unmasked median is used. Unmasked pixels are never touched.
pub fn remove_artifacts(frame: &Frame, model: &ArtifactModel) -> Result<Frame> {
    let mask = &model.mask;
    if mask.dims() != frame.dims() {
        return Err(Error::DimensionMismatch { expected: frame.dims(), found: mask.dims() });
    }
    if mask.is_none() {
        return Ok(frame.clone());
    }
    if mask.is_all() {
        return Err(Error::DegenerateMask);
    }
    let (w, h) = frame.dims();
    let global = {
        let mut hist = [0u32; 256];
        let mut n = 0;
        for (&v, &m) in frame.pixels().iter().zip(mask.bits()) {
            if !m {
                hist[v as usize] += 1;
                n += 1;
            }
        }
        histogram_lower_median(&hist, n)
    };
    let mut out = frame.clone();
    let mut samples: Vec<u8> = Vec::with_capacity((2 * FILL_MAX_RADIUS + 1).pow(2));
    for (x, y) in mask.iter_set() {
        let mut value = global;
        let mut radius = FILL_START_RADIUS;
        while radius <= FILL_MAX_RADIUS {
            samples.clear();
            for yy in y.saturating_sub(radius)..=(y + radius).min(h - 1) {
                for xx in x.saturating_sub(radius)..=(x + radius).min(w - 1) {
                    if !mask.get(xx, yy) {
                        samples.push(frame.get(xx, yy));
                    }
                }
            }
            if samples.len() >= FILL_MIN_SAMPLES {
                samples.sort_unstable();
                value = samples[(samples.len() - 1) / 2];
                break;
            }
            radius += 2;
        }
        out.set(x, y, value);
    }
    Ok(out)
}
