//! The four-stage per-frame pipeline.

use alloc::vec::Vec;

use crate::erel::{extract_qplus, ErelParams, Region, RegionSeries};
use crate::error::{Error, Result};
use crate::geometry::{ellipse_from_moments, Ellipse};
use crate::imaging::{frame_center, median_filter, Frame};
use crate::preprocess::{remove_artifacts, ArtifactModel};
use crate::selection::{select, SelectionParams, StabilityProfile};
use crate::tree::ComponentTree;

pub const DEFAULT_DESPECKLE_RADIUS: usize = 1;

/// Every per-frame tunable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentParams {
    pub despeckle_radius: usize,
    pub alpha: f64,
    pub beta: usize,
    pub amin_frac: f64,
    pub amax_frac: f64,
    /// Seed pixel; the frame center when `None`.
    pub seed: Option<(usize, usize)>,
    pub selection: SelectionParams,
}

impl Default for SegmentParams {
    fn default() -> Self {
        SegmentParams {
            despeckle_radius: DEFAULT_DESPECKLE_RADIUS,
            alpha: ErelParams::DEFAULT_ALPHA,
            beta: ErelParams::DEFAULT_BETA,
            amin_frac: ErelParams::DEFAULT_AMIN_FRAC,
            amax_frac: ErelParams::DEFAULT_AMAX_FRAC,
            seed: None,
            selection: SelectionParams::default(),
        }
    }
}

impl SegmentParams {
    pub fn validate(&self) -> Result<()> {
        if self.despeckle_radius == 0 {
            return Err(Error::InvalidParameter("despeckle radius must be >= 1"));
        }
        if !(self.amin_frac > 0.0 && self.amin_frac < self.amax_frac && self.amax_frac <= 1.0) {
            return Err(Error::InvalidParameter("area fractions must satisfy 0 < amin < amax <= 1"));
        }
        self.selection.validate()?;
        // Range checks on alpha and beta are shared with ErelParams.
        ErelParams { alpha: self.alpha, beta: self.beta, a_min: 1, a_max: 2 }.validate(2)
    }

    pub fn erel(&self, width: usize, height: usize) -> Result<ErelParams> {
        ErelParams::for_frame(width, height, self.alpha, self.beta, self.amin_frac, self.amax_frac)
    }
}

/// Region counts after each stage, never increasing past extraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StageCounts {
    pub chain: usize,
    pub area_filtered: usize,
    pub extremum_levels: usize,
    pub after_outliers: usize,
}

#[derive(Debug, Clone)]
pub struct Segmentation {
    pub lumen: Ellipse,
    pub media: Ellipse,
    pub lumen_region: Region,
    pub media_region: Region,
    pub profile: StabilityProfile,
    pub counts: StageCounts,
    /// All extracted regions before outlier removal.
    pub extracted: RegionSeries,
    /// Indices into `extracted` of the regions that survived outlier
    /// removal; the profile's indices point into this list.
    pub kept: Vec<usize>,
    /// The frame the tree was built on, after preprocessing.
    pub preprocessed: Frame,
}

pub fn region_ellipse(r: &Region) -> Result<Ellipse> {
    ellipse_from_moments(r.centroid, r.mu_xx, r.mu_xy, r.mu_yy)
}

/// Despeckle and remove artifacts.
pub fn preprocess_frame(frame: &Frame, params: &SegmentParams, artifacts: Option<&ArtifactModel>) -> Result<Frame> {
    let smooth = median_filter(frame, params.despeckle_radius)?;
    match artifacts {
        Some(model) => remove_artifacts(&smooth, model),
        None => Ok(smooth),
    }
}

/// Extracted region series of a preprocessed frame.
pub fn extract_regions(prepared: &Frame, params: &SegmentParams) -> Result<RegionSeries> {
    let erel = params.erel(prepared.width(), prepared.height())?;
    let seed = params.seed.unwrap_or_else(|| frame_center(prepared));
    let tree = ComponentTree::build(prepared);
    extract_qplus(&tree, &erel, seed, prepared)
}

/// Artifact removal, extraction, selection, then ellipse fitting.
pub fn segment_frame(frame: &Frame, params: &SegmentParams, artifacts: Option<&ArtifactModel>) -> Result<Segmentation> {
    params.validate()?;
    let prepared = preprocess_frame(frame, params, artifacts)?;
    let extracted = extract_regions(&prepared, params)?;
    let selection = select(&extracted, &params.selection)?;
    let lumen_region = selection.lumen().clone();
    let media_region = selection.media().clone();
    let lumen = region_ellipse(&lumen_region)?;
    let media = region_ellipse(&media_region)?;
    // Levels are unique within a series, so they identify survivors.
    let kept: Vec<usize> = selection
        .series
        .regions
        .iter()
        .map(|r| extracted.regions.iter().position(|e| e.level == r.level).expect("subset of extracted"))
        .collect();
    let counts = StageCounts {
        chain: extracted.counts.chain,
        area_filtered: extracted.counts.area_filtered,
        extremum_levels: extracted.len(),
        after_outliers: selection.series.len(),
    };
    Ok(Segmentation {
        lumen,
        media,
        lumen_region,
        media_region,
        profile: selection.profile,
        counts,
        extracted,
        kept,
        preprocessed: prepared,
    })
}
