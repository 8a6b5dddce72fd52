//! Lumen and media choice from the texture-stability profile of a series.

use alloc::vec::Vec;

use crate::erel::RegionSeries;
use crate::error::{Error, Result};
use crate::stats::median;

/// Stand-in for `Ω` where `V` is flat around an index.
pub const STABILITY_SENTINEL: f64 = 1.0e300;

pub const DEFAULT_Z_BOUNDS: (f64, f64) = (-3.0, 3.0);
pub const DEFAULT_MIN_PEAKS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionParams {
    pub z_min: f64,
    pub z_max: f64,
    /// With fewer peaks than this, the last region is taken as media.
    pub min_peaks: usize,
}

impl Default for SelectionParams {
    fn default() -> Self {
        SelectionParams { z_min: DEFAULT_Z_BOUNDS.0, z_max: DEFAULT_Z_BOUNDS.1, min_peaks: DEFAULT_MIN_PEAKS }
    }
}

impl SelectionParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.z_min < self.z_max) || self.z_min.is_nan() {
            return Err(Error::InvalidParameter("z bounds must satisfy z_min < z_max"));
        }
        if self.min_peaks < 1 {
            return Err(Error::InvalidParameter("min_peaks must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    /// Region index in the outlier-filtered series.
    pub index: usize,
    pub prominence: f64,
}

/// Everything the selection looked at, for tracing and debugging.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityProfile {
    pub v: Vec<f64>,
    /// `omega[k]` belongs to region `k + 1`; the endpoints have no value.
    pub omega: Vec<f64>,
    pub peaks: Vec<Peak>,
    pub lumen_index: usize,
    pub media_index: usize,
    /// Set when the series held a single region.
    pub degenerate: bool,
}

/// Modified Z-scores `0.6745 (A_i − Ã) / MAD` of the region areas; `None`
/// when the MAD vanishes.
pub fn modified_z_scores(areas: &[f64]) -> Option<Vec<f64>> {
    let med = median(areas);
    let deviations: Vec<f64> = areas.iter().map(|a| (a - med).abs()).collect();
    let mad = median(&deviations);
    if mad == 0.0 {
        return None;
    }
    Some(areas.iter().map(|a| 0.6745 * (a - med) / mad).collect())
}

/// Drops regions whose area is a modified-Z-score outlier.
pub fn remove_outliers(series: &RegionSeries, params: &SelectionParams) -> Result<RegionSeries> {
    if series.is_empty() {
        return Err(Error::EmptySeries);
    }
    let areas: Vec<f64> = series.regions.iter().map(|r| r.area as f64).collect();
    let Some(z) = modified_z_scores(&areas) else {
        return Ok(series.clone());
    };
    let keep: Vec<usize> = (0..z.len()).filter(|&i| z[i] >= params.z_min && z[i] <= params.z_max).collect();
    if keep.is_empty() {
        return Err(Error::SelectionDegenerate);
    }
    Ok(series.subset(&keep))
}

/// `V_i = L_i · E_i · H_i` over the series.
pub fn feature_vector(series: &RegionSeries) -> Vec<f64> {
    series.regions.iter().map(|r| r.boundary_length as f64 * r.mean_intensity * r.entropy).collect()
}

/// `Ω_i = V_i / (V_{i+1} − V_{i−1})` for the interior indices.
pub fn stability_scores(v: &[f64]) -> Vec<f64> {
    if v.len() < 3 {
        return Vec::new();
    }
    v.windows(3)
        .map(|w| {
            let spread = w[2] - w[0];
            if spread == 0.0 {
                STABILITY_SENTINEL
            } else {
                w[1] / spread
            }
        })
        .collect()
}

/// Local maxima of `values` with their topographic prominence.
///
/// A maximum must rise strictly above both neighbors; a flat top reports its
/// leftmost index. Prominence is the height above the higher of the two
/// lowest points reached on each side before meeting a strictly higher value
/// or the end of the vector. Indices refer to `values`.
pub fn find_peaks(values: &[f64]) -> Vec<(usize, f64)> {
    crate::erel::local_maxima(values)
        .into_iter()
        .map(|i| {
            let height = values[i];
            let mut left_min = height;
            for &v in values[..i].iter().rev() {
                if v > height {
                    break;
                }
                left_min = left_min.min(v);
            }
            let mut right_min = height;
            for &v in &values[i + 1..] {
                if v > height {
                    break;
                }
                right_min = right_min.min(v);
            }
            (i, height - left_min.max(right_min))
        })
        .collect()
}

/// Lumen and media indices from the detected peaks.
///
/// The higher-prominence of the first two peaks is the lumen (ties go to the
/// earlier). Media is the last peak when at least `min_peaks` were found and
/// the last region otherwise. Without peaks, the lumen is the region with the
/// largest stability score.
pub fn assign_lumen_media(region_count: usize, omega: &[f64], peaks: &[Peak], min_peaks: usize) -> Result<(usize, usize, bool)> {
    if region_count == 0 {
        return Err(Error::EmptySeries);
    }
    let last = region_count - 1;
    if region_count == 1 {
        return Ok((0, 0, true));
    }
    let lumen = match peaks {
        [] => omega
            .iter()
            .enumerate()
            .fold(None, |best: Option<(usize, f64)>, (k, &w)| match best {
                Some((_, bw)) if bw >= w => best,
                _ => Some((k, w)),
            })
            .map_or(0, |(k, _)| k + 1),
        [only] => only.index,
        [first, second, ..] => {
            if second.prominence > first.prominence {
                second.index
            } else {
                first.index
            }
        }
    };
    let mut media = if peaks.len() >= min_peaks { peaks[peaks.len() - 1].index } else { last };
    if media <= lumen {
        media = last;
    }
    Ok((lumen, media, false))
}

/// Outcome of the selection stage.
#[derive(Debug, Clone)]
pub struct Selection {
    /// Outlier-filtered series the indices refer to.
    pub series: RegionSeries,
    pub profile: StabilityProfile,
}

impl Selection {
    pub fn lumen(&self) -> &crate::erel::Region {
        &self.series.regions[self.profile.lumen_index]
    }

    pub fn media(&self) -> &crate::erel::Region {
        &self.series.regions[self.profile.media_index]
    }
}

/// Outlier removal, stability profile, peak search and assignment.
///
/// If outlier removal rejects every region the unfiltered series is used.
pub fn select(series: &RegionSeries, params: &SelectionParams) -> Result<Selection> {
    params.validate()?;
    let filtered = match remove_outliers(series, params) {
        Ok(s) => s,
        Err(Error::SelectionDegenerate) => series.clone(),
        Err(e) => return Err(e),
    };
    let v = feature_vector(&filtered);
    let omega = stability_scores(&v);
    let peaks: Vec<Peak> = find_peaks(&omega).into_iter().map(|(k, prominence)| Peak { index: k + 1, prominence }).collect();
    let (lumen_index, media_index, degenerate) = assign_lumen_media(filtered.len(), &omega, &peaks, params.min_peaks)?;
    Ok(Selection {
        series: filtered,
        profile: StabilityProfile { v, omega, peaks, lumen_index, media_index, degenerate },
    })
}
