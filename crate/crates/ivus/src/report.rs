//! Per-frame records, JSON traces, CSV summaries and aggregates.

use std::collections::BTreeMap;

use erel_core::geometry::Ellipse;
use erel_core::metrics::{mean_std, StructureScores};
use erel_core::Segmentation;
use serde::Serialize;

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EllipseRecord {
    pub cx: f64,
    pub cy: f64,
    pub a: f64,
    pub b: f64,
    pub theta: f64,
}

impl From<&Ellipse> for EllipseRecord {
    fn from(e: &Ellipse) -> Self {
        EllipseRecord { cx: e.center.x, cy: e.center.y, a: e.a, b: e.b, theta: e.theta }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Scores {
    pub jm: f64,
    pub hd_px: f64,
    pub hd_mm: Option<f64>,
    pub pad: f64,
}

impl From<StructureScores> for Scores {
    fn from(s: StructureScores) -> Self {
        Scores { jm: s.jm, hd_px: s.hd_px, hd_mm: s.hd_mm, pad: s.pad }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorRecord {
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionRecord {
    pub level: u8,
    pub area: usize,
    pub boundary_length: usize,
    pub mean_intensity: f64,
    pub entropy: f64,
    pub edge_support: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeakRecord {
    pub index: usize,
    pub prominence: f64,
}

/// The selection decision record of one frame.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameTrace {
    pub frame: String,
    pub chain: usize,
    pub area_filtered: usize,
    pub extremum_levels: usize,
    pub after_outliers: usize,
    pub regions: Vec<RegionRecord>,
    /// Indices into `regions` kept by outlier removal.
    pub kept: Vec<usize>,
    pub v: Vec<f64>,
    pub omega: Vec<f64>,
    pub peaks: Vec<PeakRecord>,
    /// Indices into `kept`.
    pub lumen_index: usize,
    pub media_index: usize,
    pub lumen_level: u8,
    pub media_level: u8,
    pub degenerate: bool,
}

impl FrameTrace {
    pub fn new(frame: &str, seg: &Segmentation) -> Self {
        let p = &seg.profile;
        FrameTrace {
            frame: frame.to_string(),
            chain: seg.counts.chain,
            area_filtered: seg.counts.area_filtered,
            extremum_levels: seg.counts.extremum_levels,
            after_outliers: seg.counts.after_outliers,
            regions: seg
                .extracted
                .regions
                .iter()
                .map(|r| RegionRecord {
                    level: r.level,
                    area: r.area,
                    boundary_length: r.boundary_length,
                    mean_intensity: r.mean_intensity,
                    entropy: r.entropy,
                    edge_support: r.edge_support,
                })
                .collect(),
            kept: seg.kept.clone(),
            v: p.v.clone(),
            omega: p.omega.clone(),
            peaks: p.peaks.iter().map(|k| PeakRecord { index: k.index, prominence: k.prominence }).collect(),
            lumen_index: p.lumen_index,
            media_index: p.media_index,
            lumen_level: seg.lumen_region.level,
            media_level: seg.media_region.level,
            degenerate: p.degenerate,
        }
    }
}

/// Outcome of one frame in a batch.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameRecord {
    pub frame: String,
    pub artifact: String,
    pub status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorRecord>,
    pub lumen: Option<EllipseRecord>,
    pub media: Option<EllipseRecord>,
    pub lumen_scores: Option<Scores>,
    pub media_scores: Option<Scores>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl FrameRecord {
    pub fn failed(frame: &str, artifact: &str, code: &str, message: String) -> Self {
        FrameRecord {
            frame: frame.to_string(),
            artifact: artifact.to_string(),
            status: "error",
            error: Some(ErrorRecord { code: code.to_string(), message }),
            lumen: None,
            media: None,
            lumen_scores: None,
            media_scores: None,
            warnings: Vec::new(),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

pub const SUMMARY_HEADER: [&str; 11] =
    ["frame", "artifact", "jm_lumen", "hd_lumen_px", "hd_lumen_mm", "pad_lumen", "jm_media", "hd_media_px", "hd_media_mm", "pad_media", "status"];

/// One row per frame; metric cells stay empty without gold contours.
pub fn summary_csv(records: &[FrameRecord]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SUMMARY_HEADER)?;
    for r in records {
        let mut row = vec![r.frame.clone(), r.artifact.clone()];
        for s in [r.lumen_scores, r.media_scores] {
            row.push(cell(s.map(|s| s.jm)));
            row.push(cell(s.map(|s| s.hd_px)));
            row.push(cell(s.and_then(|s| s.hd_mm)));
            row.push(cell(s.map(|s| s.pad)));
        }
        row.push(r.error.as_ref().map(|e| e.code.clone()).unwrap_or_else(|| "ok".to_string()));
        w.write_record(&row)?;
    }
    Ok(w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?)
}

type Metric = (&'static str, fn(&FrameRecord) -> Option<f64>);

const METRICS: [Metric; 8] = [
    ("jm_lumen", |r| r.lumen_scores.map(|s| s.jm)),
    ("hd_lumen_px", |r| r.lumen_scores.map(|s| s.hd_px)),
    ("hd_lumen_mm", |r| r.lumen_scores.and_then(|s| s.hd_mm)),
    ("pad_lumen", |r| r.lumen_scores.map(|s| s.pad)),
    ("jm_media", |r| r.media_scores.map(|s| s.jm)),
    ("hd_media_px", |r| r.media_scores.map(|s| s.hd_px)),
    ("hd_media_mm", |r| r.media_scores.and_then(|s| s.hd_mm)),
    ("pad_media", |r| r.media_scores.map(|s| s.pad)),
];

/// Mean and sample standard deviation of one metric for one category.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateRow {
    pub artifact: String,
    pub metric: &'static str,
    pub n: usize,
    pub mean: f64,
    pub std: f64,
}

/// Per artifact category (sorted) and then `all`; metrics with no values are
/// omitted.
pub fn aggregate(records: &[FrameRecord]) -> Vec<AggregateRow> {
    let mut groups: BTreeMap<&str, Vec<&FrameRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(r.artifact.as_str()).or_default().push(r);
    }
    let all: Vec<&FrameRecord> = records.iter().collect();
    let mut out = Vec::new();
    for (name, members) in groups.iter().map(|(k, v)| (*k, v)).chain(std::iter::once(("all", &all))) {
        for (metric, get) in METRICS {
            let values: Vec<f64> = members.iter().filter_map(|r| get(r)).collect();
            if let Some((mean, std)) = mean_std(&values) {
                out.push(AggregateRow { artifact: name.to_string(), metric, n: values.len(), mean, std });
            }
        }
    }
    out
}

pub fn aggregate_csv(rows: &[AggregateRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["artifact", "metric", "n", "mean", "std"])?;
    for r in rows {
        w.write_record([r.artifact.clone(), r.metric.to_string(), r.n.to_string(), format!("{:.6}", r.mean), format!("{:.6}", r.std)])?;
    }
    Ok(w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?)
}
