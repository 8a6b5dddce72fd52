//! Batch runs over a directory of frames.
//!
//! Frames are processed independently on a rayon pool and results are
//! written afterwards in input order, so every output file is byte-identical
//! for any number of workers.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use erel_core::geometry::{ellipse_mask, rasterize_ellipse};
use erel_core::metrics::{hausdorff, jaccard, score_structure};
use erel_core::phantom::GROUND_TRUTH_POINTS;
use erel_core::pipeline::region_ellipse;
use erel_core::preprocess::ArtifactModel;
use erel_core::{segment_frame, Contour, Frame, Mask, Segmentation, Sequence};
use log::warn;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::Tunables;
use crate::contour_io::{format_contour, load_contour};
use crate::error::{IvusError, Result};
use crate::overlay::{Overlay, GOLD_COLOR, LUMEN_COLOR, MEDIA_COLOR};
use crate::pgm::load_frame;
use crate::report::{aggregate, aggregate_csv, summary_csv, FrameRecord, FrameTrace, Scores};

/// Tags file inside the gold directory: one `frame tag` pair per line.
pub const TAGS_FILE: &str = "tags.txt";

/// Ring-down masks larger than this fraction of the frame draw a warning.
const SUSPICIOUS_MASK_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Segment; score too when gold contours are available.
    Segment,
    /// Segment and score; gold contours are required.
    Evaluate,
    /// Score every extracted region and report the best per structure.
    Bestcase,
}

#[derive(Debug, Clone)]
pub struct BatchConfig {
    pub inputs: Vec<PathBuf>,
    pub gold: Option<PathBuf>,
    pub out: PathBuf,
    pub tunables: Tunables,
    pub mode: Mode,
    pub overlays: bool,
}

/// Per-frame maximum-JM regions against the gold contours.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BestCaseRecord {
    pub frame: String,
    pub artifact: String,
    pub regions: usize,
    pub best_lumen_level: u8,
    pub best_jm_lumen: f64,
    pub best_hd_lumen_px: f64,
    pub best_media_level: u8,
    pub best_jm_media: f64,
    pub best_hd_media_px: f64,
    pub selected_jm_lumen: f64,
    pub selected_jm_media: f64,
}

#[derive(Debug, Clone, Default)]
pub struct BatchSummary {
    pub records: Vec<FrameRecord>,
    pub best: Vec<BestCaseRecord>,
    pub warnings: Vec<String>,
}

impl BatchSummary {
    pub fn failures(&self) -> usize {
        self.records.iter().filter(|r| !r.is_ok()).count()
    }

    /// 0 when every frame succeeded, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.failures() == 0 {
            0
        } else {
            2
        }
    }
}

/// Frame names and paths: directories contribute their `*.pgm` files, plain
/// paths are taken as given. Sorted by name.
pub fn collect_inputs(inputs: &[PathBuf]) -> Result<Vec<(String, PathBuf)>> {
    let mut out = Vec::new();
    for input in inputs {
        if input.is_dir() {
            let entries = fs::read_dir(input).map_err(|e| IvusError::io(input, e))?;
            for entry in entries {
                let path = entry.map_err(|e| IvusError::io(input, e))?.path();
                if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("pgm")) {
                    out.push(path);
                }
            }
        } else if input.exists() {
            out.push(input.clone());
        } else {
            return Err(IvusError::Config(format!("input {} does not exist", input.display())));
        }
    }
    let mut named: Vec<(String, PathBuf)> =
        out.into_iter().map(|p| (p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(), p)).collect();
    named.sort();
    named.dedup_by(|a, b| a.1 == b.1);
    if named.is_empty() {
        return Err(IvusError::Config("no input frames".to_string()));
    }
    Ok(named)
}

pub fn load_tags(gold: &Path) -> Result<BTreeMap<String, String>> {
    let path = gold.join(TAGS_FILE);
    if !path.exists() {
        return Ok(BTreeMap::new());
    }
    let text = fs::read_to_string(&path).map_err(|e| IvusError::io(&path, e))?;
    let mut tags = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        match (parts.next(), parts.next(), parts.next()) {
            (Some(frame), Some(tag), None) => {
                tags.insert(frame.to_string(), tag.to_string());
            }
            _ => return Err(IvusError::Parse { line: n + 1, message: format!("{}: expected `frame tag`", path.display()) }),
        }
    }
    Ok(tags)
}

pub fn gold_paths(gold: &Path, frame: &str) -> (PathBuf, PathBuf) {
    (gold.join(format!("{frame}_lumen.txt")), gold.join(format!("{frame}_media.txt")))
}

/// Artifact model from every frame sharing the first frame's size, or
/// `None` (with a warning) when fewer than two such frames exist.
fn artifact_model(frames: &[&Frame], tunables: &Tunables, warnings: &mut Vec<String>) -> Option<ArtifactModel> {
    if !tunables.ringdown || frames.is_empty() {
        return None;
    }
    let dims = frames[0].dims();
    let same: Vec<Frame> = frames.iter().filter(|f| f.dims() == dims).map(|f| (*f).clone()).collect();
    if same.len() < 2 {
        warnings.push("single frame: ring-down removal needs a sequence, applying despeckle only".to_string());
        return None;
    }
    if same.len() < frames.len() {
        warnings.push(format!("ring-down model built from the {} frames of size {}x{}; other sizes are only despeckled", same.len(), dims.0, dims.1));
    }
    let seq = Sequence::new(same).expect("non-empty, equal sizes");
    let model = ArtifactModel::from_sequence(&seq, tunables.ringdown_threshold);
    let fraction = model.mask.count() as f64 / (dims.0 * dims.1) as f64;
    if fraction > SUSPICIOUS_MASK_FRACTION {
        warnings.push(format!(
            "ring-down mask covers {:.1}% of the frame; consider a higher --ringdown-threshold or --no-ringdown",
            fraction * 100.0
        ));
    }
    Some(model)
}

struct Gold {
    lumen: Contour,
    media: Contour,
}

struct FrameOutput {
    record: FrameRecord,
    trace: Option<Vec<u8>>,
    contours: Option<(String, String)>,
    overlay: Option<Vec<u8>>,
    best: Option<BestCaseRecord>,
}

fn best_case(name: &str, artifact: &str, seg: &Segmentation, gold: &Gold, dims: (usize, usize)) -> Result<BestCaseRecord> {
    let (w, h) = dims;
    let lumen_mask = gold.lumen.fill_mask(w, h);
    let media_mask = gold.media.fill_mask(w, h);
    let mut best_l = (f64::NEG_INFINITY, 0usize);
    let mut best_m = (f64::NEG_INFINITY, 0usize);
    let mut ellipses = Vec::with_capacity(seg.extracted.len());
    for (i, r) in seg.extracted.regions.iter().enumerate() {
        let Ok(e) = region_ellipse(r) else {
            ellipses.push(None);
            continue;
        };
        let m = ellipse_mask(&e, w, h);
        let jl = jaccard(&m, &lumen_mask).unwrap_or(0.0);
        let jm = jaccard(&m, &media_mask).unwrap_or(0.0);
        if jl > best_l.0 {
            best_l = (jl, i);
        }
        if jm > best_m.0 {
            best_m = (jm, i);
        }
        ellipses.push(Some(e));
    }
    if !best_l.0.is_finite() {
        return Err(erel_core::Error::DegenerateRegion.into());
    }
    let contour = |i: usize| rasterize_ellipse(&ellipses[i].expect("scored regions have ellipses"), GROUND_TRUTH_POINTS);
    let selected = |e: &erel_core::geometry::Ellipse, mask: &Mask| jaccard(&ellipse_mask(e, w, h), mask).unwrap_or(0.0);
    Ok(BestCaseRecord {
        frame: name.to_string(),
        artifact: artifact.to_string(),
        regions: seg.extracted.len(),
        best_lumen_level: seg.extracted.regions[best_l.1].level,
        best_jm_lumen: best_l.0,
        best_hd_lumen_px: hausdorff(&contour(best_l.1), &gold.lumen)?,
        best_media_level: seg.extracted.regions[best_m.1].level,
        best_jm_media: best_m.0,
        best_hd_media_px: hausdorff(&contour(best_m.1), &gold.media)?,
        selected_jm_lumen: selected(&seg.lumen, &lumen_mask),
        selected_jm_media: selected(&seg.media, &media_mask),
    })
}

fn process(name: &str, artifact: &str, frame: &Frame, gold: Option<&Gold>, model: Option<&ArtifactModel>, cfg: &BatchConfig) -> Result<FrameOutput> {
    let t = &cfg.tunables;
    let frame = frame.clone().with_scale(t.mm_per_px);
    let model = model.filter(|m| m.mask.dims() == frame.dims());
    let seg = segment_frame(&frame, &t.segment, model)?;
    let (w, h) = frame.dims();
    let lumen_c = rasterize_ellipse(&seg.lumen, GROUND_TRUTH_POINTS);
    let media_c = rasterize_ellipse(&seg.media, GROUND_TRUTH_POINTS);
    let mut record = FrameRecord {
        frame: name.to_string(),
        artifact: artifact.to_string(),
        status: "ok",
        error: None,
        lumen: Some((&seg.lumen).into()),
        media: Some((&seg.media).into()),
        lumen_scores: None,
        media_scores: None,
        warnings: Vec::new(),
    };
    if seg.profile.degenerate {
        record.warnings.push("degenerate selection: lumen and media are the same region".to_string());
    }
    let mut best = None;
    if let Some(g) = gold {
        let lumen_mask = ellipse_mask(&seg.lumen, w, h);
        let media_mask = ellipse_mask(&seg.media, w, h);
        record.lumen_scores = Some(Scores::from(score_structure(&lumen_mask, &lumen_c, &g.lumen, frame.mm_per_px)?));
        record.media_scores = Some(Scores::from(score_structure(&media_mask, &media_c, &g.media, frame.mm_per_px)?));
        if cfg.mode == Mode::Bestcase {
            best = Some(best_case(name, artifact, &seg, g, (w, h))?);
        }
    }
    let trace = if t.trace { Some(serde_json::to_vec_pretty(&FrameTrace::new(name, &seg))?) } else { None };
    let overlay = cfg.overlays.then(|| {
        let mut o = Overlay::new(&frame);
        if let Some(g) = gold {
            o.draw(&g.lumen, GOLD_COLOR, true);
            o.draw(&g.media, GOLD_COLOR, true);
        }
        o.draw(&lumen_c, LUMEN_COLOR, false);
        o.draw(&media_c, MEDIA_COLOR, false);
        o.to_ppm()
    });
    Ok(FrameOutput { record, trace, contours: Some((format_contour(&lumen_c), format_contour(&media_c))), overlay, best })
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| IvusError::io(path, e))
}

pub fn run_batch(cfg: &BatchConfig) -> Result<BatchSummary> {
    cfg.tunables.validate()?;
    if cfg.mode != Mode::Segment && cfg.gold.is_none() {
        return Err(IvusError::Config("gold contours are required for this mode".to_string()));
    }
    let inputs = collect_inputs(&cfg.inputs)?;
    let tags = match &cfg.gold {
        Some(g) => load_tags(g)?,
        None => BTreeMap::new(),
    };
    fs::create_dir_all(&cfg.out).map_err(|e| IvusError::io(&cfg.out, e))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.tunables.jobs)
        .build()
        .map_err(|e| IvusError::Config(format!("thread pool: {e}")))?;

    let loaded: Vec<Result<Frame>> = pool.install(|| inputs.par_iter().map(|(_, p)| load_frame(p)).collect());
    let mut summary = BatchSummary::default();
    let good: Vec<&Frame> = loaded.iter().filter_map(|r| r.as_ref().ok()).collect();
    let model = artifact_model(&good, &cfg.tunables, &mut summary.warnings);
    for w in &summary.warnings {
        warn!("{w}");
    }

    let outputs: Vec<FrameOutput> = pool.install(|| {
        inputs
            .par_iter()
            .zip(loaded.par_iter())
            .map(|((name, _), frame)| {
                let artifact = tags.get(name).map(String::as_str).unwrap_or("none");
                let result = frame.as_ref().map_err(|e| (e.code(), e.to_string())).and_then(|f| {
                    let gold = match &cfg.gold {
                        Some(dir) => {
                            let (l, m) = gold_paths(dir, name);
                            match (load_contour(&l), load_contour(&m)) {
                                (Ok(lumen), Ok(media)) => Some(Gold { lumen, media }),
                                (Err(e), _) | (_, Err(e)) if cfg.mode != Mode::Segment => return Err((e.code(), e.to_string())),
                                _ => None,
                            }
                        }
                        None => None,
                    };
                    process(name, artifact, f, gold.as_ref(), model.as_ref(), cfg).map_err(|e| (e.code(), e.to_string()))
                });
                result.unwrap_or_else(|(code, message)| FrameOutput {
                    record: FrameRecord::failed(name, artifact, code, message),
                    trace: None,
                    contours: None,
                    overlay: None,
                    best: None,
                })
            })
            .collect()
    });

    for out in outputs {
        let name = &out.record.frame;
        if let Some((l, m)) = &out.contours {
            write(&cfg.out.join(format!("{name}_lumen.txt")), l.as_bytes())?;
            write(&cfg.out.join(format!("{name}_media.txt")), m.as_bytes())?;
        }
        if let Some(o) = &out.overlay {
            write(&cfg.out.join(format!("{name}_overlay.ppm")), o)?;
        }
        if let Some(t) = &out.trace {
            write(&cfg.out.join(format!("{name}_trace.json")), t)?;
        }
        if let Some(e) = &out.record.error {
            warn!("{name}: {}", e.message);
        }
        summary.best.extend(out.best);
        summary.records.push(out.record);
    }
    write(&cfg.out.join("summary.csv"), &summary_csv(&summary.records)?)?;
    if summary.records.iter().any(|r| r.lumen_scores.is_some()) {
        write(&cfg.out.join("aggregate.csv"), &aggregate_csv(&aggregate(&summary.records))?)?;
    }
    write(&cfg.out.join("report.json"), &serde_json::to_vec_pretty(&summary.records)?)?;
    if cfg.mode == Mode::Bestcase {
        let mut w = csv::Writer::from_writer(Vec::new());
        for b in &summary.best {
            w.serialize(b)?;
        }
        write(&cfg.out.join("bestcase.csv"), &w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?)?;
    }
    Ok(summary)
}
