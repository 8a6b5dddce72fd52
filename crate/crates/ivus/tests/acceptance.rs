//! Acceptance run: one PASS/FAIL/SKIP line per criterion, nonzero exit on
//! any FAIL.

use std::collections::VecDeque;
use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use erel_core::erel::entropy_bits;
use erel_core::geometry::{ellipse_from_moments, ellipse_mask, mask_moments, normalize_angle, rasterize_ellipse};
use erel_core::metrics::{hausdorff, jaccard};
use erel_core::phantom::{generate_phantom, PhantomSpec};
use erel_core::selection::{modified_z_scores, stability_scores, DEFAULT_Z_BOUNDS};
use erel_core::tree::ComponentTree;
use erel_core::{segment_frame, Contour, Ellipse, Frame, Point, SegmentParams};
use ivus::cli::{write_phantoms, PhantomArgs};
use ivus::config::Tunables;
use ivus::{run_batch, BatchConfig, Mode};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const TREE_FRAMES: usize = 200;
const TREE_MAX_SIDE: usize = 32;
const TREE_BUDGET: Duration = Duration::from_secs(30);
const HD_PAIRS: usize = 100;
const HD_MAX_POINTS: usize = 200;
const HD_TOL_PX: f64 = 0.1;
const HD_ORACLE_STEP: f64 = 0.01;
const ELLIPSES: usize = 50;
const AXIS_TOL: f64 = 0.02;
const THETA_TOL: f64 = 0.02;
const PHANTOMS: u64 = 50;
const LUMEN_JM_MIN: f64 = 0.85;
const MEDIA_JM_MIN: f64 = 0.80;
const LUMEN_HD_MAX_PX: f64 = 3.0;
const SHADOW_LUMEN_JM_MIN: f64 = 0.80;
const RUNTIME_MAX: Duration = Duration::from_secs(1);
const SCALING_MAX: f64 = 3.0;
const DATASET_LUMEN_HD_MM: f64 = 0.30;
const DATASET_LUMEN_HD_TOL: f64 = 0.15;
const DATASET_LUMEN_JM: f64 = 0.87;
const DATASET_LUMEN_JM_TOL: f64 = 0.06;
const BESTCASE_PHANTOMS: usize = 20;

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

type Criterion = fn() -> Outcome;

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Flood fill of `{I <= t}` from the seed.
fn brute_component(frame: &Frame, seed: (usize, usize), t: u8) -> Vec<bool> {
    let (w, h) = frame.dims();
    let mut seen = vec![false; w * h];
    if frame.get(seed.0, seed.1) > t {
        return seen;
    }
    let mut queue = VecDeque::from([seed]);
    seen[seed.1 * w + seed.0] = true;
    while let Some((x, y)) = queue.pop_front() {
        let mut visit = |nx: usize, ny: usize| {
            if !seen[ny * w + nx] && frame.get(nx, ny) <= t {
                seen[ny * w + nx] = true;
                queue.push_back((nx, ny));
            }
        };
        if x > 0 {
            visit(x - 1, y);
        }
        if x + 1 < w {
            visit(x + 1, y);
        }
        if y > 0 {
            visit(x, y - 1);
        }
        if y + 1 < h {
            visit(x, y + 1);
        }
    }
    seen
}

fn criterion_tree() -> Outcome {
    let mut rng = StdRng::seed_from_u64(11);
    let start = Instant::now();
    let mut mismatches = 0usize;
    let mut checked = 0usize;
    for i in 0..TREE_FRAMES {
        let (w, h) = (rng.random_range(1..=TREE_MAX_SIDE), rng.random_range(1..=TREE_MAX_SIDE));
        // Alternate full-range noise with few-level images that form plateaus.
        let levels: u16 = if i % 2 == 0 { 256 } else { rng.random_range(2..6) };
        let pixels: Vec<u8> = (0..w * h).map(|_| (rng.random_range(0..levels) * (255 / (levels - 1).max(1))) as u8).collect();
        let frame = Frame::new(w, h, pixels).unwrap();
        let seed = (rng.random_range(0..w), rng.random_range(0..h));
        let tree = ComponentTree::build(&frame);
        let chain = tree.seed_chain(seed).unwrap();
        for t in 0..=255u8 {
            let oracle = brute_component(&frame, seed, t);
            let ours: Vec<bool> = (0..w * h).map(|p| chain.contains(p % w, p / w, t)).collect();
            mismatches += (oracle != ours) as usize;
            checked += 1;
        }
        for &id in &chain.nodes {
            let node = tree.node(id);
            let oracle = brute_component(&frame, seed, node.level).iter().filter(|&&b| b).count();
            mismatches += (oracle != node.area()) as usize;
        }
    }
    let elapsed = start.elapsed();
    verdict(
        mismatches == 0 && elapsed < TREE_BUDGET,
        format!("{TREE_FRAMES} frames, {checked} thresholds, {mismatches} mismatches, {:.2} s (limit {} s)", elapsed.as_secs_f64(), TREE_BUDGET.as_secs()),
    )
}

fn point_segment(p: Point, a: Point, b: Point) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 { 0.0 } else { (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0) };
    p.distance(Point::new(a.x + t * dx, a.y + t * dy))
}

/// Directed distance from the polyline `from`, sampled every
/// `HD_ORACLE_STEP`, to the exact polyline `to`.
fn directed_exact(from: &Contour, to: &Contour) -> f64 {
    let segs: Vec<(Point, Point)> = to.segments().collect();
    let mut worst = 0.0f64;
    for (a, b) in from.segments() {
        let steps = (a.distance(b) / HD_ORACLE_STEP).ceil().max(1.0) as usize;
        for k in 0..=steps {
            let t = k as f64 / steps as f64;
            let p = Point::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y));
            let d = segs.iter().map(|&(s, e)| point_segment(p, s, e)).fold(f64::INFINITY, f64::min);
            worst = worst.max(d);
        }
    }
    worst
}

fn random_contour(rng: &mut StdRng) -> Contour {
    let n = rng.random_range(3..=HD_MAX_POINTS);
    let c = Point::new(rng.random_range(20.0..80.0), rng.random_range(20.0..80.0));
    let r0 = rng.random_range(3.0..30.0);
    let mut angles: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
    angles.sort_by(f64::total_cmp);
    let points = angles
        .iter()
        .map(|&t| {
            let r = r0 * rng.random_range(0.6..1.4);
            Point::new(c.x + r * t.cos(), c.y + r * t.sin())
        })
        .collect();
    Contour::new(points, true)
}

fn criterion_hausdorff() -> Outcome {
    let mut rng = StdRng::seed_from_u64(22);
    let mut worst = 0.0f64;
    for _ in 0..HD_PAIRS {
        let (c1, c2) = (random_contour(&mut rng), random_contour(&mut rng));
        let exact = directed_exact(&c1, &c2).max(directed_exact(&c2, &c1));
        worst = worst.max((hausdorff(&c1, &c2).unwrap() - exact).abs());
    }
    verdict(worst <= HD_TOL_PX, format!("{HD_PAIRS} pairs, max |HD - exact| = {worst:.4} px (limit {HD_TOL_PX})"))
}

fn fit(mask: &erel_core::Mask) -> Ellipse {
    let (c, xx, xy, yy, _) = mask_moments(mask).unwrap();
    ellipse_from_moments(c, xx, xy, yy).unwrap()
}

fn angle_gap(a: f64, b: f64) -> f64 {
    normalize_angle(a - b).abs().min(PI - normalize_angle(a - b).abs())
}

fn criterion_ellipse() -> Outcome {
    let mut rng = StdRng::seed_from_u64(33);
    let (mut worst_axis, mut worst_theta) = (0.0f64, 0.0f64);
    for _ in 0..ELLIPSES {
        // Area >= 1000 px² and axis ratio in [1.25, 4]; near-circles leave θ undefined.
        let b: f64 = rng.random_range(18.0..60.0);
        let a = (b * rng.random_range(1.25f64..4.0)).min(180.0);
        let theta = rng.random_range(-PI / 2.0..PI / 2.0);
        let truth = Ellipse::new(Point::new(200.0 + rng.random_range(-5.0..5.0), 200.0 + rng.random_range(-5.0..5.0)), a, b, theta).unwrap();
        assert!(truth.area() >= 1000.0);
        let first = fit(&ellipse_mask(&truth, 400, 400));
        let second = fit(&ellipse_mask(&first, 400, 400));
        for e in [&first, &second] {
            worst_axis = worst_axis.max((e.a / a - 1.0).abs()).max((e.b / b - 1.0).abs());
            worst_theta = worst_theta.max(angle_gap(e.theta, theta));
        }
        worst_axis = worst_axis.max((second.a / first.a - 1.0).abs()).max((second.b / first.b - 1.0).abs());
    }
    let r = 40.0;
    let disk = fit(&ellipse_mask(&Ellipse::new(Point::new(100.0, 100.0), r, r, 0.0).unwrap(), 200, 200));
    let disk_err = (disk.a / r - 1.0).abs().max((disk.b / r - 1.0).abs());
    verdict(
        worst_axis <= AXIS_TOL && worst_theta <= THETA_TOL && disk_err <= AXIS_TOL,
        format!("{ELLIPSES} ellipses, max axis error {:.3}%, max θ error {worst_theta:.4} rad, disk R={r} error {:.3}%", worst_axis * 100.0, disk_err * 100.0),
    )
}

struct PhantomScores {
    lumen_jm: Vec<f64>,
    media_jm: Vec<f64>,
    lumen_hd: Vec<f64>,
    failures: usize,
}

fn score_phantoms(specs: impl Iterator<Item = PhantomSpec>) -> PhantomScores {
    let params = SegmentParams::default();
    let mut s = PhantomScores { lumen_jm: Vec::new(), media_jm: Vec::new(), lumen_hd: Vec::new(), failures: 0 };
    for spec in specs {
        let (frame, gt) = generate_phantom(&spec).unwrap();
        let (w, h) = frame.dims();
        match segment_frame(&frame, &params, None) {
            Ok(seg) => {
                s.lumen_jm.push(jaccard(&ellipse_mask(&seg.lumen, w, h), &ellipse_mask(&gt.lumen, w, h)).unwrap());
                s.media_jm.push(jaccard(&ellipse_mask(&seg.media, w, h), &ellipse_mask(&gt.media, w, h)).unwrap());
                s.lumen_hd.push(hausdorff(&rasterize_ellipse(&seg.lumen, 360), &gt.lumen_contour).unwrap());
            }
            // A failed frame scores zero overlap and cannot be hidden by the mean.
            Err(_) => {
                s.failures += 1;
                s.lumen_jm.push(0.0);
                s.media_jm.push(0.0);
                s.lumen_hd.push(f64::INFINITY);
            }
        }
    }
    s
}

fn criterion_phantoms() -> Outcome {
    let clean = score_phantoms((1..=PHANTOMS).map(PhantomSpec::randomized));
    let shadow = score_phantoms((1..=PHANTOMS).map(PhantomSpec::randomized_shadow));
    let narrow = score_phantoms((1..=PHANTOMS).map(|seed| {
        let mut spec = PhantomSpec::randomized(seed);
        spec.media.a *= 0.9;
        spec.media.b *= 0.9;
        spec
    }));
    let (jl, jm, hd, sj) = (mean(&clean.lumen_jm), mean(&clean.media_jm), mean(&clean.lumen_hd), mean(&shadow.lumen_jm));
    println!(
        "  diagnostic (ungated): media axes x0.9 gives mean lumen JM {:.3}, media JM {:.3}; shadow media JM {:.3}",
        mean(&narrow.lumen_jm),
        mean(&narrow.media_jm),
        mean(&shadow.media_jm)
    );
    verdict(
        jl >= LUMEN_JM_MIN && jm >= MEDIA_JM_MIN && hd <= LUMEN_HD_MAX_PX && sj >= SHADOW_LUMEN_JM_MIN,
        format!(
            "clean: lumen JM {jl:.3} (>= {LUMEN_JM_MIN}), media JM {jm:.3} (>= {MEDIA_JM_MIN}), lumen HD {hd:.2} px (<= {LUMEN_HD_MAX_PX}), {} failed; shadow: lumen JM {sj:.3} (>= {SHADOW_LUMEN_JM_MIN}), {} failed",
            clean.failures, shadow.failures
        ),
    )
}

fn criterion_fixtures() -> Outcome {
    let entropy = entropy_bits(&[7, 7], 14);
    let omega = stability_scores(&[1.0, 2.0, 3.0]);
    let z = modified_z_scores(&[800.0, 900.0, 1000.0, 1100.0, 10000.0]).unwrap();
    let outliers = z.iter().filter(|m| !(DEFAULT_Z_BOUNDS.0..=DEFAULT_Z_BOUNDS.1).contains(*m)).count();
    verdict(
        entropy == 1.0 && omega == [1.0] && outliers == 1 && z[4] > DEFAULT_Z_BOUNDS.1,
        format!("entropy of two equal bins {entropy} bit, Ω = {omega:?}, {outliers} outlier (the 10000 area)"),
    )
}

fn scaled(spec: &PhantomSpec, k: f64) -> PhantomSpec {
    let grow = |e: &Ellipse| Ellipse { center: Point::new(e.center.x * k, e.center.y * k), a: e.a * k, b: e.b * k, theta: e.theta };
    PhantomSpec {
        width: (spec.width as f64 * k) as usize,
        height: (spec.height as f64 * k) as usize,
        lumen: grow(&spec.lumen),
        media: grow(&spec.media),
        media_thickness: spec.media_thickness * k,
        ..spec.clone()
    }
}

fn median_time(frame: &Frame, runs: usize) -> Duration {
    let params = SegmentParams::default();
    let mut times: Vec<Duration> = (0..runs)
        .map(|_| {
            let t = Instant::now();
            segment_frame(frame, &params, None).unwrap();
            t.elapsed()
        })
        .collect();
    times.sort();
    times[runs / 2]
}

fn criterion_runtime() -> Outcome {
    let base = PhantomSpec::default();
    let (small, _) = generate_phantom(&base).unwrap();
    let (large, _) = generate_phantom(&scaled(&base, 2.0)).unwrap();
    median_time(&small, 1);
    let t1 = median_time(&small, 5);
    let t2 = median_time(&large, 5);
    let ratio = t2.as_secs_f64() / t1.as_secs_f64();
    verdict(
        t1 <= RUNTIME_MAX && ratio <= SCALING_MAX,
        format!("384x384 {:.1} ms (limit {} ms), 768x768 {:.1} ms, ratio {ratio:.2} (limit {SCALING_MAX})", t1.as_secs_f64() * 1e3, RUNTIME_MAX.as_millis(), t2.as_secs_f64() * 1e3),
    )
}

fn criterion_dataset() -> Outcome {
    let (Ok(frames), Ok(gold), Ok(scale)) = (std::env::var("IVUS_DATASET_DIR"), std::env::var("IVUS_GOLD_DIR"), std::env::var("IVUS_MM_PER_PX")) else {
        return Outcome::Skip("set IVUS_DATASET_DIR, IVUS_GOLD_DIR and IVUS_MM_PER_PX to run".to_string());
    };
    let Ok(scale) = scale.parse::<f64>() else {
        return Outcome::Fail(format!("IVUS_MM_PER_PX {scale:?} is not a number"));
    };
    let out = tempfile::tempdir().unwrap();
    let tunables = Tunables { mm_per_px: Some(scale), ..Tunables::default() };
    let cfg = BatchConfig { inputs: vec![PathBuf::from(frames)], gold: Some(PathBuf::from(gold)), out: out.path().to_path_buf(), tunables, mode: Mode::Evaluate, overlays: false };
    let summary = match run_batch(&cfg) {
        Ok(s) => s,
        Err(e) => return Outcome::Fail(format!("evaluate failed: {e}")),
    };
    let scored: Vec<_> = summary.records.iter().filter_map(|r| r.lumen_scores).collect();
    if scored.is_empty() {
        return Outcome::Fail("no frame was scored".to_string());
    }
    let hd = mean(&scored.iter().map(|s| s.hd_mm.unwrap()).collect::<Vec<_>>());
    let jm = mean(&scored.iter().map(|s| s.jm).collect::<Vec<_>>());
    verdict(
        (hd - DATASET_LUMEN_HD_MM).abs() <= DATASET_LUMEN_HD_TOL && (jm - DATASET_LUMEN_JM).abs() <= DATASET_LUMEN_JM_TOL,
        format!("{} frames ({} failed): lumen HD {hd:.3} mm, JM {jm:.3}", summary.records.len(), summary.failures()),
    )
}

fn criterion_bestcase() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let mut frames = Vec::new();
    for (sub, shadow) in [("clean", false), ("shadow", true)] {
        let dir = tmp.path().join(sub);
        let args = PhantomArgs { out: dir.clone(), spec: None, frames: 1, randomized: Some(BESTCASE_PHANTOMS), base_seed: 500, shadow };
        write_phantoms(&args).unwrap();
        frames.push(dir);
    }
    let mut rows = Vec::new();
    for dir in &frames {
        let out = dir.join("bestcase");
        let status = Command::new(env!("CARGO_BIN_EXE_ivus"))
            .arg("bestcase")
            .arg(dir)
            .arg("--gold")
            .arg(dir.join("gold"))
            .arg("-o")
            .arg(&out)
            .args(["--no-ringdown", "--no-overlay"])
            .status()
            .unwrap();
        if status.code() != Some(0) {
            return Outcome::Fail(format!("bestcase exited with {status}"));
        }
        let mut reader = csv::Reader::from_path(out.join("bestcase.csv")).unwrap();
        let headers = reader.headers().unwrap().clone();
        let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
        let (bl, sl, bm, sm) = (col("best_jm_lumen"), col("selected_jm_lumen"), col("best_jm_media"), col("selected_jm_media"));
        for r in reader.records() {
            let r = r.unwrap();
            let v = |i: usize| r[i].parse::<f64>().unwrap();
            rows.push((v(bl), v(sl), v(bm), v(sm)));
        }
    }
    let violations = rows.iter().filter(|(bl, sl, bm, sm)| bl < sl || bm < sm).count();
    let avg = |f: fn(&(f64, f64, f64, f64)) -> f64| mean(&rows.iter().map(f).collect::<Vec<_>>());
    verdict(
        rows.len() == 2 * BESTCASE_PHANTOMS && violations == 0,
        format!(
            "{} frames, {violations} with best < selected; mean JM lumen best {:.3} vs selected {:.3}, media best {:.3} vs selected {:.3}",
            rows.len(),
            avg(|r| r.0),
            avg(|r| r.1),
            avg(|r| r.2),
            avg(|r| r.3)
        ),
    )
}

fn main() {
    let criteria: [(&str, Criterion); 8] = [
        ("component tree vs flood-fill oracle", criterion_tree),
        ("Hausdorff vs exact polyline oracle", criterion_hausdorff),
        ("ellipse moment round trip", criterion_ellipse),
        ("phantom selection end to end", criterion_phantoms),
        ("formula fixtures", criterion_fixtures),
        ("runtime and scaling", criterion_runtime),
        ("clinical dataset reproduction", criterion_dataset),
        ("best case dominates selection", criterion_bestcase),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let (tag, detail) = match run() {
            Outcome::Pass(d) => ("PASS", d),
            Outcome::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Outcome::Skip(d) => ("SKIP", d),
        };
        println!("criterion {} {tag}: {name}: {detail}", i + 1);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
