//! Dark-core (Q+) extremal regions of extremum levels around a seed pixel.
//!
//! The seed chain of the min-tree is cut to an area band, every surviving
//! level gets its outer boundary traced, and a level is kept when its
//! boundary is unusually well aligned with gradient-magnitude maxima compared
//! with the other levels.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::gradient::gradient_maxima;
use crate::imaging::{Contour, Frame, Mask, Point};
use crate::tree::{ComponentTree, SeedChain};

/// Below this many extremum levels every area-filtered level is kept.
pub const MIN_RETAINED_LEVELS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErelParams {
    /// Strength factor of the extremum-level criterion, in `[0, 2.5]`.
    pub alpha: f64,
    /// Half-width of the moving average over the criterion vector.
    pub beta: usize,
    pub a_min: usize,
    pub a_max: usize,
}

impl ErelParams {
    pub const DEFAULT_ALPHA: f64 = 0.5;
    pub const DEFAULT_BETA: usize = 1;
    pub const DEFAULT_AMIN_FRAC: f64 = 1.0 / 100.0;
    pub const DEFAULT_AMAX_FRAC: f64 = 1.0 / 3.0;

    /// Area bounds as fractions of the frame's pixel count.
    pub fn for_frame(width: usize, height: usize, alpha: f64, beta: usize, amin_frac: f64, amax_frac: f64) -> Result<Self> {
        let n = (width * height) as f64;
        let p = ErelParams {
            alpha,
            beta,
            a_min: libm::floor(n * amin_frac).max(1.0) as usize,
            a_max: libm::floor(n * amax_frac) as usize,
        };
        p.validate(width * height)?;
        Ok(p)
    }

    /// Defaults for a frame size: α = 0.5, β = 1, areas in `[RC/100, RC/3]`.
    pub fn defaults(width: usize, height: usize) -> Self {
        Self::for_frame(width, height, Self::DEFAULT_ALPHA, Self::DEFAULT_BETA, Self::DEFAULT_AMIN_FRAC, Self::DEFAULT_AMAX_FRAC)
            .unwrap_or(ErelParams { alpha: 0.5, beta: 1, a_min: 1, a_max: (width * height).max(2) })
    }

    pub fn validate(&self, pixel_count: usize) -> Result<()> {
        if !(0.0..=2.5).contains(&self.alpha) {
            return Err(Error::InvalidParameter("alpha must lie in [0, 2.5]"));
        }
        if self.beta < 1 {
            return Err(Error::InvalidParameter("beta must be >= 1"));
        }
        if self.a_min == 0 || self.a_min >= self.a_max || self.a_max > pixel_count {
            return Err(Error::InvalidParameter("area bounds must satisfy 0 < a_min < a_max <= pixel count"));
        }
        Ok(())
    }
}

/// One extracted region and the attributes used for selection and fitting.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    /// Threshold at which the region was taken; members satisfy `I <= level`.
    pub level: u8,
    pub area: usize,
    /// Moore-traced outer boundary, pixel centers in trace order.
    pub boundary: Contour,
    /// Number of distinct pixels on the outer boundary.
    pub boundary_length: usize,
    pub mean_intensity: f64,
    /// Shannon entropy of the 256-bin intensity histogram, in bits.
    pub entropy: f64,
    pub centroid: Point,
    pub mu_xx: f64,
    pub mu_xy: f64,
    pub mu_yy: f64,
    /// Fraction of boundary pixels that are gradient maxima.
    pub edge_support: f64,
}

/// Strictly nested regions around one seed, smallest first.
///
/// Membership is answered from the shared per-pixel join levels, so a series
/// and all subsets of it cost one byte per pixel in total.
#[derive(Debug, Clone)]
pub struct RegionSeries {
    width: usize,
    height: usize,
    join: Arc<[u8]>,
    pub regions: Vec<Region>,
    pub counts: ExtractionCounts,
}

/// Region counts after each extraction stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ExtractionCounts {
    /// Nodes on the seed chain.
    pub chain: usize,
    /// Chain nodes inside the area band.
    pub area_filtered: usize,
    /// Extremum levels kept.
    pub retained: usize,
}

impl RegionSeries {
    pub fn len(&self) -> usize {
        self.regions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn contains(&self, index: usize, x: usize, y: usize) -> bool {
        self.join[y * self.width + x] <= self.regions[index].level
    }

    pub fn mask(&self, index: usize) -> Mask {
        let level = self.regions[index].level;
        let bits = self.join.iter().map(|&j| j <= level).collect();
        Mask::from_bits(self.width, self.height, bits).expect("join map matches dims")
    }

    pub fn pixels(&self, index: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        let level = self.regions[index].level;
        let w = self.width;
        self.join
            .iter()
            .enumerate()
            .filter(move |(_, &j)| j <= level)
            .map(move |(i, _)| (i % w, i / w))
    }

    /// Same geometry, keeping only the regions at `keep` (ascending indices).
    pub fn subset(&self, keep: &[usize]) -> RegionSeries {
        RegionSeries {
            width: self.width,
            height: self.height,
            join: Arc::clone(&self.join),
            regions: keep.iter().map(|&i| self.regions[i].clone()).collect(),
            counts: self.counts,
        }
    }
}

/// Shannon entropy in bits of a histogram; empty bins contribute nothing.
pub fn entropy_bits(hist: &[u32], total: u64) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let n = total as f64;
    hist.iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * libm::log2(p)
        })
        .sum()
}

// Moore neighborhood, clockwise with y pointing down, starting east.
const RING: [(isize, isize); 8] = [(1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1)];

fn ring_index(dx: isize, dy: isize) -> usize {
    RING.iter().position(|&d| d == (dx, dy)).expect("unit offset")
}

/// Outer boundary of the 8-connected blob containing `start`, which must be
/// its first pixel in raster order. Returns pixels in trace order; a pixel
/// can repeat where the boundary pinches.
pub fn trace_boundary(width: usize, height: usize, start: (usize, usize), inside: impl Fn(usize, usize) -> bool) -> Vec<(usize, usize)> {
    let probe = |x: usize, y: usize, d: usize| -> Option<(usize, usize)> {
        let nx = x as isize + RING[d].0;
        let ny = y as isize + RING[d].1;
        if nx < 0 || ny < 0 || nx >= width as isize || ny >= height as isize {
            return None;
        }
        let (nx, ny) = (nx as usize, ny as usize);
        inside(nx, ny).then_some((nx, ny))
    };
    // One clockwise sweep from the backtrack direction.
    let step = |cur: (usize, usize), back: usize| -> Option<((usize, usize), usize)> {
        for k in 1..=8 {
            let d = (back + k) % 8;
            if let Some(next) = probe(cur.0, cur.1, d) {
                let prev = (d + 7) % 8;
                let bx = cur.0 as isize + RING[prev].0 - next.0 as isize;
                let by = cur.1 as isize + RING[prev].1 - next.1 as isize;
                return Some((next, ring_index(bx, by)));
            }
        }
        None
    };

    let mut out = vec![start];
    let Some((first, first_back)) = step(start, 4) else {
        return out;
    };
    let (mut cur, mut back) = (first, first_back);
    loop {
        if cur == start {
            match step(cur, back) {
                Some((next, _)) if next == first => break,
                Some((next, nb)) => {
                    out.push(cur);
                    cur = next;
                    back = nb;
                    continue;
                }
                None => break,
            }
        }
        out.push(cur);
        let (next, nb) = step(cur, back).expect("traced pixel has a neighbor");
        cur = next;
        back = nb;
    }
    out
}

struct LevelStats {
    level: u8,
    area: usize,
    boundary: Vec<(usize, usize)>,
    boundary_length: usize,
    edge_support: f64,
}

/// Extracts the Q+ extremal regions of extremum levels around `seed`.
pub fn extract_qplus(tree: &ComponentTree, params: &ErelParams, seed: (usize, usize), frame: &Frame) -> Result<RegionSeries> {
    let (w, h) = frame.dims();
    if (tree.width(), tree.height()) != (w, h) {
        return Err(Error::DimensionMismatch { expected: (w, h), found: (tree.width(), tree.height()) });
    }
    params.validate(w * h)?;
    let chain = tree.seed_chain(seed)?;
    let candidates: Vec<usize> = chain
        .nodes
        .iter()
        .copied()
        .filter(|&id| (params.a_min..=params.a_max).contains(&tree.node(id).area()))
        .collect();
    if candidates.is_empty() {
        return Err(Error::NoCandidateRegions);
    }

    let mgm = gradient_maxima(frame);
    let stats = level_statistics(tree, &chain, &candidates, &mgm);
    let q: Vec<f64> = stats.iter().map(|s| s.edge_support).collect();
    let retained = select_extremum_levels(&q, params);

    let join = chain.join_levels();
    let img = frame.pixels();
    // Histograms and moments per join level, summed up to each retained level.
    let mut hist_by_join = vec![[0u32; 256]; 256];
    for (i, &j) in join.iter().enumerate() {
        hist_by_join[j as usize][img[i] as usize] += 1;
    }
    let mut regions = Vec::with_capacity(retained.len());
    let mut hist = [0u32; 256];
    let mut next_join = 0usize;
    for &k in &retained {
        let s = &stats[k];
        while next_join <= s.level as usize {
            for (acc, &c) in hist.iter_mut().zip(hist_by_join[next_join].iter()) {
                *acc += c;
            }
            next_join += 1;
        }
        let node = tree.node(candidates[k]);
        let (mu_xx, mu_xy, mu_yy) = node.acc.central_moments();
        regions.push(Region {
            level: s.level,
            area: s.area,
            boundary: Contour::new(s.boundary.iter().map(|&(x, y)| Point::new(x as f64, y as f64)).collect(), true),
            boundary_length: s.boundary_length,
            mean_intensity: node.acc.mean_intensity(),
            entropy: entropy_bits(&hist, node.acc.area),
            centroid: node.acc.centroid(),
            mu_xx,
            mu_xy,
            mu_yy,
            edge_support: s.edge_support,
        });
    }
    let counts = ExtractionCounts { chain: chain.nodes.len(), area_filtered: candidates.len(), retained: regions.len() };
    Ok(RegionSeries { width: w, height: h, join: Arc::clone(join), regions, counts })
}

fn level_statistics(tree: &ComponentTree, chain: &SeedChain, candidates: &[usize], mgm: &Mask) -> Vec<LevelStats> {
    let (w, h) = chain.dims();
    let join = chain.join_levels();
    // First raster-order pixel of each level's region.
    let mut first_by_join = [usize::MAX; 256];
    for (i, &j) in join.iter().enumerate() {
        let slot = &mut first_by_join[j as usize];
        if *slot == usize::MAX {
            *slot = i;
        }
    }
    let mut first_upto = [usize::MAX; 256];
    let mut running = usize::MAX;
    for (lvl, &f) in first_by_join.iter().enumerate() {
        running = running.min(f);
        first_upto[lvl] = running;
    }

    let mut stamp = vec![0u16; w * h];
    candidates
        .iter()
        .enumerate()
        .map(|(k, &id)| {
            let node = tree.node(id);
            let level = node.level;
            let start = first_upto[level as usize];
            let boundary = trace_boundary(w, h, (start % w, start / w), |x, y| join[y * w + x] <= level);
            let tag = k as u16 + 1;
            let mut distinct = 0usize;
            let mut on_edge = 0usize;
            for &(x, y) in &boundary {
                let i = y * w + x;
                if stamp[i] != tag {
                    stamp[i] = tag;
                    distinct += 1;
                    if mgm.get(x, y) {
                        on_edge += 1;
                    }
                }
            }
            LevelStats { level, area: node.area(), boundary, boundary_length: distinct, edge_support: on_edge as f64 / distinct as f64 }
        })
        .collect()
}

/// Indices of the extremum levels among the area-filtered candidates.
///
/// The per-level criterion is smoothed with a moving average of half-width
/// `beta`; a level is kept when its smoothed criterion reaches
/// `alpha × mean(q)`, so every sufficiently strong local maximum survives
/// along with the levels around it. Keeping only the maxima leaves a handful
/// of regions, too sparse for the stability ratio to see the lumen plateau.
/// Fewer than [`MIN_RETAINED_LEVELS`] picks keep every level.
pub fn select_extremum_levels(q: &[f64], params: &ErelParams) -> Vec<usize> {
    let n = q.len();
    let all: Vec<usize> = (0..n).collect();
    if n < 3 {
        return all;
    }
    let smoothed: Vec<f64> = (0..n)
        .map(|i| {
            let lo = i.saturating_sub(params.beta);
            let hi = (i + params.beta).min(n - 1);
            q[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
        })
        .collect();
    let mean = q.iter().sum::<f64>() / n as f64;
    let floor = params.alpha * mean;
    let kept: Vec<usize> = (0..n).filter(|&i| smoothed[i] >= floor).collect();
    if kept.len() < MIN_RETAINED_LEVELS {
        all
    } else {
        kept
    }
}

/// Interior local maxima; a plateau counts once, at its leftmost index.
pub fn local_maxima(v: &[f64]) -> Vec<usize> {
    let n = v.len();
    let mut out = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        if v[i] > v[i - 1] {
            let mut j = i;
            while j + 1 < n && v[j + 1] == v[i] {
                j += 1;
            }
            if j + 1 < n && v[j + 1] < v[i] {
                out.push(i);
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    out
}
