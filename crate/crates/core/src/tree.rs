//! Min-tree of the sub-level sets `{p : I(p) <= t}` under 4-connectivity.
//!
//! Pixels are bucket-sorted by intensity and merged in increasing order with
//! a rank-balanced, path-compressed union-find, which keeps construction
//! quasi-linear in the pixel count. Every node accumulates its area, the sum
//! of its intensities and exact integer raw moments, so central moments of
//! any node are available without touching its pixels again.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::imaging::{Frame, Point};

const UNSET: u32 = u32::MAX;

/// Index of a node inside a [`ComponentTree`].
pub type NodeId = usize;

/// Incrementally merged statistics of one connected component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Accumulator {
    pub area: u64,
    pub sum_intensity: u64,
    pub sum_x: u64,
    pub sum_y: u64,
    pub sum_xx: u64,
    pub sum_xy: u64,
    pub sum_yy: u64,
}

impl Accumulator {
    fn pixel(x: u64, y: u64, value: u8) -> Self {
        Accumulator {
            area: 1,
            sum_intensity: value as u64,
            sum_x: x,
            sum_y: y,
            sum_xx: x * x,
            sum_xy: x * y,
            sum_yy: y * y,
        }
    }

    fn merge(&mut self, other: &Accumulator) {
        self.area += other.area;
        self.sum_intensity += other.sum_intensity;
        self.sum_x += other.sum_x;
        self.sum_y += other.sum_y;
        self.sum_xx += other.sum_xx;
        self.sum_xy += other.sum_xy;
        self.sum_yy += other.sum_yy;
    }

    pub fn mean_intensity(&self) -> f64 {
        self.sum_intensity as f64 / self.area as f64
    }

    pub fn centroid(&self) -> Point {
        let a = self.area as f64;
        Point::new(self.sum_x as f64 / a, self.sum_y as f64 / a)
    }

    /// Area-normalized second central moments `(μxx, μxy, μyy)`.
    pub fn central_moments(&self) -> (f64, f64, f64) {
        let a = self.area as f64;
        let c = self.centroid();
        let mxx = (self.sum_xx as f64 / a - c.x * c.x).max(0.0);
        let myy = (self.sum_yy as f64 / a - c.y * c.y).max(0.0);
        let mxy = self.sum_xy as f64 / a - c.x * c.y;
        (mxx, mxy, myy)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    /// Lowest threshold at which the component exists.
    pub level: u8,
    /// Parent node; the root points at itself.
    pub parent: NodeId,
    pub acc: Accumulator,
}

impl Node {
    pub fn area(&self) -> usize {
        self.acc.area as usize
    }
}

#[derive(Debug, Clone)]
pub struct ComponentTree {
    width: usize,
    height: usize,
    nodes: Vec<Node>,
    /// Node owning each pixel (the node at the pixel's own intensity).
    node_of: Vec<u32>,
}

fn find(zpar: &mut [u32], mut p: u32) -> u32 {
    while zpar[p as usize] != p {
        let grand = zpar[zpar[p as usize] as usize];
        zpar[p as usize] = grand;
        p = grand;
    }
    p
}

impl ComponentTree {
    pub fn build(frame: &Frame) -> Self {
        let (w, h) = frame.dims();
        let n = w * h;
        let img = frame.pixels();

        // Counting sort, ascending and stable.
        let mut start = [0usize; 257];
        for &v in img {
            start[v as usize + 1] += 1;
        }
        for i in 0..256 {
            start[i + 1] += start[i];
        }
        let mut order = vec![0u32; n];
        let mut fill = start;
        for (i, &v) in img.iter().enumerate() {
            order[fill[v as usize]] = i as u32;
            fill[v as usize] += 1;
        }

        let mut parent = vec![UNSET; n];
        let mut zpar = vec![UNSET; n];
        let mut repr = vec![0u32; n];
        let mut rank = vec![0u8; n];
        for &p in &order {
            let pu = p as usize;
            parent[pu] = p;
            zpar[pu] = p;
            repr[pu] = p;
            let mut zp = p;
            let (x, y) = (pu % w, pu / w);
            let mut neighbors = [UNSET; 4];
            if x > 0 {
                neighbors[0] = p - 1;
            }
            if x + 1 < w {
                neighbors[1] = p + 1;
            }
            if y > 0 {
                neighbors[2] = p - w as u32;
            }
            if y + 1 < h {
                neighbors[3] = p + w as u32;
            }
            for nb in neighbors {
                if nb == UNSET || zpar[nb as usize] == UNSET {
                    continue;
                }
                let zn = find(&mut zpar, nb);
                if zn == zp {
                    continue;
                }
                parent[repr[zn as usize] as usize] = p;
                let (hi, lo) = if rank[zp as usize] < rank[zn as usize] { (zn, zp) } else { (zp, zn) };
                zpar[lo as usize] = hi;
                if rank[hi as usize] == rank[lo as usize] {
                    rank[hi as usize] += 1;
                }
                repr[hi as usize] = p;
                zp = hi;
            }
        }
        drop(zpar);
        drop(repr);
        drop(rank);

        // Point every pixel at the canonical element of its parent node.
        for &p in order.iter().rev() {
            let q = parent[p as usize];
            if img[parent[q as usize] as usize] == img[q as usize] {
                parent[p as usize] = parent[q as usize];
            }
        }

        let is_canonical = |p: usize| parent[p] as usize == p || img[parent[p] as usize] != img[p];
        let mut node_index = vec![UNSET; n];
        let mut nodes: Vec<Node> = Vec::new();
        for &p in &order {
            let pu = p as usize;
            if is_canonical(pu) {
                node_index[pu] = nodes.len() as u32;
                nodes.push(Node { level: img[pu], parent: 0, acc: Accumulator::default() });
            }
        }
        let mut node_of = vec![0u32; n];
        for &p in &order {
            let pu = p as usize;
            let canon = if is_canonical(pu) { pu } else { parent[pu] as usize };
            let id = node_index[canon];
            node_of[pu] = id;
            nodes[id as usize].acc.merge(&Accumulator::pixel((pu % w) as u64, (pu / w) as u64, img[pu]));
        }
        for &p in &order {
            let pu = p as usize;
            if node_index[pu] == UNSET {
                continue;
            }
            let id = node_index[pu] as usize;
            nodes[id].parent = node_index[parent[pu] as usize] as usize;
        }
        // Canonical elements were numbered in processing order, so every
        // child precedes its parent.
        for id in 0..nodes.len() {
            let par = nodes[id].parent;
            if par != id {
                let acc = nodes[id].acc;
                nodes[par].acc.merge(&acc);
            }
        }
        ComponentTree { width: w, height: h, nodes, node_of }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn root(&self) -> NodeId {
        self.nodes.len() - 1
    }

    /// Leaf-most node containing pixel `(x, y)`.
    pub fn node_of(&self, x: usize, y: usize) -> NodeId {
        self.node_of[y * self.width + x] as usize
    }

    /// Nodes containing `(x, y)`, from its own node up to the root.
    pub fn ancestors(&self, x: usize, y: usize) -> Vec<NodeId> {
        let mut chain = Vec::new();
        let mut id = self.node_of(x, y);
        loop {
            chain.push(id);
            let par = self.nodes[id].parent;
            if par == id {
                break;
            }
            id = par;
        }
        chain
    }

    /// The chain of nested components rooted at `seed`.
    pub fn seed_chain(&self, seed: (usize, usize)) -> Result<SeedChain> {
        let (x, y) = seed;
        if x >= self.width || y >= self.height {
            return Err(Error::SeedOutOfBounds { x, y });
        }
        let nodes = self.ancestors(x, y);
        let mut on_chain = vec![false; self.nodes.len()];
        for &id in &nodes {
            on_chain[id] = true;
        }
        // Level of the first chain ancestor; parents come after children.
        let mut node_join = vec![0u8; self.nodes.len()];
        for id in (0..self.nodes.len()).rev() {
            node_join[id] = if on_chain[id] {
                self.nodes[id].level
            } else {
                node_join[self.nodes[id].parent]
            };
        }
        let join: Vec<u8> = self.node_of.iter().map(|&id| node_join[id as usize]).collect();
        Ok(SeedChain { seed, width: self.width, height: self.height, nodes, join: Arc::from(join) })
    }
}

/// Nested components around one seed pixel, with a per-pixel join level.
///
/// `join[p]` is the smallest threshold at which `p` belongs to the seed's
/// component, so the component at threshold `t` is exactly `{p : join[p] <= t}`
/// for any `t` at or above the seed's own intensity.
#[derive(Debug, Clone)]
pub struct SeedChain {
    pub seed: (usize, usize),
    width: usize,
    height: usize,
    /// Node ids from the seed's leaf to the root.
    pub nodes: Vec<NodeId>,
    join: Arc<[u8]>,
}

impl SeedChain {
    pub fn join_levels(&self) -> &Arc<[u8]> {
        &self.join
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn contains(&self, x: usize, y: usize, level: u8) -> bool {
        self.join[y * self.width + x] <= level
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::collections::VecDeque;
    use proptest::prelude::*;

    /// Flood fill of `{I <= t}` from `seed`; empty when the seed is above `t`.
    pub(crate) fn brute_component(frame: &Frame, seed: (usize, usize), t: u8) -> Vec<bool> {
        let (w, h) = frame.dims();
        let mut seen = vec![false; w * h];
        if frame.get(seed.0, seed.1) > t {
            return seen;
        }
        let mut queue = VecDeque::new();
        seen[seed.1 * w + seed.0] = true;
        queue.push_back(seed);
        while let Some((x, y)) = queue.pop_front() {
            let mut visit = |nx: usize, ny: usize| {
                let i = ny * w + nx;
                if !seen[i] && frame.get(nx, ny) <= t {
                    seen[i] = true;
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

    #[test]
    fn constant_frame_single_node() {
        let f = Frame::filled(6, 4, 50).unwrap();
        let t = ComponentTree::build(&f);
        assert_eq!(t.nodes().len(), 1);
        assert_eq!(t.node(t.root()).area(), 24);
        assert_eq!(t.node(t.root()).level, 50);
    }

    #[test]
    fn two_blobs_merge_at_background() {
        let f = Frame::from_fn(9, 5, |x, y| match (x, y) {
            (1..=2, 1..=3) => 10,
            (6..=7, 1..=3) => 20,
            _ => 100,
        })
        .unwrap();
        let t = ComponentTree::build(&f);
        let a = t.node_of(1, 1);
        let b = t.node_of(7, 2);
        assert_ne!(a, b);
        assert_eq!(t.node(a).area(), 6);
        assert_eq!(t.node(b).area(), 6);
        assert_eq!(t.node(a).parent, t.root());
        assert_eq!(t.node(b).parent, t.root());
        assert_eq!(t.node(t.root()).level, 100);
        assert_eq!(t.node(t.root()).area(), 45);
    }

    #[test]
    fn root_accumulator_matches_direct_sums() {
        let f = Frame::from_fn(13, 11, |x, y| ((x * 31 + y * 17) % 256) as u8).unwrap();
        let t = ComponentTree::build(&f);
        let acc = t.node(t.root()).acc;
        let mut direct = Accumulator::default();
        for y in 0..11 {
            for x in 0..13 {
                direct.merge(&Accumulator::pixel(x, y, f.get(x as usize, y as usize)));
            }
        }
        assert_eq!(acc, direct);
    }

    #[test]
    fn seed_outside_rejected() {
        let t = ComponentTree::build(&Frame::filled(3, 3, 0).unwrap());
        assert!(t.seed_chain((3, 0)).is_err());
    }

    fn random_frame(w: usize, h: usize, levels: u64, seed: u64) -> Frame {
        let mut s = seed | 1;
        Frame::from_fn(w, h, |_, _| {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            ((s % levels) * (255 / (levels - 1).max(1))) as u8
        })
        .unwrap()
    }

    proptest! {
        #[test]
        fn seed_chain_matches_flood_fill(w in 1usize..20, h in 1usize..20, levels in 2u64..12, seed in any::<u64>(), sx in 0usize..20, sy in 0usize..20) {
            let f = random_frame(w, h, levels, seed);
            let seed_px = (sx % w, sy % h);
            let tree = ComponentTree::build(&f);
            let chain = tree.seed_chain(seed_px).unwrap();
            for t in 0..=255u8 {
                let brute = brute_component(&f, seed_px, t);
                for y in 0..h {
                    for x in 0..w {
                        let ours = f.get(seed_px.0, seed_px.1) <= t && chain.contains(x, y, t);
                        prop_assert_eq!(ours, brute[y * w + x]);
                    }
                }
            }
            // Node areas along the chain match the flood fills at their levels.
            for &id in &chain.nodes {
                let node = tree.node(id);
                let brute = brute_component(&f, seed_px, node.level);
                prop_assert_eq!(node.area(), brute.iter().filter(|&&b| b).count());
            }
        }

        #[test]
        fn every_node_nested_in_parent(w in 1usize..16, h in 1usize..16, seed in any::<u64>()) {
            let f = random_frame(w, h, 7, seed);
            let tree = ComponentTree::build(&f);
            for (id, node) in tree.nodes().iter().enumerate() {
                if node.parent != id {
                    let par = tree.node(node.parent);
                    prop_assert!(par.level > node.level);
                    prop_assert!(par.area() > node.area());
                }
            }
        }
    }
}
