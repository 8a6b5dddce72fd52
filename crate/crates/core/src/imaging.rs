//! Raster and contour types shared by every stage.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::stats::histogram_lower_median;

/// Sub-pixel image coordinate; pixel centers sit on integer coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        libm::hypot(self.x - other.x, self.y - other.y)
    }
}

/// An 8-bit grayscale frame stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
    /// Physical pixel pitch; only needed for millimeter-valued metrics.
    pub mm_per_px: Option<f64>,
}

impl Frame {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 || pixels.len() != width * height {
            return Err(Error::InvalidDimensions { width, height, len: pixels.len() });
        }
        Ok(Frame { width, height, pixels, mm_per_px: None })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        Frame::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Frame::new(width, height, pixels)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    #[inline]
    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    #[inline]
    pub fn pixels_mut(&mut self) -> &mut [u8] {
        &mut self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: u8) {
        self.pixels[y * self.width + x] = value;
    }

    pub fn with_scale(mut self, mm_per_px: Option<f64>) -> Self {
        self.mm_per_px = mm_per_px;
        self
    }
}

/// Integer pixel at the middle of the frame, `(⌊w/2⌋, ⌊h/2⌋)`.
pub fn frame_center(frame: &Frame) -> (usize, usize) {
    (frame.width / 2, frame.height / 2)
}

/// Median filter over a `(2r+1)²` window clamped to the frame.
///
/// Only in-image pixels enter each window, and an even count takes the
/// lower of the two middle values, so every output intensity already occurs
/// in the input.
pub fn median_filter(frame: &Frame, radius: usize) -> Result<Frame> {
    if radius == 0 {
        return Err(Error::InvalidParameter("median radius must be >= 1"));
    }
    let (w, h) = frame.dims();
    let src = frame.pixels();
    let mut out = vec![0u8; w * h];
    let mut hist = [0u32; 256];
    for y in 0..h {
        let y0 = y.saturating_sub(radius);
        let y1 = (y + radius).min(h - 1);
        let rows = (y1 - y0 + 1) as u32;
        hist.fill(0);
        let mut count = 0u32;
        // Prime with columns [0, radius).
        for x in 0..radius.min(w) {
            for yy in y0..=y1 {
                hist[src[yy * w + x] as usize] += 1;
            }
            count += rows;
        }
        for x in 0..w {
            let entering = x + radius;
            if entering < w {
                for yy in y0..=y1 {
                    hist[src[yy * w + entering] as usize] += 1;
                }
                count += rows;
            }
            if x > radius {
                let leaving = x - radius - 1;
                for yy in y0..=y1 {
                    hist[src[yy * w + leaving] as usize] -= 1;
                }
                count -= rows;
            }
            out[y * w + x] = histogram_lower_median(&hist, count);
        }
    }
    Ok(Frame { width: w, height: h, pixels: out, mm_per_px: frame.mm_per_px })
}

/// An ordered, non-empty run of equally sized frames.
#[derive(Debug, Clone, PartialEq)]
pub struct Sequence {
    frames: Vec<Frame>,
}

impl Sequence {
    pub fn new(frames: Vec<Frame>) -> Result<Self> {
        let first = frames.first().ok_or(Error::EmptySequence)?;
        let dims = first.dims();
        if let Some(bad) = frames.iter().find(|f| f.dims() != dims) {
            return Err(Error::DimensionMismatch { expected: dims, found: bad.dims() });
        }
        Ok(Sequence { frames })
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn dims(&self) -> (usize, usize) {
        self.frames[0].dims()
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn into_frames(self) -> Vec<Frame> {
        self.frames
    }
}

/// One boolean per pixel, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl Mask {
    pub fn new(width: usize, height: usize) -> Self {
        Mask { width, height, bits: vec![false; width * height] }
    }

    pub fn from_bits(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width * height {
            return Err(Error::InvalidDimensions { width, height, len: bits.len() });
        }
        Ok(Mask { width, height, bits })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        Mask { width, height, bits }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.bits[y * self.width + x] = value;
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_all(&self) -> bool {
        self.bits.iter().all(|&b| b)
    }

    pub fn is_none(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    /// Row-major coordinates of all set pixels.
    pub fn iter_set(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let w = self.width;
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| (i % w, i / w))
    }
}

/// An ordered polyline, optionally closed.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Contour {
    points: Vec<Point>,
    pub closed: bool,
}

impl Contour {
    /// Builds a contour, dropping consecutive duplicate points (and the
    /// closing duplicate of a closed contour).
    pub fn new(points: Vec<Point>, closed: bool) -> Self {
        let mut deduped: Vec<Point> = Vec::with_capacity(points.len());
        for p in points {
            if deduped.last() != Some(&p) {
                deduped.push(p);
            }
        }
        if closed && deduped.len() > 1 && deduped.first() == deduped.last() {
            deduped.pop();
        }
        Contour { points: deduped, closed }
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Segments of the polyline, including the closing one when closed.
    pub fn segments(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.points.len();
        let count = if self.closed && n > 2 { n } else { n.saturating_sub(1) };
        (0..count).map(move |i| (self.points[i], self.points[(i + 1) % n]))
    }

    /// Copy of the contour with extra points inserted so that consecutive
    /// points are at most `spacing` apart.
    pub fn densified(&self, spacing: f64) -> Contour {
        debug_assert!(spacing > 0.0);
        if self.points.len() < 2 {
            return self.clone();
        }
        let mut out = Vec::with_capacity(self.points.len() * 2);
        for (a, b) in self.segments() {
            let len = a.distance(b);
            let steps = libm::ceil(len / spacing).max(1.0) as usize;
            for k in 0..steps {
                let t = k as f64 / steps as f64;
                out.push(Point::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)));
            }
        }
        if !(self.closed && self.points.len() > 2) {
            out.push(*self.points.last().unwrap());
        }
        Contour { points: out, closed: self.closed }
    }

    /// Rasterizes the closed polygon by pixel-center containment (even-odd).
    pub fn fill_mask(&self, width: usize, height: usize) -> Mask {
        let mut mask = Mask::new(width, height);
        let pts = &self.points;
        if pts.len() < 3 {
            return mask;
        }
        let mut crossings: Vec<f64> = Vec::new();
        for y in 0..height {
            let yc = y as f64;
            crossings.clear();
            for i in 0..pts.len() {
                let a = pts[i];
                let b = pts[(i + 1) % pts.len()];
                if (a.y <= yc && b.y > yc) || (b.y <= yc && a.y > yc) {
                    crossings.push(a.x + (yc - a.y) / (b.y - a.y) * (b.x - a.x));
                }
            }
            crossings.sort_by(f64::total_cmp);
            for pair in crossings.chunks_exact(2) {
                let x0 = libm::ceil(pair[0]).max(0.0);
                let x1 = libm::floor(pair[1]).min(width as f64 - 1.0);
                if x1 < x0 {
                    continue;
                }
                for x in x0 as usize..=x1 as usize {
                    mask.set(x, y, true);
                }
            }
        }
        mask
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_median(frame: &Frame, radius: usize, x: usize, y: usize) -> u8 {
        let (w, h) = frame.dims();
        let mut window = Vec::new();
        for yy in y.saturating_sub(radius)..=(y + radius).min(h - 1) {
            for xx in x.saturating_sub(radius)..=(x + radius).min(w - 1) {
                window.push(frame.get(xx, yy));
            }
        }
        window.sort_unstable();
        window[(window.len() - 1) / 2]
    }

    #[test]
    fn constant_frame_is_fixed_point() {
        let f = Frame::filled(9, 7, 77).unwrap();
        assert_eq!(median_filter(&f, 1).unwrap(), f);
        assert_eq!(median_filter(&f, 3).unwrap(), f);
    }

    #[test]
    fn isolated_spike_removed() {
        let f = Frame::new(3, 3, vec![0, 0, 0, 0, 255, 0, 0, 0, 0]).unwrap();
        let m = median_filter(&f, 1).unwrap();
        assert_eq!(m.get(1, 1), 0);
    }

    #[test]
    fn even_window_takes_lower_middle() {
        // Corner window holds [10, 20, 30, 40].
        let f = Frame::new(2, 2, vec![10, 20, 30, 40]).unwrap();
        let m = median_filter(&f, 1).unwrap();
        assert_eq!(m.pixels(), &[20, 20, 20, 20]);
    }

    #[test]
    fn zero_radius_rejected() {
        let f = Frame::filled(2, 2, 1).unwrap();
        assert!(median_filter(&f, 0).is_err());
    }

    #[test]
    fn salt_noise_mostly_removed() {
        let mut state = 0x1234_5678u32;
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 17;
            state ^= state << 5;
            state
        };
        let mut f = Frame::filled(64, 64, 90).unwrap();
        for _ in 0..41 {
            let i = (next() % 4096) as usize;
            f.pixels_mut()[i] = 255;
        }
        let m = median_filter(&f, 1).unwrap();
        for y in 0..64 {
            for x in 0..64 {
                assert_eq!(m.get(x, y), brute_median(&f, 1, x, y));
            }
        }
        let same = m.pixels().iter().filter(|&&v| v == 90).count();
        assert!(same as f64 >= 0.999 * 4096.0, "{same}");
    }

    #[test]
    fn centers() {
        assert_eq!(frame_center(&Frame::filled(384, 384, 0).unwrap()), (192, 192));
        assert_eq!(frame_center(&Frame::filled(3, 5, 0).unwrap()), (1, 2));
        assert_eq!(frame_center(&Frame::filled(1, 1, 0).unwrap()), (0, 0));
    }

    #[test]
    fn frame_rejects_bad_dims() {
        assert!(Frame::new(0, 3, vec![]).is_err());
        assert!(Frame::new(2, 2, vec![0; 3]).is_err());
    }

    #[test]
    fn sequence_checks_dims() {
        let a = Frame::filled(2, 2, 0).unwrap();
        let b = Frame::filled(3, 2, 0).unwrap();
        assert_eq!(Sequence::new(vec![]), Err(Error::EmptySequence));
        assert!(matches!(Sequence::new(vec![a, b]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn contour_drops_duplicates() {
        let p = |x, y| Point::new(x, y);
        let c = Contour::new(vec![p(0., 0.), p(0., 0.), p(1., 0.), p(1., 1.), p(0., 0.)], true);
        assert_eq!(c.len(), 3);
        assert_eq!(c.segments().count(), 3);
    }

    #[test]
    fn densify_spacing() {
        let c = Contour::new(vec![Point::new(0., 0.), Point::new(10., 0.), Point::new(10., 10.)], true);
        let d = c.densified(0.5);
        for (a, b) in d.segments() {
            assert!(a.distance(b) <= 0.5 + 1e-12);
        }
    }

    #[test]
    fn polygon_fill_square() {
        let c = Contour::new(
            vec![Point::new(1.5, 1.5), Point::new(5.5, 1.5), Point::new(5.5, 4.5), Point::new(1.5, 4.5)],
            true,
        );
        let m = c.fill_mask(8, 8);
        assert_eq!(m.count(), 4 * 3);
        assert!(m.get(2, 2) && m.get(5, 4) && !m.get(1, 2));
    }

    proptest! {
        #[test]
        fn median_matches_brute_force(w in 1usize..12, h in 1usize..12, r in 1usize..4, seed in any::<u64>()) {
            let mut s = seed | 1;
            let f = Frame::from_fn(w, h, |_, _| { s ^= s << 7; s ^= s >> 9; (s % 256) as u8 }).unwrap();
            let m = median_filter(&f, r).unwrap();
            for y in 0..h {
                for x in 0..w {
                    prop_assert_eq!(m.get(x, y), brute_median(&f, r, x, y));
                    prop_assert!(f.pixels().contains(&m.get(x, y)));
                }
            }
        }
    }
}
