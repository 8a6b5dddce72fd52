//! Gray frame with lumen, media and dashed gold curves drawn on top.

use erel_core::{Contour, Frame};

pub const LUMEN_COLOR: [u8; 3] = [255, 0, 255];
pub const MEDIA_COLOR: [u8; 3] = [0, 255, 0];
pub const GOLD_COLOR: [u8; 3] = [255, 200, 0];

/// Dash and gap length along a gold curve, in pixels.
const DASH: f64 = 4.0;

pub struct Overlay {
    width: usize,
    height: usize,
    rgb: Vec<u8>,
}

impl Overlay {
    pub fn new(frame: &Frame) -> Self {
        let rgb = frame.pixels().iter().flat_map(|&v| [v, v, v]).collect();
        Overlay { width: frame.width(), height: frame.height(), rgb }
    }

    fn plot(&mut self, x: f64, y: f64, color: [u8; 3]) {
        let (xi, yi) = (x.round(), y.round());
        if xi < 0.0 || yi < 0.0 || xi >= self.width as f64 || yi >= self.height as f64 {
            return;
        }
        let i = (yi as usize * self.width + xi as usize) * 3;
        self.rgb[i..i + 3].copy_from_slice(&color);
    }

    /// Draws `contour`; with `dashed`, alternating runs of [`DASH`] pixels
    /// are skipped.
    pub fn draw(&mut self, contour: &Contour, color: [u8; 3], dashed: bool) {
        let mut travelled = 0.0;
        for (a, b) in contour.segments() {
            let len = a.distance(b);
            let steps = (len * 2.0).ceil().max(1.0) as usize;
            for k in 0..=steps {
                let t = k as f64 / steps as f64;
                let s = travelled + t * len;
                if dashed && (s / DASH) as u64 % 2 == 1 {
                    continue;
                }
                self.plot(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y), color);
            }
            travelled += len;
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn rgb(&self) -> &[u8] {
        &self.rgb
    }

    pub fn to_ppm(&self) -> Vec<u8> {
        crate::pgm::encode_ppm(self.width, self.height, &self.rgb)
    }
}
