//! Synthetic IVUS-like frames with known lumen and media geometry.
//!
//! Four concentric layers are painted (dark lumen, bright intima, dark media
//! band, bright adventitia), multiplied by log-normal speckle and then
//! overlaid with optional shadow, bifurcation and ring-down artifacts.

use alloc::vec::Vec;
use core::f64::consts::PI;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{rasterize_ellipse, Ellipse};
use crate::imaging::{Contour, Frame, Point, Sequence};

/// Points per ground-truth contour.
pub const GROUND_TRUTH_POINTS: usize = 360;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerIntensities {
    pub lumen: f64,
    pub intima: f64,
    pub media: f64,
    pub adventitia: f64,
}

impl Default for LayerIntensities {
    fn default() -> Self {
        LayerIntensities { lumen: 40.0, intima: 160.0, media: 70.0, adventitia: 220.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Artifact {
    /// Acoustic shadow behind the intima over an angular wedge around the
    /// lumen center; tissue intensity is multiplied by `attenuation`.
    Shadow { start: f64, end: f64, attenuation: f64 },
    /// Side branch: over the wedge, the adventitia up to `reach` times the
    /// media's major axis takes the lumen intensity.
    Bifurcation { start: f64, end: f64, reach: f64 },
    /// Constant bright square present identically in every frame.
    RingDown { x: usize, y: usize, size: usize, intensity: u8 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhantomSpec {
    pub width: usize,
    pub height: usize,
    pub lumen: Ellipse,
    pub media: Ellipse,
    /// Thickness of the dark media band just inside the media border; the
    /// intima fills the wall between the lumen and this band.
    pub media_thickness: f64,
    /// Intima echogenicity varies around the lumen as
    /// `intima · (1 + c·cos(φ − plaque_angle))`; `c` in `[0, 1)`.
    pub plaque_contrast: f64,
    pub plaque_angle: f64,
    pub intensities: LayerIntensities,
    pub speckle_sigma: f64,
    pub artifacts: Vec<Artifact>,
    pub rng_seed: u64,
}

impl Default for PhantomSpec {
    fn default() -> Self {
        PhantomSpec {
            width: 384,
            height: 384,
            lumen: Ellipse { center: Point::new(195.0, 189.0), a: 48.0, b: 38.0, theta: 0.3 },
            media: Ellipse { center: Point::new(192.0, 192.0), a: 124.0, b: 108.0, theta: -0.2 },
            media_thickness: 8.0,
            plaque_contrast: 0.2,
            plaque_angle: 0.8,
            intensities: LayerIntensities::default(),
            speckle_sigma: 0.3,
            artifacts: Vec::new(),
            rng_seed: 1,
        }
    }
}

/// Exact lumen and media borders of a phantom.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub lumen: Ellipse,
    pub media: Ellipse,
    pub lumen_contour: Contour,
    pub media_contour: Contour,
}

fn unit(rng: &mut ChaCha8Rng) -> f64 {
    // 53 random mantissa bits in (0, 1].
    ((rng.next_u64() >> 11) as f64 + 1.0) / (1u64 << 53) as f64
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1 = unit(rng);
    let u2 = unit(rng);
    libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(2.0 * PI * u2)
}

/// Whether `angle` lies on the counter-clockwise arc from `start` to `end`.
fn in_wedge(angle: f64, start: f64, end: f64) -> bool {
    let wrap = |v: f64| {
        let r = libm::fmod(v, 2.0 * PI);
        if r < 0.0 {
            r + 2.0 * PI
        } else {
            r
        }
    };
    wrap(angle - start) <= wrap(end - start)
}

impl PhantomSpec {
    /// Clean phantom with geometry drawn from `seed`: lumen and media centers,
    /// axes and orientations vary around [`PhantomSpec::default`].
    pub fn randomized(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
        let mut span = |lo: f64, hi: f64| lo + (hi - lo) * unit(&mut rng);
        let lumen_a = span(38.0, 55.0);
        let lumen_b = lumen_a * span(0.7, 0.95);
        let media_a = span(112.0, 130.0);
        let media_b = media_a * span(0.82, 0.92);
        PhantomSpec {
            lumen: Ellipse::new(Point::new(192.0 + span(-6.0, 6.0), 192.0 + span(-6.0, 6.0)), lumen_a, lumen_b, span(-1.5, 1.5))
                .expect("positive axes"),
            media: Ellipse::new(Point::new(192.0 + span(-4.0, 4.0), 192.0 + span(-4.0, 4.0)), media_a, media_b, span(-1.5, 1.5))
                .expect("positive axes"),
            media_thickness: span(6.0, 10.0),
            plaque_angle: span(-PI, PI),
            rng_seed: seed,
            ..PhantomSpec::default()
        }
    }

    /// [`PhantomSpec::randomized`] plus a 0.9 rad acoustic shadow whose
    /// direction also follows `seed`.
    pub fn randomized_shadow(seed: u64) -> Self {
        let start = libm::fmod(seed as f64 * 2.399, 2.0 * PI);
        let mut spec = Self::randomized(seed);
        spec.artifacts.push(Artifact::Shadow { start, end: start + 0.9, attenuation: 0.35 });
        spec
    }

    fn intima_outer(&self) -> Ellipse {
        Ellipse { a: self.media.a - self.media_thickness, b: self.media.b - self.media_thickness, ..self.media }
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidPhantom("frame size must be positive"));
        }
        for e in [&self.lumen, &self.media] {
            if !(e.b > 0.0 && e.a >= e.b) {
                return Err(Error::InvalidPhantom("ellipse axes must satisfy a >= b > 0"));
            }
        }
        if !(self.media_thickness > 0.0 && self.media_thickness < self.media.b) {
            return Err(Error::InvalidPhantom("media thickness must lie in (0, media minor axis)"));
        }
        if !(0.0..1.0).contains(&self.plaque_contrast) {
            return Err(Error::InvalidPhantom("plaque contrast must lie in [0, 1)"));
        }
        if !(self.speckle_sigma >= 0.0) {
            return Err(Error::InvalidPhantom("speckle sigma must be non-negative"));
        }
        let l = &self.intensities;
        let ordered = l.lumen < l.media && l.media < l.intima && l.intima <= l.adventitia;
        let in_range = [l.lumen, l.intima, l.media, l.adventitia].iter().all(|v| (0.0..=255.0).contains(v));
        if !ordered || !in_range {
            return Err(Error::InvalidPhantom("layer means must satisfy lumen < media < intima <= adventitia within [0, 255]"));
        }
        let outer = self.intima_outer();
        if rasterize_ellipse(&self.lumen, 720).points().iter().any(|p| outer.implicit(*p) >= 1.0) {
            return Err(Error::InvalidPhantom("lumen must lie strictly inside the intima"));
        }
        let seed = Point::new((self.width / 2) as f64, (self.height / 2) as f64);
        if !self.lumen.contains(seed) {
            return Err(Error::InvalidPhantom("frame center must fall inside the lumen"));
        }
        for a in &self.artifacts {
            match *a {
                Artifact::Shadow { attenuation, .. } if !(attenuation > 0.0 && attenuation <= 1.0) => {
                    return Err(Error::InvalidPhantom("shadow attenuation must lie in (0, 1]"));
                }
                Artifact::Bifurcation { reach, .. } if !(reach >= 1.0) => {
                    return Err(Error::InvalidPhantom("bifurcation reach must be >= 1"));
                }
                Artifact::RingDown { x, y, size, .. } if size == 0 || x + size > self.width || y + size > self.height => {
                    return Err(Error::InvalidPhantom("ring-down square must fit in the frame"));
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Noise-free mean intensity at a pixel center, artifacts included
    /// (ring-down squares aside).
    fn layer_mean(&self, p: Point, intima_outer: &Ellipse) -> f64 {
        let l = &self.intensities;
        let c = self.lumen.center;
        let angle = libm::atan2(p.y - c.y, p.x - c.x);
        let intima = intima_outer.contains(p);
        let mut value = if self.lumen.contains(p) {
            l.lumen
        } else if intima {
            l.intima * (1.0 + self.plaque_contrast * libm::cos(angle - self.plaque_angle))
        } else if self.media.contains(p) {
            l.media
        } else {
            l.adventitia
        };
        for a in &self.artifacts {
            match *a {
                Artifact::Shadow { start, end, attenuation } => {
                    if !intima && in_wedge(angle, start, end) {
                        value *= attenuation;
                    }
                }
                Artifact::Bifurcation { start, end, reach } => {
                    let grown = Ellipse { a: self.media.a * reach, b: self.media.b * reach, ..self.media };
                    if !self.media.contains(p) && grown.contains(p) && in_wedge(angle, start, end) {
                        value = l.lumen;
                    }
                }
                Artifact::RingDown { .. } => {}
            }
        }
        value
    }

    fn render(&self, rng: &mut ChaCha8Rng) -> Frame {
        let outer = self.intima_outer();
        let mut frame = Frame::from_fn(self.width, self.height, |x, y| {
            let mean = self.layer_mean(Point::new(x as f64, y as f64), &outer);
            let factor = if self.speckle_sigma > 0.0 { libm::exp(self.speckle_sigma * gaussian(rng)) } else { 1.0 };
            libm::round(mean * factor).clamp(0.0, 255.0) as u8
        })
        .expect("validated frame size");
        for a in &self.artifacts {
            if let Artifact::RingDown { x, y, size, intensity } = *a {
                for yy in y..y + size {
                    for xx in x..x + size {
                        frame.set(xx, yy, intensity);
                    }
                }
            }
        }
        frame
    }

    pub fn ground_truth(&self) -> GroundTruth {
        GroundTruth {
            lumen: self.lumen,
            media: self.media,
            lumen_contour: rasterize_ellipse(&self.lumen, GROUND_TRUTH_POINTS),
            media_contour: rasterize_ellipse(&self.media, GROUND_TRUTH_POINTS),
        }
    }
}

/// One phantom frame, deterministic in `spec.rng_seed`.
pub fn generate_phantom(spec: &PhantomSpec) -> Result<(Frame, GroundTruth)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    Ok((spec.render(&mut rng), spec.ground_truth()))
}

/// `count` frames with independent speckle; frame 0 equals
/// [`generate_phantom`]'s output and ring-down squares stay fixed.
pub fn generate_sequence(spec: &PhantomSpec, count: usize) -> Result<(Sequence, GroundTruth)> {
    spec.validate()?;
    if count == 0 {
        return Err(Error::EmptySequence);
    }
    let frames = (0..count as u64)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
            rng.set_stream(i);
            spec.render(&mut rng)
        })
        .collect();
    Ok((Sequence::new(frames)?, spec.ground_truth()))
}
