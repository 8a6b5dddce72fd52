//! Ellipses from second central moments, and their rasterization.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};
use crate::imaging::{Contour, Mask, Point};

const DEGENERATE_DET: f64 = 1e-12;

/// Center, semi-axes `a >= b > 0` and major-axis angle in `(−π/2, π/2]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ellipse {
    pub center: Point,
    pub a: f64,
    pub b: f64,
    pub theta: f64,
}

/// Folds an angle into `(−π/2, π/2]`.
pub fn normalize_angle(theta: f64) -> f64 {
    let mut t = libm::fmod(theta, PI);
    if t <= -FRAC_PI_2 {
        t += PI;
    } else if t > FRAC_PI_2 {
        t -= PI;
    }
    t
}

impl Ellipse {
    pub fn new(center: Point, a: f64, b: f64, theta: f64) -> Result<Self> {
        if !(b > 0.0) || !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidParameter("ellipse axes must be positive"));
        }
        let (a, b, theta) = if a >= b { (a, b, theta) } else { (b, a, theta + FRAC_PI_2) };
        Ok(Ellipse { center, a, b, theta: normalize_angle(theta) })
    }

    pub fn area(&self) -> f64 {
        PI * self.a * self.b
    }

    /// `cx² + 2dxy + ey²` in the ellipse frame; `<= 1` inside.
    pub fn implicit(&self, p: Point) -> f64 {
        let (s, c) = libm::sincos(self.theta);
        let dx = p.x - self.center.x;
        let dy = p.y - self.center.y;
        let u = c * dx + s * dy;
        let v = -s * dx + c * dy;
        (u / self.a) * (u / self.a) + (v / self.b) * (v / self.b)
    }

    pub fn contains(&self, p: Point) -> bool {
        self.implicit(p) <= 1.0
    }

    /// Coefficients `(c, d, e)` of `cx² + 2dxy + ey² <= 1` about the center.
    pub fn coefficients(&self) -> (f64, f64, f64) {
        let (s, c) = libm::sincos(self.theta);
        let ia = 1.0 / (self.a * self.a);
        let ib = 1.0 / (self.b * self.b);
        (c * c * ia + s * s * ib, s * c * (ia - ib), s * s * ia + c * c * ib)
    }
}

/// Ellipse with the same second central moments as a region.
///
/// Uses `M = 1/(4 (μxx μyy − μxy²)) · [[μyy, −μxy], [−μxy, μxx]]`, i.e. a
/// quarter of the inverse covariance, so a uniform disk of radius `R`
/// (`μxx = μyy = R²/4`) maps back onto radius `R`. The semi-major axis comes
/// from the smaller eigenvalue and its eigenvector gives the orientation.
pub fn ellipse_from_moments(centroid: Point, mu_xx: f64, mu_xy: f64, mu_yy: f64) -> Result<Ellipse> {
    let det = mu_xx * mu_yy - mu_xy * mu_xy;
    let scale = (mu_xx * mu_yy).max(1.0);
    if !(det > DEGENERATE_DET * scale) || !det.is_finite() {
        return Err(Error::DegenerateRegion);
    }
    let k = 1.0 / (4.0 * det);
    let (c, d, e) = (k * mu_yy, -k * mu_xy, k * mu_xx);
    // Eigenvalues of the symmetric 2×2 [[c, d], [d, e]].
    let mean = 0.5 * (c + e);
    let half_gap = libm::hypot(0.5 * (c - e), d);
    let lambda_min = mean - half_gap;
    let lambda_max = mean + half_gap;
    if !(lambda_min > 0.0) {
        return Err(Error::DegenerateRegion);
    }
    // Eigenvector of λmin: (d, λmin − c) or (λmin − e, d), whichever is
    // better conditioned.
    let theta = if half_gap <= 1e-12 * mean {
        0.0
    } else {
        let (vx, vy) = if (lambda_min - c).abs() + d.abs() >= (lambda_min - e).abs() + d.abs() {
            (d, lambda_min - c)
        } else {
            (lambda_min - e, d)
        };
        libm::atan2(vy, vx)
    };
    Ok(Ellipse {
        center: centroid,
        a: 1.0 / libm::sqrt(lambda_min),
        b: 1.0 / libm::sqrt(lambda_max),
        theta: normalize_angle(theta),
    })
}

/// `n` points `center + R(θ)·(a cos t, b sin t)` at uniform `t`, closed.
pub fn rasterize_ellipse(e: &Ellipse, n: usize) -> Contour {
    let (s, c) = libm::sincos(e.theta);
    let points: Vec<Point> = (0..n)
        .map(|k| {
            let t = 2.0 * PI * k as f64 / n as f64;
            let (st, ct) = libm::sincos(t);
            let u = e.a * ct;
            let v = e.b * st;
            Point::new(e.center.x + c * u - s * v, e.center.y + s * u + c * v)
        })
        .collect();
    Contour::new(points, true)
}

/// Pixels whose centers satisfy the implicit inequality, clipped to the frame.
pub fn ellipse_mask(e: &Ellipse, width: usize, height: usize) -> Mask {
    let mut mask = Mask::new(width, height);
    let r = e.a.max(e.b);
    let x0 = libm::floor(e.center.x - r).max(0.0);
    let y0 = libm::floor(e.center.y - r).max(0.0);
    let x1 = libm::ceil(e.center.x + r).min(width as f64 - 1.0);
    let y1 = libm::ceil(e.center.y + r).min(height as f64 - 1.0);
    if x1 < x0 || y1 < y0 {
        return mask;
    }
    for y in y0 as usize..=y1 as usize {
        for x in x0 as usize..=x1 as usize {
            if e.contains(Point::new(x as f64, y as f64)) {
                mask.set(x, y, true);
            }
        }
    }
    mask
}

/// Centroid and area-normalized central moments of a mask, by direct summation.
pub fn mask_moments(mask: &Mask) -> Option<(Point, f64, f64, f64, usize)> {
    let n = mask.count();
    if n == 0 {
        return None;
    }
    let a = n as f64;
    let (mut sx, mut sy) = (0.0, 0.0);
    for (x, y) in mask.iter_set() {
        sx += x as f64;
        sy += y as f64;
    }
    let (cx, cy) = (sx / a, sy / a);
    let (mut xx, mut xy, mut yy) = (0.0, 0.0, 0.0);
    for (x, y) in mask.iter_set() {
        let dx = x as f64 - cx;
        let dy = y as f64 - cy;
        xx += dx * dx;
        xy += dx * dy;
        yy += dy * dy;
    }
    Some((Point::new(cx, cy), xx / a, xy / a, yy / a, n))
}
