//! Sobel gradient magnitude and its directional maxima (MGM points).

use alloc::vec;
use alloc::vec::Vec;

use crate::imaging::{Frame, Mask};

/// Sobel magnitude with clamped borders, row-major.
pub fn sobel(frame: &Frame) -> (Vec<f32>, Vec<f32>) {
    let (w, h) = frame.dims();
    let at = |x: isize, y: isize| -> f32 {
        let xc = x.clamp(0, w as isize - 1) as usize;
        let yc = y.clamp(0, h as isize - 1) as usize;
        frame.get(xc, yc) as f32
    };
    let mut gx = vec![0f32; w * h];
    let mut gy = vec![0f32; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let i = y as usize * w + x as usize;
            gx[i] = (at(x + 1, y - 1) + 2.0 * at(x + 1, y) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x - 1, y) + at(x - 1, y + 1));
            gy[i] = (at(x - 1, y + 1) + 2.0 * at(x, y + 1) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x, y - 1) + at(x + 1, y - 1));
        }
    }
    (gx, gy)
}

/// Pixels whose gradient magnitude is a maximum along the quantized gradient
/// direction (non-maximum suppression).
pub fn gradient_maxima(frame: &Frame) -> Mask {
    let (w, h) = frame.dims();
    let (gx, gy) = sobel(frame);
    let mag: Vec<f32> = gx.iter().zip(&gy).map(|(a, b)| libm::hypotf(*a, *b)).collect();
    let get = |x: isize, y: isize| -> f32 {
        if x < 0 || y < 0 || x >= w as isize || y >= h as isize {
            0.0
        } else {
            mag[y as usize * w + x as usize]
        }
    };
    // tan(22.5°) and tan(67.5°)
    const T1: f32 = 0.414_213_57;
    const T2: f32 = 2.414_213_6;
    Mask::from_fn(w, h, |x, y| {
        let i = y * w + x;
        let m = mag[i];
        if m <= 0.0 {
            return false;
        }
        let (dx, dy) = (gx[i], gy[i]);
        let (ax, ay) = (dx.abs(), dy.abs());
        let (ox, oy): (isize, isize) = if ay <= T1 * ax {
            (1, 0)
        } else if ay >= T2 * ax {
            (0, 1)
        } else if (dx > 0.0) == (dy > 0.0) {
            (1, 1)
        } else {
            (1, -1)
        };
        let (xi, yi) = (x as isize, y as isize);
        m >= get(xi + ox, yi + oy) && m >= get(xi - ox, yi - oy)
    })
}
