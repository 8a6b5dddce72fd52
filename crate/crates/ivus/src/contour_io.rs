//! Plain-text contours: one "x y" pair per line.

use std::fs;
use std::path::Path;

use erel_core::{Contour, Point};

use crate::error::{IvusError, Result};

/// Parses a closed contour; blank lines and `#` comments are skipped.
pub fn parse_contour(text: &str) -> Result<Contour> {
    let mut points = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = |message: &str| IvusError::Parse { line: n + 1, message: message.to_string() };
        let mut fields = line.split(|c: char| c.is_whitespace() || c == ',').filter(|s| !s.is_empty());
        let mut coord = || -> Result<f64> {
            let v: f64 = fields.next().ok_or_else(|| bad("expected two coordinates"))?.parse().map_err(|_| bad("not a number"))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(bad("coordinate is not finite"))
            }
        };
        let x = coord()?;
        let y = coord()?;
        if fields.next().is_some() {
            return Err(bad("more than two coordinates"));
        }
        points.push(Point::new(x, y));
    }
    let contour = Contour::new(points, true);
    if contour.len() < 3 {
        return Err(IvusError::Parse { line: 0, message: "a closed contour needs at least 3 distinct points".to_string() });
    }
    Ok(contour)
}

pub fn format_contour(contour: &Contour) -> String {
    let mut out = String::with_capacity(contour.len() * 20);
    for p in contour.points() {
        out.push_str(&format!("{:.4} {:.4}\n", p.x, p.y));
    }
    out
}

pub fn load_contour(path: &Path) -> Result<Contour> {
    let text = fs::read_to_string(path).map_err(|e| IvusError::io(path, e))?;
    parse_contour(&text)
}

pub fn save_contour(path: &Path, contour: &Contour) -> Result<()> {
    fs::write(path, format_contour(contour)).map_err(|e| IvusError::io(path, e))
}
