//! key=value configuration for runs and phantom specs.

use erel_core::geometry::Ellipse;
use erel_core::phantom::{Artifact, PhantomSpec};
use erel_core::preprocess::DEFAULT_RINGDOWN_THRESHOLD;
use erel_core::{Point, SegmentParams};

use crate::error::{IvusError, Result};

/// Non-empty `key = value` lines with their 1-based line numbers. Keys are
/// lowercased with dashes folded to underscores.
pub fn parse_kv(text: &str) -> Result<Vec<(usize, String, String)>> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| IvusError::Parse { line: n + 1, message: format!("expected key = value, got {line:?}") })?;
        out.push((n + 1, k.trim().to_ascii_lowercase().replace('-', "_"), v.trim().to_string()));
    }
    Ok(out)
}

fn at_line(line: usize, e: IvusError) -> IvusError {
    match e {
        IvusError::Config(m) => IvusError::Config(format!("line {line}: {m}")),
        other => IvusError::Config(format!("line {line}: {other}")),
    }
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| IvusError::Config(format!("{key}: cannot parse {value:?}")))
}

fn flag(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" => Ok(false),
        _ => Err(IvusError::Config(format!("{key}: expected a boolean, got {value:?}"))),
    }
}

/// Parses `x,y`; `center` means the frame center.
pub fn parse_seed(value: &str) -> Result<Option<(usize, usize)>> {
    if value.eq_ignore_ascii_case("center") {
        return Ok(None);
    }
    let (x, y) = value.split_once(',').ok_or_else(|| IvusError::Config(format!("seed: expected x,y, got {value:?}")))?;
    Ok(Some((num("seed", x.trim())?, num("seed", y.trim())?)))
}

/// Every run tunable, defaults first, then config file, then flags.
#[derive(Debug, Clone, PartialEq)]
pub struct Tunables {
    pub segment: SegmentParams,
    pub ringdown: bool,
    pub ringdown_threshold: u8,
    pub mm_per_px: Option<f64>,
    /// Worker threads; 0 picks the machine's parallelism.
    pub jobs: usize,
    pub trace: bool,
}

impl Default for Tunables {
    fn default() -> Self {
        Tunables {
            segment: SegmentParams::default(),
            ringdown: true,
            ringdown_threshold: DEFAULT_RINGDOWN_THRESHOLD,
            mm_per_px: None,
            jobs: 0,
            trace: false,
        }
    }
}

impl Tunables {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let s = &mut self.segment;
        match key {
            "alpha" => s.alpha = num(key, value)?,
            "beta" => s.beta = num(key, value)?,
            "amin_frac" => s.amin_frac = num(key, value)?,
            "amax_frac" => s.amax_frac = num(key, value)?,
            "seed" => s.seed = parse_seed(value)?,
            "despeckle_radius" => s.despeckle_radius = num(key, value)?,
            "min_peaks" => s.selection.min_peaks = num(key, value)?,
            "zmin" => s.selection.z_min = num(key, value)?,
            "zmax" => s.selection.z_max = num(key, value)?,
            "ringdown_threshold" => self.ringdown_threshold = num(key, value)?,
            "ringdown" => self.ringdown = flag(key, value)?,
            "no_ringdown" => self.ringdown = !flag(key, value)?,
            "mm_per_px" => self.mm_per_px = Some(num(key, value)?),
            "jobs" => self.jobs = num(key, value)?,
            "trace" => self.trace = flag(key, value)?,
            _ => return Err(IvusError::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    pub fn apply_config(&mut self, text: &str) -> Result<()> {
        for (line, key, value) in parse_kv(text)? {
            self.set(&key, &value).map_err(|e| at_line(line, e))?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.segment.validate().map_err(|e| IvusError::Config(e.to_string()))?;
        if let Some(s) = self.mm_per_px {
            if !(s > 0.0 && s.is_finite()) {
                return Err(IvusError::Config("mm_per_px must be positive".to_string()));
            }
        }
        Ok(())
    }
}

fn ellipse_lines(out: &mut String, name: &str, e: &Ellipse) {
    out.push_str(&format!("{name}_cx = {}\n{name}_cy = {}\n{name}_a = {}\n{name}_b = {}\n{name}_theta = {}\n", e.center.x, e.center.y, e.a, e.b, e.theta));
}

pub fn phantom_to_kv(spec: &PhantomSpec) -> String {
    let mut out = format!("width = {}\nheight = {}\n", spec.width, spec.height);
    ellipse_lines(&mut out, "lumen", &spec.lumen);
    ellipse_lines(&mut out, "media", &spec.media);
    let l = &spec.intensities;
    out.push_str(&format!(
        "media_thickness = {}\nplaque_contrast = {}\nplaque_angle = {}\nlumen_mean = {}\nintima_mean = {}\nmedia_mean = {}\nadventitia_mean = {}\nspeckle_sigma = {}\nrng_seed = {}\n",
        spec.media_thickness, spec.plaque_contrast, spec.plaque_angle, l.lumen, l.intima, l.media, l.adventitia, spec.speckle_sigma, spec.rng_seed
    ));
    for a in &spec.artifacts {
        match *a {
            Artifact::Shadow { start, end, attenuation } => out.push_str(&format!("shadow = {start} {end} {attenuation}\n")),
            Artifact::Bifurcation { start, end, reach } => out.push_str(&format!("bifurcation = {start} {end} {reach}\n")),
            Artifact::RingDown { x, y, size, intensity } => out.push_str(&format!("ringdown = {x} {y} {size} {intensity}\n")),
        }
    }
    out
}

fn fields<const N: usize>(key: &str, value: &str) -> Result<[f64; N]> {
    let parts: Vec<&str> = value.split_whitespace().collect();
    if parts.len() != N {
        return Err(IvusError::Config(format!("{key}: expected {N} values")));
    }
    let mut out = [0.0; N];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = num(key, p)?;
    }
    Ok(out)
}

/// Parses a phantom spec; unspecified keys keep [`PhantomSpec::default`]
/// values. The spec is validated.
pub fn phantom_from_kv(text: &str) -> Result<PhantomSpec> {
    let mut s = PhantomSpec::default();
    let ell = |e: &mut Ellipse, field: &str, v: f64| match field {
        "cx" => e.center = Point::new(v, e.center.y),
        "cy" => e.center = Point::new(e.center.x, v),
        "a" => e.a = v,
        "b" => e.b = v,
        _ => e.theta = v,
    };
    for (line, key, value) in parse_kv(text)? {
        let at = |e: IvusError| at_line(line, e);
        let v = || num::<f64>(&key, &value).map_err(at);
        match key.as_str() {
            "width" => s.width = num(&key, &value).map_err(at)?,
            "height" => s.height = num(&key, &value).map_err(at)?,
            "rng_seed" => s.rng_seed = num(&key, &value).map_err(at)?,
            k if k.starts_with("lumen_") && ["cx", "cy", "a", "b", "theta"].contains(&&k[6..]) => ell(&mut s.lumen, &k[6..], v()?),
            k if k.starts_with("media_") && ["cx", "cy", "a", "b", "theta"].contains(&&k[6..]) => ell(&mut s.media, &k[6..], v()?),
            "media_thickness" => s.media_thickness = v()?,
            "plaque_contrast" => s.plaque_contrast = v()?,
            "plaque_angle" => s.plaque_angle = v()?,
            "lumen_mean" => s.intensities.lumen = v()?,
            "intima_mean" => s.intensities.intima = v()?,
            "media_mean" => s.intensities.media = v()?,
            "adventitia_mean" => s.intensities.adventitia = v()?,
            "speckle_sigma" => s.speckle_sigma = v()?,
            "shadow" => {
                let [start, end, attenuation] = fields(&key, &value).map_err(at)?;
                s.artifacts.push(Artifact::Shadow { start, end, attenuation });
            }
            "bifurcation" => {
                let [start, end, reach] = fields(&key, &value).map_err(at)?;
                s.artifacts.push(Artifact::Bifurcation { start, end, reach });
            }
            "ringdown" => {
                let [x, y, size, intensity] = fields(&key, &value).map_err(at)?;
                if [x, y, size].iter().any(|v| *v < 0.0 || v.fract() != 0.0) || !(0.0..=255.0).contains(&intensity) || intensity.fract() != 0.0 {
                    return Err(at(IvusError::Config("ringdown: expected non-negative integers x y size and intensity <= 255".to_string())));
                }
                s.artifacts.push(Artifact::RingDown { x: x as usize, y: y as usize, size: size as usize, intensity: intensity as u8 });
            }
            _ => return Err(at(IvusError::Config(format!("unknown key {key:?}")))),
        }
    }
    s.validate()?;
    Ok(s)
}
