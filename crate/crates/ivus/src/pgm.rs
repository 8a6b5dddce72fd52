//! Binary PGM (P5) frames and PPM (P6) overlays.

use std::fs;
use std::path::Path;

use erel_core::Frame;

use crate::error::{IvusError, Result};

struct Header {
    width: usize,
    height: usize,
    maxval: u32,
    data_start: usize,
}

fn skip_space_and_comments(bytes: &[u8], mut i: usize) -> usize {
    while i < bytes.len() {
        if bytes[i] == b'#' {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
        } else if bytes[i].is_ascii_whitespace() {
            i += 1;
        } else {
            break;
        }
    }
    i
}

fn number(bytes: &[u8], i: &mut usize) -> Result<u32> {
    *i = skip_space_and_comments(bytes, *i);
    let start = *i;
    while *i < bytes.len() && bytes[*i].is_ascii_digit() {
        *i += 1;
    }
    if start == *i {
        return Err(if *i >= bytes.len() { IvusError::ShortRead } else { IvusError::MalformedHeader("expected a number") });
    }
    std::str::from_utf8(&bytes[start..*i])
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or(IvusError::MalformedHeader("number out of range"))
}

fn header(bytes: &[u8], magic: &[u8; 2]) -> Result<Header> {
    if bytes.len() < 2 {
        return Err(IvusError::ShortRead);
    }
    if bytes[0] != b'P' {
        return Err(IvusError::MalformedHeader("missing magic number"));
    }
    if &bytes[..2] != magic {
        return Err(IvusError::UnsupportedVariant);
    }
    let mut i = 2;
    let width = number(bytes, &mut i)? as usize;
    let height = number(bytes, &mut i)? as usize;
    let maxval = number(bytes, &mut i)?;
    // Exactly one whitespace byte separates the header from the raster.
    match bytes.get(i) {
        Some(b) if b.is_ascii_whitespace() => i += 1,
        Some(_) => return Err(IvusError::MalformedHeader("no whitespace after maxval")),
        None => return Err(IvusError::ShortRead),
    }
    Ok(Header { width, height, maxval, data_start: i })
}

pub fn decode_pgm(bytes: &[u8]) -> Result<Frame> {
    let h = header(bytes, b"P5")?;
    if h.maxval != 255 {
        return Err(IvusError::Maxval(h.maxval));
    }
    let n = h.width.checked_mul(h.height).ok_or(IvusError::MalformedHeader("dimensions overflow"))?;
    let data = &bytes[h.data_start..];
    if data.len() < n {
        return Err(IvusError::ShortRead);
    }
    Ok(Frame::new(h.width, h.height, data[..n].to_vec())?)
}

pub fn encode_pgm(frame: &Frame) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", frame.width(), frame.height()).into_bytes();
    out.extend_from_slice(frame.pixels());
    out
}

/// Interleaved RGB raster as P6.
pub fn encode_ppm(width: usize, height: usize, rgb: &[u8]) -> Vec<u8> {
    debug_assert_eq!(rgb.len(), width * height * 3);
    let mut out = format!("P6\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(rgb);
    out
}

pub fn load_frame(path: &Path) -> Result<Frame> {
    let bytes = fs::read(path).map_err(|e| IvusError::io(path, e))?;
    decode_pgm(&bytes)
}

pub fn save_frame(path: &Path, frame: &Frame) -> Result<()> {
    fs::write(path, encode_pgm(frame)).map_err(|e| IvusError::io(path, e))
}
