//! Portable float maps.
//!
//! Writes the grayscale `Pf` variant little-endian (negative scale) with
//! rows stored bottom to top. Reads `Pf` and the three-channel `PF` variant
//! in either byte order. In memory, row 0 is the top row.

use std::path::Path;

use voxgeo_core::volume::FeatureMap;
use voxgeo_core::{DepthConvention, DepthMap};

use crate::error::{format, io_at, Result};

/// A decoded float map, row 0 at the top, channels interleaved.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatMap {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<f32>,
}

pub fn encode(map: &FloatMap) -> Result<Vec<u8>> {
    let tag = match map.channels {
        1 => "Pf",
        3 => "PF",
        _ => return Err(format("PFM holds 1 or 3 channels")),
    };
    if map.data.len() != map.width * map.height * map.channels {
        return Err(format("float map data length does not match its size"));
    }
    let mut out = format!("{tag}\n{} {}\n-1.0\n", map.width, map.height).into_bytes();
    let row = map.width * map.channels;
    for y in (0..map.height).rev() {
        for x in &map.data[y * row..(y + 1) * row] {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    Ok(out)
}

/// Splits off the next whitespace-delimited header token.
fn token<'a>(bytes: &'a [u8], pos: &mut usize) -> Result<&'a str> {
    while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if start == *pos {
        return Err(format("truncated PFM header"));
    }
    std::str::from_utf8(&bytes[start..*pos]).map_err(|_| format("PFM header is not ASCII"))
}

pub fn decode(bytes: &[u8]) -> Result<FloatMap> {
    let mut pos = 0;
    let channels = match token(bytes, &mut pos)? {
        "Pf" => 1,
        "PF" => 3,
        other => return Err(format(format!("unknown PFM tag {other:?}"))),
    };
    let parse_usize = |s: &str| s.parse::<usize>().map_err(|_| format(format!("bad PFM size {s:?}")));
    let width = parse_usize(token(bytes, &mut pos)?)?;
    let height = parse_usize(token(bytes, &mut pos)?)?;
    let scale: f64 = token(bytes, &mut pos)?.parse().map_err(|_| format("bad PFM scale"))?;
    if scale == 0.0 || !scale.is_finite() {
        return Err(format("PFM scale must be non-zero"));
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    let count = width * height * channels;
    let body = bytes.get(pos..).unwrap_or_default();
    if body.len() != 4 * count {
        return Err(format(format!("PFM raster holds {} bytes, expected {}", body.len(), 4 * count)));
    }
    let little = scale < 0.0;
    let values: Vec<f32> = body
        .chunks_exact(4)
        .map(|c| {
            let b: [u8; 4] = c.try_into().unwrap();
            if little {
                f32::from_le_bytes(b)
            } else {
                f32::from_be_bytes(b)
            }
        })
        .collect();
    let row = width * channels;
    let mut data = Vec::with_capacity(count);
    for y in (0..height).rev() {
        data.extend_from_slice(&values[y * row..(y + 1) * row]);
    }
    Ok(FloatMap { width, height, channels, data })
}

pub fn save(path: &Path, map: &FloatMap) -> Result<()> {
    std::fs::write(path, encode(map)?).map_err(io_at(path))
}

pub fn load(path: &Path) -> Result<FloatMap> {
    decode(&std::fs::read(path).map_err(io_at(path))?)
}

/// Depth maps are stored as `f32`; invalid pixels are written as `0`.
pub fn depth_to_float_map(depth: &DepthMap) -> FloatMap {
    let data = depth.data().iter().map(|&d| if d > 0.0 && d.is_finite() { d as f32 } else { 0.0 }).collect();
    FloatMap { width: depth.width(), height: depth.height(), channels: 1, data }
}

pub fn float_map_to_depth(map: &FloatMap, convention: DepthConvention) -> Result<DepthMap> {
    if map.channels != 1 {
        return Err(format("depth maps must be single-channel PFM (Pf)"));
    }
    Ok(DepthMap::new(map.width, map.height, map.data.iter().map(|&x| f64::from(x)).collect(), convention)?)
}

pub fn save_depth(path: &Path, depth: &DepthMap) -> Result<()> {
    save(path, &depth_to_float_map(depth))
}

pub fn load_depth(path: &Path, convention: DepthConvention) -> Result<DepthMap> {
    float_map_to_depth(&load(path)?, convention)
}

pub fn load_feature_map(path: &Path, view_id: u32) -> Result<FeatureMap> {
    let m = load(path)?;
    Ok(FeatureMap::new(m.width, m.height, m.channels, m.data, view_id)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bottom_to_top_rows_little_endian() {
        let map = FloatMap { width: 2, height: 2, channels: 1, data: vec![1.0, 2.0, 3.0, 4.0] };
        let bytes = encode(&map).unwrap();
        let header = b"Pf\n2 2\n-1.0\n";
        assert_eq!(&bytes[..header.len()], header);
        let first = f32::from_le_bytes(bytes[header.len()..header.len() + 4].try_into().unwrap());
        assert_eq!(first, 3.0, "bottom row is stored first");
        assert_eq!(decode(&bytes).unwrap(), map);
    }

    #[test]
    fn reads_big_endian_color() {
        let mut bytes = b"PF\n1 1\n1.0\n".to_vec();
        for x in [0.5f32, 1.5, 2.5] {
            bytes.extend_from_slice(&x.to_be_bytes());
        }
        let m = decode(&bytes).unwrap();
        assert_eq!((m.channels, m.data), (3, vec![0.5, 1.5, 2.5]));
    }

    #[test]
    fn invalid_depth_written_as_zero() {
        let d = DepthMap::new(3, 1, vec![1.0, f64::NAN, -2.0], DepthConvention::Ray).unwrap();
        assert_eq!(depth_to_float_map(&d).data, vec![1.0, 0.0, 0.0]);
    }
}
