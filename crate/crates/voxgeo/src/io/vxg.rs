//! VXG1 dense volume container.
//!
//! Layout, all little-endian: the 8-byte magic `VXG1\0\0\0\0`; `u32`
//! `[N_x, N_y, N_z, C]`; `f64` origin x, y, z; `f64` voxel size; then
//! `N_x * N_y * N_z * C` `f32` values, x slowest, then y, then z, then
//! channel. Feature volumes use `C` channels, occupancy scores one, and TSDF
//! volumes two (`tsdf`, `weight`).

use std::io::{Read, Write};
use std::path::Path;

use voxgeo_core::occupancy::OccupancyScores;
use voxgeo_core::tsdf::TsdfVolume;
use voxgeo_core::volume::FeatureVolume;
use voxgeo_core::{Vec3, VoxelGrid};

use crate::error::{format, io_at, Result};

pub const MAGIC: [u8; 8] = *b"VXG1\0\0\0\0";
const HEADER_LEN: usize = 8 + 4 * 4 + 4 * 8;

/// A decoded VXG1 file.
#[derive(Debug, Clone, PartialEq)]
pub struct VxgVolume {
    pub grid: VoxelGrid,
    pub channels: usize,
    pub data: Vec<f32>,
}

impl VxgVolume {
    pub fn voxel(&self, j: usize) -> &[f32] {
        &self.data[j * self.channels..(j + 1) * self.channels]
    }
}

impl From<&FeatureVolume> for VxgVolume {
    fn from(v: &FeatureVolume) -> Self {
        Self { grid: *v.grid(), channels: v.channels(), data: v.data().to_vec() }
    }
}

impl From<&OccupancyScores> for VxgVolume {
    fn from(s: &OccupancyScores) -> Self {
        Self { grid: *s.grid(), channels: 1, data: s.data().iter().map(|&x| x as f32).collect() }
    }
}

impl From<&TsdfVolume> for VxgVolume {
    fn from(t: &TsdfVolume) -> Self {
        let data = t.tsdf().iter().zip(t.weight()).flat_map(|(&a, &w)| [a as f32, w as f32]).collect();
        Self { grid: *t.grid(), channels: 2, data }
    }
}

pub fn encode(volume: &VxgVolume) -> Result<Vec<u8>> {
    let [nx, ny, nz] = volume.grid.dims();
    if volume.data.len() != volume.grid.len() * volume.channels {
        return Err(format("volume data length does not match its header"));
    }
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * volume.data.len());
    out.extend_from_slice(&MAGIC);
    for n in [nx, ny, nz, volume.channels] {
        let n = u32::try_from(n).map_err(|_| format("dimension does not fit in u32"))?;
        out.extend_from_slice(&n.to_le_bytes());
    }
    let o = volume.grid.origin();
    for x in [o.x, o.y, o.z, volume.grid.voxel_size()] {
        out.extend_from_slice(&x.to_le_bytes());
    }
    for x in &volume.data {
        out.extend_from_slice(&x.to_le_bytes());
    }
    Ok(out)
}

pub fn decode(bytes: &[u8]) -> Result<VxgVolume> {
    if bytes.len() < HEADER_LEN || bytes[..8] != MAGIC {
        return Err(format("not a VXG1 file"));
    }
    let u32_at = |i: usize| u32::from_le_bytes(bytes[8 + 4 * i..12 + 4 * i].try_into().unwrap()) as usize;
    let f64_at = |i: usize| f64::from_le_bytes(bytes[24 + 8 * i..32 + 8 * i].try_into().unwrap());
    let dims = [u32_at(0), u32_at(1), u32_at(2)];
    let channels = u32_at(3);
    let grid = VoxelGrid::new(dims, f64_at(3), Vec3::new(f64_at(0), f64_at(1), f64_at(2)))?;
    let count = grid.len().checked_mul(channels).ok_or_else(|| format("VXG1 header overflows"))?;
    let body = &bytes[HEADER_LEN..];
    if channels == 0 || body.len() != 4 * count {
        return Err(format(format!("VXG1 body holds {} bytes, header implies {}", body.len(), 4 * count)));
    }
    let data = body.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
    Ok(VxgVolume { grid, channels, data })
}

pub fn write(mut w: impl Write, volume: &VxgVolume) -> Result<()> {
    w.write_all(&encode(volume)?)?;
    Ok(())
}

pub fn read(mut r: impl Read) -> Result<VxgVolume> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    decode(&bytes)
}

pub fn save(path: &Path, volume: &VxgVolume) -> Result<()> {
    std::fs::write(path, encode(volume)?).map_err(io_at(path))
}

pub fn load(path: &Path) -> Result<VxgVolume> {
    decode(&std::fs::read(path).map_err(io_at(path))?)
}
