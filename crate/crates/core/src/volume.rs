//! Multi-view feature volume: nearest-pixel sampling of per-view feature maps
//! at voxel centers, followed by a masked mean over views.
//!
//! Feature values are stored as `f32` and every reduction accumulates in
//! `f64`. Sums of up to 2^29 copies of an `f32` are exact in `f64`, so the
//! mean of identical views reproduces the view bit for bit.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::{in_frustum, nearest_pixel, CameraParams, VoxelGrid};

/// One view's 2D feature map, `H_f x W_f x C`, row-major with channels last.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f32>,
    view_id: u32,
}

impl FeatureMap {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f32>, view_id: u32) -> Result<Self> {
        if width == 0 || height == 0 || channels == 0 {
            return Err(Error::ShapeMismatch("feature map dims and channels must be >= 1"));
        }
        if data.len() != width * height * channels {
            return Err(Error::ShapeMismatch("feature data length != H_f * W_f * C"));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("feature map entries must be finite"));
        }
        Ok(Self { width, height, channels, data, view_id })
    }

    /// Map with every pixel set to `value`.
    pub fn constant(width: usize, height: usize, value: &[f32], view_id: u32) -> Result<Self> {
        let data = value.iter().copied().cycle().take(width * height * value.len()).collect();
        Self::new(width, height, value.len(), data, view_id)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn view_id(&self) -> u32 {
        self.view_id
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> &[f32] {
        let start = (y * self.width + x) * self.channels;
        &self.data[start..start + self.channels]
    }
}

/// A single view's contribution: the sampled volume `V_i` and its mask `M_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewSample {
    pub view_id: u32,
    pub grid: VoxelGrid,
    pub channels: usize,
    /// `N_x * N_y * N_z * C` values; zero where the mask is false.
    pub data: Vec<f32>,
    pub mask: Vec<bool>,
}

/// Dense `N_x x N_y x N_z x C` feature grid plus the number of views that
/// covered each voxel.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVolume {
    grid: VoxelGrid,
    channels: usize,
    data: Vec<f32>,
    coverage: Vec<u32>,
}

impl FeatureVolume {
    pub fn new(grid: VoxelGrid, channels: usize, data: Vec<f32>, coverage: Vec<u32>) -> Result<Self> {
        if channels == 0 {
            return Err(Error::ShapeMismatch("feature volume needs at least one channel"));
        }
        if data.len() != grid.len() * channels || coverage.len() != grid.len() {
            return Err(Error::ShapeMismatch("feature volume buffers do not match grid"));
        }
        Ok(Self { grid, channels, data, coverage })
    }

    pub fn grid(&self) -> &VoxelGrid {
        &self.grid
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn coverage(&self) -> &[u32] {
        &self.coverage
    }

    #[inline]
    pub fn voxel(&self, j: usize) -> &[f32] {
        &self.data[j * self.channels..(j + 1) * self.channels]
    }

    pub fn into_parts(self) -> (VoxelGrid, usize, Vec<f32>, Vec<u32>) {
        (self.grid, self.channels, self.data, self.coverage)
    }
}

/// Samples one view's feature map at every voxel center (nearest pixel).
pub fn sample_view(feature_map: &FeatureMap, camera: &CameraParams, grid: &VoxelGrid) -> Result<ViewSample> {
    let (wf, hf) = camera.feature_size();
    if (feature_map.width, feature_map.height) != (wf, hf) {
        return Err(Error::ShapeMismatch("feature map size != camera feature size"));
    }
    let c = feature_map.channels;
    let mut data = vec![0.0f32; grid.len() * c];
    let mut mask = vec![false; grid.len()];
    for (j, center) in grid.centers().enumerate() {
        let Ok(px) = camera.project_point(center) else { continue };
        if !in_frustum(&px, wf, hf) {
            continue;
        }
        if let Some((x, y)) = nearest_pixel(px.u, px.v, wf, hf) {
            data[j * c..(j + 1) * c].copy_from_slice(feature_map.pixel(x, y));
            mask[j] = true;
        }
    }
    Ok(ViewSample { view_id: feature_map.view_id, grid: *grid, channels: c, data, mask })
}

/// Masked mean over views, `sum_i V_i M_i / sum_i M_i`, zero where no view
/// covers the voxel. Views are summed in ascending `view_id` order.
pub fn aggregate(views: &[ViewSample]) -> Result<FeatureVolume> {
    let first = views.first().ok_or(Error::EmptyInput("aggregate needs at least one view"))?;
    let grid = first.grid;
    let c = first.channels;
    for v in views {
        if v.grid.dims() != grid.dims() || v.channels != c {
            return Err(Error::ShapeMismatch("views disagree on grid dims or channels"));
        }
        if v.data.len() != grid.len() * c || v.mask.len() != grid.len() {
            return Err(Error::ShapeMismatch("view buffers do not match grid"));
        }
    }
    let mut order: Vec<&ViewSample> = views.iter().collect();
    order.sort_by_key(|v| v.view_id);

    let mut data = vec![0.0f32; grid.len() * c];
    let mut coverage = vec![0u32; grid.len()];
    let mut acc = vec![0.0f64; c];
    for j in 0..grid.len() {
        acc.iter_mut().for_each(|a| *a = 0.0);
        let mut count = 0u32;
        for view in &order {
            let m = view.mask[j];
            let weight = if m { 1.0 } else { 0.0 };
            for (a, &x) in acc.iter_mut().zip(&view.data[j * c..(j + 1) * c]) {
                *a += f64::from(x) * weight;
            }
            count += m as u32;
        }
        coverage[j] = count;
        if count > 0 {
            let denom = f64::from(count);
            for (out, a) in data[j * c..(j + 1) * c].iter_mut().zip(&acc) {
                *out = (*a / denom) as f32;
            }
        }
    }
    FeatureVolume::new(grid, c, data, coverage)
}
