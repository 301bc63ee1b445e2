//! Voxel occupancy attention.
//!
//! Each depth map is lifted to a point cloud; a view scores voxel `j` with the
//! fraction of its points that fall inside the voxel, the per-view scores are
//! summed, and the feature volume is scaled by `S + theta`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::{pixel_center, CameraParams, DepthConvention, DepthMap, VoxelGrid};
use crate::math::Vec3;
use crate::volume::FeatureVolume;

/// Default `theta` for a single view.
pub const THETA_SINGLE_VIEW: f64 = 1.0;
/// Default `theta` for more than one view.
pub const THETA_MULTI_VIEW: f64 = 0.0;

/// `theta` used when the caller does not choose one.
pub fn default_theta(n_views: usize) -> f64 {
    if n_views <= 1 {
        THETA_SINGLE_VIEW
    } else {
        THETA_MULTI_VIEW
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    pub points: Vec<Vec3>,
    pub source_view: u32,
}

impl PointCloud {
    pub fn with_source_view(mut self, view: u32) -> Self {
        self.source_view = view;
        self
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Per-voxel scores on a grid. Used both for a single view's fractions and
/// for the sum over views.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyScores {
    grid: VoxelGrid,
    data: Vec<f64>,
}

impl OccupancyScores {
    pub fn zeros(grid: VoxelGrid) -> Self {
        Self { data: vec![0.0; grid.len()], grid }
    }

    pub fn new(grid: VoxelGrid, data: Vec<f64>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::ShapeMismatch("score buffer does not match grid"));
        }
        if data.iter().any(|&s| !(s >= 0.0)) {
            return Err(Error::InvalidParameter("occupancy scores must be non-negative"));
        }
        Ok(Self { grid, data })
    }

    pub fn grid(&self) -> &VoxelGrid {
        &self.grid
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }
}

/// Lifts every valid pixel on a `stride` lattice (pixels `(x, y)` with
/// `x % stride == 0 && y % stride == 0`) to a world point at the pixel
/// center.
pub fn depth_to_cloud(depth: &DepthMap, camera: &CameraParams, stride: usize) -> Result<PointCloud> {
    depth.check_camera(camera)?;
    if stride == 0 {
        return Err(Error::InvalidParameter("stride must be >= 1"));
    }
    let mut points = Vec::new();
    for y in (0..depth.height()).step_by(stride) {
        for x in (0..depth.width()).step_by(stride) {
            let Some(d) = depth.valid(x, y) else { continue };
            let (u, v) = pixel_center(x, y);
            let z = camera.convert_depth(u, v, d, depth.convention(), DepthConvention::Z);
            if let Ok(p) = camera.backproject_pixel(u, v, z) {
                points.push(p);
            }
        }
    }
    Ok(PointCloud { points, source_view: 0 })
}

/// Fraction of the cloud's points inside each voxel. The denominator is the
/// full point count, including points that miss the grid.
pub fn score_view(cloud: &PointCloud, grid: &VoxelGrid) -> OccupancyScores {
    let mut scores = OccupancyScores::zeros(*grid);
    if cloud.is_empty() {
        return scores;
    }
    let mut counts = vec![0u64; grid.len()];
    for &p in &cloud.points {
        if let Some(j) = grid.locate(p) {
            counts[j] += 1;
        }
    }
    let n = cloud.len() as f64;
    for (s, &c) in scores.data.iter_mut().zip(&counts) {
        *s = c as f64 / n;
    }
    scores
}

/// Element-wise sum of per-view scores in list order.
pub fn accumulate_scores(per_view: &[OccupancyScores]) -> Result<OccupancyScores> {
    let first = per_view.first().ok_or(Error::EmptyInput("no score volumes to accumulate"))?;
    let mut total = OccupancyScores::zeros(first.grid);
    for view in per_view {
        if view.grid.dims() != first.grid.dims() {
            return Err(Error::ShapeMismatch("score volumes disagree on grid dims"));
        }
        for (t, &s) in total.data.iter_mut().zip(&view.data) {
            *t += s;
        }
    }
    Ok(total)
}

/// Scales every voxel's features by `S[j] + theta`. Coverage passes through.
pub fn apply_attention(volume: &FeatureVolume, scores: &OccupancyScores, theta: f64) -> Result<FeatureVolume> {
    if !(theta >= 0.0) || !theta.is_finite() {
        return Err(Error::InvalidParameter("theta must be a non-negative finite number"));
    }
    if volume.grid().dims() != scores.grid.dims() {
        return Err(Error::ShapeMismatch("feature volume and scores disagree on grid dims"));
    }
    let c = volume.channels();
    let mut data = volume.data().to_vec();
    for (j, &s) in scores.data.iter().enumerate() {
        let factor = s + theta;
        for x in &mut data[j * c..(j + 1) * c] {
            *x = (f64::from(*x) * factor) as f32;
        }
    }
    FeatureVolume::new(*volume.grid(), c, data, volume.coverage().to_vec())
}
