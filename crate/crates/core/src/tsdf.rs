//! Truncated signed distance fusion of depth maps and its attachment to a
//! feature volume.
//!
//! Signed distances are positive in front of the observed surface and
//! negative behind it, divided by the truncation distance and clamped to
//! `[-1, 1]`. Each view contributes `(t, w)` per voxel and the volume keeps the
//! running weighted mean `T <- (W T + w t) / (W + w)`, `W <- W + w`, starting
//! from `T = 1`, `W = 0`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::{nearest_pixel, pixel_center, CameraParams, DepthConvention, DepthMap, VoxelGrid};
use crate::math::{abs, Vec3};
use crate::volume::FeatureVolume;

/// How a view's sample is weighted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Weighting {
    /// `cos(angle between viewing ray and surface normal) / distance to camera`.
    #[default]
    AngleDistance,
    /// Every observation weighs 1.
    Unit,
}

text_enum!(Weighting, "weighting", { AngleDistance => "angle_distance", Unit => "unit" });

/// Treatment of voxels more than one truncation distance behind the surface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BehindSurface {
    /// Integrate them with `t = -1`.
    #[default]
    Clamp,
    /// Leave them unobserved by this view (they are occluded).
    Skip,
}

text_enum!(BehindSurface, "behind-surface policy", { Clamp => "clamp", Skip => "skip" });

/// Per-view integration settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct IntegrateOptions {
    pub weighting: Weighting,
    pub behind_surface: BehindSurface,
}

impl From<Weighting> for IntegrateOptions {
    fn from(weighting: Weighting) -> Self {
        Self { weighting, ..Default::default() }
    }
}

/// One view's truncated distance and weight for one voxel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub tsdf: f64,
    pub weight: f64,
}

/// Default truncation distance: three voxels.
pub fn default_truncation(grid: &VoxelGrid) -> f64 {
    3.0 * grid.voxel_size()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TsdfVolume {
    grid: VoxelGrid,
    truncate_distance: f64,
    tsdf: Vec<f64>,
    weight: Vec<f64>,
}

impl TsdfVolume {
    /// Fresh volume with `T = 1`, `W = 0` everywhere.
    pub fn new(grid: VoxelGrid, truncate_distance: f64) -> Result<Self> {
        check_truncation(truncate_distance)?;
        Ok(Self { tsdf: vec![1.0; grid.len()], weight: vec![0.0; grid.len()], grid, truncate_distance })
    }

    pub fn grid(&self) -> &VoxelGrid {
        &self.grid
    }

    pub fn truncate_distance(&self) -> f64 {
        self.truncate_distance
    }

    pub fn tsdf(&self) -> &[f64] {
        &self.tsdf
    }

    pub fn weight(&self) -> &[f64] {
        &self.weight
    }

    /// Folds one view's observations into the running mean.
    pub fn integrate_observations(&mut self, observations: &[Option<Observation>]) -> Result<()> {
        if observations.len() != self.grid.len() {
            return Err(Error::ShapeMismatch("observation count != voxel count"));
        }
        for ((t, w), obs) in self.tsdf.iter_mut().zip(self.weight.iter_mut()).zip(observations) {
            let Some(o) = obs else { continue };
            let total = *w + o.weight;
            *t = (*w * *t + o.weight * o.tsdf) / total;
            *w = total;
        }
        Ok(())
    }

    /// Integrates one depth map.
    pub fn integrate_view(
        &mut self,
        depth: &DepthMap,
        camera: &CameraParams,
        options: impl Into<IntegrateOptions>,
    ) -> Result<()> {
        let obs = view_observations(&self.grid, self.truncate_distance, depth, camera, options.into())?;
        self.integrate_observations(&obs)
    }
}

fn check_truncation(d: f64) -> Result<()> {
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::InvalidParameter("truncation distance must be positive"));
    }
    Ok(())
}

/// Truncates a signed distance to `[-1, 1]` in units of `d`.
#[inline]
pub fn truncate(sdf: f64, d: f64) -> f64 {
    if sdf > 0.0 {
        (sdf / d).min(1.0)
    } else {
        (sdf / d).max(-1.0)
    }
}

/// `|cos|` of the angle between each pixel's viewing ray and the surface
/// normal estimated from back-projected neighbours. Central differences where
/// both neighbours are valid, one-sided otherwise; `0` when no tangent can be
/// formed along an axis.
pub fn incidence_cosines(depth: &DepthMap, camera: &CameraParams) -> Result<Vec<f64>> {
    depth.check_camera(camera)?;
    let (w, h) = (depth.width(), depth.height());
    let points: Vec<Option<Vec3>> = (0..w * h).map(|i| depth.point_at(camera, i % w, i / w)).collect();
    let at = |x: usize, y: usize| points[y * w + x];
    let tangent = |center: Vec3, prev: Option<Vec3>, next: Option<Vec3>| match (prev, next) {
        (Some(a), Some(b)) => Some(b - a),
        (None, Some(b)) => Some(b - center),
        (Some(a), None) => Some(center - a),
        (None, None) => None,
    };
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let Some(p) = at(x, y) else { continue };
            let left = if x > 0 { at(x - 1, y) } else { None };
            let right = if x + 1 < w { at(x + 1, y) } else { None };
            let up = if y > 0 { at(x, y - 1) } else { None };
            let down = if y + 1 < h { at(x, y + 1) } else { None };
            let (Some(tx), Some(ty)) = (tangent(p, left, right), tangent(p, up, down)) else {
                continue;
            };
            let Some(normal) = tx.cross(ty).normalized() else { continue };
            let (u, v) = pixel_center(x, y);
            let ray = camera.pixel_ray(u, v);
            out[y * w + x] = abs(normal.dot(ray)).min(1.0);
        }
    }
    Ok(out)
}

/// Computes one view's `(t, w)` for every voxel; `None` where the view says
/// nothing (outside the image, behind the camera, invalid depth, zero weight,
/// or occluded under [`BehindSurface::Skip`]).
pub fn view_observations(
    grid: &VoxelGrid,
    truncate_distance: f64,
    depth: &DepthMap,
    camera: &CameraParams,
    options: IntegrateOptions,
) -> Result<Vec<Option<Observation>>> {
    check_truncation(truncate_distance)?;
    depth.check_camera(camera)?;
    let cosines = match options.weighting {
        Weighting::AngleDistance => Some(incidence_cosines(depth, camera)?),
        Weighting::Unit => None,
    };
    let (w, h) = camera.image_size();
    let center = camera.center();
    let d = truncate_distance;
    let out = grid
        .centers()
        .map(|c| {
            let px = camera.project_point_image(c).ok()?;
            if !(px.cam_depth > 0.0) {
                return None;
            }
            let (x, y) = nearest_pixel(px.u, px.v, w, h)?;
            let sample = depth.valid(x, y)?;
            let (pu, pv) = pixel_center(x, y);
            let surface = camera.convert_depth(pu, pv, sample, depth.convention(), DepthConvention::Ray);
            let dist = (c - center).norm();
            let sdf = surface - dist;
            if options.behind_surface == BehindSurface::Skip && sdf < -d {
                return None;
            }
            let weight = match &cosines {
                Some(cos) => cos[y * w + x] / dist,
                None => 1.0,
            };
            if !(weight > 0.0) || !weight.is_finite() {
                return None;
            }
            Some(Observation { tsdf: truncate(sdf, d), weight })
        })
        .collect();
    Ok(out)
}

/// Fuses depth maps in list order into a fresh volume.
pub fn fuse(
    depths: &[DepthMap],
    cameras: &[CameraParams],
    grid: &VoxelGrid,
    truncate_distance: f64,
    options: impl Into<IntegrateOptions>,
) -> Result<TsdfVolume> {
    if depths.is_empty() {
        return Err(Error::EmptyInput("fuse needs at least one depth map"));
    }
    if depths.len() != cameras.len() {
        return Err(Error::ShapeMismatch("depth and camera lists differ in length"));
    }
    let options = options.into();
    let mut volume = TsdfVolume::new(*grid, truncate_distance)?;
    for (depth, camera) in depths.iter().zip(cameras) {
        volume.integrate_view(depth, camera, options)?;
    }
    Ok(volume)
}

/// How the TSDF channel is combined with the features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AttachMode {
    /// Append the TSDF as channel `C`.
    #[default]
    Concat,
    /// Add the TSDF to every channel.
    Add,
    /// Multiply every channel by the TSDF.
    Multiply,
}

text_enum!(AttachMode, "attach mode", { Concat => "concat", Add => "add", Multiply => "multiply" });

pub fn attach_tsdf(volume: &FeatureVolume, tsdf: &TsdfVolume, mode: AttachMode) -> Result<FeatureVolume> {
    if volume.grid() != tsdf.grid() {
        return Err(Error::ShapeMismatch("feature volume and TSDF grids differ"));
    }
    let c = volume.channels();
    let n = volume.grid().len();
    let data = match mode {
        AttachMode::Concat => {
            let mut out = Vec::with_capacity(n * (c + 1));
            for j in 0..n {
                out.extend_from_slice(volume.voxel(j));
                out.push(tsdf.tsdf[j] as f32);
            }
            return FeatureVolume::new(*volume.grid(), c + 1, out, volume.coverage().to_vec());
        }
        AttachMode::Add => combine(volume, tsdf, |x, t| x + t),
        AttachMode::Multiply => combine(volume, tsdf, |x, t| x * t),
    };
    FeatureVolume::new(*volume.grid(), c, data, volume.coverage().to_vec())
}

fn combine(volume: &FeatureVolume, tsdf: &TsdfVolume, op: impl Fn(f64, f64) -> f64) -> Vec<f32> {
    let c = volume.channels();
    volume.data().iter().enumerate().map(|(i, &x)| op(f64::from(x), tsdf.tsdf[i / c]) as f32).collect()
}
