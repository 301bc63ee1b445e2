//! Camera model, voxel grid and the projections between them.
//!
//! Pixel `(i, j)` covers the half-open square `[i, i+1) x [j, j+1)` and its
//! center sits at `(i + 0.5, j + 0.5)`. The nearest pixel to a continuous
//! coordinate `u >= 0` is therefore `floor(u)`; at an exact pixel border the
//! two candidate centers are equidistant and the one farther from zero wins.
//! With this convention a projection is inside the image exactly when
//! `0 <= u < W`, so masking and nearest lookup never disagree.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{abs, floor, Mat3, Vec3};

/// Projected location of a world point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelCoord {
    pub u: f64,
    pub v: f64,
    /// Third homogeneous coordinate before the perspective division. Equals
    /// the camera-frame z for intrinsics whose last row is `[0 0 1 0]`.
    pub cam_depth: f64,
}

/// Pinhole camera: 3x4 intrinsics, 4x4 world-to-camera extrinsics, and the
/// image and feature-map resolutions.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraParams {
    intrinsics: [[f64; 4]; 3],
    extrinsics: [[f64; 4]; 4],
    image_size: (usize, usize),
    feature_size: (usize, usize),
    rotation: Mat3,
    translation: Vec3,
    k3_inv: Mat3,
    k4: Vec3,
    center: Vec3,
}

const ROTATION_TOL: f64 = 1e-6;

impl CameraParams {
    /// Validates and builds a camera. Sizes are `(width, height)`.
    pub fn new(
        intrinsics: [[f64; 4]; 3],
        extrinsics: [[f64; 4]; 4],
        image_size: (usize, usize),
        feature_size: (usize, usize),
    ) -> Result<Self> {
        if intrinsics.iter().flatten().chain(extrinsics.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidCamera("non-finite matrix entry"));
        }
        let (w, h) = image_size;
        let (wf, hf) = feature_size;
        if wf == 0 || hf == 0 || w < wf || h < hf {
            return Err(Error::InvalidCamera("require W >= W_f >= 1 and H >= H_f >= 1"));
        }
        let bottom = extrinsics[3];
        if abs(bottom[0]) > 1e-12 || abs(bottom[1]) > 1e-12 || abs(bottom[2]) > 1e-12 || abs(bottom[3] - 1.0) > 1e-12 {
            return Err(Error::InvalidCamera("extrinsics bottom row must be [0 0 0 1]"));
        }
        let rotation = Mat3([
            [extrinsics[0][0], extrinsics[0][1], extrinsics[0][2]],
            [extrinsics[1][0], extrinsics[1][1], extrinsics[1][2]],
            [extrinsics[2][0], extrinsics[2][1], extrinsics[2][2]],
        ]);
        let rrt = rotation.mul_mat(&rotation.transpose());
        for (i, row) in rrt.0.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                if abs(v - want) > ROTATION_TOL {
                    return Err(Error::InvalidCamera("extrinsic rotation is not orthonormal"));
                }
            }
        }
        if abs(rotation.determinant() - 1.0) > ROTATION_TOL {
            return Err(Error::InvalidCamera("extrinsic rotation must have determinant +1"));
        }
        let translation = Vec3::new(extrinsics[0][3], extrinsics[1][3], extrinsics[2][3]);
        let k3 = Mat3([
            [intrinsics[0][0], intrinsics[0][1], intrinsics[0][2]],
            [intrinsics[1][0], intrinsics[1][1], intrinsics[1][2]],
            [intrinsics[2][0], intrinsics[2][1], intrinsics[2][2]],
        ]);
        let k3_inv = k3.inverse().ok_or(Error::InvalidCamera("intrinsic 3x3 block is singular"))?;
        let k4 = Vec3::new(intrinsics[0][3], intrinsics[1][3], intrinsics[2][3]);
        // Optical center: the camera-frame point where K [X; 1] vanishes.
        let center_cam = -k3_inv.mul_vec(k4);
        let center = rotation.transpose().mul_vec(center_cam - translation);
        Ok(Self { intrinsics, extrinsics, image_size, feature_size, rotation, translation, k3_inv, k4, center })
    }

    /// Camera with `K = [[fx 0 cx 0] [0 fy cy 0] [0 0 1 0]]`.
    pub fn pinhole(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        extrinsics: [[f64; 4]; 4],
        image_size: (usize, usize),
        feature_size: (usize, usize),
    ) -> Result<Self> {
        let k = [[fx, 0.0, cx, 0.0], [0.0, fy, cy, 0.0], [0.0, 0.0, 1.0, 0.0]];
        Self::new(k, extrinsics, image_size, feature_size)
    }

    pub fn intrinsics(&self) -> &[[f64; 4]; 3] {
        &self.intrinsics
    }

    pub fn extrinsics(&self) -> &[[f64; 4]; 4] {
        &self.extrinsics
    }

    /// `(W, H)` in pixels.
    pub fn image_size(&self) -> (usize, usize) {
        self.image_size
    }

    /// `(W_f, H_f)` in pixels.
    pub fn feature_size(&self) -> (usize, usize) {
        self.feature_size
    }

    /// World-frame optical center. For intrinsics with a zero fourth column
    /// this is `-R^T t`.
    pub fn center(&self) -> Vec3 {
        self.center
    }

    fn project_scaled(&self, p: Vec3, sx: f64, sy: f64) -> Result<PixelCoord> {
        let e = &self.extrinsics;
        let ph = [p.x, p.y, p.z, 1.0];
        let mut cam = [0.0f64; 4];
        for (r, out) in cam.iter_mut().enumerate() {
            *out = e[r][0] * ph[0] + e[r][1] * ph[1] + e[r][2] * ph[2] + e[r][3] * ph[3];
        }
        let k = &self.intrinsics;
        let mut h = [0.0f64; 3];
        for (r, out) in h.iter_mut().enumerate() {
            *out = k[r][0] * cam[0] + k[r][1] * cam[1] + k[r][2] * cam[2] + k[r][3] * cam[3];
        }
        let cam_depth = h[2];
        if !cam_depth.is_finite() || abs(cam_depth) < 1e-12 {
            return Err(Error::DegenerateProjection);
        }
        Ok(PixelCoord { u: sx * h[0] / cam_depth, v: sy * h[1] / cam_depth, cam_depth })
    }

    /// Projects a world point to feature-map pixels, applying the
    /// `diag(W_f/W, H_f/H, 1)` rescaling. Points outside the image are
    /// returned as-is; see [`frustum_mask`].
    pub fn project_point(&self, p: Vec3) -> Result<PixelCoord> {
        let sx = self.feature_size.0 as f64 / self.image_size.0 as f64;
        let sy = self.feature_size.1 as f64 / self.image_size.1 as f64;
        self.project_scaled(p, sx, sy)
    }

    /// Projects a world point to full-resolution image pixels.
    pub fn project_point_image(&self, p: Vec3) -> Result<PixelCoord> {
        self.project_scaled(p, 1.0, 1.0)
    }

    /// Inverse of [`project_point_image`]: the world point that projects to
    /// `(u, v)` with third homogeneous coordinate `depth`.
    pub fn backproject_pixel(&self, u: f64, v: f64, depth: f64) -> Result<Vec3> {
        if !(depth > 0.0) || !depth.is_finite() {
            return Err(Error::InvalidDepth);
        }
        let cam = self.k3_inv.mul_vec(Vec3::new(u, v, 1.0) * depth - self.k4);
        Ok(self.rotation.transpose().mul_vec(cam - self.translation))
    }

    /// Back-projects using a Euclidean distance from the optical center.
    pub fn backproject_ray(&self, u: f64, v: f64, ray_length: f64) -> Result<Vec3> {
        if !(ray_length > 0.0) || !ray_length.is_finite() {
            return Err(Error::InvalidDepth);
        }
        self.backproject_pixel(u, v, ray_length / self.ray_scale(u, v))
    }

    /// Ray length per unit of projective depth through pixel `(u, v)`.
    pub fn ray_scale(&self, u: f64, v: f64) -> f64 {
        self.k3_inv.mul_vec(Vec3::new(u, v, 1.0)).norm()
    }

    /// Unit world-frame direction of the viewing ray through `(u, v)`,
    /// oriented toward increasing depth.
    pub fn pixel_ray(&self, u: f64, v: f64) -> Vec3 {
        let d = self.rotation.transpose().mul_vec(self.k3_inv.mul_vec(Vec3::new(u, v, 1.0)));
        d / d.norm()
    }

    /// Converts a depth sample at pixel `(u, v)` from `from` to `to`.
    pub fn convert_depth(&self, u: f64, v: f64, depth: f64, from: DepthConvention, to: DepthConvention) -> f64 {
        match (from, to) {
            (DepthConvention::Ray, DepthConvention::Z) => depth / self.ray_scale(u, v),
            (DepthConvention::Z, DepthConvention::Ray) => depth * self.ray_scale(u, v),
            _ => depth,
        }
    }
}

/// Extrinsics for a camera at `eye` looking at `target`, with image x to the
/// right and image y down (`up` gives the world up direction).
pub fn look_at(eye: Vec3, target: Vec3, up: Vec3) -> Result<[[f64; 4]; 4]> {
    let forward = (target - eye).normalized().ok_or(Error::InvalidCamera("eye equals target"))?;
    let right = forward.cross(up).normalized().ok_or(Error::InvalidCamera("viewing direction parallel to up"))?;
    let down = forward.cross(right);
    let rot = Mat3::from_rows(right, down, forward);
    let t = -rot.mul_vec(eye);
    let r = rot.0;
    Ok([
        [r[0][0], r[0][1], r[0][2], t.x],
        [r[1][0], r[1][1], r[1][2], t.y],
        [r[2][0], r[2][1], r[2][2], t.z],
        [0.0, 0.0, 0.0, 1.0],
    ])
}

/// Pure translation extrinsics: world point `p` maps to `p + t` in camera frame.
pub fn translation_extrinsics(t: Vec3) -> [[f64; 4]; 4] {
    [[1.0, 0.0, 0.0, t.x], [0.0, 1.0, 0.0, t.y], [0.0, 0.0, 1.0, t.z], [0.0, 0.0, 0.0, 1.0]]
}

pub const IDENTITY_EXTRINSICS: [[f64; 4]; 4] =
    [[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 1.0]];

/// Index of the pixel whose center is nearest to `(u, v)` in a `w x h`
/// raster, or `None` outside `[0, w) x [0, h)`. No clamping.
#[inline]
pub fn nearest_pixel(u: f64, v: f64, w: usize, h: usize) -> Option<(usize, usize)> {
    if !(u >= 0.0 && v >= 0.0 && u < w as f64 && v < h as f64) {
        return None;
    }
    let x = floor(u) as usize;
    let y = floor(v) as usize;
    // Guards against u rounding up to w in the float-to-index cast.
    if x < w && y < h {
        Some((x, y))
    } else {
        None
    }
}

/// Center of pixel `(x, y)` in continuous pixel coordinates.
#[inline]
pub fn pixel_center(x: usize, y: usize) -> (f64, f64) {
    (x as f64 + 0.5, y as f64 + 0.5)
}

/// Regular voxel grid; voxel `(i, j, k)` spans
/// `[origin + (i, j, k) * s, origin + (i + 1, j + 1, k + 1) * s)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoxelGrid {
    dims: [usize; 3],
    voxel_size: f64,
    origin: Vec3,
}

impl VoxelGrid {
    pub fn new(dims: [usize; 3], voxel_size: f64, origin: Vec3) -> Result<Self> {
        if dims.contains(&0) {
            return Err(Error::InvalidGrid("dims must be positive"));
        }
        if !(voxel_size > 0.0) || !voxel_size.is_finite() {
            return Err(Error::InvalidGrid("voxel size must be positive and finite"));
        }
        if !origin.is_finite() {
            return Err(Error::InvalidGrid("origin must be finite"));
        }
        Ok(Self { dims, voxel_size, origin })
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn voxel_size(&self) -> f64 {
        self.voxel_size
    }

    pub fn origin(&self) -> Vec3 {
        self.origin
    }

    /// Number of voxels.
    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Linear index in x-major order (z varies fastest).
    #[inline]
    pub fn index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        (ix * self.dims[1] + iy) * self.dims[2] + iz
    }

    #[inline]
    pub fn coords(&self, linear: usize) -> [usize; 3] {
        let iz = linear % self.dims[2];
        let rest = linear / self.dims[2];
        [rest / self.dims[1], rest % self.dims[1], iz]
    }

    #[inline]
    pub fn center(&self, ix: usize, iy: usize, iz: usize) -> Vec3 {
        let s = self.voxel_size;
        Vec3::new(
            self.origin.x + (ix as f64 + 0.5) * s,
            self.origin.y + (iy as f64 + 0.5) * s,
            self.origin.z + (iz as f64 + 0.5) * s,
        )
    }

    #[inline]
    pub fn center_of(&self, linear: usize) -> Vec3 {
        let [ix, iy, iz] = self.coords(linear);
        self.center(ix, iy, iz)
    }

    /// Voxel centers in linear order.
    pub fn centers(&self) -> impl Iterator<Item = Vec3> + '_ {
        (0..self.len()).map(move |j| self.center_of(j))
    }

    #[inline]
    fn edge(&self, axis: usize, i: i64) -> f64 {
        self.origin[axis] + i as f64 * self.voxel_size
    }

    fn locate_axis(&self, axis: usize, p: f64) -> Option<usize> {
        if !p.is_finite() {
            return None;
        }
        let mut i = floor((p - self.origin[axis]) / self.voxel_size) as i64;
        if self.edge(axis, i) > p {
            i -= 1;
        } else if self.edge(axis, i + 1) <= p {
            i += 1;
        }
        if i < 0 || i as usize >= self.dims[axis] {
            None
        } else {
            Some(i as usize)
        }
    }

    /// Linear index of the voxel containing `p`, using half-open cells so
    /// that the cells partition the grid's bounding box.
    pub fn locate(&self, p: Vec3) -> Option<usize> {
        let ix = self.locate_axis(0, p.x)?;
        let iy = self.locate_axis(1, p.y)?;
        let iz = self.locate_axis(2, p.z)?;
        Some(self.index(ix, iy, iz))
    }

    /// Length of a voxel's space diagonal.
    pub fn voxel_diagonal(&self) -> f64 {
        self.voxel_size * crate::math::sqrt(3.0)
    }
}

/// Per-voxel visibility: true iff the voxel center projects into
/// `[0, W_f) x [0, H_f)` with positive depth.
pub fn frustum_mask(camera: &CameraParams, grid: &VoxelGrid) -> Vec<bool> {
    let (wf, hf) = camera.feature_size();
    grid.centers()
        .map(|c| match camera.project_point(c) {
            Ok(px) => in_frustum(&px, wf, hf),
            Err(_) => false,
        })
        .collect()
}

#[inline]
pub(crate) fn in_frustum(px: &PixelCoord, w: usize, h: usize) -> bool {
    px.cam_depth > 0.0 && px.u >= 0.0 && px.u < w as f64 && px.v >= 0.0 && px.v < h as f64
}

/// What a depth sample measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DepthConvention {
    /// Euclidean distance from the optical center along the pixel ray.
    #[default]
    Ray,
    /// Projective depth (camera-frame z for standard intrinsics).
    Z,
}

text_enum!(DepthConvention, "depth convention", { Ray => "ray", Z => "z" });

/// Per-pixel metric depth, row-major with row 0 at the top. Samples that are
/// not positive and finite are invalid; `0.0` is the canonical sentinel.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    width: usize,
    height: usize,
    data: Vec<f64>,
    convention: DepthConvention,
}

impl DepthMap {
    pub fn new(width: usize, height: usize, data: Vec<f64>, convention: DepthConvention) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::ShapeMismatch("depth map must be at least 1x1"));
        }
        if data.len() != width * height {
            return Err(Error::ShapeMismatch("depth data length != width * height"));
        }
        Ok(Self { width, height, data, convention })
    }

    pub fn filled(width: usize, height: usize, value: f64, convention: DepthConvention) -> Result<Self> {
        Self::new(width, height, alloc::vec![value; width * height], convention)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn convention(&self) -> DepthConvention {
        self.convention
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    /// The sample at `(x, y)` if valid.
    #[inline]
    pub fn valid(&self, x: usize, y: usize) -> Option<f64> {
        let d = self.get(x, y);
        (d > 0.0 && d.is_finite()).then_some(d)
    }

    pub(crate) fn check_camera(&self, camera: &CameraParams) -> Result<()> {
        if (self.width, self.height) != camera.image_size() {
            return Err(Error::ShapeMismatch("depth map size != camera image size"));
        }
        Ok(())
    }

    /// Back-projected world point at the center of pixel `(x, y)`.
    pub fn point_at(&self, camera: &CameraParams, x: usize, y: usize) -> Option<Vec3> {
        let d = self.valid(x, y)?;
        let (u, v) = pixel_center(x, y);
        let z = camera.convert_depth(u, v, d, self.convention, DepthConvention::Z);
        camera.backproject_pixel(u, v, z).ok()
    }
}
