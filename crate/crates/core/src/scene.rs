//! Analytic scenes made of solid planes (half-spaces), axis-aligned boxes and
//! spheres, with exact signed distances and ray casting.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::{pixel_center, CameraParams, DepthConvention, DepthMap};
use crate::math::{abs, sqrt, Vec3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Primitive {
    /// Solid half-space `normal . p <= offset`; the normal points out of it.
    Plane {
        normal: Vec3,
        offset: f64,
    },
    /// Axis-aligned solid box with full extents `size`.
    Box {
        center: Vec3,
        size: Vec3,
    },
    Sphere {
        center: Vec3,
        radius: f64,
    },
}

impl Primitive {
    fn validate(&self) -> Result<()> {
        match *self {
            Primitive::Plane { normal, offset } => {
                if !normal.is_finite() || !offset.is_finite() || abs(normal.norm() - 1.0) > 1e-9 {
                    return Err(Error::InvalidScene("plane normal must be unit length"));
                }
            }
            Primitive::Box { center, size } => {
                if !center.is_finite() || !(size.x > 0.0 && size.y > 0.0 && size.z > 0.0) || !size.is_finite() {
                    return Err(Error::InvalidScene("box sizes must be positive"));
                }
            }
            Primitive::Sphere { center, radius } => {
                if !center.is_finite() || !(radius > 0.0) || !radius.is_finite() {
                    return Err(Error::InvalidScene("sphere radius must be positive"));
                }
            }
        }
        Ok(())
    }

    /// Exact signed distance, negative inside.
    pub fn sdf(&self, p: Vec3) -> f64 {
        match *self {
            Primitive::Plane { normal, offset } => normal.dot(p) - offset,
            Primitive::Box { center, size } => {
                let q = (p - center).abs() - size * 0.5;
                let outside = q.map(|v| v.max(0.0)).norm();
                let inside = q.max_elem().min(0.0);
                outside + inside
            }
            Primitive::Sphere { center, radius } => (p - center).norm() - radius,
        }
    }

    /// Strict point-in-solid test, written independently of [`Primitive::sdf`].
    pub fn contains(&self, p: Vec3) -> bool {
        match *self {
            Primitive::Plane { normal, offset } => normal.dot(p) < offset,
            Primitive::Box { center, size } => {
                let d = (p - center).abs();
                d.x < 0.5 * size.x && d.y < 0.5 * size.y && d.z < 0.5 * size.z
            }
            Primitive::Sphere { center, radius } => (p - center).norm_squared() < radius * radius,
        }
    }

    /// Smallest `t > 0` with `origin + t * dir` on the surface (`dir` unit).
    pub fn raycast(&self, origin: Vec3, dir: Vec3) -> Option<f64> {
        let t = match *self {
            Primitive::Plane { normal, offset } => {
                let denom = normal.dot(dir);
                if denom == 0.0 {
                    return None;
                }
                (offset - normal.dot(origin)) / denom
            }
            Primitive::Sphere { center, radius } => {
                let oc = origin - center;
                let b = oc.dot(dir);
                let c = oc.norm_squared() - radius * radius;
                let disc = b * b - c;
                if disc < 0.0 {
                    return None;
                }
                let s = sqrt(disc);
                let near = -b - s;
                if near > 0.0 {
                    near
                } else {
                    -b + s
                }
            }
            Primitive::Box { center, size } => {
                let lo = center - size * 0.5;
                let hi = center + size * 0.5;
                let (mut t_near, mut t_far) = (f64::NEG_INFINITY, f64::INFINITY);
                for axis in 0..3 {
                    let (o, d) = (origin[axis], dir[axis]);
                    if d == 0.0 {
                        if o < lo[axis] || o > hi[axis] {
                            return None;
                        }
                        continue;
                    }
                    let (mut t0, mut t1) = ((lo[axis] - o) / d, (hi[axis] - o) / d);
                    if t0 > t1 {
                        core::mem::swap(&mut t0, &mut t1);
                    }
                    t_near = t_near.max(t0);
                    t_far = t_far.min(t1);
                }
                if t_near > t_far {
                    return None;
                }
                if t_near > 0.0 {
                    t_near
                } else {
                    t_far
                }
            }
        };
        (t > 0.0 && t.is_finite()).then_some(t)
    }
}

/// A union of solid primitives.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    primitives: Vec<Primitive>,
}

impl Scene {
    pub fn new(primitives: Vec<Primitive>) -> Result<Self> {
        if primitives.is_empty() {
            return Err(Error::InvalidScene("scene needs at least one primitive"));
        }
        primitives.iter().try_for_each(Primitive::validate)?;
        Ok(Self { primitives })
    }

    pub fn primitives(&self) -> &[Primitive] {
        &self.primitives
    }

    /// Signed distance to the union: min over primitives.
    pub fn sdf(&self, p: Vec3) -> f64 {
        self.primitives.iter().map(|s| s.sdf(p)).fold(f64::INFINITY, f64::min)
    }

    pub fn contains(&self, p: Vec3) -> bool {
        self.primitives.iter().any(|s| s.contains(p))
    }

    /// Nearest positive hit distance along a unit ray.
    pub fn raycast(&self, origin: Vec3, dir: Vec3) -> Option<f64> {
        self.primitives.iter().filter_map(|s| s.raycast(origin, dir)).reduce(f64::min)
    }
}

/// Depth of pixel `(x, y)`'s center ray, `0.0` when nothing is hit.
pub fn render_pixel(scene: &Scene, camera: &CameraParams, convention: DepthConvention, x: usize, y: usize) -> f64 {
    let (u, v) = pixel_center(x, y);
    let dir = camera.pixel_ray(u, v);
    match scene.raycast(camera.center(), dir) {
        Some(t) => camera.convert_depth(u, v, t, DepthConvention::Ray, convention),
        None => 0.0,
    }
}

/// Renders one image row.
pub fn render_row(scene: &Scene, camera: &CameraParams, convention: DepthConvention, y: usize) -> Vec<f64> {
    (0..camera.image_size().0).map(|x| render_pixel(scene, camera, convention, x, y)).collect()
}

/// Ray-cast depth map at image resolution.
pub fn render_depth(scene: &Scene, camera: &CameraParams, convention: DepthConvention) -> DepthMap {
    let (w, h) = camera.image_size();
    let mut data = Vec::with_capacity(w * h);
    for y in 0..h {
        data.extend(render_row(scene, camera, convention, y));
    }
    DepthMap::new(w, h, data, convention).expect("camera image size is at least 1x1")
}
