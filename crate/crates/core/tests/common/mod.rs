#![allow(dead_code)]

use voxgeo_core::geometry::look_at;
use voxgeo_core::{CameraParams, Vec3, VoxelGrid};

/// Plain `K * E * [p; 1]` with explicit row loops, then the resolution
/// scaling and perspective division.
pub fn project_oracle(cam: &CameraParams, p: Vec3, feature_res: bool) -> (f64, f64, f64) {
    let e = cam.extrinsics();
    let k = cam.intrinsics();
    let ph = [p.x, p.y, p.z, 1.0];
    let mut c = [0.0; 4];
    for r in 0..4 {
        for i in 0..4 {
            c[r] += e[r][i] * ph[i];
        }
    }
    let mut h = [0.0; 3];
    for r in 0..3 {
        for i in 0..4 {
            h[r] += k[r][i] * c[i];
        }
    }
    let (sx, sy) = if feature_res {
        let (w, hh) = cam.image_size();
        let (wf, hf) = cam.feature_size();
        (wf as f64 / w as f64, hf as f64 / hh as f64)
    } else {
        (1.0, 1.0)
    };
    (sx * h[0] / h[2], sy * h[1] / h[2], h[2])
}

/// Brute-force voxel lookup: scan every voxel's half-open box.
pub fn containing_voxel(grid: &VoxelGrid, p: Vec3) -> Option<usize> {
    let [nx, ny, nz] = grid.dims();
    let vs = grid.voxel_size();
    let o = grid.origin();
    for ix in 0..nx {
        for iy in 0..ny {
            for iz in 0..nz {
                let lo = Vec3::new(o.x + ix as f64 * vs, o.y + iy as f64 * vs, o.z + iz as f64 * vs);
                let hi = Vec3::new(o.x + (ix + 1) as f64 * vs, o.y + (iy + 1) as f64 * vs, o.z + (iz + 1) as f64 * vs);
                if lo.x <= p.x && p.x < hi.x && lo.y <= p.y && p.y < hi.y && lo.z <= p.z && p.z < hi.z {
                    return Some((ix * ny + iy) * nz + iz);
                }
            }
        }
    }
    None
}

/// Camera at `eye` looking at `target` with +z up.
pub fn ring_camera(eye: Vec3, target: Vec3, image: (usize, usize), feature: (usize, usize), f: f64) -> CameraParams {
    let ext = look_at(eye, target, Vec3::new(0.0, 0.0, 1.0)).unwrap();
    CameraParams::pinhole(f, f, image.0 as f64 / 2.0, image.1 as f64 / 2.0, ext, image, feature).unwrap()
}

/// `n` cameras on a circle of `radius` at height `height`, all aimed at `target`.
pub fn ring(
    n: usize,
    radius: f64,
    height: f64,
    target: Vec3,
    image: (usize, usize),
    feature: (usize, usize),
) -> Vec<CameraParams> {
    (0..n)
        .map(|i| {
            let a = 2.0 * std::f64::consts::PI * i as f64 / n as f64 + 0.3;
            let eye = Vec3::new(target.x + radius * a.cos(), target.y + radius * a.sin(), height);
            ring_camera(eye, target, image, feature, image.0 as f64 * 0.8)
        })
        .collect()
}
