//! Synthetic test bed: camera rigs, feature maps, scenes and parallel
//! depth rendering.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use voxgeo_core::geometry::look_at;
use voxgeo_core::occupancy::{accumulate_scores, depth_to_cloud, score_view, OccupancyScores};
use voxgeo_core::scene::{render_row, Primitive, Scene};
use voxgeo_core::volume::FeatureMap;
use voxgeo_core::{CameraParams, DepthConvention, DepthMap, Vec3, VoxelGrid};

use crate::config::{FeatureKind, RigConfig};
use crate::Result;

const UP: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 1.0 };

/// Cameras evenly spaced on a horizontal circle, each looking at the rig target.
pub fn ring_cameras(rig: &RigConfig) -> Result<Vec<CameraParams>> {
    let target = Vec3::from_array(rig.target);
    let [w, h] = rig.image_size;
    let feature = (rig.feature_size[0], rig.feature_size[1]);
    (0..rig.views)
        .map(|i| {
            let a = 2.0 * std::f64::consts::PI * i as f64 / rig.views as f64;
            let eye = Vec3::new(target.x + rig.radius * a.cos(), target.y + rig.radius * a.sin(), rig.height);
            let ext = look_at(eye, target, UP)?;
            Ok(CameraParams::pinhole(rig.focal, rig.focal, w as f64 / 2.0, h as f64 / 2.0, ext, (w, h), feature)?)
        })
        .collect()
}

/// Deterministic feature map for one view. `Random` draws from its own
/// stream per view, so the result does not depend on generation order.
pub fn synthetic_feature_map(
    kind: FeatureKind,
    width: usize,
    height: usize,
    channels: usize,
    view_id: u32,
    seed: u64,
) -> Result<FeatureMap> {
    let mut data = Vec::with_capacity(width * height * channels);
    match kind {
        FeatureKind::Constant => {
            let value: Vec<f32> = (1..=channels).map(|k| k as f32).collect();
            return Ok(FeatureMap::constant(width, height, &value, view_id)?);
        }
        FeatureKind::Ramp => {
            for y in 0..height {
                for x in 0..width {
                    for k in 0..channels {
                        data.push(match k {
                            0 => x as f32,
                            1 => y as f32,
                            2 => view_id as f32,
                            _ => (x + y + k) as f32,
                        });
                    }
                }
            }
        }
        FeatureKind::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(view_id as u64);
            data.extend((0..width * height * channels).map(|_| rng.random_range(-1.0f32..1.0)));
        }
    }
    Ok(FeatureMap::new(width, height, channels, data, view_id)?)
}

/// One synthetic map per camera at its feature resolution.
pub fn synthetic_feature_maps(
    cameras: &[CameraParams],
    kind: FeatureKind,
    channels: usize,
    seed: u64,
) -> Result<Vec<FeatureMap>> {
    cameras
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let (w, h) = c.feature_size();
            synthetic_feature_map(kind, w, h, channels, i as u32, seed)
        })
        .collect()
}

/// Floor, two boxes and a sphere inside the indoor grid.
pub fn default_scene() -> Scene {
    Scene::new(vec![
        Primitive::Plane { normal: UP, offset: 0.0 },
        Primitive::Box { center: Vec3::new(-0.9, 0.6, 0.4), size: Vec3::new(1.0, 0.8, 0.8) },
        Primitive::Box { center: Vec3::new(1.1, -0.5, 0.6), size: Vec3::new(0.6, 1.2, 1.2) },
        Primitive::Sphere { center: Vec3::new(0.2, 1.4, 0.5), radius: 0.5 },
    ])
    .expect("default scene is valid")
}

/// Floor plus 2 to 5 boxes and spheres resting on it, drawn from `seed`.
pub fn random_scene(seed: u64) -> Scene {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut prims = vec![Primitive::Plane { normal: UP, offset: 0.0 }];
    for _ in 0..rng.random_range(2..=5) {
        let (x, y) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        if rng.random_bool(0.5) {
            let r = rng.random_range(0.2..0.6);
            prims.push(Primitive::Sphere { center: Vec3::new(x, y, r), radius: r });
        } else {
            let s = Vec3::new(rng.random_range(0.3..1.2), rng.random_range(0.3..1.2), rng.random_range(0.3..1.5));
            prims.push(Primitive::Box { center: Vec3::new(x, y, s.z / 2.0), size: s });
        }
    }
    Scene::new(prims).expect("random primitives are valid")
}

/// Renders one camera with rows in parallel. Each row is computed
/// independently, so the map does not depend on the thread count.
pub fn render_depth_parallel(scene: &Scene, camera: &CameraParams, convention: DepthConvention) -> DepthMap {
    let (w, h) = camera.image_size();
    let data: Vec<f64> = (0..h).into_par_iter().flat_map_iter(|y| render_row(scene, camera, convention, y)).collect();
    DepthMap::new(w, h, data, convention).expect("rendered depths are non-negative")
}

pub fn render_depths(scene: &Scene, cameras: &[CameraParams], convention: DepthConvention) -> Vec<DepthMap> {
    cameras.par_iter().map(|c| render_depth_parallel(scene, c, convention)).collect()
}

/// Occupancy scores from exactly rendered depths: the reference against
/// which noisy-depth runs are compared.
pub fn analytic_occupancy(
    scene: &Scene,
    grid: &VoxelGrid,
    cameras: &[CameraParams],
    stride: usize,
    convention: DepthConvention,
) -> Result<OccupancyScores> {
    let depths = render_depths(scene, cameras, convention);
    occupancy_from_depths(&depths, cameras, grid, stride)
}

/// Per-view scoring in parallel, summed in view order.
pub fn occupancy_from_depths(
    depths: &[DepthMap],
    cameras: &[CameraParams],
    grid: &VoxelGrid,
    stride: usize,
) -> Result<OccupancyScores> {
    if depths.len() != cameras.len() {
        return Err(voxgeo_core::Error::ShapeMismatch("depth and camera lists differ in length").into());
    }
    let per_view = depths
        .par_iter()
        .zip(cameras)
        .enumerate()
        .map(|(i, (d, c))| Ok(score_view(&depth_to_cloud(d, c, stride)?.with_source_view(i as u32), grid)))
        .collect::<Result<Vec<_>>>()?;
    if per_view.is_empty() {
        return Ok(OccupancyScores::zeros(*grid));
    }
    Ok(accumulate_scores(&per_view)?)
}
