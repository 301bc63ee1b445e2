mod common;

use common::{project_oracle, ring_camera};
use proptest::prelude::*;
use voxgeo_core::geometry::{frustum_mask, look_at, translation_extrinsics, IDENTITY_EXTRINSICS};
use voxgeo_core::{CameraParams, Vec3, VoxelGrid};

fn k100(image: (usize, usize), feature: (usize, usize)) -> CameraParams {
    CameraParams::new(
        [[100.0, 0.0, 50.0, 0.0], [0.0, 100.0, 50.0, 0.0], [0.0, 0.0, 1.0, 0.0]],
        IDENTITY_EXTRINSICS,
        image,
        feature,
    )
    .unwrap()
}

#[test]
fn scaled_projection_matches_matrix_oracle() {
    let cam = k100((200, 100), (100, 100));
    let p = Vec3::new(1.0, 0.0, 2.0);
    let px = cam.project_point(p).unwrap();
    let (u, v, z) = project_oracle(&cam, p, true);
    assert_eq!(px.u, 50.0);
    assert!((px.u - u).abs() < 1e-12 && (px.v - v).abs() < 1e-12 && (px.cam_depth - z).abs() < 1e-12);
}

#[test]
fn translated_camera_backprojects_through_inverse_extrinsics() {
    // world -> camera adds t, so the camera sits at -t
    let cam = CameraParams::new(
        [[100.0, 0.0, 50.0, 0.0], [0.0, 100.0, 50.0, 0.0], [0.0, 0.0, 1.0, 0.0]],
        translation_extrinsics(Vec3::new(-1.0, 0.0, 0.0)),
        (100, 100),
        (100, 100),
    )
    .unwrap();
    let p = cam.backproject_pixel(50.0, 50.0, 2.0).unwrap();
    assert!((p - Vec3::new(1.0, 0.0, 2.0)).norm() < 1e-12);
    assert!((cam.center() - Vec3::new(1.0, 0.0, 0.0)).norm() < 1e-12);
}

#[test]
fn half_in_half_out_mask_matches_per_voxel_loop() {
    let cam = ring_camera(Vec3::new(0.0, -3.0, 1.0), Vec3::new(0.7, 0.0, 0.4), (64, 48), (32, 24), 40.0);
    let grid = VoxelGrid::new([16, 16, 16], 0.2, Vec3::new(-1.6, -1.6, -1.6)).unwrap();
    let mask = frustum_mask(&cam, &grid);
    let (wf, hf) = cam.feature_size();
    let mut n_in = 0;
    for (j, &m) in mask.iter().enumerate() {
        let (u, v, z) = project_oracle(&cam, grid.center_of(j), true);
        let want = z > 0.0 && u >= 0.0 && u < wf as f64 && v >= 0.0 && v < hf as f64;
        assert_eq!(m, want, "voxel {j}");
        n_in += m as usize;
    }
    assert!(n_in > 0 && n_in < grid.len(), "grid should straddle the frustum");
}

#[test]
fn grid_behind_camera_is_masked_out() {
    let cam = k100((100, 100), (100, 100));
    let grid = VoxelGrid::new([4, 4, 4], 0.1, Vec3::new(-0.2, -0.2, -3.0)).unwrap();
    assert!(frustum_mask(&cam, &grid).iter().all(|&m| !m));
}

fn rotation_camera(yaw: f64, pitch: f64, eye: Vec3) -> CameraParams {
    let dir = Vec3::new(yaw.cos() * pitch.cos(), yaw.sin() * pitch.cos(), pitch.sin());
    let ext = look_at(eye, eye + dir, Vec3::new(0.0, 0.0, 1.0)).unwrap();
    CameraParams::pinhole(300.0, 280.0, 320.0, 240.0, ext, (640, 480), (160, 120)).unwrap()
}

proptest! {
    #[test]
    fn project_backproject_round_trip(
        yaw in -3.1f64..3.1, pitch in -1.2f64..1.2,
        ex in -5.0f64..5.0, ey in -5.0f64..5.0, ez in -5.0f64..5.0,
        u in 0.0f64..640.0, v in 0.0f64..480.0, depth in 0.1f64..20.0,
    ) {
        let cam = rotation_camera(yaw, pitch, Vec3::new(ex, ey, ez));
        let p = cam.backproject_pixel(u, v, depth).unwrap();
        let px = cam.project_point_image(p).unwrap();
        prop_assert!((px.u - u).abs() < 1e-6 && (px.v - v).abs() < 1e-6);
        let q = cam.backproject_pixel(px.u, px.v, px.cam_depth).unwrap();
        prop_assert!((q - p).norm() < 1e-6);
    }

    #[test]
    fn mask_equals_independent_test(
        yaw in -3.1f64..3.1, pitch in -1.2f64..1.2,
        ox in -2.0f64..2.0, oy in -2.0f64..2.0, oz in -2.0f64..2.0,
        n in 1usize..10, vs in 0.05f64..0.6,
    ) {
        let cam = rotation_camera(yaw, pitch, Vec3::ZERO);
        let grid = VoxelGrid::new([n, n + 1, n + 2], vs, Vec3::new(ox, oy, oz)).unwrap();
        let mask = frustum_mask(&cam, &grid);
        for (j, &m) in mask.iter().enumerate() {
            let (u, v, z) = project_oracle(&cam, grid.center_of(j), true);
            let want = z > 0.0 && (0.0..160.0).contains(&u) && (0.0..120.0).contains(&v);
            prop_assert_eq!(m, want);
        }
    }

    #[test]
    fn equal_scaling_of_image_and_feature_width_keeps_u(
        k in 1usize..6, x in -1.0f64..1.0, y in -1.0f64..1.0, z in 0.5f64..5.0,
    ) {
        let base = CameraParams::pinhole(80.0, 80.0, 40.0, 30.0, IDENTITY_EXTRINSICS, (80, 60), (20, 15)).unwrap();
        let scaled = CameraParams::pinhole(80.0, 80.0, 40.0, 30.0, IDENTITY_EXTRINSICS, (80 * k, 60), (20 * k, 15)).unwrap();
        let p = Vec3::new(x, y, z);
        let a = base.project_point(p).unwrap();
        let b = scaled.project_point(p).unwrap();
        prop_assert!((a.u - b.u).abs() <= 1e-12 * a.u.abs().max(1.0));
    }
}
