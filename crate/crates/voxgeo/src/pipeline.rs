//! End-to-end driver: render, score, sample, aggregate, attend, fuse, attach.
//!
//! Every stage runs its views in parallel and reduces them in view order, so
//! the volumes are identical for any thread count.

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use voxgeo_core::occupancy::{apply_attention, OccupancyScores};
use voxgeo_core::scene::Scene;
use voxgeo_core::tsdf::{attach_tsdf, view_observations, TsdfVolume};
use voxgeo_core::volume::{aggregate, sample_view, FeatureMap, FeatureVolume};
use voxgeo_core::{CameraParams, DepthMap};

use crate::config::PipelineConfig;
use crate::harness::{occupancy_from_depths, render_depths};
use crate::io::{json, vxg};
use crate::Result;

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub depths: Vec<DepthMap>,
    pub scores: OccupancyScores,
    /// Masked mean of the sampled views.
    pub aggregated: FeatureVolume,
    /// `aggregated` scaled by `S + theta`.
    pub attended: FeatureVolume,
    pub tsdf: TsdfVolume,
    /// `attended` with the TSDF attached.
    pub features: FeatureVolume,
    pub report: Report,
}

#[derive(Debug, Clone, Serialize)]
pub struct StageTiming {
    pub stage: &'static str,
    pub millis: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Stats {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

impl Stats {
    fn of(values: impl Iterator<Item = f64>) -> Self {
        let (mut min, mut max, mut sum, mut n) = (f64::INFINITY, f64::NEG_INFINITY, 0.0, 0usize);
        for v in values {
            min = min.min(v);
            max = max.max(v);
            sum += v;
            n += 1;
        }
        if n == 0 {
            return Self { min: 0.0, max: 0.0, mean: 0.0 };
        }
        Self { min, max, mean: sum / n as f64 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub views: usize,
    pub grid_dims: [usize; 3],
    pub voxel_size: f64,
    pub channels: usize,
    pub theta: f64,
    pub truncate_distance: f64,
    pub timings: Vec<StageTiming>,
    pub valid_depth_fraction: f64,
    pub occupancy_sum: f64,
    pub occupied_voxels: usize,
    pub covered_voxels: usize,
    pub observed_voxels: usize,
    pub scores: Stats,
    pub aggregated: Stats,
    pub attended: Stats,
    pub tsdf: Stats,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

struct Timer(Vec<StageTiming>);

impl Timer {
    fn run<T>(&mut self, stage: &'static str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.0.push(StageTiming { stage, millis: start.elapsed().as_secs_f64() * 1e3 });
        out
    }
}

/// Renders the scene from every camera, then runs [`run_with_depths`].
pub fn run_pipeline(
    scene: &Scene,
    cameras: &[CameraParams],
    feature_maps: &[FeatureMap],
    config: &PipelineConfig,
) -> Result<PipelineOutput> {
    let start = Instant::now();
    let depths = render_depths(scene, cameras, config.depth_convention);
    let render = StageTiming { stage: "render", millis: start.elapsed().as_secs_f64() * 1e3 };
    let mut out = run_with_depths(depths, cameras, feature_maps, config)?;
    out.report.timings.insert(0, render);
    Ok(out)
}

/// Runs every stage after rendering on the given depth maps.
pub fn run_with_depths(
    depths: Vec<DepthMap>,
    cameras: &[CameraParams],
    feature_maps: &[FeatureMap],
    config: &PipelineConfig,
) -> Result<PipelineOutput> {
    config.validate()?;
    if cameras.is_empty() {
        return Err(voxgeo_core::Error::EmptyInput("pipeline needs at least one camera").into());
    }
    if depths.len() != cameras.len() || feature_maps.len() != cameras.len() {
        return Err(voxgeo_core::Error::ShapeMismatch("depth, feature and camera lists differ in length").into());
    }
    let grid = config.voxel_grid()?;
    let n = cameras.len();
    let theta = config.theta_for(n);
    let d = config.truncation(&grid);
    let mut timer = Timer(Vec::new());

    let scores = timer.run("occupancy", || occupancy_from_depths(&depths, cameras, &grid, config.stride))?;

    let aggregated = timer.run("aggregate", || -> Result<FeatureVolume> {
        let samples = feature_maps
            .par_iter()
            .zip(cameras)
            .map(|(f, c)| sample_view(f, c, &grid))
            .collect::<voxgeo_core::Result<Vec<_>>>()?;
        Ok(aggregate(&samples)?)
    })?;

    let attended = timer.run("attention", || apply_attention(&aggregated, &scores, theta))?;

    let tsdf = timer.run("tsdf", || -> Result<TsdfVolume> {
        let options = config.integrate_options();
        let per_view = depths
            .par_iter()
            .zip(cameras)
            .map(|(dm, c)| view_observations(&grid, d, dm, c, options))
            .collect::<voxgeo_core::Result<Vec<_>>>()?;
        let mut volume = TsdfVolume::new(grid, d)?;
        for obs in &per_view {
            volume.integrate_observations(obs)?;
        }
        Ok(volume)
    })?;

    let features = timer.run("attach", || attach_tsdf(&attended, &tsdf, config.attach_mode))?;

    let valid: usize = depths.iter().map(|m| m.data().iter().filter(|&&x| x > 0.0 && x.is_finite()).count()).sum();
    let pixels: usize = depths.iter().map(|m| m.data().len()).sum();
    let observed = tsdf.weight().iter().filter(|&&w| w > 0.0).count();
    let checks = vec![
        Check { name: "tsdf_in_unit_interval", passed: tsdf.tsdf().iter().all(|t| (-1.0..=1.0).contains(t)) },
        Check { name: "weights_non_negative", passed: tsdf.weight().iter().all(|&w| w >= 0.0) },
        Check {
            name: "unobserved_voxels_untouched",
            passed: tsdf.tsdf().iter().zip(tsdf.weight()).all(|(&t, &w)| w > 0.0 || t == 1.0),
        },
        Check { name: "scores_bounded_by_view_count", passed: scores.sum() <= n as f64 + 1e-9 },
        Check { name: "scores_non_negative", passed: scores.data().iter().all(|&s| s >= 0.0) },
        Check { name: "features_finite", passed: features.data().iter().all(|x| x.is_finite()) },
        Check { name: "coverage_at_most_view_count", passed: aggregated.coverage().iter().all(|&c| c as usize <= n) },
    ];
    let report = Report {
        views: n,
        grid_dims: grid.dims(),
        voxel_size: grid.voxel_size(),
        channels: features.channels(),
        theta,
        truncate_distance: d,
        timings: timer.0,
        valid_depth_fraction: if pixels == 0 { 0.0 } else { valid as f64 / pixels as f64 },
        occupancy_sum: scores.sum(),
        occupied_voxels: scores.data().iter().filter(|&&s| s > 0.0).count(),
        covered_voxels: aggregated.coverage().iter().filter(|&&c| c > 0).count(),
        observed_voxels: observed,
        scores: Stats::of(scores.data().iter().copied()),
        aggregated: Stats::of(aggregated.data().iter().map(|&x| x as f64)),
        attended: Stats::of(attended.data().iter().map(|&x| x as f64)),
        tsdf: Stats::of(tsdf.tsdf().iter().zip(tsdf.weight()).filter(|(_, &w)| w > 0.0).map(|(&t, _)| t)),
        checks,
    };
    Ok(PipelineOutput { depths, scores, aggregated, attended, tsdf, features, report })
}

/// File names written by [`PipelineOutput::write`].
pub const OUTPUT_FILES: [&str; 5] = ["aggregated.vxg", "attended.vxg", "features.vxg", "occupancy.vxg", "tsdf.vxg"];

impl PipelineOutput {
    /// Writes the volumes as VXG1 files and the report as `report.json`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(crate::error::io_at(dir))?;
        vxg::save(&dir.join(OUTPUT_FILES[0]), &(&self.aggregated).into())?;
        vxg::save(&dir.join(OUTPUT_FILES[1]), &(&self.attended).into())?;
        vxg::save(&dir.join(OUTPUT_FILES[2]), &(&self.features).into())?;
        vxg::save(&dir.join(OUTPUT_FILES[3]), &(&self.scores).into())?;
        vxg::save(&dir.join(OUTPUT_FILES[4]), &(&self.tsdf).into())?;
        json::save(&dir.join("report.json"), &self.report)
    }
}
