//! Pipeline configuration.
//!
//! Every field has a default, so a config file only lists what it changes:
//!
//! ```json
//! {"preset": "indoor", "seed": 7, "rig": {"views": 8}, "features": {"kind": "ramp", "channels": 8}}
//! ```
//!
//! `preset` picks the grid (`indoor`: 40x40x16 at 0.16 m, `outdoor`:
//! 216x248x12 at 0.32 m); an explicit `grid` overrides it.

use std::path::Path;

use serde::{Deserialize, Serialize};
use voxgeo_core::losses::LossWeights;
use voxgeo_core::occupancy::default_theta;
use voxgeo_core::tsdf::{default_truncation, AttachMode, BehindSurface, IntegrateOptions, Weighting};
use voxgeo_core::{DepthConvention, Vec3, VoxelGrid};

use crate::io::json::{self, GridDoc};
use crate::Result;

/// Serde adapter for the core enums, which parse and print their snake_case names.
mod text {
    use std::fmt::Display;
    use std::str::FromStr;

    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<T: Display, S: Serializer>(value: &T, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(value)
    }

    pub fn deserialize<'de, T, D>(d: D) -> Result<T, D::Error>
    where
        T: FromStr,
        T::Err: Display,
        D: Deserializer<'de>,
    {
        String::deserialize(d)?.parse().map_err(de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    #[default]
    Indoor,
    Outdoor,
}

impl Preset {
    pub fn grid(self) -> GridDoc {
        match self {
            Preset::Indoor => GridDoc { dims: [40, 40, 16], voxel_size: 0.16, origin: [-3.2, -3.2, -0.16] },
            Preset::Outdoor => GridDoc { dims: [216, 248, 12], voxel_size: 0.32, origin: [0.0, -39.68, -3.0] },
        }
    }
}

/// Synthetic feature maps fed to the sampler.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    /// Every pixel holds `1, 2, ..., C`.
    Constant,
    /// Channel `k` holds `x`, `y`, `view`, then `x + y + k`; sampling errors show up as offsets.
    #[default]
    Ramp,
    /// Uniform in `[-1, 1)` from the config seed, one stream per view.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    pub kind: FeatureKind,
    pub channels: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self { kind: FeatureKind::default(), channels: 8 }
    }
}

/// Cameras on a circle around `target`, all looking at it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RigConfig {
    pub views: usize,
    pub radius: f64,
    pub height: f64,
    pub target: [f64; 3],
    pub image_size: [usize; 2],
    pub feature_size: [usize; 2],
    /// Focal length in image pixels.
    pub focal: f64,
}

impl Default for RigConfig {
    fn default() -> Self {
        Self {
            views: 8,
            radius: 4.5,
            height: 2.2,
            target: [0.0, 0.0, 0.6],
            image_size: [160, 120],
            feature_size: [40, 30],
            focal: 120.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub preset: Preset,
    pub grid: Option<GridDoc>,
    /// `None` uses 1 for a single view and 0 otherwise.
    pub theta: Option<f64>,
    /// `None` uses three voxel sizes.
    pub truncate_distance: Option<f64>,
    #[serde(with = "text")]
    pub weighting: Weighting,
    #[serde(with = "text")]
    pub behind_surface: BehindSurface,
    #[serde(with = "text")]
    pub depth_convention: DepthConvention,
    #[serde(with = "text")]
    pub attach_mode: AttachMode,
    /// Pixel stride for depth-to-cloud.
    pub stride: usize,
    pub nms_iou: f64,
    pub recall_positions: u32,
    pub loss_weights: LossWeightsDoc,
    pub seed: u64,
    pub features: FeatureConfig,
    pub rig: RigConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self::preset(Preset::Indoor)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossWeightsDoc {
    pub lambda: f64,
    pub alpha: f64,
    pub beta: f64,
    pub n_pos: u32,
}

impl Default for LossWeightsDoc {
    fn default() -> Self {
        let w = LossWeights::default();
        Self { lambda: w.lambda, alpha: w.alpha, beta: w.beta, n_pos: w.n_pos }
    }
}

impl PipelineConfig {
    pub fn preset(preset: Preset) -> Self {
        Self {
            preset,
            grid: None,
            theta: None,
            truncate_distance: None,
            weighting: Weighting::default(),
            behind_surface: BehindSurface::default(),
            depth_convention: DepthConvention::Ray,
            attach_mode: AttachMode::default(),
            stride: 1,
            nms_iou: 0.25,
            recall_positions: 40,
            loss_weights: LossWeightsDoc::default(),
            seed: 0,
            features: FeatureConfig::default(),
            rig: RigConfig::default(),
        }
    }

    pub fn indoor() -> Self {
        Self::preset(Preset::Indoor)
    }

    pub fn outdoor() -> Self {
        Self::preset(Preset::Outdoor)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let config: Self = json::load(path)?;
        config.validate()?;
        Ok(config)
    }

    /// Checks every derived value.
    pub fn validate(&self) -> Result<()> {
        let grid = self.voxel_grid()?;
        voxgeo_core::tsdf::TsdfVolume::new(grid, self.truncation(&grid))?;
        self.loss_weights()?;
        voxgeo_core::detection::RecallPositions::try_from(self.recall_positions)?;
        if self.stride == 0 {
            return Err(voxgeo_core::Error::InvalidParameter("stride must be >= 1").into());
        }
        if !(0.0..=1.0).contains(&self.nms_iou) {
            return Err(voxgeo_core::Error::InvalidParameter("nms_iou must lie in [0, 1]").into());
        }
        if let Some(t) = self.theta {
            if !t.is_finite() {
                return Err(voxgeo_core::Error::InvalidParameter("theta must be finite").into());
            }
        }
        Ok(())
    }

    pub fn voxel_grid(&self) -> Result<VoxelGrid> {
        let doc = self.grid.unwrap_or_else(|| self.preset.grid());
        Ok(VoxelGrid::new(doc.dims, doc.voxel_size, Vec3::from_array(doc.origin))?)
    }

    pub fn theta_for(&self, n_views: usize) -> f64 {
        self.theta.unwrap_or_else(|| default_theta(n_views))
    }

    pub fn truncation(&self, grid: &VoxelGrid) -> f64 {
        self.truncate_distance.unwrap_or_else(|| default_truncation(grid))
    }

    pub fn integrate_options(&self) -> IntegrateOptions {
        IntegrateOptions { weighting: self.weighting, behind_surface: self.behind_surface }
    }

    pub fn loss_weights(&self) -> Result<LossWeights> {
        let w = self.loss_weights;
        Ok(LossWeights::new(w.lambda, w.alpha, w.beta, w.n_pos)?)
    }
}
