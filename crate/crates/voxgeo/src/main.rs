use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;
use voxgeo::config::{FeatureKind, PipelineConfig};
use voxgeo::harness::{
    default_scene, occupancy_from_depths, random_scene, render_depths, ring_cameras, synthetic_feature_maps,
};
use voxgeo::io::{files_with_extension, json as docs, pfm, vxg};
use voxgeo::pipeline::run_pipeline;
use voxgeo_core::detection::{mean_ap, nms, RecallPositions};
use voxgeo_core::scene::Scene;
use voxgeo_core::tsdf::{fuse, BehindSurface, IntegrateOptions, Weighting};
use voxgeo_core::volume::{aggregate, sample_view, FeatureVolume};
use voxgeo_core::{CameraParams, DepthConvention, DepthMap, VoxelGrid};

#[derive(Parser)]
#[command(
    name = "voxgeo",
    version,
    about = "Voxel feature volumes, occupancy attention, TSDF fusion and 3D box evaluation"
)]
struct Cli {
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Pipeline config JSON; missing fields take the indoor defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render depth maps of a scene and write them with their cameras.
    Render(RenderArgs),
    /// Occupancy scores from depth maps.
    Occupancy(OccupancyArgs),
    /// Fuse depth maps into a TSDF volume.
    FuseTsdf(FuseArgs),
    /// Sample feature maps into a voxel grid and average them.
    Aggregate(AggregateArgs),
    /// Run every stage on a synthetic scene and write all volumes.
    Pipeline(PipelineArgs),
    /// NMS and average precision for JSON-lines detections.
    Eval(EvalArgs),
}

#[derive(Args)]
struct SceneArgs {
    /// Scene JSON; defaults to the built-in indoor scene.
    #[arg(long, conflicts_with = "random_scene")]
    scene: Option<PathBuf>,
    /// Use a random scene drawn from the seed.
    #[arg(long)]
    random_scene: bool,
    /// Directory of `cam_*.json`; defaults to the config's camera ring.
    #[arg(long)]
    cameras: Option<PathBuf>,
}

#[derive(Args)]
struct RenderArgs {
    #[command(flatten)]
    scene: SceneArgs,
    #[arg(long)]
    depth_convention: Option<DepthConvention>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct InputArgs {
    /// Grid JSON; defaults to the config grid.
    #[arg(long)]
    grid: Option<PathBuf>,
    /// Directory of `cam_*.json`, matched to depth maps by sorted name.
    #[arg(long)]
    cameras: PathBuf,
}

#[derive(Args)]
struct OccupancyArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Directory of `*.pfm` depth maps.
    #[arg(long)]
    depths: PathBuf,
    #[arg(long)]
    depth_convention: Option<DepthConvention>,
    #[arg(long)]
    stride: Option<usize>,
    /// Added to every score; 0 writes the raw scores.
    #[arg(long, default_value_t = 0.0)]
    theta: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FuseArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    depths: PathBuf,
    /// Truncation distance in meters; defaults to three voxel sizes.
    #[arg(long)]
    truncate: Option<f64>,
    #[arg(long)]
    weighting: Option<Weighting>,
    #[arg(long)]
    depth_convention: Option<DepthConvention>,
    #[arg(long)]
    behind_surface: Option<BehindSurface>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AggregateArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Directory of `*.pfm` feature maps ("Pf" or "PF").
    #[arg(long, required_unless_present = "synthetic")]
    features: Option<PathBuf>,
    /// Generate feature maps instead: constant, ramp or random.
    #[arg(long, value_parser = parse_kind)]
    synthetic: Option<FeatureKind>,
    #[arg(long)]
    channels: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PipelineArgs {
    #[command(flatten)]
    scene: SceneArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    /// Detections, one JSON object per line with a score.
    #[arg(long)]
    dets: PathBuf,
    /// Ground truth, one JSON object per line.
    #[arg(long)]
    gts: PathBuf,
    /// IoU threshold for a true positive.
    #[arg(long, default_value_t = 0.25)]
    iou: f64,
    /// 11 or 40; defaults to the config value.
    #[arg(long)]
    recall_positions: Option<u32>,
    /// Apply class-aware NMS at this IoU before matching.
    #[arg(long)]
    nms: Option<f64>,
}

fn parse_kind(s: &str) -> std::result::Result<FeatureKind, String> {
    serde_json::from_value(json!(s)).map_err(|_| format!("unknown feature kind `{s}`"))
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring the thread pool")?;
    }
    let mut config = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(s) = cli.seed {
        config.seed = s;
    }
    match cli.command {
        Command::Render(a) => render(&config, a),
        Command::Occupancy(a) => occupancy(&config, a),
        Command::FuseTsdf(a) => fuse_tsdf(&config, a),
        Command::Aggregate(a) => aggregate_cmd(&config, a),
        Command::Pipeline(a) => pipeline(&config, a),
        Command::Eval(a) => eval(&config, a),
    }
}

fn load_scene(config: &PipelineConfig, a: &SceneArgs) -> Result<Scene> {
    Ok(match (&a.scene, a.random_scene) {
        (Some(p), _) => docs::load_scene(p)?,
        (None, true) => random_scene(config.seed),
        (None, false) => default_scene(),
    })
}

fn load_cameras(dir: &Path) -> Result<Vec<CameraParams>> {
    let files = files_with_extension(dir, "json")?;
    if files.is_empty() {
        bail!("no camera JSON files in {}", dir.display());
    }
    Ok(files.iter().map(|p| docs::load_camera(p)).collect::<voxgeo::Result<_>>()?)
}

fn cameras_for(config: &PipelineConfig, a: &SceneArgs) -> Result<Vec<CameraParams>> {
    match &a.cameras {
        Some(dir) => load_cameras(dir),
        None => Ok(ring_cameras(&config.rig)?),
    }
}

fn grid_for(config: &PipelineConfig, a: &InputArgs) -> Result<VoxelGrid> {
    Ok(match &a.grid {
        Some(p) => docs::load_grid(p)?,
        None => config.voxel_grid()?,
    })
}

fn load_depths(dir: &Path, convention: DepthConvention, count: usize) -> Result<Vec<DepthMap>> {
    let files = files_with_extension(dir, "pfm")?;
    if files.len() != count {
        bail!("{} depth maps in {} for {count} cameras", files.len(), dir.display());
    }
    Ok(files.iter().map(|p| pfm::load_depth(p, convention)).collect::<voxgeo::Result<_>>()?)
}

fn render(config: &PipelineConfig, a: RenderArgs) -> Result<()> {
    let scene = load_scene(config, &a.scene)?;
    let cameras = cameras_for(config, &a.scene)?;
    let convention = a.depth_convention.unwrap_or(config.depth_convention);
    let depths = render_depths(&scene, &cameras, convention);
    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    for (i, (d, c)) in depths.iter().zip(&cameras).enumerate() {
        pfm::save_depth(&a.out.join(format!("depth_{i:03}.pfm")), d)?;
        docs::save_camera(&a.out.join(format!("cam_{i:03}.json")), c)?;
    }
    docs::save(&a.out.join("scene.json"), &docs::SceneDoc::from(&scene))?;
    println!("{}", json!({ "views": depths.len(), "convention": convention.to_string(), "out": a.out }));
    Ok(())
}

fn cameras_only(dir: &Path) -> Result<Vec<CameraParams>> {
    // render writes scene.json next to the cameras; skip anything not named cam_*
    let files: Vec<PathBuf> = files_with_extension(dir, "json")?
        .into_iter()
        .filter(|p| p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with("cam")))
        .collect();
    if files.is_empty() {
        return load_cameras(dir);
    }
    Ok(files.iter().map(|p| docs::load_camera(p)).collect::<voxgeo::Result<_>>()?)
}

fn occupancy(config: &PipelineConfig, a: OccupancyArgs) -> Result<()> {
    let grid = grid_for(config, &a.input)?;
    let cameras = cameras_only(&a.input.cameras)?;
    let convention = a.depth_convention.unwrap_or(config.depth_convention);
    let depths = load_depths(&a.depths, convention, cameras.len())?;
    let scores = occupancy_from_depths(&depths, &cameras, &grid, a.stride.unwrap_or(config.stride))?;
    let mut out = vxg::VxgVolume::from(&scores);
    if a.theta != 0.0 {
        out.data = scores.data().iter().map(|&s| (s + a.theta) as f32).collect();
    }
    vxg::save(&a.out, &out)?;
    println!("{}", json!({ "views": cameras.len(), "score_sum": scores.sum(), "out": a.out }));
    Ok(())
}

fn fuse_tsdf(config: &PipelineConfig, a: FuseArgs) -> Result<()> {
    let grid = grid_for(config, &a.input)?;
    let cameras = cameras_only(&a.input.cameras)?;
    let convention = a.depth_convention.unwrap_or(config.depth_convention);
    let depths = load_depths(&a.depths, convention, cameras.len())?;
    let d = a.truncate.unwrap_or_else(|| config.truncation(&grid));
    let options = IntegrateOptions {
        weighting: a.weighting.unwrap_or(config.weighting),
        behind_surface: a.behind_surface.unwrap_or(config.behind_surface),
    };
    let volume = fuse(&depths, &cameras, &grid, d, options)?;
    vxg::save(&a.out, &(&volume).into())?;
    let observed = volume.weight().iter().filter(|&&w| w > 0.0).count();
    println!(
        "{}",
        json!({ "views": cameras.len(), "truncate_distance": d, "observed_voxels": observed, "out": a.out })
    );
    Ok(())
}

fn aggregate_cmd(config: &PipelineConfig, a: AggregateArgs) -> Result<()> {
    let grid = grid_for(config, &a.input)?;
    let cameras = cameras_only(&a.input.cameras)?;
    let maps = match (&a.features, a.synthetic) {
        (_, Some(kind)) => {
            synthetic_feature_maps(&cameras, kind, a.channels.unwrap_or(config.features.channels), config.seed)?
        }
        (Some(dir), None) => {
            let files = files_with_extension(dir, "pfm")?;
            if files.len() != cameras.len() {
                bail!("{} feature maps for {} cameras", files.len(), cameras.len());
            }
            files.iter().enumerate().map(|(i, p)| pfm::load_feature_map(p, i as u32)).collect::<voxgeo::Result<_>>()?
        }
        (None, None) => unreachable!("clap requires --features or --synthetic"),
    };
    let samples =
        maps.iter().zip(&cameras).map(|(m, c)| sample_view(m, c, &grid)).collect::<voxgeo_core::Result<Vec<_>>>()?;
    let volume: FeatureVolume = aggregate(&samples)?;
    vxg::save(&a.out, &(&volume).into())?;
    let covered = volume.coverage().iter().filter(|&&c| c > 0).count();
    println!(
        "{}",
        json!({ "views": cameras.len(), "channels": volume.channels(), "covered_voxels": covered, "out": a.out })
    );
    Ok(())
}

fn pipeline(config: &PipelineConfig, a: PipelineArgs) -> Result<()> {
    let scene = load_scene(config, &a.scene)?;
    let cameras = cameras_for(config, &a.scene)?;
    let maps = synthetic_feature_maps(&cameras, config.features.kind, config.features.channels, config.seed)?;
    let out = run_pipeline(&scene, &cameras, &maps, config)?;
    out.write(&a.out)?;
    println!("{}", serde_json::to_string_pretty(&out.report)?);
    if !out.report.all_passed() {
        bail!("pipeline invariant checks failed; see {}", a.out.join("report.json").display());
    }
    Ok(())
}

fn eval(config: &PipelineConfig, a: EvalArgs) -> Result<()> {
    let mut dets = docs::load_detections(&a.dets)?;
    let gts = docs::load_ground_truth(&a.gts)?;
    let positions = RecallPositions::try_from(a.recall_positions.unwrap_or(config.recall_positions))?;
    let before = dets.len();
    if let Some(t) = a.nms {
        dets = nms(&dets, t);
    }
    let result = mean_ap(&dets, &gts, a.iou, positions)?;
    let classes: Vec<_> = result
        .per_class
        .iter()
        .map(|c| json!({ "label": c.label, "ap": c.ap, "num_gt": c.num_gt, "num_det": c.num_det }))
        .collect();
    let report = json!({
        "iou_threshold": a.iou,
        "recall_positions": positions.count(),
        "detections": before,
        "after_nms": dets.len(),
        "mean_ap": result.map,
        "classes": classes,
    });
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}
