//! JSON documents: cameras, grids, scenes and JSON-lines detections.
//!
//! Camera:
//! `{"intrinsics": [12 numbers, row-major 3x4], "extrinsics": [16 numbers,
//! row-major 4x4 world-to-camera], "image_size": [W, H], "feature_size":
//! [W_f, H_f]}`
//!
//! Grid: `{"dims": [N_x, N_y, N_z], "voxel_size": s, "origin": [x, y, z]}`
//!
//! Scene: `{"primitives": [{"type": "plane", "normal": [..], "offset": o},
//! {"type": "box", "center": [..], "size": [..]}, {"type": "sphere",
//! "center": [..], "radius": r}]}`
//!
//! Detections and ground truth, one object per line:
//! `{"center": [..], "size": [..], "yaw": a, "label": l, "score": s}`
//! (`score` only for detections).

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use voxgeo_core::detection::{Box3D, Detection, GroundTruth};
use voxgeo_core::scene::{Primitive, Scene};
use voxgeo_core::{CameraParams, Vec3, VoxelGrid};

use crate::error::{format, io_at, Error, Result};

pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(io_at(path))?;
    serde_json::from_str(&text).map_err(|source| Error::Json { path: path.to_path_buf(), source })
}

pub fn save<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|source| Error::Json { path: path.to_path_buf(), source })?;
    text.push('\n');
    std::fs::write(path, text).map_err(io_at(path))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraDoc {
    pub intrinsics: Vec<f64>,
    pub extrinsics: Vec<f64>,
    pub image_size: [usize; 2],
    pub feature_size: [usize; 2],
}

impl From<&CameraParams> for CameraDoc {
    fn from(c: &CameraParams) -> Self {
        let (w, h) = c.image_size();
        let (wf, hf) = c.feature_size();
        Self {
            intrinsics: c.intrinsics().iter().flatten().copied().collect(),
            extrinsics: c.extrinsics().iter().flatten().copied().collect(),
            image_size: [w, h],
            feature_size: [wf, hf],
        }
    }
}

impl TryFrom<&CameraDoc> for CameraParams {
    type Error = Error;
    fn try_from(d: &CameraDoc) -> Result<Self> {
        if d.intrinsics.len() != 12 || d.extrinsics.len() != 16 {
            return Err(format("camera needs 12 intrinsics and 16 extrinsics values"));
        }
        let mut k = [[0.0; 4]; 3];
        let mut e = [[0.0; 4]; 4];
        for (i, v) in d.intrinsics.iter().enumerate() {
            k[i / 4][i % 4] = *v;
        }
        for (i, v) in d.extrinsics.iter().enumerate() {
            e[i / 4][i % 4] = *v;
        }
        let size = |s: [usize; 2]| (s[0], s[1]);
        Ok(CameraParams::new(k, e, size(d.image_size), size(d.feature_size))?)
    }
}

pub fn load_camera(path: &Path) -> Result<CameraParams> {
    CameraParams::try_from(&load::<CameraDoc>(path)?)
}

pub fn save_camera(path: &Path, camera: &CameraParams) -> Result<()> {
    save(path, &CameraDoc::from(camera))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridDoc {
    pub dims: [usize; 3],
    pub voxel_size: f64,
    pub origin: [f64; 3],
}

impl From<&VoxelGrid> for GridDoc {
    fn from(g: &VoxelGrid) -> Self {
        Self { dims: g.dims(), voxel_size: g.voxel_size(), origin: g.origin().to_array() }
    }
}

impl TryFrom<&GridDoc> for VoxelGrid {
    type Error = Error;
    fn try_from(d: &GridDoc) -> Result<Self> {
        Ok(VoxelGrid::new(d.dims, d.voxel_size, Vec3::from_array(d.origin))?)
    }
}

pub fn load_grid(path: &Path) -> Result<VoxelGrid> {
    VoxelGrid::try_from(&load::<GridDoc>(path)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PrimitiveDoc {
    Plane { normal: [f64; 3], offset: f64 },
    Box { center: [f64; 3], size: [f64; 3] },
    Sphere { center: [f64; 3], radius: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneDoc {
    pub primitives: Vec<PrimitiveDoc>,
}

impl From<&Scene> for SceneDoc {
    fn from(s: &Scene) -> Self {
        let primitives = s
            .primitives()
            .iter()
            .map(|p| match *p {
                Primitive::Plane { normal, offset } => PrimitiveDoc::Plane { normal: normal.to_array(), offset },
                Primitive::Box { center, size } => {
                    PrimitiveDoc::Box { center: center.to_array(), size: size.to_array() }
                }
                Primitive::Sphere { center, radius } => PrimitiveDoc::Sphere { center: center.to_array(), radius },
            })
            .collect();
        Self { primitives }
    }
}

impl TryFrom<&SceneDoc> for Scene {
    type Error = Error;
    fn try_from(d: &SceneDoc) -> Result<Self> {
        let v = Vec3::from_array;
        let prims = d
            .primitives
            .iter()
            .map(|p| match *p {
                PrimitiveDoc::Plane { normal, offset } => Primitive::Plane { normal: v(normal), offset },
                PrimitiveDoc::Box { center, size } => Primitive::Box { center: v(center), size: v(size) },
                PrimitiveDoc::Sphere { center, radius } => Primitive::Sphere { center: v(center), radius },
            })
            .collect();
        Ok(Scene::new(prims)?)
    }
}

pub fn load_scene(path: &Path) -> Result<Scene> {
    Scene::try_from(&load::<SceneDoc>(path)?)
}

/// One line of a detections or ground-truth file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxLine {
    pub center: [f64; 3],
    pub size: [f64; 3],
    #[serde(default)]
    pub yaw: f64,
    pub label: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
}

impl BoxLine {
    pub fn bbox(&self) -> Result<Box3D> {
        Ok(Box3D::new(Vec3::from_array(self.center), Vec3::from_array(self.size), self.yaw)?)
    }

    pub fn detection(&self) -> Result<Detection> {
        let score = self.score.ok_or_else(|| format("detection line lacks a score"))?;
        Ok(Detection::new(self.bbox()?, self.label, score)?)
    }

    pub fn ground_truth(&self) -> Result<GroundTruth> {
        Ok(GroundTruth { bbox: self.bbox()?, label: self.label })
    }

    pub fn from_detection(d: &Detection) -> Self {
        let b = d.bbox();
        Self {
            center: b.center().to_array(),
            size: b.size().to_array(),
            yaw: b.yaw(),
            label: d.label(),
            score: Some(d.score()),
        }
    }

    pub fn from_ground_truth(g: &GroundTruth) -> Self {
        let b = &g.bbox;
        Self { center: b.center().to_array(), size: b.size().to_array(), yaw: b.yaw(), label: g.label, score: None }
    }
}

/// Reads a JSON-lines file, skipping blank lines.
pub fn read_lines(path: &Path) -> Result<Vec<BoxLine>> {
    let file = std::fs::File::open(path).map_err(io_at(path))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_at(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed = serde_json::from_str(&line).map_err(|e| format(format!("{}:{}: {e}", path.display(), n + 1)))?;
        out.push(parsed);
    }
    Ok(out)
}

pub fn write_lines(path: &Path, lines: &[BoxLine]) -> Result<()> {
    let mut buf = Vec::new();
    for l in lines {
        serde_json::to_writer(&mut buf, l).map_err(|source| Error::Json { path: path.to_path_buf(), source })?;
        buf.write_all(b"\n")?;
    }
    std::fs::write(path, buf).map_err(io_at(path))
}

pub fn load_detections(path: &Path) -> Result<Vec<Detection>> {
    read_lines(path)?.iter().map(BoxLine::detection).collect()
}

pub fn load_ground_truth(path: &Path) -> Result<Vec<GroundTruth>> {
    read_lines(path)?.iter().map(BoxLine::ground_truth).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use voxgeo_core::geometry::look_at;

    #[test]
    fn camera_document_shape() {
        let ext = look_at(Vec3::new(1.0, 2.0, 3.0), Vec3::ZERO, Vec3::new(0.0, 0.0, 1.0)).unwrap();
        let cam = CameraParams::pinhole(100.0, 90.0, 32.0, 24.0, ext, (64, 48), (16, 12)).unwrap();
        let doc = CameraDoc::from(&cam);
        let text = serde_json::to_string(&doc).unwrap();
        for key in ["\"intrinsics\"", "\"extrinsics\"", "\"image_size\":[64,48]", "\"feature_size\":[16,12]"] {
            assert!(text.contains(key), "{text}");
        }
        assert_eq!(CameraParams::try_from(&doc).unwrap(), cam);
        let bad = CameraDoc { intrinsics: vec![1.0; 11], ..doc };
        assert!(CameraParams::try_from(&bad).is_err());
    }

    #[test]
    fn scene_document_tags() {
        let text = r#"{"primitives": [
            {"type": "plane", "normal": [0, 0, 1], "offset": 0},
            {"type": "box", "center": [0, 0, 0.5], "size": [1, 1, 1]},
            {"type": "sphere", "center": [2, 0, 1], "radius": 0.5}
        ]}"#;
        let doc: SceneDoc = serde_json::from_str(text).unwrap();
        let scene = Scene::try_from(&doc).unwrap();
        assert_eq!(scene.primitives().len(), 3);
        assert_eq!(SceneDoc::from(&scene), doc);
    }

    #[test]
    fn box_lines() {
        let l: BoxLine =
            serde_json::from_str(r#"{"center":[0,0,0],"size":[1,2,3],"yaw":0.5,"label":2,"score":0.75}"#).unwrap();
        let d = l.detection().unwrap();
        assert_eq!((d.label(), d.score()), (2, 0.75));
        let g: BoxLine = serde_json::from_str(r#"{"center":[0,0,0],"size":[1,2,3],"label":1}"#).unwrap();
        assert!(g.detection().is_err());
        assert_eq!(g.ground_truth().unwrap().bbox.yaw(), 0.0);
    }
}
