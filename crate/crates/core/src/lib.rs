//! Voxel geometry primitives for image-based 3D detection.
//!
//! The crate is `no_std` (it needs `alloc`) and contains the purely numerical
//! parts of a geometry-aware detection pipeline:
//!
//! - [`geometry`]: pinhole cameras, voxel grids, projection, back-projection
//!   and frustum masks.
//! - [`volume`]: nearest-pixel sampling of 2D feature maps into a voxel grid
//!   and masked multi-view averaging.
//! - [`occupancy`]: depth maps to point clouds, per-voxel point fractions and
//!   the `(S + theta)` attention scaling.
//! - [`tsdf`]: truncated signed distance fusion and attachment of the TSDF
//!   channel to a feature volume.
//! - [`losses`]: detection loss terms with analytic gradients.
//! - [`detection`]: oriented 3D boxes, IoU, NMS and average precision.
//! - [`scene`]: analytic planes, boxes and spheres with exact signed distances
//!   and ray casting, used to synthesize depth maps.
//!
//! File formats, parallel drivers and the command line live in the `voxgeo`
//! crate.

#![cfg_attr(not(test), no_std)]
// `!(x > 0.0)` is how NaN gets rejected alongside non-positive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

/// `FromStr` and `Display` for a fieldless enum from a fixed name table.
macro_rules! text_enum {
    ($ty:ident, $what:literal, { $($variant:ident => $name:literal),+ $(,)? }) => {
        impl core::str::FromStr for $ty {
            type Err = crate::error::Error;
            fn from_str(s: &str) -> crate::error::Result<Self> {
                match s {
                    $($name => Ok($ty::$variant),)+
                    _ => Err(crate::error::Error::InvalidParameter(concat!("unknown ", $what, "; expected one of:" $(, " ", $name)+))),
                }
            }
        }

        impl core::fmt::Display for $ty {
            fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
                f.write_str(match self {
                    $($ty::$variant => $name,)+
                })
            }
        }
    };
}

pub mod detection;
pub mod dual;
pub mod error;
pub mod geometry;
pub mod losses;
pub mod math;
pub mod occupancy;
pub mod scene;
pub mod tsdf;
pub mod volume;

pub use error::{Error, Result};
pub use geometry::{CameraParams, DepthConvention, DepthMap, PixelCoord, VoxelGrid};
pub use math::Vec3;
