//! File formats, synthetic scenes, the end-to-end pipeline driver and the
//! command line for [`voxgeo_core`].
//!
//! - [`io`]: the VXG1 volume container, PFM depth and feature maps, and the
//!   JSON camera, grid, scene and detection documents.
//! - [`config`]: pipeline configuration with indoor and outdoor presets.
//! - [`harness`]: camera rigs, synthetic feature maps, default scenes and
//!   parallel depth rendering.
//! - [`pipeline`]: render, score, sample, aggregate, attend, fuse and attach,
//!   with a JSON metrics report.

pub mod config;
pub mod error;
pub mod harness;
pub mod io;
pub mod pipeline;

pub use error::{Error, Result};
