use core::fmt;

/// Errors raised by the geometry kernels.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Camera parameters violate an invariant (non-rigid extrinsics, bad sizes, ...).
    InvalidCamera(&'static str),
    /// Voxel grid with zero dims or a non-positive voxel size.
    InvalidGrid(&'static str),
    /// The point lies on the camera plane, the homogeneous divisor vanishes.
    DegenerateProjection,
    /// A depth that must be strictly positive and finite was not.
    InvalidDepth,
    /// Two inputs that must agree in shape do not.
    ShapeMismatch(&'static str),
    /// A list that must be non-empty was empty.
    EmptyInput(&'static str),
    /// A scalar parameter is out of its domain.
    InvalidParameter(&'static str),
    /// A box has a non-positive or non-finite extent.
    DegenerateBox,
    /// Index into a probability vector or class table is out of range.
    IndexOutOfRange { index: usize, len: usize },
    /// Scene primitive violates an invariant.
    InvalidScene(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidCamera(why) => write!(f, "invalid camera: {why}"),
            Error::InvalidGrid(why) => write!(f, "invalid voxel grid: {why}"),
            Error::DegenerateProjection => f.write_str("degenerate projection: point lies on the camera plane"),
            Error::InvalidDepth => f.write_str("depth must be positive and finite"),
            Error::ShapeMismatch(what) => write!(f, "shape mismatch: {what}"),
            Error::EmptyInput(what) => write!(f, "empty input: {what}"),
            Error::InvalidParameter(what) => write!(f, "invalid parameter: {what}"),
            Error::DegenerateBox => f.write_str("degenerate box: extents must be positive"),
            Error::IndexOutOfRange { index, len } => {
                write!(f, "index {index} out of range for length {len}")
            }
            Error::InvalidScene(why) => write!(f, "invalid scene: {why}"),
        }
    }
}

impl core::error::Error for Error {}
