//! Shared volume types.
//!
//! All grids in this crate are dense, depth-major boxes: the voxel at
//! `(z, y, x)` lives at linear index `(z * height + y) * width + x`.
//! Axis order is always `(z, y, x)` = (slice, row, column) and physical
//! spacing follows the same order in millimetres.

use thiserror::Error;

/// Lower clamp for calibrated CT values, in Hounsfield units.
pub const HU_MIN: i16 = -1024;
/// Upper clamp for calibrated CT values, in Hounsfield units.
pub const HU_MAX: i16 = 3071;

/// Grid shape, depth-major: `(depth, height, width)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Dims {
    pub depth: usize,
    pub height: usize,
    pub width: usize,
}

impl Dims {
    pub fn new(depth: usize, height: usize, width: usize) -> Self {
        Self {
            depth,
            height,
            width,
        }
    }

    /// Number of voxels in a grid of this shape.
    pub fn len(&self) -> usize {
        self.depth * self.height * self.width
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Linear index of `(z, y, x)`. Callers must stay in bounds.
    #[inline]
    pub fn index(&self, z: usize, y: usize, x: usize) -> usize {
        debug_assert!(z < self.depth && y < self.height && x < self.width);
        (z * self.height + y) * self.width + x
    }

    /// Inverse of [`Dims::index`].
    #[inline]
    pub fn coords(&self, index: usize) -> (usize, usize, usize) {
        let x = index % self.width;
        let rest = index / self.width;
        (rest / self.height, rest % self.height, x)
    }
}

impl std::fmt::Display for Dims {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}x{}", self.depth, self.height, self.width)
    }
}

/// Physical voxel spacing in millimetres, ordered `(dz, dy, dx)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Spacing {
    pub dz: f32,
    pub dy: f32,
    pub dx: f32,
}

impl Spacing {
    pub fn new(dz: f32, dy: f32, dx: f32) -> Self {
        Self { dz, dy, dx }
    }

    /// Isotropic spacing with the same step on every axis.
    pub fn iso(step: f32) -> Self {
        Self::new(step, step, step)
    }

    pub fn is_valid(&self) -> bool {
        [self.dz, self.dy, self.dx]
            .iter()
            .all(|s| s.is_finite() && *s > 0.0)
    }
}

/// Why a volume could not be constructed.
#[derive(Debug, Error)]
pub enum VolumeError {
    #[error("voxel buffer holds {found} values but {dims} needs {expected}")]
    LengthMismatch {
        dims: Dims,
        expected: usize,
        found: usize,
    },
    #[error("spacing must be finite and positive, got ({0}, {1}, {2}) mm")]
    InvalidSpacing(f32, f32, f32),
    #[error("value {value} at index {index} outside the Hounsfield range [{HU_MIN}, {HU_MAX}]")]
    HuOutOfRange { index: usize, value: i16 },
}

/// A calibrated CT volume in Hounsfield units.
///
/// Every voxel is guaranteed to lie in `[HU_MIN, HU_MAX]`; constructors
/// reject anything outside that range rather than clamping silently.
#[derive(Clone, Debug, PartialEq)]
pub struct HuVolume {
    dims: Dims,
    spacing_mm: Spacing,
    voxels: Vec<i16>,
}

impl HuVolume {
    pub fn new(dims: Dims, spacing_mm: Spacing, voxels: Vec<i16>) -> Result<Self, VolumeError> {
        if !spacing_mm.is_valid() {
            return Err(VolumeError::InvalidSpacing(
                spacing_mm.dz,
                spacing_mm.dy,
                spacing_mm.dx,
            ));
        }
        if voxels.len() != dims.len() {
            return Err(VolumeError::LengthMismatch {
                dims,
                expected: dims.len(),
                found: voxels.len(),
            });
        }
        if let Some(index) = voxels.iter().position(|&v| !(HU_MIN..=HU_MAX).contains(&v)) {
            return Err(VolumeError::HuOutOfRange {
                index,
                value: voxels[index],
            });
        }
        Ok(Self {
            dims,
            spacing_mm,
            voxels,
        })
    }

    /// Constant-valued volume, handy for tests and padding.
    pub fn filled(dims: Dims, spacing_mm: Spacing, value: i16) -> Result<Self, VolumeError> {
        Self::new(dims, spacing_mm, vec![value; dims.len()])
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn spacing_mm(&self) -> Spacing {
        self.spacing_mm
    }

    pub fn voxels(&self) -> &[i16] {
        &self.voxels
    }

    #[inline]
    pub fn get(&self, z: usize, y: usize, x: usize) -> i16 {
        self.voxels[self.dims.index(z, y, x)]
    }

    pub fn into_voxels(self) -> Vec<i16> {
        self.voxels
    }
}

/// An 8-bit volume, the output of windowing.
#[derive(Clone, Debug, PartialEq)]
pub struct U8Volume {
    dims: Dims,
    spacing_mm: Spacing,
    voxels: Vec<u8>,
}

impl U8Volume {
    pub fn new(dims: Dims, spacing_mm: Spacing, voxels: Vec<u8>) -> Result<Self, VolumeError> {
        if !spacing_mm.is_valid() {
            return Err(VolumeError::InvalidSpacing(
                spacing_mm.dz,
                spacing_mm.dy,
                spacing_mm.dx,
            ));
        }
        if voxels.len() != dims.len() {
            return Err(VolumeError::LengthMismatch {
                dims,
                expected: dims.len(),
                found: voxels.len(),
            });
        }
        Ok(Self {
            dims,
            spacing_mm,
            voxels,
        })
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn spacing_mm(&self) -> Spacing {
        self.spacing_mm
    }

    pub fn voxels(&self) -> &[u8] {
        &self.voxels
    }

    #[inline]
    pub fn get(&self, z: usize, y: usize, x: usize) -> u8 {
        self.voxels[self.dims.index(z, y, x)]
    }

    pub fn into_voxels(self) -> Vec<u8> {
        self.voxels
    }
}

/// Float tensor produced by the tri-channel loader: three identical channels
/// in `[-1, 1]`, laid out channel-major (`[3][depth][height][width]`).
///
/// This type exists only in memory. On disk the data stays 8-bit; see
/// [`crate::lvol::load_tensor_trichannel`].
#[derive(Clone, Debug, PartialEq)]
pub struct TriChannelTensor {
    dims: Dims,
    data: Vec<f32>,
}

impl TriChannelTensor {
    pub const CHANNELS: usize = 3;

    /// Expands quantized bytes to three identical normalized channels.
    pub fn from_u8(dims: Dims, bytes: &[u8]) -> Result<Self, VolumeError> {
        if bytes.len() != dims.len() {
            return Err(VolumeError::LengthMismatch {
                dims,
                expected: dims.len(),
                found: bytes.len(),
            });
        }
        let mut data = Vec::with_capacity(Self::CHANNELS * bytes.len());
        for _ in 0..Self::CHANNELS {
            data.extend(bytes.iter().map(|&b| f32::from(b) / 255.0 * 2.0 - 1.0));
        }
        Ok(Self { dims, data })
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    /// One channel's voxels, depth-major.
    pub fn channel(&self, c: usize) -> &[f32] {
        let n = self.dims.len();
        &self.data[c * n..(c + 1) * n]
    }

    /// The full channel-major buffer.
    pub fn data(&self) -> &[f32] {
        &self.data
    }
}
