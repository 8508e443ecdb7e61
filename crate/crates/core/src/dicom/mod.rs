//! DICOM series ingestion.
//!
//! Reads the restricted profile this toolkit needs and nothing more:
//! Part 10 files (128-byte preamble + "DICM", or a bare element stream),
//! Explicit or Implicit VR Little Endian, uncompressed 16-bit pixel data,
//! one slice per file. Sequences are skipped over, never interpreted.
//! Compressed or big-endian transfer syntaxes are rejected up front.
//!
//! [`parse_dicom_file`] decodes one slice; [`assemble_series`] sorts slices
//! by their z position and stacks them into a calibrated [`HuVolume`].

mod parse;
pub(crate) mod write;

use std::fs;
use std::io;
use std::path::Path;

use thiserror::Error;

pub use parse::parse_dicom_file;

use crate::volume::{Dims, HuVolume, Spacing, HU_MAX, HU_MIN};

/// A DICOM tag as (group, element).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Tag(pub u16, pub u16);

impl std::fmt::Display for Tag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({:04X},{:04X})", self.0, self.1)
    }
}

#[derive(Debug, Error)]
pub enum DicomError {
    #[error("io error: {0}")]
    Io(#[from] io::Error),
    #[error("unsupported transfer syntax \"{0}\"")]
    UnsupportedTransferSyntax(String),
    #[error("required tag {0} missing")]
    MissingTag(Tag),
    #[error("malformed element: {0}")]
    MalformedElement(String),
    #[error("bits allocated {0} unsupported, only 16 is read")]
    UnsupportedBitsAllocated(u16),
    #[error("inconsistent slice geometry: {0}")]
    InconsistentGeometry(String),
    #[error("two slices share position z = {0} mm")]
    DuplicateSlicePosition(f64),
    #[error("slice gap {gap_mm} mm deviates from the median {median_mm} mm by more than 15%")]
    NonUniformSpacing { gap_mm: f64, median_mm: f64 },
    #[error("a series needs at least 2 slices, got {0}")]
    TooFewSlices(usize),
}

/// One decoded slice: acquisition geometry, rescale calibration and the raw
/// stored pixel values (not yet in Hounsfield units).
#[derive(Clone, Debug)]
pub struct DicomSlice {
    pub rows: u16,
    pub cols: u16,
    pub bits_allocated: u16,
    /// 0 = unsigned stored pixels, 1 = two's complement.
    pub pixel_representation: u16,
    pub rescale_slope: f64,
    pub rescale_intercept: f64,
    /// (row spacing, column spacing) in mm.
    pub pixel_spacing_mm: (f64, f64),
    pub slice_thickness_mm: f64,
    /// z component of ImagePositionPatient, in mm.
    pub image_position_z_mm: f64,
    /// Stored values row-major, rows * cols entries, widened to i32 so both
    /// unsigned and signed 16-bit sources fit.
    pub raw_pixels: Vec<i32>,
}

/// Geometry summary of an assembled series.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesMeta {
    /// Median gap between consecutive slice positions, in mm.
    pub slice_spacing_mm: f64,
    /// (row spacing, column spacing) in mm.
    pub in_plane_spacing_mm: (f64, f64),
    pub slice_count: usize,
}

/// Stacks parsed slices into a Hounsfield volume.
///
/// Slices are sorted ascending by z position. Stored values are calibrated
/// per slice with `hu = round(slope * raw + intercept)` (half away from
/// zero) and clamped to `[-1024, 3071]`. The slice spacing is the median of
/// consecutive z gaps; any gap more than 15% away from that median rejects
/// the series.
pub fn assemble_series(
    mut slices: Vec<DicomSlice>,
) -> Result<(HuVolume, SeriesMeta), DicomError> {
    if slices.len() < 2 {
        return Err(DicomError::TooFewSlices(slices.len()));
    }

    let rows = slices[0].rows;
    let cols = slices[0].cols;
    let spacing = slices[0].pixel_spacing_mm;
    for s in &slices {
        if s.rows != rows || s.cols != cols {
            return Err(DicomError::InconsistentGeometry(format!(
                "slice is {}x{}, series started {}x{}",
                s.rows, s.cols, rows, cols
            )));
        }
        if (s.pixel_spacing_mm.0 - spacing.0).abs() > 1e-6
            || (s.pixel_spacing_mm.1 - spacing.1).abs() > 1e-6
        {
            return Err(DicomError::InconsistentGeometry(format!(
                "pixel spacing ({}, {}) differs from ({}, {})",
                s.pixel_spacing_mm.0, s.pixel_spacing_mm.1, spacing.0, spacing.1
            )));
        }
    }

    slices.sort_by(|a, b| a.image_position_z_mm.total_cmp(&b.image_position_z_mm));
    for pair in slices.windows(2) {
        if pair[0].image_position_z_mm == pair[1].image_position_z_mm {
            return Err(DicomError::DuplicateSlicePosition(
                pair[0].image_position_z_mm,
            ));
        }
    }

    let gaps: Vec<f64> = slices
        .windows(2)
        .map(|p| p[1].image_position_z_mm - p[0].image_position_z_mm)
        .collect();
    let median = median_of(&gaps);
    for &gap in &gaps {
        if (gap - median).abs() > 0.15 * median {
            return Err(DicomError::NonUniformSpacing {
                gap_mm: gap,
                median_mm: median,
            });
        }
    }

    let mut voxels = Vec::with_capacity(slices.len() * rows as usize * cols as usize);
    for s in &slices {
        for &raw in &s.raw_pixels {
            let hu = (s.rescale_slope * f64::from(raw) + s.rescale_intercept).round();
            voxels.push(hu.clamp(f64::from(HU_MIN), f64::from(HU_MAX)) as i16);
        }
    }

    let dims = Dims::new(slices.len(), rows as usize, cols as usize);
    let vol_spacing = Spacing::new(median as f32, spacing.0 as f32, spacing.1 as f32);
    let volume = HuVolume::new(dims, vol_spacing, voxels)
        .expect("assembled volume is valid by construction");
    let meta = SeriesMeta {
        slice_spacing_mm: median,
        in_plane_spacing_mm: spacing,
        slice_count: slices.len(),
    };
    Ok((volume, meta))
}

/// Parses every regular file in `dir` (sorted by file name) and assembles
/// the series.
pub fn read_series_dir(dir: &Path) -> Result<(HuVolume, SeriesMeta), DicomError> {
    let mut paths = Vec::new();
    for entry in fs::read_dir(dir)? {
        let entry = entry?;
        if entry.file_type()?.is_file() {
            paths.push(entry.path());
        }
    }
    paths.sort();
    let mut slices = Vec::with_capacity(paths.len());
    for path in &paths {
        let bytes = fs::read(path)?;
        slices.push(parse_dicom_file(&bytes)?);
    }
    assemble_series(slices)
}

fn median_of(values: &[f64]) -> f64 {
    debug_assert!(!values.is_empty());
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}
