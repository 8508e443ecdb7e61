//! Radiodensity windowing and fixed-size cropping.
//!
//! Windowing clips HU to a configured band and quantizes to 8 bits; the
//! default [-1000, 400] band is the usual lung window. Air maps to 0, so a
//! crop padded with 0 is indistinguishable from surrounding air.

use thiserror::Error;

use crate::volume::{Dims, HuVolume, U8Volume, HU_MIN};

/// Default lung window in HU.
pub const DEFAULT_WINDOW_LO_HU: i16 = -1000;
pub const DEFAULT_WINDOW_HI_HU: i16 = 400;

/// Default crop edge, voxels. At 1.5 mm spacing this is a 240 mm cube.
pub const DEFAULT_CROP_SIZE: usize = 160;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum WindowError {
    #[error("window [{lo}, {hi}] is empty, the low bound must be below the high")]
    InvalidWindow { lo: i16, hi: i16 },
}

/// Clips HU to `[lo_hu, hi_hu]` and quantizes to u8:
/// `q = round((clamp(hu) - lo) / (hi - lo) * 255)`, half away from zero.
pub fn window_hu(vol: &HuVolume, lo_hu: i16, hi_hu: i16) -> Result<U8Volume, WindowError> {
    if lo_hu >= hi_hu {
        return Err(WindowError::InvalidWindow { lo: lo_hu, hi: hi_hu });
    }
    // One table entry per representable HU value; voxels index it directly.
    let lo = f64::from(lo_hu);
    let span = f64::from(hi_hu) - lo;
    let lut: Vec<u8> = (0..4096)
        .map(|i| {
            let hu = f64::from(i as i16 + HU_MIN);
            let clipped = hu.clamp(lo, lo + span);
            ((clipped - lo) / span * 255.0).round() as u8
        })
        .collect();
    let voxels = vol
        .voxels()
        .iter()
        .map(|&hu| lut[(i32::from(hu) - i32::from(HU_MIN)) as usize])
        .collect();
    Ok(U8Volume::new(vol.dims(), vol.spacing_mm(), voxels)
        .expect("windowed volume shape matches the input"))
}

/// Copies a fixed-size box centered on `center`; everything that falls
/// outside the source grid becomes `pad_value`.
///
/// Output index `o` reads input index `center - floor(size/2) + o` on each
/// axis, so the center voxel lands at `floor(size/2)` in the output.
pub fn crop_centered_raw<T: Copy>(
    dims: Dims,
    voxels: &[T],
    center: (usize, usize, usize),
    size: Dims,
    pad_value: T,
) -> Vec<T> {
    assert!(
        size.depth > 0 && size.height > 0 && size.width > 0,
        "crop size must be positive on every axis"
    );
    assert_eq!(voxels.len(), dims.len(), "voxel buffer matches dims");

    let start = (
        center.0 as i64 - (size.depth / 2) as i64,
        center.1 as i64 - (size.height / 2) as i64,
        center.2 as i64 - (size.width / 2) as i64,
    );
    let mut out = Vec::with_capacity(size.len());
    for oz in 0..size.depth {
        let z = start.0 + oz as i64;
        for oy in 0..size.height {
            let y = start.1 + oy as i64;
            for ox in 0..size.width {
                let x = start.2 + ox as i64;
                let inside = z >= 0
                    && y >= 0
                    && x >= 0
                    && z < dims.depth as i64
                    && y < dims.height as i64
                    && x < dims.width as i64;
                out.push(if inside {
                    voxels[dims.index(z as usize, y as usize, x as usize)]
                } else {
                    pad_value
                });
            }
        }
    }
    out
}

/// [`crop_centered_raw`] over a Hounsfield volume; spacing is preserved.
pub fn crop_centered(
    vol: &HuVolume,
    center: (usize, usize, usize),
    size: Dims,
    pad_value: i16,
) -> HuVolume {
    let voxels = crop_centered_raw(vol.dims(), vol.voxels(), center, size, pad_value);
    HuVolume::new(size, vol.spacing_mm(), voxels).expect("crop output shape is size")
}

/// [`crop_centered_raw`] over a windowed volume; spacing is preserved.
pub fn crop_centered_u8(
    vol: &U8Volume,
    center: (usize, usize, usize),
    size: Dims,
    pad_value: u8,
) -> U8Volume {
    let voxels = crop_centered_raw(vol.dims(), vol.voxels(), center, size, pad_value);
    U8Volume::new(size, vol.spacing_mm(), voxels).expect("crop output shape is size")
}
