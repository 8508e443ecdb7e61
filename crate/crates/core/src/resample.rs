//! Trilinear resampling onto an isotropic grid.
//!
//! Convention, fixed once and shared with the verification oracle: voxel
//! centers are corner-aligned, so the physical coordinate of index `i` on an
//! axis with spacing `s` is `i * s`. Samples that fall outside the input
//! grid clamp to the nearest border voxel. Interpolation accumulates in f64
//! and the result rounds half away from zero back to i16.

use rayon::prelude::*;

use crate::volume::{Dims, HuVolume, Spacing, VolumeError};

/// Resamples `vol` to `target_spacing_mm`.
///
/// Output size per axis is `max(1, round(n * s_in / s_out))`. When the
/// target equals the input spacing the sample ratio is exactly 1 and the
/// output is voxel-identical to the input.
pub fn trilinear_resample(
    vol: &HuVolume,
    target_spacing_mm: Spacing,
) -> Result<HuVolume, VolumeError> {
    if !target_spacing_mm.is_valid() {
        return Err(VolumeError::InvalidSpacing(
            target_spacing_mm.dz,
            target_spacing_mm.dy,
            target_spacing_mm.dx,
        ));
    }
    let din = vol.dims();
    let sin = vol.spacing_mm();

    let out_len = |n: usize, s_in: f32, s_out: f32| -> usize {
        ((n as f64 * f64::from(s_in) / f64::from(s_out)).round() as usize).max(1)
    };
    let dout = Dims::new(
        out_len(din.depth, sin.dz, target_spacing_mm.dz),
        out_len(din.height, sin.dy, target_spacing_mm.dy),
        out_len(din.width, sin.dx, target_spacing_mm.dx),
    );

    // Per-axis sample tables: output index -> (low input index, high input
    // index, fraction). The step is the single ratio target/input so that
    // equal spacings give an exactly integral coordinate.
    let axis_table = |n_out: usize, n_in: usize, s_in: f32, s_out: f32| {
        let step = f64::from(s_out) / f64::from(s_in);
        (0..n_out)
            .map(|o| {
                let pos = o as f64 * step;
                let low = pos.floor();
                let frac = pos - low;
                let i0 = (low as isize).clamp(0, n_in as isize - 1) as usize;
                let i1 = (low as isize + 1).clamp(0, n_in as isize - 1) as usize;
                (i0, i1, frac)
            })
            .collect::<Vec<_>>()
    };
    let zs = axis_table(dout.depth, din.depth, sin.dz, target_spacing_mm.dz);
    let ys = axis_table(dout.height, din.height, sin.dy, target_spacing_mm.dy);
    let xs = axis_table(dout.width, din.width, sin.dx, target_spacing_mm.dx);

    let lerp = |a: f64, b: f64, t: f64| a * (1.0 - t) + b * t;
    let voxels: Vec<i16> = (0..dout.depth)
        .into_par_iter()
        .map(|oz| {
            let (z0, z1, fz) = zs[oz];
            let mut slab = Vec::with_capacity(dout.height * dout.width);
            for &(y0, y1, fy) in &ys {
                for &(x0, x1, fx) in &xs {
                    let at = |z: usize, y: usize, x: usize| f64::from(vol.get(z, y, x));
                    let c00 = lerp(at(z0, y0, x0), at(z0, y0, x1), fx);
                    let c01 = lerp(at(z0, y1, x0), at(z0, y1, x1), fx);
                    let c10 = lerp(at(z1, y0, x0), at(z1, y0, x1), fx);
                    let c11 = lerp(at(z1, y1, x0), at(z1, y1, x1), fx);
                    let c0 = lerp(c00, c01, fy);
                    let c1 = lerp(c10, c11, fy);
                    slab.push(lerp(c0, c1, fz).round() as i16);
                }
            }
            slab
        })
        .flatten()
        .collect();

    HuVolume::new(dout, target_spacing_mm, voxels)
}
