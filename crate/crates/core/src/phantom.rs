//! Synthetic thorax CT series with exact ground truth.
//!
//! A phantom is three nested axis-aligned ellipsoids (a soft-tissue body
//! holding two air-filled lungs) plus optional nodule spheres inside a
//! lung, rasterized to HU, optionally dosed with Gaussian noise, and
//! written as a valid DICOM series. Geometry lives in millimeters, so the
//! same spec can be rasterized at any grid; voxel (z, y, x) sits at
//! (z*dz, y*dy, x*dx) mm, matching the resampler's convention.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, UnitSphere};
use rayon::prelude::*;
use thiserror::Error;

use crate::dicom::write::{encode_ct_slice, SliceParams};
use crate::segment::{bounding_box, BBox, Mask};
use crate::shuffle::fisher_yates;
use crate::volume::{Dims, Spacing, HU_MAX, HU_MIN};

pub const HU_AIR: i16 = -1000;
pub const HU_BODY: i16 = 40;
pub const HU_LUNG: i16 = -850;
pub const DEFAULT_NOISE_SIGMA_HU: f64 = 20.0;
pub const DEFAULT_POSITIVE_FRACTION: f64 = 0.34;

#[derive(Debug, Error)]
pub enum PhantomError {
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error("invalid phantom spec: {0}")]
    InvalidSpec(String),
    #[error("positive fraction must lie in [0, 1], got {0}")]
    InvalidFraction(f64),
    #[error("cohort needs at least one case")]
    EmptyCohort,
}

/// Axis-aligned ellipsoid; tuples are (z, y, x) in mm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ellipsoid {
    pub center_mm: (f64, f64, f64),
    pub semi_axes_mm: (f64, f64, f64),
}

impl Ellipsoid {
    fn contains(&self, z: f64, y: f64, x: f64) -> bool {
        let nz = (z - self.center_mm.0) / self.semi_axes_mm.0;
        let ny = (y - self.center_mm.1) / self.semi_axes_mm.1;
        let nx = (x - self.center_mm.2) / self.semi_axes_mm.2;
        nz * nz + ny * ny + nx * nx <= 1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Nodule {
    pub center_mm: (f64, f64, f64),
    pub radius_mm: f64,
    pub hu: i16,
}

impl Nodule {
    fn contains(&self, z: f64, y: f64, x: f64) -> bool {
        let dz = z - self.center_mm.0;
        let dy = y - self.center_mm.1;
        let dx = x - self.center_mm.2;
        dz * dz + dy * dy + dx * dx <= self.radius_mm * self.radius_mm
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhantomSpec {
    pub dims: Dims,
    pub spacing_mm: Spacing,
    pub body: Ellipsoid,
    pub lungs: [Ellipsoid; 2],
    pub nodules: Vec<Nodule>,
    pub noise_sigma_hu: f64,
    /// Seeds the noise stream only; geometry is already explicit above.
    pub seed: u64,
}

/// Ground truth for one phantom.
#[derive(Debug, Clone, PartialEq)]
pub struct PhantomTruth {
    /// Both lung ellipsoids rasterized on the spec's own grid. Nodules
    /// sit strictly inside a lung, so they are part of this mask.
    pub lung_mask: Mask,
    pub lung_bbox: BBox,
    /// 1 iff the spec carries at least one nodule.
    pub label: u8,
    /// [lung volume fraction, mean lung HU, max lung HU], measured on
    /// the emitted (noisy) volume inside the true mask.
    pub features: Vec<f64>,
}

/// One generated cohort member. The full truth mask is recomputable via
/// [`truth_mask_at`] from the stored spec, at any grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CohortCase {
    pub case_id: String,
    /// Series directory, relative to the cohort root (= manifest dir).
    pub rel_path: String,
    pub label: u8,
    pub spec: PhantomSpec,
    pub features: Vec<f64>,
}

impl PhantomSpec {
    /// Default geometry for a grid: all sizes are fractions of the
    /// volume half-extent, so the same anatomy scales to any resolution.
    /// Lungs sit left/right along x. No nodules, noise sigma 20 HU.
    pub fn baseline(dims: Dims, spacing_mm: Spacing, seed: u64) -> PhantomSpec {
        let (hz, hy, hx) = half_extents(dims, spacing_mm);
        let center = (hz, hy, hx);
        let lung_semi = (0.46 * hz, 0.35 * hy, 0.22 * hx);
        let offset = 0.34 * hx;
        PhantomSpec {
            dims,
            spacing_mm,
            body: Ellipsoid {
                center_mm: center,
                semi_axes_mm: (0.88 * hz, 0.90 * hy, 0.94 * hx),
            },
            lungs: [
                Ellipsoid {
                    center_mm: (hz, hy, hx - offset),
                    semi_axes_mm: lung_semi,
                },
                Ellipsoid {
                    center_mm: (hz, hy, hx + offset),
                    semi_axes_mm: lung_semi,
                },
            ],
            nodules: Vec::new(),
            noise_sigma_hu: DEFAULT_NOISE_SIGMA_HU,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), PhantomError> {
        let bad = |msg: String| Err(PhantomError::InvalidSpec(msg));
        if self.dims.is_empty() {
            return bad("dims must be nonzero".into());
        }
        if self.dims.height > u16::MAX as usize || self.dims.width > u16::MAX as usize {
            return bad("slice shape must fit in 16 bits".into());
        }
        if !self.spacing_mm.is_valid() {
            return bad(format!("spacing {:?} is not positive finite", self.spacing_mm));
        }
        if !self.noise_sigma_hu.is_finite() || self.noise_sigma_hu < 0.0 {
            return bad(format!("noise sigma {} must be finite and >= 0", self.noise_sigma_hu));
        }
        for e in [&self.body, &self.lungs[0], &self.lungs[1]] {
            let (az, ay, ax) = e.semi_axes_mm;
            if !(az > 0.0 && ay > 0.0 && ax > 0.0)
                || !(az.is_finite() && ay.is_finite() && ax.is_finite())
            {
                return bad(format!("ellipsoid semi-axes {:?} must be positive", e.semi_axes_mm));
            }
        }
        for lung in &self.lungs {
            if !ellipsoid_strictly_inside(lung, &self.body) {
                return bad("lung is not strictly inside the body".into());
            }
        }
        for n in &self.nodules {
            if !n.radius_mm.is_finite() || n.radius_mm <= 0.0 {
                return bad(format!("nodule radius {} must be positive", n.radius_mm));
            }
            if n.hu < HU_MIN || n.hu > HU_MAX {
                return bad(format!("nodule HU {} is outside the representable range", n.hu));
            }
            if !self
                .lungs
                .iter()
                .any(|lung| sphere_strictly_inside(n.center_mm, n.radius_mm, lung))
            {
                return bad("nodule is not strictly inside a lung".into());
            }
        }
        Ok(())
    }
}

fn half_extents(dims: Dims, spacing: Spacing) -> (f64, f64, f64) {
    (
        (dims.depth - 1) as f64 * f64::from(spacing.dz) / 2.0,
        (dims.height - 1) as f64 * f64::from(spacing.dy) / 2.0,
        (dims.width - 1) as f64 * f64::from(spacing.dx) / 2.0,
    )
}

/// Sufficient containment test: maps the inner ellipsoid's bounding-box
/// reach into the outer's normalized coordinates. Conservative (it can
/// reject a touching-but-contained pair), never wrong when it accepts.
fn ellipsoid_strictly_inside(inner: &Ellipsoid, outer: &Ellipsoid) -> bool {
    let term = |delta: f64, a_in: f64, a_out: f64| {
        let t = (delta.abs() + a_in) / a_out;
        t * t
    };
    term(
        inner.center_mm.0 - outer.center_mm.0,
        inner.semi_axes_mm.0,
        outer.semi_axes_mm.0,
    ) + term(
        inner.center_mm.1 - outer.center_mm.1,
        inner.semi_axes_mm.1,
        outer.semi_axes_mm.1,
    ) + term(
        inner.center_mm.2 - outer.center_mm.2,
        inner.semi_axes_mm.2,
        outer.semi_axes_mm.2,
    ) < 1.0
}

fn sphere_strictly_inside(center: (f64, f64, f64), radius: f64, outer: &Ellipsoid) -> bool {
    let sphere = Ellipsoid {
        center_mm: center,
        semi_axes_mm: (radius, radius, radius),
    };
    ellipsoid_strictly_inside(&sphere, outer)
}

fn rasterize_base(spec: &PhantomSpec) -> Vec<i16> {
    let Dims { depth, height, width } = spec.dims;
    let (dz, dy, dx) = (
        f64::from(spec.spacing_mm.dz),
        f64::from(spec.spacing_mm.dy),
        f64::from(spec.spacing_mm.dx),
    );
    let mut voxels = Vec::with_capacity(spec.dims.len());
    for z in 0..depth {
        let pz = z as f64 * dz;
        for y in 0..height {
            let py = y as f64 * dy;
            for x in 0..width {
                let px = x as f64 * dx;
                let mut hu = HU_AIR;
                if spec.body.contains(pz, py, px) {
                    hu = HU_BODY;
                    if spec.lungs.iter().any(|l| l.contains(pz, py, px)) {
                        hu = HU_LUNG;
                        for n in &spec.nodules {
                            if n.contains(pz, py, px) {
                                hu = n.hu;
                            }
                        }
                    }
                }
                voxels.push(hu);
            }
        }
    }
    voxels
}

/// Rasterizes the spec's true lung region (nodules included, since they
/// lie inside a lung) at an arbitrary grid, e.g. the resampled one.
pub fn truth_mask_at(spec: &PhantomSpec, dims: Dims, spacing_mm: Spacing) -> Mask {
    let (dz, dy, dx) = (
        f64::from(spacing_mm.dz),
        f64::from(spacing_mm.dy),
        f64::from(spacing_mm.dx),
    );
    Mask::from_fn(dims, |z, y, x| {
        let (pz, py, px) = (z as f64 * dz, y as f64 * dy, x as f64 * dx);
        spec.lungs.iter().any(|l| l.contains(pz, py, px))
    })
}

/// Rasterizes, applies seeded noise, and writes one DICOM file per slice
/// into `out_dir` (created if missing). Same spec, same bytes.
pub fn generate_phantom(spec: &PhantomSpec, out_dir: &Path) -> Result<PhantomTruth, PhantomError> {
    spec.validate()?;

    let mask = truth_mask_at(spec, spec.dims, spec.spacing_mm);
    let lung_bbox = bounding_box(&mask)
        .map_err(|_| PhantomError::InvalidSpec("lungs rasterize to no voxels".into()))?;

    let mut voxels = rasterize_base(spec);
    if spec.noise_sigma_hu > 0.0 {
        let normal = Normal::new(0.0, spec.noise_sigma_hu).expect("sigma validated");
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        for v in &mut voxels {
            let noisy = (f64::from(*v) + normal.sample(&mut rng)).round();
            *v = noisy.clamp(f64::from(HU_MIN), f64::from(HU_MAX)) as i16;
        }
    }

    let mut lung_count = 0usize;
    let mut hu_sum = 0.0f64;
    let mut hu_max = f64::from(HU_MIN);
    for (set, &hu) in mask.bits().iter().zip(&voxels) {
        if *set {
            lung_count += 1;
            hu_sum += f64::from(hu);
            hu_max = hu_max.max(f64::from(hu));
        }
    }
    let features = vec![
        lung_count as f64 / spec.dims.len() as f64,
        hu_sum / lung_count as f64,
        hu_max,
    ];

    fs::create_dir_all(out_dir)?;
    let Dims { depth, height, width } = spec.dims;
    let slice_len = height * width;
    for z in 0..depth {
        let raw: Vec<u16> = voxels[z * slice_len..(z + 1) * slice_len]
            .iter()
            .map(|&hu| (i32::from(hu) + 1024) as u16)
            .collect();
        let bytes = encode_ct_slice(&SliceParams {
            rows: height as u16,
            cols: width as u16,
            pixel_spacing_mm: (f64::from(spec.spacing_mm.dy), f64::from(spec.spacing_mm.dx)),
            slice_thickness_mm: f64::from(spec.spacing_mm.dz),
            image_position_mm: (0.0, 0.0, z as f64 * f64::from(spec.spacing_mm.dz)),
            rescale_slope: 1.0,
            rescale_intercept: -1024.0,
            sop_instance_uid: &format!("1.2.840.99999.1.{}.{z}", spec.seed),
            raw_pixels: &raw,
        });
        fs::write(out_dir.join(format!("slice_{z:04}.dcm")), bytes)?;
    }

    Ok(PhantomTruth {
        lung_mask: mask,
        lung_bbox,
        label: u8::from(!spec.nodules.is_empty()),
        features,
    })
}

/// Default cohort: 96-cube 2 mm baseline anatomy, randomized per case.
pub fn generate_cohort(
    out_dir: &Path,
    n: usize,
    positive_frac: f64,
    seed: u64,
) -> Result<Vec<CohortCase>, PhantomError> {
    let template = PhantomSpec::baseline(Dims::new(96, 96, 96), Spacing::iso(2.0), 0);
    generate_cohort_from(&template, out_dir, n, positive_frac, seed)
}

/// Generates `n` cases by randomly perturbing `template`'s anatomy,
/// giving `round(n * positive_frac)` of them a nodule. Per-case seeds are
/// hashed from the case id, so output is identical at any thread count.
/// Writes `manifest.csv` (case_id,path,label) and `features.csv` next to
/// the case directories.
pub fn generate_cohort_from(
    template: &PhantomSpec,
    out_dir: &Path,
    n: usize,
    positive_frac: f64,
    seed: u64,
) -> Result<Vec<CohortCase>, PhantomError> {
    if n == 0 {
        return Err(PhantomError::EmptyCohort);
    }
    if !(0.0..=1.0).contains(&positive_frac) {
        return Err(PhantomError::InvalidFraction(positive_frac));
    }
    template.validate()?;

    let n_pos = (n as f64 * positive_frac).round() as usize;
    let mut labels = vec![0u8; n];
    for l in labels.iter_mut().take(n_pos) {
        *l = 1;
    }
    fisher_yates(&mut labels, &mut ChaCha8Rng::seed_from_u64(seed));

    fs::create_dir_all(out_dir)?;
    let cases: Vec<CohortCase> = (0..n)
        .into_par_iter()
        .map(|i| {
            let case_id = format!("case_{i:04}");
            let spec = randomized_case(template, fnv1a64(&case_id) ^ seed, labels[i] == 1);
            let truth = generate_phantom(&spec, &out_dir.join(&case_id))?;
            Ok(CohortCase {
                rel_path: case_id.clone(),
                case_id,
                label: truth.label,
                spec,
                features: truth.features,
            })
        })
        .collect::<Result<_, PhantomError>>()?;

    let mut manifest = String::from("case_id,path,label\n");
    let mut features = String::from("case_id,label,lung_volume_fraction,mean_lung_hu,max_lung_hu\n");
    for c in &cases {
        writeln!(manifest, "{},{},{}", c.case_id, c.rel_path, c.label).expect("string write");
        writeln!(
            features,
            "{},{},{},{},{}",
            c.case_id, c.label, c.features[0], c.features[1], c.features[2]
        )
        .expect("string write");
    }
    fs::write(out_dir.join("manifest.csv"), manifest)?;
    fs::write(out_dir.join("features.csv"), features)?;
    Ok(cases)
}

/// Reads a features CSV written by [`generate_cohort_from`]; returns
/// (case_id, label, feature vector) rows.
pub fn read_features_csv(path: &Path) -> Result<Vec<(String, u8, Vec<f64>)>, PhantomError> {
    let text = fs::read_to_string(path)?;
    let bad = |line: usize, reason: String| {
        PhantomError::InvalidSpec(format!("{}:{line}: {reason}", path.display()))
    };
    let mut rows = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.is_empty() || (i == 0 && line.starts_with("case_id,label,")) {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 3 {
            return Err(bad(i + 1, "expected case_id,label,features...".into()));
        }
        let label: u8 = fields[1]
            .parse()
            .map_err(|_| bad(i + 1, format!("bad label {:?}", fields[1])))?;
        let mut values = Vec::with_capacity(fields.len() - 2);
        for f in &fields[2..] {
            let v: f64 = f.parse().map_err(|_| bad(i + 1, format!("bad feature {f:?}")))?;
            if !v.is_finite() {
                return Err(bad(i + 1, format!("non-finite feature {v}")));
            }
            values.push(v);
        }
        rows.push((fields[0].to_string(), label, values));
    }
    Ok(rows)
}

/// Perturbs the template geometry: one global scale on every semi-axis
/// and lung offset, a per-axis lung wobble, a small center jitter, and
/// for positives one nodule at a fractional-radius position. The ranges
/// are sized so the conservative containment checks always pass.
fn randomized_case(template: &PhantomSpec, case_seed: u64, positive: bool) -> PhantomSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(case_seed);
    let (hz, hy, hx) = half_extents(template.dims, template.spacing_mm);
    let center = (hz, hy, hx);
    let scale = rng.random_range(0.90..1.10);

    let scale3 = |t: (f64, f64, f64), s: (f64, f64, f64)| (t.0 * s.0, t.1 * s.1, t.2 * s.2);
    let body = Ellipsoid {
        center_mm: template.body.center_mm,
        semi_axes_mm: scale3(template.body.semi_axes_mm, (scale, scale, scale)),
    };

    let lungs = template.lungs.map(|lung| {
        let wobble = (
            rng.random_range(0.95..1.05),
            rng.random_range(0.95..1.05),
            rng.random_range(0.95..1.05),
        );
        let jitter = (
            rng.random_range(-0.02..0.02) * hz,
            rng.random_range(-0.02..0.02) * hy,
            rng.random_range(-0.02..0.02) * hx,
        );
        Ellipsoid {
            center_mm: (
                center.0 + (lung.center_mm.0 - center.0) * scale + jitter.0,
                center.1 + (lung.center_mm.1 - center.1) * scale + jitter.1,
                center.2 + (lung.center_mm.2 - center.2) * scale + jitter.2,
            ),
            semi_axes_mm: scale3(lung.semi_axes_mm, (scale * wobble.0, scale * wobble.1, scale * wobble.2)),
        }
    });

    let nodules = if positive {
        let lung = lungs[rng.random_range(0..2usize)];
        let dir: [f64; 3] = UnitSphere.sample(&mut rng);
        let frac = rng.random_range(0.0..0.45);
        let (az, ay, ax) = lung.semi_axes_mm;
        let min_semi = az.min(ay).min(ax);
        vec![Nodule {
            center_mm: (
                lung.center_mm.0 + frac * dir[0] * az,
                lung.center_mm.1 + frac * dir[1] * ay,
                lung.center_mm.2 + frac * dir[2] * ax,
            ),
            radius_mm: rng.random_range(0.14..0.28) * min_semi,
            hu: rng.random_range(-100..=100),
        }]
    } else {
        Vec::new()
    };

    PhantomSpec {
        dims: template.dims,
        spacing_mm: template.spacing_mm,
        body,
        lungs,
        nodules,
        noise_sigma_hu: template.noise_sigma_hu,
        seed: rng.next_u64(),
    }
}

fn fnv1a64(s: &str) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for b in s.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dicom::read_series_dir;
    use crate::segment::{binarize_air, connected_components, extract_lung_mask, morphological_close, Connectivity};

    fn small_spec(seed: u64) -> PhantomSpec {
        PhantomSpec::baseline(Dims::new(48, 48, 48), Spacing::iso(2.0), seed)
    }

    /// Independent voxel-by-voxel rasterization, written from the HU
    /// assignment rules alone.
    fn oracle_hu(spec: &PhantomSpec, z: usize, y: usize, x: usize) -> i16 {
        let p = (
            z as f64 * f64::from(spec.spacing_mm.dz),
            y as f64 * f64::from(spec.spacing_mm.dy),
            x as f64 * f64::from(spec.spacing_mm.dx),
        );
        let inside = |e: &Ellipsoid| {
            let d0 = (p.0 - e.center_mm.0) / e.semi_axes_mm.0;
            let d1 = (p.1 - e.center_mm.1) / e.semi_axes_mm.1;
            let d2 = (p.2 - e.center_mm.2) / e.semi_axes_mm.2;
            d0 * d0 + d1 * d1 + d2 * d2 <= 1.0
        };
        if !inside(&spec.body) {
            return HU_AIR;
        }
        for n in spec.nodules.iter().rev() {
            let d = (
                p.0 - n.center_mm.0,
                p.1 - n.center_mm.1,
                p.2 - n.center_mm.2,
            );
            let in_sphere = d.0 * d.0 + d.1 * d.1 + d.2 * d.2 <= n.radius_mm * n.radius_mm;
            if in_sphere && spec.lungs.iter().any(inside) {
                return n.hu;
            }
        }
        if spec.lungs.iter().any(inside) {
            return HU_LUNG;
        }
        HU_BODY
    }

    #[test]
    fn zero_noise_series_round_trips_exactly() {
        let mut spec = small_spec(7);
        spec.noise_sigma_hu = 0.0;
        let lung = spec.lungs[0];
        spec.nodules.push(Nodule {
            center_mm: (
                lung.center_mm.0 + 0.3 * lung.semi_axes_mm.0,
                lung.center_mm.1,
                lung.center_mm.2,
            ),
            radius_mm: 5.0,
            hu: 50,
        });

        let dir = tempfile::tempdir().unwrap();
        let truth = generate_phantom(&spec, dir.path()).unwrap();
        assert_eq!(truth.label, 1);

        let (vol, _) = read_series_dir(dir.path()).unwrap();
        assert_eq!(vol.dims(), spec.dims);
        assert_eq!(vol.spacing_mm(), spec.spacing_mm);
        for z in 0..spec.dims.depth {
            for y in 0..spec.dims.height {
                for x in 0..spec.dims.width {
                    assert_eq!(
                        vol.get(z, y, x),
                        oracle_hu(&spec, z, y, x),
                        "voxel ({z},{y},{x})"
                    );
                }
            }
        }

        // Spot anatomy: lung center is parenchyma, nodule center is the
        // nodule, the corner is open air.
        let to_idx = |mm: f64, s: f32| (mm / f64::from(s)).round() as usize;
        let lc = (
            to_idx(lung.center_mm.0, spec.spacing_mm.dz),
            to_idx(lung.center_mm.1, spec.spacing_mm.dy),
            to_idx(lung.center_mm.2, spec.spacing_mm.dx),
        );
        assert_eq!(vol.get(lc.0, lc.1, lc.2), HU_LUNG);
        let nc = &spec.nodules[0].center_mm;
        assert_eq!(
            vol.get(
                to_idx(nc.0, spec.spacing_mm.dz),
                to_idx(nc.1, spec.spacing_mm.dy),
                to_idx(nc.2, spec.spacing_mm.dx)
            ),
            50
        );
        assert_eq!(vol.get(0, 0, 0), HU_AIR);
    }

    #[test]
    fn same_spec_writes_identical_bytes() {
        let spec = small_spec(11);
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        generate_phantom(&spec, dir_a.path()).unwrap();
        generate_phantom(&spec, dir_b.path()).unwrap();

        let mut names: Vec<String> = fs::read_dir(dir_a.path())
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect();
        names.sort();
        assert_eq!(names.len(), 48);
        for name in names {
            let a = fs::read(dir_a.path().join(&name)).unwrap();
            let b = fs::read(dir_b.path().join(&name)).unwrap();
            assert_eq!(a, b, "{name} differs between runs");
        }

        let mut other = small_spec(11);
        other.seed = 12;
        let dir_c = tempfile::tempdir().unwrap();
        generate_phantom(&other, dir_c.path()).unwrap();
        let a = fs::read(dir_a.path().join("slice_0000.dcm")).unwrap();
        let c = fs::read(dir_c.path().join("slice_0000.dcm")).unwrap();
        assert_ne!(a, c, "a different noise seed must change the pixels");
    }

    #[test]
    fn noise_has_the_requested_spread() {
        let spec = small_spec(3);
        let mut clean = small_spec(3);
        clean.noise_sigma_hu = 0.0;

        let noisy_dir = tempfile::tempdir().unwrap();
        let clean_dir = tempfile::tempdir().unwrap();
        generate_phantom(&spec, noisy_dir.path()).unwrap();
        generate_phantom(&clean, clean_dir.path()).unwrap();
        let (noisy, _) = read_series_dir(noisy_dir.path()).unwrap();
        let (base, _) = read_series_dir(clean_dir.path()).unwrap();

        // Sampled inside the body only: around the air floor of -1000 HU
        // the clamp at -1024 truncates the noise and biases the mean.
        let diffs: Vec<f64> = noisy
            .voxels()
            .iter()
            .zip(base.voxels())
            .filter(|&(_, &b)| b == HU_BODY)
            .map(|(&a, &b)| f64::from(a) - f64::from(b))
            .collect();
        assert!(diffs.len() > 10_000, "need a meaningful body sample");
        let n = diffs.len() as f64;
        let mean = diffs.iter().sum::<f64>() / n;
        let var = diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / n;
        assert!(mean.abs() < 0.5, "noise mean {mean}");
        assert!(
            (var.sqrt() - DEFAULT_NOISE_SIGMA_HU).abs() < 0.5,
            "noise std {}",
            var.sqrt()
        );
    }

    #[test]
    fn label_follows_nodule_presence() {
        let dir = tempfile::tempdir().unwrap();
        let negative = small_spec(1);
        let truth = generate_phantom(&negative, &dir.path().join("neg")).unwrap();
        assert_eq!(truth.label, 0);
        assert!(truth.features[1] < -700.0, "mean lung HU {}", truth.features[1]);
        assert!(truth.features[0] > 0.0 && truth.features[0] < 0.5);

        let mut positive = small_spec(1);
        let lung = positive.lungs[1];
        positive.nodules.push(Nodule {
            center_mm: lung.center_mm,
            radius_mm: 6.0,
            hu: 80,
        });
        let truth = generate_phantom(&positive, &dir.path().join("pos")).unwrap();
        assert_eq!(truth.label, 1);
        assert!(truth.features[2] >= 60.0, "max lung HU {}", truth.features[2]);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path();

        let mut huge_lung = small_spec(0);
        huge_lung.lungs[0].semi_axes_mm = (200.0, 200.0, 200.0);
        assert!(matches!(
            generate_phantom(&huge_lung, out),
            Err(PhantomError::InvalidSpec(_))
        ));

        let mut stray_nodule = small_spec(0);
        stray_nodule.nodules.push(Nodule {
            center_mm: (1.0, 1.0, 1.0),
            radius_mm: 4.0,
            hu: 0,
        });
        assert!(matches!(
            generate_phantom(&stray_nodule, out),
            Err(PhantomError::InvalidSpec(_))
        ));

        let mut flat = small_spec(0);
        flat.nodules.push(Nodule {
            center_mm: flat.lungs[0].center_mm,
            radius_mm: 0.0,
            hu: 0,
        });
        assert!(matches!(
            generate_phantom(&flat, out),
            Err(PhantomError::InvalidSpec(_))
        ));

        let mut noisy = small_spec(0);
        noisy.noise_sigma_hu = -1.0;
        assert!(matches!(
            generate_phantom(&noisy, out),
            Err(PhantomError::InvalidSpec(_))
        ));
    }

    /// The whole reason the geometry defaults look the way they do: the
    /// segmentation pipeline must recover the true lungs almost exactly.
    #[test]
    fn segmentation_recovers_the_true_lungs() {
        let spec = PhantomSpec::baseline(Dims::new(96, 96, 96), Spacing::iso(2.0), 42);
        let dir = tempfile::tempdir().unwrap();
        let truth = generate_phantom(&spec, dir.path()).unwrap();

        let (vol, _) = read_series_dir(dir.path()).unwrap();
        let air = binarize_air(&vol, -320);
        let labels = connected_components(&air, Connectivity::Six);
        let lungs = extract_lung_mask(&labels).unwrap();
        let segmented = morphological_close(&lungs, 2);

        let dice = segmented.dice(&truth.lung_mask);
        assert!(dice >= 0.95, "dice {dice}");

        let seg_box = bounding_box(&segmented).unwrap();
        for (a, b) in [
            (seg_box.center.0, truth.lung_bbox.center.0),
            (seg_box.center.1, truth.lung_bbox.center.1),
            (seg_box.center.2, truth.lung_bbox.center.2),
        ] {
            assert!(a.abs_diff(b) <= 2, "bbox center {a} vs {b}");
        }
    }

    #[test]
    fn cohort_is_balanced_deterministic_and_manifested() {
        let template = PhantomSpec::baseline(Dims::new(24, 24, 24), Spacing::iso(4.0), 0);
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let cases = generate_cohort_from(&template, dir_a.path(), 9, 0.34, 5).unwrap();
        let again = generate_cohort_from(&template, dir_b.path(), 9, 0.34, 5).unwrap();

        assert_eq!(cases.len(), 9);
        let positives: usize = cases.iter().map(|c| usize::from(c.label)).sum();
        assert_eq!(positives, 3, "round(9 * 0.34)");
        assert_eq!(cases, again, "same seed, same cohort");

        let manifest_a = fs::read(dir_a.path().join("manifest.csv")).unwrap();
        let manifest_b = fs::read(dir_b.path().join("manifest.csv")).unwrap();
        assert_eq!(manifest_a, manifest_b);
        let text = String::from_utf8(manifest_a).unwrap();
        assert!(text.starts_with("case_id,path,label\n"));
        assert_eq!(text.lines().count(), 10);

        for c in &cases {
            assert!(dir_a.path().join(&c.rel_path).join("slice_0000.dcm").exists());
            let slice_a = fs::read(dir_a.path().join(&c.rel_path).join("slice_0000.dcm")).unwrap();
            let slice_b = fs::read(dir_b.path().join(&c.rel_path).join("slice_0000.dcm")).unwrap();
            assert_eq!(slice_a, slice_b, "{} differs", c.case_id);
            c.spec.validate().unwrap();
        }

        let rows = read_features_csv(&dir_a.path().join("features.csv")).unwrap();
        assert_eq!(rows.len(), 9);
        for (row, case) in rows.iter().zip(&cases) {
            assert_eq!(row.0, case.case_id);
            assert_eq!(row.1, case.label);
            assert_eq!(row.2, case.features);
        }

        let all_neg = generate_cohort_from(&template, dir_b.path(), 5, 0.0, 1).unwrap();
        assert!(all_neg.iter().all(|c| c.label == 0));
    }

    #[test]
    fn cohort_features_separate_the_classes() {
        let template = PhantomSpec::baseline(Dims::new(64, 64, 64), Spacing::iso(3.0), 0);
        let dir = tempfile::tempdir().unwrap();
        let cases = generate_cohort_from(&template, dir.path(), 10, 0.4, 77).unwrap();
        for c in &cases {
            // features[2] is the max HU inside the true lung mask: the
            // nodule dominates for positives, noise tails for negatives.
            if c.label == 1 {
                assert!(c.features[2] >= -200.0, "{}: max {}", c.case_id, c.features[2]);
            } else {
                assert!(c.features[2] <= -600.0, "{}: max {}", c.case_id, c.features[2]);
            }
        }
    }

    #[test]
    fn truth_mask_volume_is_grid_independent() {
        let spec = small_spec(0);
        let fine = truth_mask_at(&spec, Dims::new(96, 96, 96), Spacing::iso(1.0));
        let coarse = truth_mask_at(&spec, spec.dims, spec.spacing_mm);
        let fine_mm3 = fine.count_set() as f64;
        let coarse_mm3 = coarse.count_set() as f64 * 8.0;
        let ratio = fine_mm3 / coarse_mm3;
        assert!((0.93..1.07).contains(&ratio), "volume ratio {ratio}");
    }

    #[test]
    fn cohort_rejects_bad_arguments() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            generate_cohort(dir.path(), 0, 0.34, 0),
            Err(PhantomError::EmptyCohort)
        ));
        assert!(matches!(
            generate_cohort(dir.path(), 4, 1.5, 0),
            Err(PhantomError::InvalidFraction(_))
        ));
    }
}
