//! Coarse lung segmentation.
//!
//! The chain is deliberately simple: threshold air, label connected
//! components, throw away everything that touches the volume border
//! (outside air and anything connected to it), keep the largest two interior
//! components (the lungs, whether or not the airway joins them), then close
//! small holes left by vessels and nodules. The bounding box of the result
//! gives the crop center.
//!
//! Determinism notes: component labels are assigned in first-encounter scan
//! order, and erosion at the border requires the whole structuring element
//! in bounds, so results are identical across runs and thread counts.

use thiserror::Error;

use crate::volume::{Dims, HuVolume};

/// Default air/tissue threshold in HU. Lung parenchyma sits far below,
/// soft tissue far above.
pub const DEFAULT_AIR_THRESHOLD_HU: i16 = -320;

/// Default closing radius in voxels (on the isotropic grid).
pub const DEFAULT_CLOSE_RADIUS: usize = 2;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SegmentError {
    #[error("no interior air component remains after discarding border-connected air")]
    SegmentationEmpty,
    #[error("mask has no set voxels")]
    EmptyMask,
}

/// Dense boolean grid, depth-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mask {
    dims: Dims,
    bits: Vec<bool>,
}

impl Mask {
    /// All-clear mask of the given shape.
    pub fn new(dims: Dims) -> Self {
        Self {
            dims,
            bits: vec![false; dims.len()],
        }
    }

    pub fn from_fn(dims: Dims, mut f: impl FnMut(usize, usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(dims.len());
        for z in 0..dims.depth {
            for y in 0..dims.height {
                for x in 0..dims.width {
                    bits.push(f(z, y, x));
                }
            }
        }
        Self { dims, bits }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    #[inline]
    pub fn get(&self, z: usize, y: usize, x: usize) -> bool {
        self.bits[self.dims.index(z, y, x)]
    }

    #[inline]
    pub fn set(&mut self, z: usize, y: usize, x: usize, value: bool) {
        let i = self.dims.index(z, y, x);
        self.bits[i] = value;
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn count_set(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    /// Dice overlap coefficient, 1.0 for identical non-empty masks.
    pub fn dice(&self, other: &Mask) -> f64 {
        assert_eq!(self.dims, other.dims, "dice needs equal shapes");
        let inter = self
            .bits
            .iter()
            .zip(&other.bits)
            .filter(|(a, b)| **a && **b)
            .count();
        let total = self.count_set() + other.count_set();
        if total == 0 {
            return 1.0;
        }
        2.0 * inter as f64 / total as f64
    }
}

/// Labeled components: 0 is background, components are numbered 1..=count
/// in first-encounter scan order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelMap {
    dims: Dims,
    labels: Vec<u32>,
    component_count: usize,
}

impl LabelMap {
    pub fn dims(&self) -> Dims {
        self.dims
    }

    #[inline]
    pub fn label(&self, z: usize, y: usize, x: usize) -> u32 {
        self.labels[self.dims.index(z, y, x)]
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn component_count(&self) -> usize {
        self.component_count
    }
}

/// Tight axis-aligned bounds over set voxels, inclusive on both ends.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BBox {
    pub min: (usize, usize, usize),
    pub max: (usize, usize, usize),
    /// Floor midpoint of min and max.
    pub center: (usize, usize, usize),
}

/// Voxel adjacency for component labeling.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Connectivity {
    /// Face neighbors only.
    Six,
    /// Face, edge and corner neighbors.
    TwentySix,
}

/// Marks every voxel strictly below `threshold_hu`.
pub fn binarize_air(vol: &HuVolume, threshold_hu: i16) -> Mask {
    let dims = vol.dims();
    Mask {
        dims,
        bits: vol.voxels().iter().map(|&v| v < threshold_hu).collect(),
    }
}

/// Offsets preceding the current voxel in scan order, for one-pass labeling.
const NEG_6: [(i64, i64, i64); 3] = [(-1, 0, 0), (0, -1, 0), (0, 0, -1)];
const NEG_26: [(i64, i64, i64); 13] = [
    (-1, -1, -1),
    (-1, -1, 0),
    (-1, -1, 1),
    (-1, 0, -1),
    (-1, 0, 0),
    (-1, 0, 1),
    (-1, 1, -1),
    (-1, 1, 0),
    (-1, 1, 1),
    (0, -1, -1),
    (0, -1, 0),
    (0, -1, 1),
    (0, 0, -1),
];

struct UnionFind {
    // parent[0] is a dummy so provisional labels can index directly.
    parent: Vec<u32>,
}

impl UnionFind {
    fn new() -> Self {
        Self { parent: vec![0] }
    }

    fn make_set(&mut self) -> u32 {
        let id = self.parent.len() as u32;
        self.parent.push(id);
        id
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            // Path halving keeps the trees flat.
            let grand = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = grand;
            x = grand;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra != rb {
            // Attach the larger root id under the smaller.
            if ra < rb {
                self.parent[rb as usize] = ra;
            } else {
                self.parent[ra as usize] = rb;
            }
        }
    }
}

/// Labels connected components of set voxels.
pub fn connected_components(mask: &Mask, connectivity: Connectivity) -> LabelMap {
    let dims = mask.dims();
    let offsets: &[(i64, i64, i64)] = match connectivity {
        Connectivity::Six => &NEG_6,
        Connectivity::TwentySix => &NEG_26,
    };

    let mut provisional = vec![0u32; dims.len()];
    let mut uf = UnionFind::new();
    for z in 0..dims.depth {
        for y in 0..dims.height {
            for x in 0..dims.width {
                if !mask.get(z, y, x) {
                    continue;
                }
                let mut label = 0u32;
                for &(dz, dy, dx) in offsets {
                    let (nz, ny, nx) = (z as i64 + dz, y as i64 + dy, x as i64 + dx);
                    if nz < 0
                        || ny < 0
                        || nx < 0
                        || nz >= dims.depth as i64
                        || ny >= dims.height as i64
                        || nx >= dims.width as i64
                    {
                        continue;
                    }
                    let nl = provisional[dims.index(nz as usize, ny as usize, nx as usize)];
                    if nl != 0 {
                        if label == 0 {
                            label = nl;
                        } else {
                            uf.union(label, nl);
                        }
                    }
                }
                if label == 0 {
                    label = uf.make_set();
                }
                provisional[dims.index(z, y, x)] = label;
            }
        }
    }

    // Second pass renames roots to 1..=count by first appearance, making the
    // numbering independent of union-find internals.
    let mut final_of_root = vec![0u32; uf.parent.len()];
    let mut labels = vec![0u32; dims.len()];
    let mut next = 0u32;
    for (i, &p) in provisional.iter().enumerate() {
        if p == 0 {
            continue;
        }
        let root = uf.find(p) as usize;
        if final_of_root[root] == 0 {
            next += 1;
            final_of_root[root] = next;
        }
        labels[i] = final_of_root[root];
    }

    LabelMap {
        dims,
        labels,
        component_count: next as usize,
    }
}

/// Keeps the largest two interior components of an air label map.
///
/// A component is interior when none of its voxels lies on an outer face of
/// the volume; border-connected air is the scanner surround. Among interior
/// components the two largest by voxel count survive (ties broken by the
/// smaller label), covering both the airway-joined and the separated lung
/// topologies.
pub fn extract_lung_mask(labels: &LabelMap) -> Result<Mask, SegmentError> {
    let dims = labels.dims();
    let n = labels.component_count + 1;
    let mut touches_border = vec![false; n];
    let mut count = vec![0usize; n];

    for z in 0..dims.depth {
        for y in 0..dims.height {
            for x in 0..dims.width {
                let l = labels.label(z, y, x) as usize;
                if l == 0 {
                    continue;
                }
                count[l] += 1;
                let on_border = z == 0
                    || y == 0
                    || x == 0
                    || z == dims.depth - 1
                    || y == dims.height - 1
                    || x == dims.width - 1;
                if on_border {
                    touches_border[l] = true;
                }
            }
        }
    }

    let mut interior: Vec<(usize, usize)> = (1..n)
        .filter(|&l| !touches_border[l] && count[l] > 0)
        .map(|l| (l, count[l]))
        .collect();
    if interior.is_empty() {
        return Err(SegmentError::SegmentationEmpty);
    }
    interior.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let keep: Vec<u32> = interior.iter().take(2).map(|&(l, _)| l as u32).collect();

    let bits = labels
        .labels()
        .iter()
        .map(|&l| l != 0 && keep.contains(&l))
        .collect();
    Ok(Mask { dims, bits })
}

/// Offsets of the discrete ball: all integer vectors with squared length
/// at most `radius^2`.
fn ball_offsets(radius: usize) -> Vec<(i64, i64, i64)> {
    let r = radius as i64;
    let mut out = Vec::new();
    for dz in -r..=r {
        for dy in -r..=r {
            for dx in -r..=r {
                if dz * dz + dy * dy + dx * dx <= r * r {
                    out.push((dz, dy, dx));
                }
            }
        }
    }
    out
}

fn dilate(mask: &Mask, offsets: &[(i64, i64, i64)]) -> Mask {
    let dims = mask.dims();
    Mask::from_fn(dims, |z, y, x| {
        offsets.iter().any(|&(dz, dy, dx)| {
            let (nz, ny, nx) = (z as i64 + dz, y as i64 + dy, x as i64 + dx);
            nz >= 0
                && ny >= 0
                && nx >= 0
                && nz < dims.depth as i64
                && ny < dims.height as i64
                && nx < dims.width as i64
                && mask.get(nz as usize, ny as usize, nx as usize)
        })
    })
}

fn erode(mask: &Mask, offsets: &[(i64, i64, i64)]) -> Mask {
    let dims = mask.dims();
    Mask::from_fn(dims, |z, y, x| {
        offsets.iter().all(|&(dz, dy, dx)| {
            let (nz, ny, nx) = (z as i64 + dz, y as i64 + dy, x as i64 + dx);
            // Strict at the border: the whole ball must fit inside the grid.
            nz >= 0
                && ny >= 0
                && nx >= 0
                && nz < dims.depth as i64
                && ny < dims.height as i64
                && nx < dims.width as i64
                && mask.get(nz as usize, ny as usize, nx as usize)
        })
    })
}

/// Morphological closing: dilation then erosion by the discrete ball.
/// Radius 0 is the identity.
pub fn morphological_close(mask: &Mask, radius_voxels: usize) -> Mask {
    if radius_voxels == 0 {
        return mask.clone();
    }
    let offsets = ball_offsets(radius_voxels);
    erode(&dilate(mask, &offsets), &offsets)
}

/// Tight bounding box of set voxels, with the floor-midpoint center.
pub fn bounding_box(mask: &Mask) -> Result<BBox, SegmentError> {
    let dims = mask.dims();
    let mut min = (usize::MAX, usize::MAX, usize::MAX);
    let mut max = (0usize, 0usize, 0usize);
    let mut any = false;
    for z in 0..dims.depth {
        for y in 0..dims.height {
            for x in 0..dims.width {
                if !mask.get(z, y, x) {
                    continue;
                }
                any = true;
                min = (min.0.min(z), min.1.min(y), min.2.min(x));
                max = (max.0.max(z), max.1.max(y), max.2.max(x));
            }
        }
    }
    if !any {
        return Err(SegmentError::EmptyMask);
    }
    Ok(BBox {
        min,
        max,
        center: (
            (min.0 + max.0) / 2,
            (min.1 + max.1) / 2,
            (min.2 + max.2) / 2,
        ),
    })
}
