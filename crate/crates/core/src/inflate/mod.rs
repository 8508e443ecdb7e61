//! 2D-to-3D convolution filter inflation, plus a small dense engine to
//! verify the construction.
//!
//! Inflation copies a pretrained 2D kernel along a new leading (temporal /
//! depth) axis and divides by the number of copies. The defining property,
//! and the reason the 1/N scaling is the right one: convolving a volume
//! whose frames are all the same image with the inflated kernel reproduces
//! the 2D convolution of that image exactly (up to float accumulation).
//! The [`conv`] engine exists to state and test that equivalence, not to
//! train anything.
//!
//! The engine is generic over `f32`/`f64`: f64 is the reference
//! accumulation mode, f32 mirrors serving precision.

mod conv;
mod lvw;

pub use conv::{conv2d, conv3d, maxpool3d};
pub use lvw::{read_lvw, write_lvw, LvwError, LvwKernel};

use num_traits::Float;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConvError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite weight at flat index {0}")]
    NonFinite(usize),
}

/// Zero-padding scheme for the convolution ops.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Padding {
    /// No padding; every kernel position must fit inside the input.
    Valid,
    /// Zero-pad so the output covers ceil(in/stride) positions; when the
    /// total padding is odd the extra sample goes to the high side.
    Same,
}

fn check_finite<T: Float>(weights: &[T]) -> Result<(), ConvError> {
    match weights.iter().position(|w| !w.is_finite()) {
        Some(i) => Err(ConvError::NonFinite(i)),
        None => Ok(()),
    }
}

/// A dense 2D convolution kernel, laid out `[kh][kw][cin][cout]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel2d<T> {
    pub(crate) kh: usize,
    pub(crate) kw: usize,
    pub(crate) cin: usize,
    pub(crate) cout: usize,
    pub(crate) weights: Vec<T>,
    pub(crate) bias: Vec<T>,
}

impl<T: Float> Kernel2d<T> {
    /// `bias` of `None` means zero bias.
    pub fn new(
        kh: usize,
        kw: usize,
        cin: usize,
        cout: usize,
        weights: Vec<T>,
        bias: Option<Vec<T>>,
    ) -> Result<Self, ConvError> {
        if kh == 0 || kw == 0 || cin == 0 || cout == 0 {
            return Err(ConvError::ShapeMismatch(format!(
                "kernel dims ({kh},{kw},{cin},{cout}) must all be positive"
            )));
        }
        if weights.len() != kh * kw * cin * cout {
            return Err(ConvError::ShapeMismatch(format!(
                "{} weights for a {kh}x{kw}x{cin}x{cout} kernel, expected {}",
                weights.len(),
                kh * kw * cin * cout
            )));
        }
        let bias = bias.unwrap_or_else(|| vec![T::zero(); cout]);
        if bias.len() != cout {
            return Err(ConvError::ShapeMismatch(format!(
                "{} bias values for {cout} output channels",
                bias.len()
            )));
        }
        check_finite(&weights)?;
        check_finite(&bias)?;
        Ok(Self {
            kh,
            kw,
            cin,
            cout,
            weights,
            bias,
        })
    }

    pub fn shape(&self) -> (usize, usize, usize, usize) {
        (self.kh, self.kw, self.cin, self.cout)
    }

    #[inline]
    pub fn at(&self, h: usize, w: usize, i: usize, o: usize) -> T {
        self.weights[((h * self.kw + w) * self.cin + i) * self.cout + o]
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn bias(&self) -> &[T] {
        &self.bias
    }
}

/// A dense 3D convolution kernel, laid out `[kt][kh][kw][cin][cout]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel3d<T> {
    pub(crate) kt: usize,
    pub(crate) kh: usize,
    pub(crate) kw: usize,
    pub(crate) cin: usize,
    pub(crate) cout: usize,
    pub(crate) weights: Vec<T>,
    pub(crate) bias: Vec<T>,
}

impl<T: Float> Kernel3d<T> {
    pub fn new(
        kt: usize,
        kh: usize,
        kw: usize,
        cin: usize,
        cout: usize,
        weights: Vec<T>,
        bias: Option<Vec<T>>,
    ) -> Result<Self, ConvError> {
        if kt == 0 || kh == 0 || kw == 0 || cin == 0 || cout == 0 {
            return Err(ConvError::ShapeMismatch(format!(
                "kernel dims ({kt},{kh},{kw},{cin},{cout}) must all be positive"
            )));
        }
        if weights.len() != kt * kh * kw * cin * cout {
            return Err(ConvError::ShapeMismatch(format!(
                "{} weights for a {kt}x{kh}x{kw}x{cin}x{cout} kernel, expected {}",
                weights.len(),
                kt * kh * kw * cin * cout
            )));
        }
        let bias = bias.unwrap_or_else(|| vec![T::zero(); cout]);
        if bias.len() != cout {
            return Err(ConvError::ShapeMismatch(format!(
                "{} bias values for {cout} output channels",
                bias.len()
            )));
        }
        check_finite(&weights)?;
        check_finite(&bias)?;
        Ok(Self {
            kt,
            kh,
            kw,
            cin,
            cout,
            weights,
            bias,
        })
    }

    pub fn shape(&self) -> (usize, usize, usize, usize, usize) {
        (self.kt, self.kh, self.kw, self.cin, self.cout)
    }

    #[inline]
    pub fn at(&self, t: usize, h: usize, w: usize, i: usize, o: usize) -> T {
        self.weights[(((t * self.kh + h) * self.kw + w) * self.cin + i) * self.cout + o]
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn bias(&self) -> &[T] {
        &self.bias
    }
}

/// Channel-major 2D feature map, `[c][h][w]`.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMap2d<T> {
    pub(crate) channels: usize,
    pub(crate) height: usize,
    pub(crate) width: usize,
    pub(crate) data: Vec<T>,
}

impl<T: Float> FeatureMap2d<T> {
    pub fn new(channels: usize, height: usize, width: usize, data: Vec<T>) -> Result<Self, ConvError> {
        if data.len() != channels * height * width {
            return Err(ConvError::ShapeMismatch(format!(
                "{} values for a {channels}x{height}x{width} map",
                data.len()
            )));
        }
        Ok(Self {
            channels,
            height,
            width,
            data,
        })
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.channels, self.height, self.width)
    }

    #[inline]
    pub fn at(&self, c: usize, y: usize, x: usize) -> T {
        self.data[(c * self.height + y) * self.width + x]
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }
}

/// Channel-major 3D feature map, `[c][d][h][w]`.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMap3d<T> {
    pub(crate) channels: usize,
    pub(crate) depth: usize,
    pub(crate) height: usize,
    pub(crate) width: usize,
    pub(crate) data: Vec<T>,
}

impl<T: Float> FeatureMap3d<T> {
    pub fn new(
        channels: usize,
        depth: usize,
        height: usize,
        width: usize,
        data: Vec<T>,
    ) -> Result<Self, ConvError> {
        if data.len() != channels * depth * height * width {
            return Err(ConvError::ShapeMismatch(format!(
                "{} values for a {channels}x{depth}x{height}x{width} volume",
                data.len()
            )));
        }
        Ok(Self {
            channels,
            depth,
            height,
            width,
            data,
        })
    }

    pub fn shape(&self) -> (usize, usize, usize, usize) {
        (self.channels, self.depth, self.height, self.width)
    }

    #[inline]
    pub fn at(&self, c: usize, d: usize, y: usize, x: usize) -> T {
        self.data[((c * self.depth + d) * self.height + y) * self.width + x]
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }
}

/// Inflates a 2D kernel along a new leading axis of length `depth`:
/// every temporal slice is the 2D kernel divided by `depth`, and the bias
/// is copied unchanged.
pub fn inflate_kernel<T: Float>(k: &Kernel2d<T>, depth: usize) -> Kernel3d<T> {
    assert!(depth >= 1, "inflation depth must be at least 1");
    let n = T::from(depth).expect("small integer fits any float");
    let slice: Vec<T> = k.weights.iter().map(|&w| w / n).collect();
    let mut weights = Vec::with_capacity(depth * slice.len());
    for _ in 0..depth {
        weights.extend_from_slice(&slice);
    }
    Kernel3d {
        kt: depth,
        kh: k.kh,
        kw: k.kw,
        cin: k.cin,
        cout: k.cout,
        weights,
        bias: k.bias.clone(),
    }
}

/// Stacks `depth` copies of an image into a constant-in-depth volume.
pub fn boring_volume<T: Float>(img: &FeatureMap2d<T>, depth: usize) -> FeatureMap3d<T> {
    assert!(depth >= 1, "volume depth must be at least 1");
    let frame = img.height * img.width;
    let mut data = Vec::with_capacity(img.channels * depth * frame);
    for c in 0..img.channels {
        let src = &img.data[c * frame..(c + 1) * frame];
        for _ in 0..depth {
            data.extend_from_slice(src);
        }
    }
    FeatureMap3d {
        channels: img.channels,
        depth,
        height: img.height,
        width: img.width,
        data,
    }
}
