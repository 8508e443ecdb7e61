//! Dense cross-correlation and pooling, just enough to verify inflation.

use num_traits::Float;

use super::{ConvError, FeatureMap2d, FeatureMap3d, Kernel2d, Kernel3d, Padding};

/// Output length and low-side padding for one axis.
fn out_and_pad(
    input: usize,
    kernel: usize,
    stride: usize,
    padding: Padding,
) -> Result<(usize, usize), ConvError> {
    if stride == 0 {
        return Err(ConvError::ShapeMismatch("stride must be positive".into()));
    }
    match padding {
        Padding::Valid => {
            if input < kernel {
                return Err(ConvError::ShapeMismatch(format!(
                    "input extent {input} is smaller than kernel extent {kernel} under valid padding"
                )));
            }
            Ok(((input - kernel) / stride + 1, 0))
        }
        Padding::Same => {
            let out = input.div_ceil(stride);
            let total = ((out - 1) * stride + kernel).saturating_sub(input);
            // Low side gets the floor half; the extra sample pads high.
            Ok((out, total / 2))
        }
    }
}

/// 2D cross-correlation plus bias.
pub fn conv2d<T: Float>(
    img: &FeatureMap2d<T>,
    k: &Kernel2d<T>,
    stride: (usize, usize),
    padding: Padding,
) -> Result<FeatureMap2d<T>, ConvError> {
    if img.channels != k.cin {
        return Err(ConvError::ShapeMismatch(format!(
            "image has {} channels, kernel expects {}",
            img.channels, k.cin
        )));
    }
    let (oh, pad_top) = out_and_pad(img.height, k.kh, stride.0, padding)?;
    let (ow, pad_left) = out_and_pad(img.width, k.kw, stride.1, padding)?;

    let mut data = Vec::with_capacity(k.cout * oh * ow);
    for o in 0..k.cout {
        for oy in 0..oh {
            for ox in 0..ow {
                // Taps accumulate in f64 whatever T is; f32 outputs then
                // carry a single rounding instead of one per tap.
                let mut acc = 0.0f64;
                for i in 0..k.cin {
                    for dh in 0..k.kh {
                        let y = (oy * stride.0 + dh) as i64 - pad_top as i64;
                        if y < 0 || y >= img.height as i64 {
                            continue;
                        }
                        for dw in 0..k.kw {
                            let x = (ox * stride.1 + dw) as i64 - pad_left as i64;
                            if x < 0 || x >= img.width as i64 {
                                continue;
                            }
                            acc += img.at(i, y as usize, x as usize).to_f64().unwrap()
                                * k.at(dh, dw, i, o).to_f64().unwrap();
                        }
                    }
                }
                data.push(T::from(acc + k.bias[o].to_f64().unwrap()).unwrap());
            }
        }
    }
    FeatureMap2d::new(k.cout, oh, ow, data)
}

/// 3D cross-correlation plus bias.
pub fn conv3d<T: Float>(
    vol: &FeatureMap3d<T>,
    k: &Kernel3d<T>,
    stride: (usize, usize, usize),
    padding: Padding,
) -> Result<FeatureMap3d<T>, ConvError> {
    if vol.channels != k.cin {
        return Err(ConvError::ShapeMismatch(format!(
            "volume has {} channels, kernel expects {}",
            vol.channels, k.cin
        )));
    }
    let (od, pad_front) = out_and_pad(vol.depth, k.kt, stride.0, padding)?;
    let (oh, pad_top) = out_and_pad(vol.height, k.kh, stride.1, padding)?;
    let (ow, pad_left) = out_and_pad(vol.width, k.kw, stride.2, padding)?;

    let mut data = Vec::with_capacity(k.cout * od * oh * ow);
    for o in 0..k.cout {
        for odx in 0..od {
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut acc = 0.0f64;
                    for i in 0..k.cin {
                        for dt in 0..k.kt {
                            let d = (odx * stride.0 + dt) as i64 - pad_front as i64;
                            if d < 0 || d >= vol.depth as i64 {
                                continue;
                            }
                            for dh in 0..k.kh {
                                let y = (oy * stride.1 + dh) as i64 - pad_top as i64;
                                if y < 0 || y >= vol.height as i64 {
                                    continue;
                                }
                                for dw in 0..k.kw {
                                    let x = (ox * stride.2 + dw) as i64 - pad_left as i64;
                                    if x < 0 || x >= vol.width as i64 {
                                        continue;
                                    }
                                    acc += vol
                                        .at(i, d as usize, y as usize, x as usize)
                                        .to_f64()
                                        .unwrap()
                                        * k.at(dt, dh, dw, i, o).to_f64().unwrap();
                                }
                            }
                        }
                    }
                    data.push(T::from(acc + k.bias[o].to_f64().unwrap()).unwrap());
                }
            }
        }
    }
    FeatureMap3d::new(k.cout, od, oh, ow, data)
}

/// Max pooling with valid padding; channels pass through unchanged.
pub fn maxpool3d<T: Float>(
    vol: &FeatureMap3d<T>,
    window: (usize, usize, usize),
    stride: (usize, usize, usize),
) -> Result<FeatureMap3d<T>, ConvError> {
    if window.0 == 0 || window.1 == 0 || window.2 == 0 {
        return Err(ConvError::ShapeMismatch(
            "pool window must be positive on every axis".into(),
        ));
    }
    let (od, _) = out_and_pad(vol.depth, window.0, stride.0, Padding::Valid)?;
    let (oh, _) = out_and_pad(vol.height, window.1, stride.1, Padding::Valid)?;
    let (ow, _) = out_and_pad(vol.width, window.2, stride.2, Padding::Valid)?;

    let mut data = Vec::with_capacity(vol.channels * od * oh * ow);
    for c in 0..vol.channels {
        for odx in 0..od {
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut best = T::neg_infinity();
                    for dt in 0..window.0 {
                        for dh in 0..window.1 {
                            for dw in 0..window.2 {
                                let v = vol.at(
                                    c,
                                    odx * stride.0 + dt,
                                    oy * stride.1 + dh,
                                    ox * stride.2 + dw,
                                );
                                if v > best {
                                    best = v;
                                }
                            }
                        }
                    }
                    data.push(best);
                }
            }
        }
    }
    FeatureMap3d::new(vol.channels, od, oh, ow, data)
}
