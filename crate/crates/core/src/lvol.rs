//! LVOL, the raw volume container used for intermediate and final artifacts.
//!
//! The format is a fixed 30-byte header followed by the voxel payload:
//!
//! ```text
//! offset  size  field
//!      0     4  magic, the ASCII bytes "LVOL"
//!      4     1  version, currently 1
//!      5     1  dtype code: 1 = u8, 2 = i16, 3 = f32
//!      6    12  dims as three u32 (little endian): depth, height, width
//!     18    12  spacing as three f32 (little endian): dz, dy, dx in mm
//!     30     -  payload: dims.len() values, little endian, depth-major
//! ```
//!
//! Integer payloads are written exactly as produced by the pipeline, so a
//! write/read round trip is byte identical. Floats never touch disk in the
//! preprocessing flow; the `[-1, 1]` tri-channel expansion happens in
//! [`load_tensor_trichannel`] at load time.

use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::volume::{Dims, HuVolume, Spacing, TriChannelTensor, U8Volume};

const MAGIC: [u8; 4] = *b"LVOL";
const VERSION: u8 = 1;
const HEADER_LEN: usize = 30;

#[derive(Debug, Error)]
pub enum LvolError {
    #[error("io error: {0}")]
    Io(#[from] io::Error),
    #[error("bad magic {0:?}, expected \"LVOL\"")]
    BadMagic([u8; 4]),
    #[error("unsupported version {0}, this build reads version {VERSION}")]
    UnsupportedVersion(u8),
    #[error("unknown dtype code {0}")]
    UnknownDtype(u8),
    #[error("payload truncated: header promises {expected} bytes, file holds {found}")]
    TruncatedPayload { expected: usize, found: usize },
    #[error("{extra} trailing bytes after the payload")]
    TrailingBytes { extra: usize },
    #[error("declared dims {0} overflow the address space")]
    OversizedDims(Dims),
    #[error("expected {expected} payload, found {found}")]
    WrongDtype {
        expected: &'static str,
        found: &'static str,
    },
    #[error("invalid volume in file: {0}")]
    InvalidVolume(#[from] crate::volume::VolumeError),
}

/// Voxel payload of a decoded LVOL file.
#[derive(Clone, Debug, PartialEq)]
pub enum LvolPayload {
    U8(Vec<u8>),
    I16(Vec<i16>),
    F32(Vec<f32>),
}

impl LvolPayload {
    fn dtype_code(&self) -> u8 {
        match self {
            LvolPayload::U8(_) => 1,
            LvolPayload::I16(_) => 2,
            LvolPayload::F32(_) => 3,
        }
    }

    fn dtype_name(&self) -> &'static str {
        match self {
            LvolPayload::U8(_) => "u8",
            LvolPayload::I16(_) => "i16",
            LvolPayload::F32(_) => "f32",
        }
    }

    pub fn len(&self) -> usize {
        match self {
            LvolPayload::U8(v) => v.len(),
            LvolPayload::I16(v) => v.len(),
            LvolPayload::F32(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A decoded LVOL file: shape, spacing and typed payload.
#[derive(Clone, Debug, PartialEq)]
pub struct Lvol {
    pub dims: Dims,
    pub spacing_mm: Spacing,
    pub payload: LvolPayload,
}

impl Lvol {
    pub fn write(&self, path: &Path) -> Result<(), LvolError> {
        let mut buf = Vec::with_capacity(HEADER_LEN + self.payload.len() * 4);
        buf.extend_from_slice(&MAGIC);
        buf.push(VERSION);
        buf.push(self.payload.dtype_code());
        for d in [self.dims.depth, self.dims.height, self.dims.width] {
            buf.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for s in [self.spacing_mm.dz, self.spacing_mm.dy, self.spacing_mm.dx] {
            buf.extend_from_slice(&s.to_le_bytes());
        }
        match &self.payload {
            LvolPayload::U8(v) => buf.extend_from_slice(v),
            LvolPayload::I16(v) => {
                for x in v {
                    buf.extend_from_slice(&x.to_le_bytes());
                }
            }
            LvolPayload::F32(v) => {
                for x in v {
                    buf.extend_from_slice(&x.to_le_bytes());
                }
            }
        }
        let mut file = fs::File::create(path)?;
        file.write_all(&buf)?;
        Ok(())
    }

    /// Reinterprets the payload as a Hounsfield volume.
    pub fn into_hu_volume(self) -> Result<HuVolume, LvolError> {
        match self.payload {
            LvolPayload::I16(v) => Ok(HuVolume::new(self.dims, self.spacing_mm, v)?),
            other => Err(LvolError::WrongDtype {
                expected: "i16",
                found: other.dtype_name(),
            }),
        }
    }

    /// Reinterprets the payload as a quantized 8-bit volume.
    pub fn into_u8_volume(self) -> Result<U8Volume, LvolError> {
        match self.payload {
            LvolPayload::U8(v) => Ok(U8Volume::new(self.dims, self.spacing_mm, v)?),
            other => Err(LvolError::WrongDtype {
                expected: "u8",
                found: other.dtype_name(),
            }),
        }
    }
}

impl From<&HuVolume> for Lvol {
    fn from(v: &HuVolume) -> Self {
        Lvol {
            dims: v.dims(),
            spacing_mm: v.spacing_mm(),
            payload: LvolPayload::I16(v.voxels().to_vec()),
        }
    }
}

impl From<&U8Volume> for Lvol {
    fn from(v: &U8Volume) -> Self {
        Lvol {
            dims: v.dims(),
            spacing_mm: v.spacing_mm(),
            payload: LvolPayload::U8(v.voxels().to_vec()),
        }
    }
}

/// Decodes an LVOL file, validating magic, version, dtype and payload size.
pub fn read_lvol(path: &Path) -> Result<Lvol, LvolError> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() < HEADER_LEN {
        // Too short to even carry a header; report against the minimum.
        if bytes.len() >= 4 {
            let magic = [bytes[0], bytes[1], bytes[2], bytes[3]];
            if magic != MAGIC {
                return Err(LvolError::BadMagic(magic));
            }
        } else {
            let mut magic = [0u8; 4];
            magic[..bytes.len()].copy_from_slice(&bytes);
            return Err(LvolError::BadMagic(magic));
        }
        return Err(LvolError::TruncatedPayload {
            expected: HEADER_LEN,
            found: bytes.len(),
        });
    }

    let magic = [bytes[0], bytes[1], bytes[2], bytes[3]];
    if magic != MAGIC {
        return Err(LvolError::BadMagic(magic));
    }
    if bytes[4] != VERSION {
        return Err(LvolError::UnsupportedVersion(bytes[4]));
    }
    let dtype = bytes[5];

    let u32_at = |off: usize| u32::from_le_bytes(bytes[off..off + 4].try_into().unwrap());
    let f32_at = |off: usize| f32::from_le_bytes(bytes[off..off + 4].try_into().unwrap());
    let dims = Dims::new(u32_at(6) as usize, u32_at(10) as usize, u32_at(14) as usize);
    let spacing = Spacing::new(f32_at(18), f32_at(22), f32_at(26));

    let count = dims
        .depth
        .checked_mul(dims.height)
        .and_then(|n| n.checked_mul(dims.width))
        .ok_or(LvolError::OversizedDims(dims))?;
    let value_size = match dtype {
        1 => 1,
        2 => 2,
        3 => 4,
        other => return Err(LvolError::UnknownDtype(other)),
    };
    let expected = count
        .checked_mul(value_size)
        .ok_or(LvolError::OversizedDims(dims))?;
    let found = bytes.len() - HEADER_LEN;
    if found < expected {
        return Err(LvolError::TruncatedPayload { expected, found });
    }
    if found > expected {
        return Err(LvolError::TrailingBytes {
            extra: found - expected,
        });
    }

    let body = &bytes[HEADER_LEN..];
    let payload = match dtype {
        1 => LvolPayload::U8(body.to_vec()),
        2 => LvolPayload::I16(
            body.chunks_exact(2)
                .map(|c| i16::from_le_bytes([c[0], c[1]]))
                .collect(),
        ),
        3 => LvolPayload::F32(
            body.chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect(),
        ),
        _ => unreachable!("dtype validated above"),
    };

    Ok(Lvol {
        dims,
        spacing_mm: spacing,
        payload,
    })
}

/// Loads a u8 LVOL file and expands it to the normalized tri-channel tensor
/// consumed by the classifier: `f = v / 255 * 2 - 1`, replicated over three
/// identical channels.
pub fn load_tensor_trichannel(path: &Path) -> Result<TriChannelTensor, LvolError> {
    let lvol = read_lvol(path)?;
    match lvol.payload {
        LvolPayload::U8(bytes) => Ok(TriChannelTensor::from_u8(lvol.dims, &bytes)?),
        other => Err(LvolError::WrongDtype {
            expected: "u8",
            found: other.dtype_name(),
        }),
    }
}
