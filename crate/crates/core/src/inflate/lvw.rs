//! LVW, the weight container for convolution kernels.
//!
//! Layout, all little endian:
//!
//! ```text
//! magic "LVW1" (4 bytes)
//! rank: u8, 4 for 2D kernels or 5 for 3D
//! shape: rank x u32 -- [kh, kw, cin, cout] or [kt, kh, kw, cin, cout]
//! weights: product(shape) x f32
//! bias: cout x f32 (cout is the last shape entry)
//! ```

use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use thiserror::Error;

use super::{ConvError, Kernel2d, Kernel3d};

const MAGIC: [u8; 4] = *b"LVW1";

#[derive(Debug, Error)]
pub enum LvwError {
    #[error("io error: {0}")]
    Io(#[from] io::Error),
    #[error("bad magic {0:?}, expected \"LVW1\"")]
    BadMagic([u8; 4]),
    #[error("rank {0} unsupported, only 4 (2D) and 5 (3D) exist")]
    UnsupportedRank(u8),
    #[error("file truncated: needed {expected} more bytes for {what}, found {found}")]
    Truncated {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("{extra} trailing bytes after the bias block")]
    TrailingBytes { extra: usize },
    #[error("invalid kernel in file: {0}")]
    InvalidKernel(#[from] ConvError),
}

/// A kernel of either rank, as stored in an LVW file.
#[derive(Clone, Debug, PartialEq)]
pub enum LvwKernel {
    K2(Kernel2d<f32>),
    K3(Kernel3d<f32>),
}

/// Serializes a kernel; writing then reading is byte identical.
pub fn write_lvw(kernel: &LvwKernel, path: &Path) -> Result<(), LvwError> {
    let (shape, weights, bias): (Vec<u32>, &[f32], &[f32]) = match kernel {
        LvwKernel::K2(k) => {
            let (kh, kw, cin, cout) = k.shape();
            (
                vec![kh as u32, kw as u32, cin as u32, cout as u32],
                k.weights(),
                k.bias(),
            )
        }
        LvwKernel::K3(k) => {
            let (kt, kh, kw, cin, cout) = k.shape();
            (
                vec![kt as u32, kh as u32, kw as u32, cin as u32, cout as u32],
                k.weights(),
                k.bias(),
            )
        }
    };
    let mut buf = Vec::with_capacity(5 + shape.len() * 4 + (weights.len() + bias.len()) * 4);
    buf.extend_from_slice(&MAGIC);
    buf.push(shape.len() as u8);
    for s in &shape {
        buf.extend_from_slice(&s.to_le_bytes());
    }
    for w in weights {
        buf.extend_from_slice(&w.to_le_bytes());
    }
    for b in bias {
        buf.extend_from_slice(&b.to_le_bytes());
    }
    let mut file = fs::File::create(path)?;
    file.write_all(&buf)?;
    Ok(())
}

/// Decodes an LVW file, validating magic, rank, sizes and weight finiteness.
pub fn read_lvw(path: &Path) -> Result<LvwKernel, LvwError> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;

    if bytes.len() < 4 {
        let mut magic = [0u8; 4];
        magic[..bytes.len()].copy_from_slice(&bytes);
        return Err(LvwError::BadMagic(magic));
    }
    let magic: [u8; 4] = bytes[0..4].try_into().unwrap();
    if magic != MAGIC {
        return Err(LvwError::BadMagic(magic));
    }
    if bytes.len() < 5 {
        return Err(LvwError::Truncated {
            what: "rank byte",
            expected: 1,
            found: 0,
        });
    }
    let rank = bytes[4] as usize;
    if rank != 4 && rank != 5 {
        return Err(LvwError::UnsupportedRank(bytes[4]));
    }

    let mut pos = 5;
    let need = |n: usize, what: &'static str, pos: &mut usize| -> Result<usize, LvwError> {
        if bytes.len() - *pos < n {
            return Err(LvwError::Truncated {
                what,
                expected: n,
                found: bytes.len() - *pos,
            });
        }
        let at = *pos;
        *pos += n;
        Ok(at)
    };

    let mut shape = Vec::with_capacity(rank);
    for _ in 0..rank {
        let at = need(4, "shape", &mut pos)?;
        shape.push(u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap()) as usize);
    }
    let weight_count = shape.iter().product::<usize>();
    let cout = *shape.last().expect("rank is 4 or 5");

    let read_f32s = |at: usize, n: usize| -> Vec<f32> {
        bytes[at..at + n * 4]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect()
    };
    let at = need(weight_count * 4, "weights", &mut pos)?;
    let weights = read_f32s(at, weight_count);
    let at = need(cout * 4, "bias", &mut pos)?;
    let bias = read_f32s(at, cout);

    if pos != bytes.len() {
        return Err(LvwError::TrailingBytes {
            extra: bytes.len() - pos,
        });
    }

    let kernel = if rank == 4 {
        LvwKernel::K2(Kernel2d::new(
            shape[0], shape[1], shape[2], shape[3], weights, Some(bias),
        )?)
    } else {
        LvwKernel::K3(Kernel3d::new(
            shape[0], shape[1], shape[2], shape[3], shape[4], weights, Some(bias),
        )?)
    };
    Ok(kernel)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sample_k2(rng: &mut ChaCha8Rng) -> Kernel2d<f32> {
        let weights = (0..3 * 3 * 2 * 4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let bias = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        Kernel2d::new(3, 3, 2, 4, weights, Some(bias)).unwrap()
    }

    #[test]
    fn round_trip_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        let k2 = LvwKernel::K2(sample_k2(&mut rng));
        let p1 = dir.path().join("k2.lvw");
        write_lvw(&k2, &p1).unwrap();
        let first = fs::read(&p1).unwrap();
        let back = read_lvw(&p1).unwrap();
        assert_eq!(back, k2);
        let p2 = dir.path().join("k2b.lvw");
        write_lvw(&back, &p2).unwrap();
        assert_eq!(fs::read(&p2).unwrap(), first, "re-encode must be byte identical");

        let weights: Vec<f32> = (0..2 * 3 * 3 * 2 * 4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let bias: Vec<f32> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let k3 = LvwKernel::K3(Kernel3d::new(2, 3, 3, 2, 4, weights, Some(bias)).unwrap());
        let p3 = dir.path().join("k3.lvw");
        write_lvw(&k3, &p3).unwrap();
        assert_eq!(read_lvw(&p3).unwrap(), k3);
    }

    #[test]
    fn header_layout_is_pinned() {
        let dir = tempfile::tempdir().unwrap();
        let k = LvwKernel::K2(
            Kernel2d::new(1, 2, 1, 1, vec![0.5, -0.5], Some(vec![1.0])).unwrap(),
        );
        let path = dir.path().join("k.lvw");
        write_lvw(&k, &path).unwrap();
        let bytes = fs::read(&path).unwrap();
        assert_eq!(&bytes[0..4], b"LVW1");
        assert_eq!(bytes[4], 4, "rank");
        assert_eq!(&bytes[5..9], &1u32.to_le_bytes(), "kh");
        assert_eq!(&bytes[9..13], &2u32.to_le_bytes(), "kw");
        assert_eq!(&bytes[13..17], &1u32.to_le_bytes(), "cin");
        assert_eq!(&bytes[17..21], &1u32.to_le_bytes(), "cout");
        assert_eq!(&bytes[21..25], &0.5f32.to_le_bytes());
        assert_eq!(&bytes[25..29], &(-0.5f32).to_le_bytes());
        assert_eq!(&bytes[29..33], &1.0f32.to_le_bytes(), "bias after weights");
        assert_eq!(bytes.len(), 33);
    }

    #[test]
    fn rejects_corrupt_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.lvw");
        let k = LvwKernel::K2(
            Kernel2d::new(1, 2, 1, 1, vec![0.5, -0.5], Some(vec![1.0])).unwrap(),
        );
        write_lvw(&k, &path).unwrap();
        let good = fs::read(&path).unwrap();

        fs::write(&path, b"LVWX").unwrap();
        assert!(matches!(read_lvw(&path), Err(LvwError::BadMagic(_))));

        let mut bad_rank = good.clone();
        bad_rank[4] = 7;
        fs::write(&path, &bad_rank).unwrap();
        assert!(matches!(read_lvw(&path), Err(LvwError::UnsupportedRank(7))));

        fs::write(&path, &good[..good.len() - 2]).unwrap();
        assert!(matches!(read_lvw(&path), Err(LvwError::Truncated { .. })));

        let mut trailing = good.clone();
        trailing.extend_from_slice(&[0, 0]);
        fs::write(&path, &trailing).unwrap();
        assert!(matches!(
            read_lvw(&path),
            Err(LvwError::TrailingBytes { extra: 2 })
        ));

        let mut nan = good;
        // First weight at offset 21.
        nan[21..25].copy_from_slice(&f32::NAN.to_le_bytes());
        fs::write(&path, &nan).unwrap();
        assert!(matches!(read_lvw(&path), Err(LvwError::InvalidKernel(_))));
    }
}
