//! Part 10 writer for the synthetic phantom series.
//!
//! Emits exactly the profile the parser reads: preamble, file meta group,
//! Explicit VR Little Endian data set, unsigned 16-bit pixels. Output is a
//! pure function of the inputs, so identical slices encode to identical
//! bytes.

const CT_IMAGE_STORAGE: &str = "1.2.840.10008.5.1.4.1.1.2";
const TS_EXPLICIT_LE: &str = "1.2.840.10008.1.2.1";

/// Everything a phantom slice needs to become a file.
pub(crate) struct SliceParams<'a> {
    pub rows: u16,
    pub cols: u16,
    /// (row spacing, column spacing) in mm.
    pub pixel_spacing_mm: (f64, f64),
    pub slice_thickness_mm: f64,
    /// ImagePositionPatient (x, y, z) in mm.
    pub image_position_mm: (f64, f64, f64),
    pub rescale_slope: f64,
    pub rescale_intercept: f64,
    /// Deterministic SOP instance UID; no randomness, no timestamps.
    pub sop_instance_uid: &'a str,
    /// Unsigned stored values, row-major, rows * cols entries.
    pub raw_pixels: &'a [u16],
}

/// Encodes one slice as a complete Part 10 file.
pub(crate) fn encode_ct_slice(p: &SliceParams<'_>) -> Vec<u8> {
    assert_eq!(
        p.raw_pixels.len(),
        p.rows as usize * p.cols as usize,
        "pixel buffer must match rows x cols"
    );

    let mut meta = Vec::new();
    push_long(&mut meta, 0x0002, 0x0001, b"OB", &[0x00, 0x01]);
    push_string(&mut meta, 0x0002, 0x0002, b"UI", CT_IMAGE_STORAGE);
    push_string(&mut meta, 0x0002, 0x0003, b"UI", p.sop_instance_uid);
    push_string(&mut meta, 0x0002, 0x0010, b"UI", TS_EXPLICIT_LE);

    let mut out = vec![0u8; 128];
    out.extend_from_slice(b"DICM");
    push_short(
        &mut out,
        0x0002,
        0x0000,
        b"UL",
        &(meta.len() as u32).to_le_bytes(),
    );
    out.extend_from_slice(&meta);

    push_string(&mut out, 0x0008, 0x0016, b"UI", CT_IMAGE_STORAGE);
    push_string(&mut out, 0x0008, 0x0018, b"UI", p.sop_instance_uid);
    push_string(&mut out, 0x0008, 0x0060, b"CS", "CT");
    push_string(&mut out, 0x0018, 0x0050, b"DS", &fmt_ds(p.slice_thickness_mm));
    let (x, y, z) = p.image_position_mm;
    push_string(
        &mut out,
        0x0020,
        0x0032,
        b"DS",
        &format!("{}\\{}\\{}", fmt_ds(x), fmt_ds(y), fmt_ds(z)),
    );
    push_us(&mut out, 0x0028, 0x0002, 1); // SamplesPerPixel
    push_us(&mut out, 0x0028, 0x0010, p.rows);
    push_us(&mut out, 0x0028, 0x0011, p.cols);
    push_string(
        &mut out,
        0x0028,
        0x0030,
        b"DS",
        &format!("{}\\{}", fmt_ds(p.pixel_spacing_mm.0), fmt_ds(p.pixel_spacing_mm.1)),
    );
    push_us(&mut out, 0x0028, 0x0100, 16); // BitsAllocated
    push_us(&mut out, 0x0028, 0x0101, 16); // BitsStored
    push_us(&mut out, 0x0028, 0x0102, 15); // HighBit
    push_us(&mut out, 0x0028, 0x0103, 0); // PixelRepresentation: unsigned
    push_string(&mut out, 0x0028, 0x1052, b"DS", &fmt_ds(p.rescale_intercept));
    push_string(&mut out, 0x0028, 0x1053, b"DS", &fmt_ds(p.rescale_slope));

    let mut pixels = Vec::with_capacity(p.raw_pixels.len() * 2);
    for v in p.raw_pixels {
        pixels.extend_from_slice(&v.to_le_bytes());
    }
    push_long(&mut out, 0x7FE0, 0x0010, b"OW", &pixels);
    out
}

/// Decimal-string encoding; integral values drop the fraction.
fn fmt_ds(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

/// Explicit VR element with a 16-bit length (DS, UI, US, UL, CS...).
fn push_short(out: &mut Vec<u8>, group: u16, element: u16, vr: &[u8; 2], value: &[u8]) {
    assert!(value.len().is_multiple_of(2), "element values must have even length");
    assert!(u16::try_from(value.len()).is_ok(), "short element too long");
    out.extend_from_slice(&group.to_le_bytes());
    out.extend_from_slice(&element.to_le_bytes());
    out.extend_from_slice(vr);
    out.extend_from_slice(&(value.len() as u16).to_le_bytes());
    out.extend_from_slice(value);
}

/// Explicit VR element with the 12-byte header (OB, OW...).
fn push_long(out: &mut Vec<u8>, group: u16, element: u16, vr: &[u8; 2], value: &[u8]) {
    assert!(value.len().is_multiple_of(2), "element values must have even length");
    out.extend_from_slice(&group.to_le_bytes());
    out.extend_from_slice(&element.to_le_bytes());
    out.extend_from_slice(vr);
    out.extend_from_slice(&[0, 0]);
    out.extend_from_slice(&(value.len() as u32).to_le_bytes());
    out.extend_from_slice(value);
}

/// Text element padded to even length: UI pads with NUL, others with space.
fn push_string(out: &mut Vec<u8>, group: u16, element: u16, vr: &[u8; 2], value: &str) {
    let mut bytes = value.as_bytes().to_vec();
    if bytes.len() % 2 == 1 {
        bytes.push(if vr == b"UI" { 0x00 } else { b' ' });
    }
    push_short(out, group, element, vr, &bytes);
}

fn push_us(out: &mut Vec<u8>, group: u16, element: u16, value: u16) {
    push_short(out, group, element, b"US", &value.to_le_bytes());
}
