//! Byte-level decoding of a single DICOM slice file.

use super::{DicomError, DicomSlice, Tag};

const TAG_SLICE_THICKNESS: Tag = Tag(0x0018, 0x0050);
const TAG_IMAGE_POSITION: Tag = Tag(0x0020, 0x0032);
const TAG_ROWS: Tag = Tag(0x0028, 0x0010);
const TAG_COLS: Tag = Tag(0x0028, 0x0011);
const TAG_PIXEL_SPACING: Tag = Tag(0x0028, 0x0030);
const TAG_BITS_ALLOCATED: Tag = Tag(0x0028, 0x0100);
const TAG_PIXEL_REPRESENTATION: Tag = Tag(0x0028, 0x0103);
const TAG_RESCALE_INTERCEPT: Tag = Tag(0x0028, 0x1052);
const TAG_RESCALE_SLOPE: Tag = Tag(0x0028, 0x1053);
const TAG_PIXEL_DATA: Tag = Tag(0x7FE0, 0x0010);
const TAG_TRANSFER_SYNTAX: Tag = Tag(0x0002, 0x0010);

const TAG_ITEM: Tag = Tag(0xFFFE, 0xE000);
const TAG_ITEM_DELIM: Tag = Tag(0xFFFE, 0xE00D);
const TAG_SEQ_DELIM: Tag = Tag(0xFFFE, 0xE0DD);

const UNDEFINED_LEN: u32 = 0xFFFF_FFFF;
const MAX_SEQ_DEPTH: u32 = 64;

const TS_IMPLICIT_LE: &str = "1.2.840.10008.1.2";
const TS_EXPLICIT_LE: &str = "1.2.840.10008.1.2.1";

/// Every VR defined by the standard; used to sniff explicit VR streams.
const KNOWN_VRS: [[u8; 2]; 34] = [
    *b"AE", *b"AS", *b"AT", *b"CS", *b"DA", *b"DS", *b"DT", *b"FL", *b"FD", *b"IS", *b"LO",
    *b"LT", *b"OB", *b"OD", *b"OF", *b"OL", *b"OV", *b"OW", *b"PN", *b"SH", *b"SL", *b"SQ",
    *b"SS", *b"ST", *b"SV", *b"TM", *b"UC", *b"UI", *b"UL", *b"UN", *b"UR", *b"US", *b"UT",
    *b"UV",
];

/// VRs that use the 12-byte explicit header (reserved pair + 32-bit length).
const LONG_VRS: [[u8; 2]; 11] = [
    *b"OB", *b"OD", *b"OF", *b"OL", *b"OV", *b"OW", *b"SQ", *b"UC", *b"UN", *b"UR", *b"UT",
];

#[derive(Clone, Copy, PartialEq, Eq)]
enum VrMode {
    Explicit,
    Implicit,
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], DicomError> {
        if self.remaining() < n {
            return Err(DicomError::MalformedElement(format!(
                "{what} needs {n} bytes, {} left",
                self.remaining()
            )));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u16_le(&mut self, what: &str) -> Result<u16, DicomError> {
        let b = self.take(2, what)?;
        Ok(u16::from_le_bytes([b[0], b[1]]))
    }

    fn u32_le(&mut self, what: &str) -> Result<u32, DicomError> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn peek_group(&self) -> Option<u16> {
        if self.remaining() < 2 {
            return None;
        }
        Some(u16::from_le_bytes([
            self.bytes[self.pos],
            self.bytes[self.pos + 1],
        ]))
    }

    fn peek_tag(&self) -> Option<Tag> {
        if self.remaining() < 4 {
            return None;
        }
        let g = u16::from_le_bytes([self.bytes[self.pos], self.bytes[self.pos + 1]]);
        let e = u16::from_le_bytes([self.bytes[self.pos + 2], self.bytes[self.pos + 3]]);
        Some(Tag(g, e))
    }
}

/// Decodes one slice file.
///
/// Accepts a full Part 10 file (preamble + "DICM" + file meta group) or a
/// bare data set. Bare data sets carry no transfer-syntax declaration, so
/// the VR mode is sniffed from the first element header.
pub fn parse_dicom_file(bytes: &[u8]) -> Result<DicomSlice, DicomError> {
    let has_preamble = bytes.len() >= 132 && &bytes[128..132] == b"DICM";
    let mut cur = Cursor::new(if has_preamble { &bytes[132..] } else { bytes });
    let mode = if has_preamble {
        parse_file_meta(&mut cur)?
    } else {
        sniff_vr_mode(bytes)
    };
    parse_dataset(cur, mode)
}

/// Reads the file meta group (always explicit VR) and maps the declared
/// transfer syntax to a VR mode.
fn parse_file_meta(cur: &mut Cursor<'_>) -> Result<VrMode, DicomError> {
    let mut transfer_syntax: Option<String> = None;
    while cur.remaining() >= 8 && cur.peek_group() == Some(0x0002) {
        let (tag, value) = read_element(cur, VrMode::Explicit, 0)?;
        if tag == TAG_TRANSFER_SYNTAX {
            if let Some(v) = value {
                transfer_syntax = Some(trim_ui(v));
            }
        }
    }
    match transfer_syntax {
        Some(uid) if uid == TS_EXPLICIT_LE => Ok(VrMode::Explicit),
        Some(uid) if uid == TS_IMPLICIT_LE => Ok(VrMode::Implicit),
        Some(uid) => Err(DicomError::UnsupportedTransferSyntax(uid)),
        None => Err(DicomError::MissingTag(TAG_TRANSFER_SYNTAX)),
    }
}

/// Guesses the VR mode of a bare data set from bytes 4..6 of the first
/// element: a known VR code means explicit, anything else implicit.
fn sniff_vr_mode(bytes: &[u8]) -> VrMode {
    if bytes.len() >= 6 {
        let vr = [bytes[4], bytes[5]];
        if KNOWN_VRS.contains(&vr) {
            return VrMode::Explicit;
        }
    }
    VrMode::Implicit
}

/// Reads one element header plus value. Returns `(tag, Some(value))`, or
/// `(tag, None)` when the element was an undefined-length sequence that was
/// skipped wholesale.
fn read_element<'a>(
    cur: &mut Cursor<'a>,
    mode: VrMode,
    depth: u32,
) -> Result<(Tag, Option<&'a [u8]>), DicomError> {
    if depth > MAX_SEQ_DEPTH {
        return Err(DicomError::MalformedElement(
            "sequence nesting deeper than 64 levels".into(),
        ));
    }
    let group = cur.u16_le("tag group")?;
    let element = cur.u16_le("tag element")?;
    let tag = Tag(group, element);
    if group == 0xFFFE {
        return Err(DicomError::MalformedElement(format!(
            "delimiter {tag} outside a sequence"
        )));
    }

    let length = match mode {
        VrMode::Explicit => {
            let vr: [u8; 2] = cur.take(2, "VR")?.try_into().unwrap();
            if !KNOWN_VRS.contains(&vr) {
                return Err(DicomError::MalformedElement(format!(
                    "unknown VR {:?} on {tag}",
                    String::from_utf8_lossy(&vr)
                )));
            }
            if LONG_VRS.contains(&vr) {
                cur.take(2, "reserved")?;
                let len = cur.u32_le("length")?;
                if len == UNDEFINED_LEN {
                    if vr == *b"SQ" || vr == *b"UN" {
                        skip_sequence(cur, mode, depth + 1)?;
                        return Ok((tag, None));
                    }
                    return Err(DicomError::MalformedElement(format!(
                        "undefined length on non-sequence {tag}"
                    )));
                }
                len
            } else {
                u32::from(cur.u16_le("length")?)
            }
        }
        VrMode::Implicit => {
            let len = cur.u32_le("length")?;
            if len == UNDEFINED_LEN {
                // Implicit VR: undefined length means a sequence.
                skip_sequence(cur, mode, depth + 1)?;
                return Ok((tag, None));
            }
            len
        }
    };

    let value = cur.take(length as usize, &format!("value of {tag}"))?;
    Ok((tag, Some(value)))
}

/// Consumes items until the sequence delimitation item.
fn skip_sequence(cur: &mut Cursor<'_>, mode: VrMode, depth: u32) -> Result<(), DicomError> {
    loop {
        let group = cur.u16_le("sequence item tag")?;
        let element = cur.u16_le("sequence item tag")?;
        let tag = Tag(group, element);
        let len = cur.u32_le("sequence item length")?;
        if tag == TAG_SEQ_DELIM {
            return Ok(());
        }
        if tag != TAG_ITEM {
            return Err(DicomError::MalformedElement(format!(
                "expected an item inside a sequence, found {tag}"
            )));
        }
        if len == UNDEFINED_LEN {
            skip_item(cur, mode, depth)?;
        } else {
            cur.take(len as usize, "sequence item value")?;
        }
    }
}

/// Consumes an undefined-length item's elements until its delimiter.
fn skip_item(cur: &mut Cursor<'_>, mode: VrMode, depth: u32) -> Result<(), DicomError> {
    loop {
        if cur.peek_tag() == Some(TAG_ITEM_DELIM) {
            cur.take(4, "item delimiter tag")?;
            cur.u32_le("item delimiter length")?;
            return Ok(());
        }
        read_element(cur, mode, depth + 1)?;
    }
}

fn parse_dataset(mut cur: Cursor<'_>, mode: VrMode) -> Result<DicomSlice, DicomError> {
    let mut rows: Option<&[u8]> = None;
    let mut cols: Option<&[u8]> = None;
    let mut bits: Option<&[u8]> = None;
    let mut pixrep: Option<&[u8]> = None;
    let mut spacing: Option<&[u8]> = None;
    let mut thickness: Option<&[u8]> = None;
    let mut position: Option<&[u8]> = None;
    let mut slope: Option<&[u8]> = None;
    let mut intercept: Option<&[u8]> = None;
    let mut pixel_data: Option<&[u8]> = None;

    while cur.remaining() >= 8 {
        let (tag, value) = read_element(&mut cur, mode, 0)?;
        let Some(value) = value else { continue };
        match tag {
            TAG_ROWS => rows = Some(value),
            TAG_COLS => cols = Some(value),
            TAG_BITS_ALLOCATED => bits = Some(value),
            TAG_PIXEL_REPRESENTATION => pixrep = Some(value),
            TAG_PIXEL_SPACING => spacing = Some(value),
            TAG_SLICE_THICKNESS => thickness = Some(value),
            TAG_IMAGE_POSITION => position = Some(value),
            TAG_RESCALE_SLOPE => slope = Some(value),
            TAG_RESCALE_INTERCEPT => intercept = Some(value),
            TAG_PIXEL_DATA => pixel_data = Some(value),
            _ => {}
        }
    }
    if cur.remaining() != 0 {
        return Err(DicomError::MalformedElement(format!(
            "{} stray bytes after the last element",
            cur.remaining()
        )));
    }

    let rows = parse_us(rows.ok_or(DicomError::MissingTag(TAG_ROWS))?, TAG_ROWS)?;
    let cols = parse_us(cols.ok_or(DicomError::MissingTag(TAG_COLS))?, TAG_COLS)?;
    if rows == 0 || cols == 0 {
        return Err(DicomError::MalformedElement(format!(
            "degenerate image {rows}x{cols}"
        )));
    }
    let bits = parse_us(
        bits.ok_or(DicomError::MissingTag(TAG_BITS_ALLOCATED))?,
        TAG_BITS_ALLOCATED,
    )?;
    if bits != 16 {
        return Err(DicomError::UnsupportedBitsAllocated(bits));
    }
    let pixrep = parse_us(
        pixrep.ok_or(DicomError::MissingTag(TAG_PIXEL_REPRESENTATION))?,
        TAG_PIXEL_REPRESENTATION,
    )?;
    if pixrep > 1 {
        return Err(DicomError::MalformedElement(format!(
            "pixel representation {pixrep} is not 0 or 1"
        )));
    }

    let spacing_vals = parse_ds(
        spacing.ok_or(DicomError::MissingTag(TAG_PIXEL_SPACING))?,
        TAG_PIXEL_SPACING,
    )?;
    if spacing_vals.len() != 2 {
        return Err(DicomError::MalformedElement(format!(
            "pixel spacing has {} values, expected 2",
            spacing_vals.len()
        )));
    }
    let pixel_spacing_mm = (spacing_vals[0], spacing_vals[1]);
    if pixel_spacing_mm.0 <= 0.0 || pixel_spacing_mm.1 <= 0.0 {
        return Err(DicomError::MalformedElement(format!(
            "pixel spacing ({}, {}) must be positive",
            pixel_spacing_mm.0, pixel_spacing_mm.1
        )));
    }

    let thickness_vals = parse_ds(
        thickness.ok_or(DicomError::MissingTag(TAG_SLICE_THICKNESS))?,
        TAG_SLICE_THICKNESS,
    )?;
    let slice_thickness_mm = single(&thickness_vals, TAG_SLICE_THICKNESS)?;

    let position_vals = parse_ds(
        position.ok_or(DicomError::MissingTag(TAG_IMAGE_POSITION))?,
        TAG_IMAGE_POSITION,
    )?;
    if position_vals.len() != 3 {
        return Err(DicomError::MalformedElement(format!(
            "image position has {} values, expected 3",
            position_vals.len()
        )));
    }
    let image_position_z_mm = position_vals[2];

    // Rescale defaults: identity slope, zero intercept.
    let rescale_slope = match slope {
        Some(v) => single(&parse_ds(v, TAG_RESCALE_SLOPE)?, TAG_RESCALE_SLOPE)?,
        None => 1.0,
    };
    let rescale_intercept = match intercept {
        Some(v) => single(&parse_ds(v, TAG_RESCALE_INTERCEPT)?, TAG_RESCALE_INTERCEPT)?,
        None => 0.0,
    };

    let pixel_bytes = pixel_data.ok_or(DicomError::MissingTag(TAG_PIXEL_DATA))?;
    let expected = rows as usize * cols as usize * 2;
    if pixel_bytes.len() != expected {
        return Err(DicomError::MalformedElement(format!(
            "pixel data holds {} bytes, {rows}x{cols} at 16 bits needs {expected}",
            pixel_bytes.len()
        )));
    }
    let raw_pixels: Vec<i32> = pixel_bytes
        .chunks_exact(2)
        .map(|c| {
            if pixrep == 0 {
                i32::from(u16::from_le_bytes([c[0], c[1]]))
            } else {
                i32::from(i16::from_le_bytes([c[0], c[1]]))
            }
        })
        .collect();

    Ok(DicomSlice {
        rows,
        cols,
        bits_allocated: bits,
        pixel_representation: pixrep,
        rescale_slope,
        rescale_intercept,
        pixel_spacing_mm,
        slice_thickness_mm,
        image_position_z_mm,
        raw_pixels,
    })
}

fn parse_us(value: &[u8], tag: Tag) -> Result<u16, DicomError> {
    if value.len() != 2 {
        return Err(DicomError::MalformedElement(format!(
            "{tag} should be a single 16-bit value, got {} bytes",
            value.len()
        )));
    }
    Ok(u16::from_le_bytes([value[0], value[1]]))
}

/// Decodes a decimal string: backslash-separated numbers, possibly padded
/// with spaces or NULs.
fn parse_ds(value: &[u8], tag: Tag) -> Result<Vec<f64>, DicomError> {
    let text = std::str::from_utf8(value).map_err(|_| {
        DicomError::MalformedElement(format!("{tag} decimal string is not ASCII"))
    })?;
    let mut out = Vec::new();
    for part in text.split('\\') {
        let part = part.trim_matches([' ', '\0']);
        if part.is_empty() {
            return Err(DicomError::MalformedElement(format!(
                "{tag} has an empty decimal-string component"
            )));
        }
        let v: f64 = part.parse().map_err(|_| {
            DicomError::MalformedElement(format!("{tag} component {part:?} is not a number"))
        })?;
        if !v.is_finite() {
            return Err(DicomError::MalformedElement(format!(
                "{tag} component {part:?} is not finite"
            )));
        }
        out.push(v);
    }
    Ok(out)
}

fn single(values: &[f64], tag: Tag) -> Result<f64, DicomError> {
    if values.len() != 1 {
        return Err(DicomError::MalformedElement(format!(
            "{tag} has {} values, expected 1",
            values.len()
        )));
    }
    Ok(values[0])
}

/// UI values are padded to even length with NUL.
fn trim_ui(value: &[u8]) -> String {
    String::from_utf8_lossy(value)
        .trim_matches(['\0', ' '])
        .to_string()
}
