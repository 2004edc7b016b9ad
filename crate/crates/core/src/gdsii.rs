//! GDSII stream writer and a reader for the subset it produces.
//!
//! Files carry one flat structure per cell. Every shape is a 5-point
//! BOUNDARY (counter-clockwise from the lower-left corner, datatype 0) and
//! the cell outline is stored as a BOX on layer 0, so reading a file back
//! reproduces the cell exactly. Timestamps are a fixed constant so equal
//! libraries always serialize to equal bytes.

use std::io::{Read, Write};

use thiserror::Error;

use crate::geom::{Cell, DbUnit, LayerId, Rect, Shape};

/// Database unit in user units (microns).
pub const USER_UNITS_PER_DB: f64 = 0.001;
/// Database unit in meters.
pub const METERS_PER_DB: f64 = 1e-9;
pub const STREAM_VERSION: i16 = 600;
/// BGNLIB/BGNSTR modification and access time: 2000-01-01 00:00:00, twice.
pub const FIXED_TIMESTAMP: [i16; 12] = [2000, 1, 1, 0, 0, 0, 2000, 1, 1, 0, 0, 0];
/// Layer and boxtype of the outline BOX.
pub const OUTLINE_LAYER: LayerId = 0;

pub mod record {
    pub const HEADER: u8 = 0x00;
    pub const BGNLIB: u8 = 0x01;
    pub const LIBNAME: u8 = 0x02;
    pub const UNITS: u8 = 0x03;
    pub const ENDLIB: u8 = 0x04;
    pub const BGNSTR: u8 = 0x05;
    pub const STRNAME: u8 = 0x06;
    pub const ENDSTR: u8 = 0x07;
    pub const BOUNDARY: u8 = 0x08;
    pub const LAYER: u8 = 0x0D;
    pub const DATATYPE: u8 = 0x0E;
    pub const XY: u8 = 0x10;
    pub const ENDEL: u8 = 0x11;
    pub const BOX: u8 = 0x2D;
    pub const BOXTYPE: u8 = 0x2E;
}

pub mod data_type {
    pub const NONE: u8 = 0x00;
    pub const INT16: u8 = 0x02;
    pub const INT32: u8 = 0x03;
    pub const REAL8: u8 = 0x05;
    pub const ASCII: u8 = 0x06;
}

#[derive(Debug, Error)]
pub enum GdsError {
    #[error("invalid structure name `{0}`: at most 32 characters from [A-Z0-9_$]")]
    InvalidName(String),
    #[error("invalid library name `{0}`")]
    InvalidLibName(String),
    #[error("coordinate {0} does not fit a 32-bit GDSII integer")]
    CoordinateRange(DbUnit),
    #[error("layer {0} is reserved or negative")]
    BadLayer(LayerId),
    #[error("real {0} is outside the GDSII real8 range")]
    RealRange(f64),
    #[error("record payload of {0} bytes exceeds the 16-bit length field")]
    RecordTooLong(usize),
    #[error("truncated record at byte {offset}")]
    Truncated { offset: usize },
    #[error("bad record length {length} at byte {offset}")]
    BadLength { offset: usize, length: usize },
    #[error("unknown or unsupported record type 0x{rtype:02X} at byte {offset}")]
    UnknownRecord { offset: usize, rtype: u8 },
    #[error("unexpected {found} at byte {offset}: {context}")]
    Unexpected { offset: usize, found: String, context: &'static str },
    #[error("boundary at byte {offset} is not an axis-aligned rectangle")]
    NonRectangular { offset: usize },
    #[error("unsupported database unit {0} m (expected 1e-9)")]
    Units(f64),
    #[error("data after ENDLIB at byte {offset}")]
    TrailingData { offset: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A flat library with a fixed 1nm database unit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GdsLibrary {
    pub name: String,
    pub cells: Vec<Cell>,
}

impl GdsLibrary {
    pub fn new(name: impl Into<String>, cells: Vec<Cell>) -> Self {
        Self { name: name.into(), cells }
    }
}

/// Encodes `x` as an excess-64, base-16 GDSII real.
///
/// Every finite f64 whose exponent fits is representable exactly: the
/// 53-bit significand shifted left by at most 3 bits fits the 56-bit
/// mantissa.
pub fn encode_real8(x: f64) -> Result<[u8; 8], GdsError> {
    if x == 0.0 {
        return Ok([0; 8]);
    }
    if !x.is_finite() {
        return Err(GdsError::RealRange(x));
    }
    let bits = x.to_bits();
    let sign = (bits >> 63) as u8;
    let raw_exp = ((bits >> 52) & 0x7FF) as i32;
    let frac = bits & ((1u64 << 52) - 1);
    // |x| = sig * 2^(e2), sig normalised to [2^52, 2^53)
    let (mut sig, mut e2) = if raw_exp == 0 { (frac, -1074) } else { (frac | (1 << 52), raw_exp - 1075) };
    while sig < (1 << 52) {
        sig <<= 1;
        e2 -= 1;
    }
    // |x| = (sig / 2^53) * 2^e with sig / 2^53 in [1/2, 1)
    let e = e2 + 53;
    let q = (e + 3).div_euclid(4);
    let shift = e - 4 * q + 3;
    let mantissa = sig << shift;
    let exponent = q + 64;
    if !(0..=127).contains(&exponent) {
        return Err(GdsError::RealRange(x));
    }
    let mut out = mantissa.to_be_bytes();
    out[0] = (sign << 7) | exponent as u8;
    Ok(out)
}

pub fn decode_real8(b: [u8; 8]) -> f64 {
    let sign = if b[0] & 0x80 != 0 { -1.0 } else { 1.0 };
    let exponent = (b[0] & 0x7F) as i32 - 64;
    let mut m = [0u8; 8];
    m[1..].copy_from_slice(&b[1..]);
    let mantissa = u64::from_be_bytes(m);
    if mantissa == 0 {
        return 0.0;
    }
    // value = mantissa * 2^(4 * exponent - 56); scale in two steps so no
    // intermediate power of two leaves the f64 range
    let p = 4 * exponent - 56;
    let half = p / 2;
    sign * mantissa as f64 * 2f64.powi(half) * 2f64.powi(p - half)
}

fn valid_struct_name(name: &str) -> bool {
    !name.is_empty()
        && name.len() <= 32
        && name.bytes().all(|b| b.is_ascii_uppercase() || b.is_ascii_digit() || b == b'_' || b == b'$')
}

struct RecordWriter<W: Write> {
    sink: W,
    written: usize,
}

impl<W: Write> RecordWriter<W> {
    fn record(&mut self, rtype: u8, dtype: u8, payload: &[u8]) -> Result<(), GdsError> {
        let len = 4 + payload.len();
        if len > u16::MAX as usize {
            return Err(GdsError::RecordTooLong(payload.len()));
        }
        self.sink.write_all(&(len as u16).to_be_bytes())?;
        self.sink.write_all(&[rtype, dtype])?;
        self.sink.write_all(payload)?;
        self.written += len;
        Ok(())
    }

    fn empty(&mut self, rtype: u8) -> Result<(), GdsError> {
        self.record(rtype, data_type::NONE, &[])
    }

    fn int16s(&mut self, rtype: u8, values: &[i16]) -> Result<(), GdsError> {
        let payload: Vec<u8> = values.iter().flat_map(|v| v.to_be_bytes()).collect();
        self.record(rtype, data_type::INT16, &payload)
    }

    fn ascii(&mut self, rtype: u8, s: &str) -> Result<(), GdsError> {
        let mut payload = s.as_bytes().to_vec();
        if payload.len() % 2 == 1 {
            payload.push(0);
        }
        self.record(rtype, data_type::ASCII, &payload)
    }

    fn reals(&mut self, rtype: u8, values: &[f64]) -> Result<(), GdsError> {
        let mut payload = Vec::with_capacity(8 * values.len());
        for &v in values {
            payload.extend_from_slice(&encode_real8(v)?);
        }
        self.record(rtype, data_type::REAL8, &payload)
    }

    fn rect_xy(&mut self, r: &Rect) -> Result<(), GdsError> {
        let [a, b, c, d] = r.coords();
        let mut payload = Vec::with_capacity(40);
        for v in [a, b, c, b, c, d, a, d, a, b] {
            let v32 = i32::try_from(v).map_err(|_| GdsError::CoordinateRange(v))?;
            payload.extend_from_slice(&v32.to_be_bytes());
        }
        self.record(record::XY, data_type::INT32, &payload)
    }
}

/// Serializes `lib` and returns the number of bytes written.
pub fn write_gds<W: Write>(lib: &GdsLibrary, sink: W) -> Result<usize, GdsError> {
    if lib.name.is_empty() || !lib.name.bytes().all(|b| b.is_ascii_graphic()) {
        return Err(GdsError::InvalidLibName(lib.name.clone()));
    }
    for cell in &lib.cells {
        if !valid_struct_name(cell.name()) {
            return Err(GdsError::InvalidName(cell.name().to_string()));
        }
        if let Some(s) = cell.shapes().iter().find(|s| s.layer <= OUTLINE_LAYER) {
            return Err(GdsError::BadLayer(s.layer));
        }
    }
    let mut w = RecordWriter { sink, written: 0 };
    w.int16s(record::HEADER, &[STREAM_VERSION])?;
    w.int16s(record::BGNLIB, &FIXED_TIMESTAMP)?;
    w.ascii(record::LIBNAME, &lib.name)?;
    w.reals(record::UNITS, &[USER_UNITS_PER_DB, METERS_PER_DB])?;
    for cell in &lib.cells {
        w.int16s(record::BGNSTR, &FIXED_TIMESTAMP)?;
        w.ascii(record::STRNAME, cell.name())?;
        w.empty(record::BOX)?;
        w.int16s(record::LAYER, &[OUTLINE_LAYER])?;
        w.int16s(record::BOXTYPE, &[0])?;
        w.rect_xy(&cell.bbox())?;
        w.empty(record::ENDEL)?;
        for s in cell.shapes() {
            w.empty(record::BOUNDARY)?;
            w.int16s(record::LAYER, &[s.layer])?;
            w.int16s(record::DATATYPE, &[0])?;
            w.rect_xy(&s.rect)?;
            w.empty(record::ENDEL)?;
        }
        w.empty(record::ENDSTR)?;
    }
    w.empty(record::ENDLIB)?;
    w.sink.flush()?;
    Ok(w.written)
}

pub fn write_gds_to_vec(lib: &GdsLibrary) -> Result<Vec<u8>, GdsError> {
    let mut buf = Vec::new();
    write_gds(lib, &mut buf)?;
    Ok(buf)
}

struct Record<'a> {
    offset: usize,
    rtype: u8,
    payload: &'a [u8],
}

fn record_name(rtype: u8) -> String {
    use record::*;
    match rtype {
        HEADER => "HEADER".into(),
        BGNLIB => "BGNLIB".into(),
        LIBNAME => "LIBNAME".into(),
        UNITS => "UNITS".into(),
        ENDLIB => "ENDLIB".into(),
        BGNSTR => "BGNSTR".into(),
        STRNAME => "STRNAME".into(),
        ENDSTR => "ENDSTR".into(),
        BOUNDARY => "BOUNDARY".into(),
        LAYER => "LAYER".into(),
        DATATYPE => "DATATYPE".into(),
        XY => "XY".into(),
        ENDEL => "ENDEL".into(),
        BOX => "BOX".into(),
        BOXTYPE => "BOXTYPE".into(),
        other => format!("record 0x{other:02X}"),
    }
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn next(&mut self) -> Result<Record<'a>, GdsError> {
        let offset = self.pos;
        if self.bytes.len() < offset + 4 {
            return Err(GdsError::Truncated { offset });
        }
        let length = u16::from_be_bytes([self.bytes[offset], self.bytes[offset + 1]]) as usize;
        if length < 4 || !length.is_multiple_of(2) {
            return Err(GdsError::BadLength { offset, length });
        }
        if self.bytes.len() < offset + length {
            return Err(GdsError::Truncated { offset });
        }
        let rtype = self.bytes[offset + 2];
        use record::*;
        if !matches!(
            rtype,
            HEADER | BGNLIB | LIBNAME | UNITS | ENDLIB | BGNSTR | STRNAME | ENDSTR | BOUNDARY | LAYER | DATATYPE | XY | ENDEL | BOX | BOXTYPE
        ) {
            return Err(GdsError::UnknownRecord { offset, rtype });
        }
        self.pos += length;
        Ok(Record { offset, rtype, payload: &self.bytes[offset + 4..offset + length] })
    }

    fn expect(&mut self, rtype: u8, context: &'static str) -> Result<Record<'a>, GdsError> {
        let r = self.next()?;
        if r.rtype != rtype {
            return Err(GdsError::Unexpected { offset: r.offset, found: record_name(r.rtype), context });
        }
        Ok(r)
    }
}

fn int16(r: &Record) -> Result<i16, GdsError> {
    if r.payload.len() != 2 {
        return Err(GdsError::BadLength { offset: r.offset, length: r.payload.len() + 4 });
    }
    Ok(i16::from_be_bytes([r.payload[0], r.payload[1]]))
}

fn ascii(r: &Record) -> String {
    let end = r.payload.iter().position(|&b| b == 0).unwrap_or(r.payload.len());
    String::from_utf8_lossy(&r.payload[..end]).into_owned()
}

fn rect_from_xy(r: &Record) -> Result<Rect, GdsError> {
    if r.payload.len() != 40 {
        return Err(GdsError::NonRectangular { offset: r.offset });
    }
    let pts: Vec<(DbUnit, DbUnit)> = r
        .payload
        .chunks_exact(8)
        .map(|c| {
            let x = i32::from_be_bytes([c[0], c[1], c[2], c[3]]) as DbUnit;
            let y = i32::from_be_bytes([c[4], c[5], c[6], c[7]]) as DbUnit;
            (x, y)
        })
        .collect();
    if pts[0] != pts[4] {
        return Err(GdsError::NonRectangular { offset: r.offset });
    }
    // Each edge must be axis-parallel and alternate between horizontal and vertical.
    let horizontal = |a: (DbUnit, DbUnit), b: (DbUnit, DbUnit)| a.1 == b.1 && a.0 != b.0;
    let vertical = |a: (DbUnit, DbUnit), b: (DbUnit, DbUnit)| a.0 == b.0 && a.1 != b.1;
    let starts_h = horizontal(pts[0], pts[1]);
    for k in 0..4 {
        let ok = if (k % 2 == 0) == starts_h { horizontal(pts[k], pts[k + 1]) } else { vertical(pts[k], pts[k + 1]) };
        if !ok {
            return Err(GdsError::NonRectangular { offset: r.offset });
        }
    }
    let xs = pts[..4].iter().map(|p| p.0);
    let ys = pts[..4].iter().map(|p| p.1);
    let (x_ll, x_ur) = (xs.clone().min().unwrap(), xs.max().unwrap());
    let (y_ll, y_ur) = (ys.clone().min().unwrap(), ys.max().unwrap());
    Rect::new(x_ll, y_ll, x_ur, y_ur).map_err(|_| GdsError::NonRectangular { offset: r.offset })
}

/// Parses a stream written by [`write_gds`]. Errors carry byte offsets.
pub fn read_gds_bytes(bytes: &[u8]) -> Result<GdsLibrary, GdsError> {
    let mut p = Parser { bytes, pos: 0 };
    p.expect(record::HEADER, "stream must start with HEADER")?;
    p.expect(record::BGNLIB, "BGNLIB must follow HEADER")?;
    let name = ascii(&p.expect(record::LIBNAME, "LIBNAME must follow BGNLIB")?);
    let units = p.expect(record::UNITS, "UNITS must follow LIBNAME")?;
    if units.payload.len() != 16 {
        return Err(GdsError::BadLength { offset: units.offset, length: units.payload.len() + 4 });
    }
    let db = decode_real8(units.payload[8..16].try_into().unwrap());
    if db != METERS_PER_DB {
        return Err(GdsError::Units(db));
    }
    let mut cells = Vec::new();
    loop {
        let r = p.next()?;
        match r.rtype {
            record::ENDLIB => break,
            record::BGNSTR => cells.push(read_struct(&mut p)?),
            other => {
                return Err(GdsError::Unexpected {
                    offset: r.offset,
                    found: record_name(other),
                    context: "expected BGNSTR or ENDLIB",
                })
            }
        }
    }
    if p.pos != bytes.len() {
        return Err(GdsError::TrailingData { offset: p.pos });
    }
    Ok(GdsLibrary { name, cells })
}

fn read_struct(p: &mut Parser) -> Result<Cell, GdsError> {
    let name = ascii(&p.expect(record::STRNAME, "STRNAME must follow BGNSTR")?);
    let mut bbox: Option<Rect> = None;
    let mut shapes = Vec::new();
    loop {
        let r = p.next()?;
        match r.rtype {
            record::ENDSTR => break,
            record::BOUNDARY => {
                let layer = int16(&p.expect(record::LAYER, "BOUNDARY needs LAYER")?)?;
                p.expect(record::DATATYPE, "BOUNDARY needs DATATYPE")?;
                let rect = rect_from_xy(&p.expect(record::XY, "BOUNDARY needs XY")?)?;
                p.expect(record::ENDEL, "element must end with ENDEL")?;
                shapes.push(Shape { layer, rect });
            }
            record::BOX => {
                let layer_rec = p.expect(record::LAYER, "BOX needs LAYER")?;
                if int16(&layer_rec)? != OUTLINE_LAYER {
                    return Err(GdsError::Unexpected {
                        offset: layer_rec.offset,
                        found: "BOX off the outline layer".into(),
                        context: "only the cell outline is stored as a BOX",
                    });
                }
                p.expect(record::BOXTYPE, "BOX needs BOXTYPE")?;
                bbox = Some(rect_from_xy(&p.expect(record::XY, "BOX needs XY")?)?);
                p.expect(record::ENDEL, "element must end with ENDEL")?;
            }
            other => {
                return Err(GdsError::Unexpected {
                    offset: r.offset,
                    found: record_name(other),
                    context: "expected BOUNDARY, BOX or ENDSTR",
                })
            }
        }
    }
    let bbox = match bbox {
        Some(b) => b,
        None => bounding_box(&shapes).ok_or(GdsError::Unexpected {
            offset: p.pos,
            found: "empty structure without outline".into(),
            context: "cannot infer a cell outline",
        })?,
    };
    Ok(Cell::new_unchecked(name, bbox, shapes))
}

fn bounding_box(shapes: &[Shape]) -> Option<Rect> {
    let first = shapes.first()?.rect;
    let (mut a, mut b, mut c, mut d) = (first.x_ll(), first.y_ll(), first.x_ur(), first.y_ur());
    for s in shapes {
        a = a.min(s.rect.x_ll());
        b = b.min(s.rect.y_ll());
        c = c.max(s.rect.x_ur());
        d = d.max(s.rect.y_ur());
    }
    Rect::new(a, b, c, d).ok()
}

pub fn read_gds<R: Read>(mut source: R) -> Result<GdsLibrary, GdsError> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    read_gds_bytes(&bytes)
}
