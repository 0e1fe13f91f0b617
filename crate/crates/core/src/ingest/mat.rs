//! MAT level 5 reader (and a small writer) for real numeric 2-D matrices.
//!
//! Layout: a 128-byte header (116 bytes text, 8 bytes subsystem offset,
//! `u16` version `0x0100`, 2-byte endian indicator `IM` for little-endian or
//! `MI` for big-endian), followed by tagged data elements. A tag is two
//! `u32`s (type, byte count) and the payload is padded to 8 bytes. The
//! "small element" form packs byte count into the upper 16 bits of the first
//! word and up to 4 payload bytes into the second. `miCOMPRESSED` (15)
//! elements hold a zlib stream that inflates to further elements.
//!
//! A `miMATRIX` (14) element contains, in order: array flags (`miUINT32`,
//! class in the low byte, complex `0x800`, logical `0x200`), dimensions
//! (`miINT32`), name (`miINT8`) and the real part, stored column-major in
//! any numeric element type regardless of the array class.
//!
//! Cell arrays, structs, sparse, char, logical and complex arrays, and
//! arrays with more than two dimensions are skipped with a warning.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use flate2::read::ZlibDecoder;
use flate2::write::ZlibEncoder;

use super::IngestError;

pub const HEADER_LEN: usize = 128;
const HDF5_MAGIC: &[u8; 8] = b"\x89HDF\r\n\x1a\n";
/// Inflated `miCOMPRESSED` payloads above this size are rejected.
const MAX_INFLATED: u64 = 1 << 32;

pub const MI_INT8: u32 = 1;
pub const MI_UINT8: u32 = 2;
pub const MI_INT16: u32 = 3;
pub const MI_UINT16: u32 = 4;
pub const MI_INT32: u32 = 5;
pub const MI_UINT32: u32 = 6;
pub const MI_SINGLE: u32 = 7;
pub const MI_DOUBLE: u32 = 9;
pub const MI_INT64: u32 = 12;
pub const MI_UINT64: u32 = 13;
pub const MI_MATRIX: u32 = 14;
pub const MI_COMPRESSED: u32 = 15;

const FLAG_COMPLEX: u32 = 0x0800;
const FLAG_LOGICAL: u32 = 0x0200;

/// `mxClassID` values.
pub mod class {
    pub const CELL: u8 = 1;
    pub const STRUCT: u8 = 2;
    pub const OBJECT: u8 = 3;
    pub const CHAR: u8 = 4;
    pub const SPARSE: u8 = 5;
    pub const DOUBLE: u8 = 6;
    pub const SINGLE: u8 = 7;
    pub const INT8: u8 = 8;
    pub const UINT8: u8 = 9;
    pub const INT16: u8 = 10;
    pub const UINT16: u8 = 11;
    pub const INT32: u8 = 12;
    pub const UINT32: u8 = 13;
    pub const INT64: u8 = 14;
    pub const UINT64: u8 = 15;

    pub fn name(code: u8) -> &'static str {
        match code {
            CELL => "cell",
            STRUCT => "struct",
            OBJECT => "object",
            CHAR => "char",
            SPARSE => "sparse",
            DOUBLE => "double",
            SINGLE => "single",
            INT8 => "int8",
            UINT8 => "uint8",
            INT16 => "int16",
            UINT16 => "uint16",
            INT32 => "int32",
            UINT32 => "uint32",
            INT64 => "int64",
            UINT64 => "uint64",
            _ => "unknown",
        }
    }

    pub fn is_numeric(code: u8) -> bool {
        (DOUBLE..=UINT64).contains(&code)
    }
}

/// A real 2-D matrix decoded to `f64`, column-major like the file.
#[derive(Debug, Clone, PartialEq)]
pub struct MatMatrix {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    data: Vec<f64>,
}

impl MatMatrix {
    pub fn new(name: String, rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, IngestError> {
        if data.len() != rows * cols {
            return Err(IngestError::ShapeMismatch {
                context: format!("matrix `{name}`"),
                rows,
                cols,
                expected: format!("{} elements, found {}", rows * cols, data.len()),
            });
        }
        Ok(Self { name, rows, cols, data })
    }

    /// Builds from row-major values.
    pub fn from_rows(name: &str, rows: usize, cols: usize, row_major: &[f64]) -> Result<Self, IngestError> {
        if row_major.len() != rows * cols {
            return Self::new(name.into(), rows, cols, row_major.to_vec());
        }
        let mut data = Vec::with_capacity(rows * cols);
        for c in 0..cols {
            data.extend((0..rows).map(|r| row_major[r * cols + c]));
        }
        Self::new(name.into(), rows, cols, data)
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[col * self.rows + row]
    }

    pub fn column(&self, col: usize) -> &[f64] {
        &self.data[col * self.rows..(col + 1) * self.rows]
    }

    pub fn column_major(&self) -> &[f64] {
        &self.data
    }
}

/// Summary of one top-level variable, for listings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatVariableInfo {
    pub name: String,
    pub class: &'static str,
    pub dims: Vec<usize>,
    /// Whether [`parse_mat`] returns this variable.
    pub supported: bool,
    pub note: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Endian {
    Little,
    Big,
}

fn corrupt(msg: impl Into<String>) -> IngestError {
    IngestError::CorruptMatFile(msg.into())
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
    endian: Endian,
}

struct Element<'a> {
    data_type: u32,
    data: &'a [u8],
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8], endian: Endian) -> Self {
        Self { buf, pos: 0, endian }
    }

    fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    fn u32_at(&self, at: usize) -> Result<u32, IngestError> {
        let bytes: [u8; 4] = self
            .buf
            .get(at..at + 4)
            .ok_or_else(|| corrupt(format!("truncated tag at offset {at}")))?
            .try_into()
            .expect("slice of 4");
        Ok(match self.endian {
            Endian::Little => u32::from_le_bytes(bytes),
            Endian::Big => u32::from_be_bytes(bytes),
        })
    }

    /// Reads one tagged element and skips its alignment padding
    /// (`miCOMPRESSED` payloads are not padded).
    fn element(&mut self) -> Result<Element<'a>, IngestError> {
        let start = self.pos;
        let first = self.u32_at(start)?;
        if first >> 16 != 0 {
            let size = (first >> 16) as usize;
            if size > 4 {
                return Err(corrupt(format!("small element of {size} bytes at offset {start}")));
            }
            let data = self
                .buf
                .get(start + 4..start + 4 + size)
                .ok_or_else(|| corrupt(format!("truncated small element at offset {start}")))?;
            self.pos = (start + 8).min(self.buf.len());
            return Ok(Element { data_type: first & 0xFFFF, data });
        }
        let size = self.u32_at(start + 4)? as usize;
        let body = start + 8;
        let end = body.checked_add(size).filter(|&e| e <= self.buf.len()).ok_or_else(|| {
            corrupt(format!(
                "element at offset {start} declares {size} bytes, only {} remain",
                self.buf.len() - body.min(self.buf.len())
            ))
        })?;
        let data = &self.buf[body..end];
        self.pos = if first == MI_COMPRESSED { end } else { end.div_ceil(8) * 8 };
        self.pos = self.pos.min(self.buf.len());
        Ok(Element { data_type: first, data })
    }
}

fn element_width(data_type: u32) -> Option<usize> {
    match data_type {
        MI_INT8 | MI_UINT8 => Some(1),
        MI_INT16 | MI_UINT16 => Some(2),
        MI_INT32 | MI_UINT32 | MI_SINGLE => Some(4),
        MI_DOUBLE | MI_INT64 | MI_UINT64 => Some(8),
        _ => None,
    }
}

fn decode_numeric(el: &Element<'_>, endian: Endian) -> Result<Vec<f64>, IngestError> {
    let width =
        element_width(el.data_type).ok_or_else(|| corrupt(format!("element type {} is not numeric", el.data_type)))?;
    if el.data.len() % width != 0 {
        return Err(corrupt(format!("numeric element of {} bytes is not a multiple of {width}", el.data.len())));
    }
    macro_rules! conv {
        ($t:ty) => {
            el.data
                .chunks_exact(width)
                .map(|c| {
                    let b = c.try_into().expect("chunk width");
                    (match endian {
                        Endian::Little => <$t>::from_le_bytes(b),
                        Endian::Big => <$t>::from_be_bytes(b),
                    }) as f64
                })
                .collect()
        };
    }
    Ok(match el.data_type {
        MI_INT8 => conv!(i8),
        MI_UINT8 => conv!(u8),
        MI_INT16 => conv!(i16),
        MI_UINT16 => conv!(u16),
        MI_INT32 => conv!(i32),
        MI_UINT32 => conv!(u32),
        MI_SINGLE => conv!(f32),
        MI_DOUBLE => conv!(f64),
        MI_INT64 => conv!(i64),
        MI_UINT64 => conv!(u64),
        _ => unreachable!("width checked above"),
    })
}

fn decode_i32s(el: &Element<'_>, endian: Endian) -> Result<Vec<i64>, IngestError> {
    if el.data_type != MI_INT32 && el.data_type != MI_UINT32 {
        return Err(corrupt(format!("dimensions stored as type {}", el.data_type)));
    }
    Ok(decode_numeric(el, endian)?.into_iter().map(|v| v as i64).collect())
}

/// A decoded top-level variable.
struct Variable {
    info: MatVariableInfo,
    matrix: Option<MatMatrix>,
}

fn parse_matrix(payload: &[u8], endian: Endian) -> Result<Variable, IngestError> {
    let mut r = Reader::new(payload, endian);
    let flags_el = r.element()?;
    if flags_el.data_type != MI_UINT32 || flags_el.data.len() < 4 {
        return Err(corrupt("matrix element without array flags"));
    }
    let flags = Reader::new(flags_el.data, endian).u32_at(0)?;
    let class_code = (flags & 0xFF) as u8;
    let class_name = class::name(class_code);

    let dims_el = r.element()?;
    let dims: Vec<usize> = decode_i32s(&dims_el, endian)?
        .into_iter()
        .map(|d| usize::try_from(d).map_err(|_| corrupt(format!("negative dimension {d}"))))
        .collect::<Result<_, _>>()?;
    if dims.len() < 2 {
        return Err(corrupt(format!("matrix has {} dimensions", dims.len())));
    }
    let name_el = r.element()?;
    if name_el.data_type != MI_INT8 && name_el.data_type != MI_UINT8 {
        return Err(corrupt(format!("array name stored as type {}", name_el.data_type)));
    }
    let name = String::from_utf8_lossy(name_el.data).into_owned();

    let skip = |note: String| {
        Ok(Variable {
            info: MatVariableInfo {
                name: name.clone(),
                class: class_name,
                dims: dims.clone(),
                supported: false,
                note: Some(note),
            },
            matrix: None,
        })
    };
    if !class::is_numeric(class_code) {
        return skip(format!("{class_name} arrays are not supported"));
    }
    if flags & FLAG_COMPLEX != 0 {
        return skip("complex data is not supported".into());
    }
    if flags & FLAG_LOGICAL != 0 {
        return skip("logical arrays are not supported".into());
    }
    if dims.len() != 2 {
        return skip(format!("{}-D arrays are not supported", dims.len()));
    }
    let expected = dims[0].checked_mul(dims[1]).ok_or_else(|| corrupt("dimension product overflows"))?;
    let real_el = r.element()?;
    let data = decode_numeric(&real_el, endian)?;
    if data.len() != expected {
        return Err(corrupt(format!("`{name}` is {}x{} but holds {} values", dims[0], dims[1], data.len())));
    }
    let matrix = MatMatrix::new(name.clone(), dims[0], dims[1], data)?;
    Ok(Variable {
        info: MatVariableInfo { name, class: class_name, dims, supported: true, note: None },
        matrix: Some(matrix),
    })
}

fn inflate(data: &[u8]) -> Result<Vec<u8>, IngestError> {
    let mut out = Vec::new();
    ZlibDecoder::new(data)
        .take(MAX_INFLATED + 1)
        .read_to_end(&mut out)
        .map_err(|e| corrupt(format!("bad compressed element: {e}")))?;
    if out.len() as u64 > MAX_INFLATED {
        return Err(corrupt("compressed element inflates beyond limit"));
    }
    Ok(out)
}

fn parse_elements(buf: &[u8], endian: Endian, depth: usize, out: &mut Vec<Variable>) -> Result<(), IngestError> {
    let mut r = Reader::new(buf, endian);
    while r.remaining() > 0 {
        if r.remaining() < 8 {
            if buf[r.pos..].iter().all(|&b| b == 0) {
                break;
            }
            return Err(corrupt(format!("{} trailing bytes do not form a tag", r.remaining())));
        }
        let offset = r.pos;
        let el = r.element()?;
        match el.data_type {
            MI_MATRIX => out.push(parse_matrix(el.data, endian)?),
            MI_COMPRESSED if depth == 0 => {
                let inflated = inflate(el.data)?;
                parse_elements(&inflated, endian, depth + 1, out)?;
            }
            other => log::warn!("skipping element of type {other} at offset {offset}"),
        }
    }
    Ok(())
}

fn parse_header(bytes: &[u8]) -> Result<Endian, IngestError> {
    if bytes.starts_with(HDF5_MAGIC) || bytes.get(512..520) == Some(HDF5_MAGIC.as_slice()) {
        return Err(IngestError::UnsupportedMatV73);
    }
    if bytes.len() < HEADER_LEN {
        return Err(IngestError::UnsupportedMatFormat(format!(
            "file is {} bytes, shorter than the {HEADER_LEN}-byte header",
            bytes.len()
        )));
    }
    let endian = match &bytes[126..128] {
        b"IM" => Endian::Little,
        b"MI" => Endian::Big,
        other => return Err(IngestError::UnsupportedMatFormat(format!("bad endian indicator {other:?}"))),
    };
    let version_bytes = [bytes[124], bytes[125]];
    let version = match endian {
        Endian::Little => u16::from_le_bytes(version_bytes),
        Endian::Big => u16::from_be_bytes(version_bytes),
    };
    match version {
        0x0100 => Ok(endian),
        0x0200 => Err(IngestError::UnsupportedMatV73),
        v => Err(IngestError::UnsupportedMatFormat(format!("unknown version {v:#06x}"))),
    }
}

fn parse_all(bytes: &[u8]) -> Result<Vec<Variable>, IngestError> {
    let endian = parse_header(bytes)?;
    let mut vars = Vec::new();
    parse_elements(&bytes[HEADER_LEN..], endian, 0, &mut vars)?;
    Ok(vars)
}

/// Decodes every real numeric 2-D matrix in an in-memory MAT file, or only
/// `variable` when given.
pub fn parse_mat_bytes(bytes: &[u8], variable: Option<&str>) -> Result<Vec<MatMatrix>, IngestError> {
    let vars = parse_all(bytes)?;
    let mut out = Vec::new();
    for v in vars {
        match (&v.matrix, variable) {
            (Some(_), Some(want)) if v.info.name != want => {}
            (Some(_), _) => out.extend(v.matrix),
            (None, Some(want)) if v.info.name == want => {
                return Err(IngestError::UnsupportedMatFormat(format!("`{want}`: {}", v.info.note.unwrap_or_default())))
            }
            (None, _) => {
                log::warn!("skipping variable `{}`: {}", v.info.name, v.info.note.as_deref().unwrap_or("unsupported"))
            }
        }
    }
    match variable {
        Some(want) if out.is_empty() => Err(IngestError::VariableNotFound(want.to_string())),
        _ => Ok(out),
    }
}

pub fn parse_mat(path: &Path, variable: Option<&str>) -> Result<Vec<MatMatrix>, IngestError> {
    let bytes = fs::read(path).map_err(|source| IngestError::Io { path: path.to_path_buf(), source })?;
    parse_mat_bytes(&bytes, variable)
}

/// Lists all top-level variables, including unsupported ones.
pub fn list_mat_variables(bytes: &[u8]) -> Result<Vec<MatVariableInfo>, IngestError> {
    Ok(parse_all(bytes)?.into_iter().map(|v| v.info).collect())
}

/// Storage type used when writing the real part.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatStorage {
    Double,
    Single,
    Int16,
    Uint16,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatWriteOptions {
    pub big_endian: bool,
    pub compress: bool,
    pub storage: MatStorage,
}

impl Default for MatWriteOptions {
    fn default() -> Self {
        Self { big_endian: false, compress: false, storage: MatStorage::Double }
    }
}

struct ElementWriter {
    big_endian: bool,
    out: Vec<u8>,
}

impl ElementWriter {
    fn u32(&mut self, v: u32) {
        let b = if self.big_endian { v.to_be_bytes() } else { v.to_le_bytes() };
        self.out.extend_from_slice(&b);
    }

    fn element(&mut self, data_type: u32, payload: &[u8]) {
        self.u32(data_type);
        self.u32(payload.len() as u32);
        self.out.extend_from_slice(payload);
        let pad = (8 - payload.len() % 8) % 8;
        self.out.extend(std::iter::repeat(0).take(pad));
    }
}

/// Serializes matrices as a MAT level 5 file. Values are converted to the
/// requested storage type with `as` casts; the array class follows the
/// storage type.
pub fn write_mat_bytes(matrices: &[MatMatrix], opts: MatWriteOptions) -> Vec<u8> {
    let be = opts.big_endian;
    let mut header = vec![b' '; HEADER_LEN];
    let text = b"MATLAB 5.0 MAT-file, written by otdrimg";
    header[..text.len()].copy_from_slice(text);
    header[116..124].fill(0);
    let version: [u8; 2] = if be { 0x0100u16.to_be_bytes() } else { 0x0100u16.to_le_bytes() };
    header[124..126].copy_from_slice(&version);
    header[126..128].copy_from_slice(if be { b"MI" } else { b"IM" });

    let mut out = header;
    for m in matrices {
        let (class_code, mi_type) = match opts.storage {
            MatStorage::Double => (class::DOUBLE, MI_DOUBLE),
            MatStorage::Single => (class::SINGLE, MI_SINGLE),
            MatStorage::Int16 => (class::INT16, MI_INT16),
            MatStorage::Uint16 => (class::UINT16, MI_UINT16),
        };
        let mut payload = Vec::new();
        for &v in m.column_major() {
            match opts.storage {
                MatStorage::Double => payload.extend(if be { v.to_be_bytes() } else { v.to_le_bytes() }),
                MatStorage::Single => {
                    payload.extend(if be { (v as f32).to_be_bytes() } else { (v as f32).to_le_bytes() })
                }
                MatStorage::Int16 => {
                    payload.extend(if be { (v as i16).to_be_bytes() } else { (v as i16).to_le_bytes() })
                }
                MatStorage::Uint16 => {
                    payload.extend(if be { (v as u16).to_be_bytes() } else { (v as u16).to_le_bytes() })
                }
            }
        }
        let mut body = ElementWriter { big_endian: be, out: Vec::new() };
        let mut flags = ElementWriter { big_endian: be, out: Vec::new() };
        flags.u32(class_code as u32);
        flags.u32(0);
        body.element(MI_UINT32, &flags.out);
        let mut dims = ElementWriter { big_endian: be, out: Vec::new() };
        dims.u32(m.rows as u32);
        dims.u32(m.cols as u32);
        body.element(MI_INT32, &dims.out);
        body.element(MI_INT8, m.name.as_bytes());
        body.element(mi_type, &payload);

        let mut top = ElementWriter { big_endian: be, out: Vec::new() };
        top.element(MI_MATRIX, &body.out);
        if opts.compress {
            let mut enc = ZlibEncoder::new(Vec::new(), flate2::Compression::default());
            enc.write_all(&top.out).expect("in-memory write");
            let z = enc.finish().expect("in-memory write");
            let mut w = ElementWriter { big_endian: be, out: Vec::new() };
            w.u32(MI_COMPRESSED);
            w.u32(z.len() as u32);
            w.out.extend_from_slice(&z);
            out.extend(w.out);
        } else {
            out.extend(top.out);
        }
    }
    out
}
