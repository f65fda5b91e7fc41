//! NPY v1.0 reading and writing.
//!
//! Only the subset every producer emits by default is accepted: little-endian,
//! C-order, `<f4`/`<f8` matrices and `<i8` label vectors. Anything else is
//! rejected with a specific error.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

pub(crate) const MAGIC: [u8; 6] = *b"\x93NUMPY";
const PREAMBLE_ALIGN: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dtype {
    F4,
    F8,
    I8,
}

impl Dtype {
    fn parse(descr: &str) -> Result<Self> {
        match descr {
            "<f4" => Ok(Dtype::F4),
            "<f8" => Ok(Dtype::F8),
            "<i8" => Ok(Dtype::I8),
            other => Err(Error::UnsupportedDtype(other.to_string())),
        }
    }

    fn descr(self) -> &'static str {
        match self {
            Dtype::F4 => "<f4",
            Dtype::F8 => "<f8",
            Dtype::I8 => "<i8",
        }
    }

    fn width(self) -> usize {
        match self {
            Dtype::F4 => 4,
            Dtype::F8 | Dtype::I8 => 8,
        }
    }
}

#[derive(Debug)]
struct Header {
    dtype: Dtype,
    shape: Vec<usize>,
}

/// Parsed header plus the raw payload that follows it.
struct RawArray<'a> {
    header: Header,
    payload: &'a [u8],
}

fn parse(bytes: &[u8]) -> Result<RawArray<'_>> {
    if bytes.len() < MAGIC.len() || bytes[..MAGIC.len()] != MAGIC {
        return Err(Error::BadMagic);
    }
    if bytes.len() < 10 {
        return Err(Error::MalformedHeader("file ends inside the preamble".into()));
    }
    let (major, minor) = (bytes[6], bytes[7]);
    if (major, minor) != (1, 0) {
        return Err(Error::UnsupportedVersion { major, minor });
    }
    let header_len = u16::from_le_bytes([bytes[8], bytes[9]]) as usize;
    let header_end = 10 + header_len;
    if bytes.len() < header_end {
        return Err(Error::MalformedHeader("file ends inside the header".into()));
    }
    let text = std::str::from_utf8(&bytes[10..header_end])
        .map_err(|_| Error::MalformedHeader("header is not ASCII".into()))?;
    let header = parse_header_dict(text)?;
    Ok(RawArray {
        header,
        payload: &bytes[header_end..],
    })
}

/// Parses the Python-literal dict `{'descr': .., 'fortran_order': .., 'shape': (..), }`.
fn parse_header_dict(text: &str) -> Result<Header> {
    let mut p = DictParser {
        s: text.as_bytes(),
        pos: 0,
    };
    p.skip_ws();
    p.expect(b'{')?;
    let mut descr = None;
    let mut fortran = None;
    let mut shape = None;
    loop {
        p.skip_ws();
        if p.eat(b'}') {
            break;
        }
        let key = p.string()?;
        p.skip_ws();
        p.expect(b':')?;
        p.skip_ws();
        match key.as_str() {
            "descr" => descr = Some(p.string()?),
            "fortran_order" => fortran = Some(p.boolean()?),
            "shape" => shape = Some(p.tuple()?),
            other => {
                return Err(Error::MalformedHeader(format!("unexpected key {other:?}")));
            }
        }
        p.skip_ws();
        if !p.eat(b',') {
            p.skip_ws();
            p.expect(b'}')?;
            break;
        }
    }
    if !text[p.pos..].trim().is_empty() {
        return Err(Error::MalformedHeader("trailing characters after dict".into()));
    }
    let descr = descr.ok_or_else(|| Error::MalformedHeader("missing 'descr'".into()))?;
    let fortran =
        fortran.ok_or_else(|| Error::MalformedHeader("missing 'fortran_order'".into()))?;
    let shape = shape.ok_or_else(|| Error::MalformedHeader("missing 'shape'".into()))?;
    let dtype = Dtype::parse(&descr)?;
    if fortran {
        return Err(Error::UnsupportedLayout);
    }
    Ok(Header { dtype, shape })
}

struct DictParser<'a> {
    s: &'a [u8],
    pos: usize,
}

impl DictParser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.s.get(self.pos) == Some(&c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(Error::MalformedHeader(format!(
                "expected {:?} at offset {}",
                c as char, self.pos
            )))
        }
    }

    fn string(&mut self) -> Result<String> {
        let quote = match self.s.get(self.pos) {
            Some(&q @ (b'\'' | b'"')) => q,
            _ => return Err(Error::MalformedHeader("expected a string literal".into())),
        };
        self.pos += 1;
        let start = self.pos;
        while self.pos < self.s.len() && self.s[self.pos] != quote {
            self.pos += 1;
        }
        if self.pos == self.s.len() {
            return Err(Error::MalformedHeader("unterminated string".into()));
        }
        let out = String::from_utf8_lossy(&self.s[start..self.pos]).into_owned();
        self.pos += 1;
        Ok(out)
    }

    fn boolean(&mut self) -> Result<bool> {
        let rest = &self.s[self.pos..];
        if rest.starts_with(b"True") {
            self.pos += 4;
            Ok(true)
        } else if rest.starts_with(b"False") {
            self.pos += 5;
            Ok(false)
        } else {
            Err(Error::MalformedHeader("expected True or False".into()))
        }
    }

    fn tuple(&mut self) -> Result<Vec<usize>> {
        self.expect(b'(')?;
        let mut dims = Vec::new();
        loop {
            self.skip_ws();
            if self.eat(b')') {
                return Ok(dims);
            }
            let start = self.pos;
            while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if start == self.pos {
                return Err(Error::MalformedHeader("expected a dimension".into()));
            }
            let dim = std::str::from_utf8(&self.s[start..self.pos])
                .ok()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::MalformedHeader("dimension out of range".into()))?;
            dims.push(dim);
            self.skip_ws();
            if !self.eat(b',') {
                self.skip_ws();
                self.expect(b')')?;
                return Ok(dims);
            }
        }
    }
}

fn check_payload(payload: &[u8], count: usize, dtype: Dtype) -> Result<&[u8]> {
    let expected = count
        .checked_mul(dtype.width())
        .ok_or_else(|| Error::MalformedHeader("shape overflows".into()))?;
    if payload.len() < expected {
        return Err(Error::Truncated {
            expected,
            found: payload.len(),
        });
    }
    Ok(&payload[..expected])
}

/// Decodes a 2-D float matrix from NPY bytes. `<f4` values are widened to `f64`.
pub fn decode_matrix(bytes: &[u8]) -> Result<DenseMatrix> {
    let raw = parse(bytes)?;
    let Header { dtype, shape } = raw.header;
    if dtype == Dtype::I8 {
        return Err(Error::UnsupportedDtype("<i8 (expected a float matrix)".into()));
    }
    if shape.len() != 2 {
        return Err(Error::BadShape { shape, expected: 2 });
    }
    let (rows, cols) = (shape[0], shape[1]);
    if rows == 0 || cols == 0 {
        return Err(Error::Empty { rows, cols });
    }
    let payload = check_payload(raw.payload, rows * cols, dtype)?;
    let data: Vec<f64> = match dtype {
        Dtype::F8 => payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect(),
        Dtype::F4 => payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect(),
        Dtype::I8 => unreachable!("rejected above"),
    };
    DenseMatrix::new(rows, cols, data)
}

/// Decodes a 1-D `<i8` label vector from NPY bytes.
pub fn decode_labels(bytes: &[u8]) -> Result<Vec<i64>> {
    let raw = parse(bytes)?;
    let Header { dtype, shape } = raw.header;
    if dtype != Dtype::I8 {
        return Err(Error::UnsupportedDtype(format!(
            "{} (labels must be <i8)",
            dtype.descr()
        )));
    }
    if shape.len() != 1 {
        return Err(Error::BadShape { shape, expected: 1 });
    }
    if shape[0] == 0 {
        return Err(Error::Empty { rows: 0, cols: 1 });
    }
    let payload = check_payload(raw.payload, shape[0], dtype)?;
    Ok(payload
        .chunks_exact(8)
        .map(|c| i64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

fn encode_preamble(out: &mut Vec<u8>, dtype: Dtype, shape: &[usize]) {
    let shape_text = match shape {
        [n] => format!("({n},)"),
        dims => format!(
            "({})",
            dims.iter()
                .map(|d| d.to_string())
                .collect::<Vec<_>>()
                .join(", ")
        ),
    };
    let mut dict = format!(
        "{{'descr': '{}', 'fortran_order': False, 'shape': {shape_text}, }}",
        dtype.descr()
    );
    // magic + version + u16 length + dict + '\n', padded to the alignment
    let unpadded = MAGIC.len() + 2 + 2 + dict.len() + 1;
    let padding = (PREAMBLE_ALIGN - unpadded % PREAMBLE_ALIGN) % PREAMBLE_ALIGN;
    dict.extend(std::iter::repeat_n(' ', padding));
    dict.push('\n');
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&[1, 0]);
    out.extend_from_slice(&(dict.len() as u16).to_le_bytes());
    out.extend_from_slice(dict.as_bytes());
}

pub fn encode_matrix(matrix: &DenseMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(128 + matrix.as_slice().len() * 8);
    encode_preamble(&mut out, Dtype::F8, &[matrix.rows(), matrix.cols()]);
    for v in matrix.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn encode_labels(labels: &[i64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(128 + labels.len() * 8);
    encode_preamble(&mut out, Dtype::I8, &[labels.len()]);
    for v in labels {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn read_all(path: &Path) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut buf))
        .map_err(|e| Error::io(path, e))?;
    Ok(buf)
}

fn write_all(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::File::create(path)
        .and_then(|mut f| f.write_all(bytes))
        .map_err(|e| Error::io(path, e))
}

/// Reads a 2-D float matrix from an NPY file.
pub fn read_npy(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    decode_matrix(&read_all(path.as_ref())?)
}

/// Writes `matrix` as a little-endian `<f8` NPY v1.0 file.
///
/// `DenseMatrix` cannot hold non-finite values, so every matrix that reaches
/// this point is valid and the file is always re-readable.
pub fn write_npy(matrix: &DenseMatrix, path: impl AsRef<Path>) -> Result<()> {
    write_all(path.as_ref(), &encode_matrix(matrix))
}

/// Reads a 1-D `<i8` label vector.
pub fn read_labels_npy(path: impl AsRef<Path>) -> Result<Vec<i64>> {
    decode_labels(&read_all(path.as_ref())?)
}

pub fn write_labels_npy(labels: &[i64], path: impl AsRef<Path>) -> Result<()> {
    write_all(path.as_ref(), &encode_labels(labels))
}
