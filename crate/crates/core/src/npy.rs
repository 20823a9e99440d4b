//! Reading and writing in the numpy npy format.
//!
//! Only version 1.0 headers, little-endian `<f4`/`<f8` descriptors and C order
//! are supported. `<f4` payloads are widened to `f64` on load. Writing always
//! emits `<f8`, so a write/read round trip is bit-exact.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::{element_count, DenseTensor};

/// The npy magic number.
pub const MAGIC: [u8; 6] = *b"\x93NUMPY";

const PREAMBLE_LEN: usize = MAGIC.len() + 2 + 2;
const HEADER_ALIGN: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dtype {
    F4,
    F8,
}

impl Dtype {
    fn size(self) -> usize {
        match self {
            Dtype::F4 => 4,
            Dtype::F8 => 8,
        }
    }
}

#[derive(Debug, PartialEq)]
struct Header {
    dtype: Dtype,
    shape: Vec<usize>,
}

pub fn read_npy(path: impl AsRef<Path>) -> Result<DenseTensor> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_npy(&bytes)
}

/// Decodes a complete npy file held in memory.
pub fn parse_npy(bytes: &[u8]) -> Result<DenseTensor> {
    if bytes.len() < PREAMBLE_LEN || bytes[..MAGIC.len()] != MAGIC {
        return Err(Error::Format("missing npy magic".into()));
    }
    let (major, minor) = (bytes[6], bytes[7]);
    if (major, minor) != (1, 0) {
        return Err(Error::Format(format!(
            "npy version {major}.{minor} not supported (only 1.0)"
        )));
    }
    let header_len = u16::from_le_bytes([bytes[8], bytes[9]]) as usize;
    let data_start = PREAMBLE_LEN + header_len;
    let header_bytes = bytes
        .get(PREAMBLE_LEN..data_start)
        .ok_or_else(|| Error::Corrupt("header extends past end of file".into()))?;
    let header_text = std::str::from_utf8(header_bytes)
        .map_err(|_| Error::Format("header is not ASCII".into()))?;
    let header = parse_header(header_text)?;

    let count = element_count(&header.shape)?;
    let payload = &bytes[data_start..];
    let expected = count
        .checked_mul(header.dtype.size())
        .ok_or_else(|| Error::InvalidShape("payload size overflows".into()))?;
    if payload.len() != expected {
        return Err(Error::Corrupt(format!(
            "shape {:?} needs {expected} payload bytes, file has {}",
            header.shape,
            payload.len()
        )));
    }
    let data: Vec<f64> = match header.dtype {
        Dtype::F4 => payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect(),
        Dtype::F8 => payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect(),
    };
    DenseTensor::new(header.shape, data)
}

pub fn write_npy(tensor: &DenseTensor, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_npy(tensor)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Encodes a tensor as npy v1.0 `<f8`, C order.
pub fn encode_npy(tensor: &DenseTensor) -> Result<Vec<u8>> {
    element_count(tensor.shape())?;
    let shape = match tensor.shape() {
        [d] => format!("({d},)"),
        dims => format!(
            "({})",
            dims.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(", ")
        ),
    };
    let mut header = format!("{{'descr': '<f8', 'fortran_order': False, 'shape': {shape}, }}");
    // pad with spaces so preamble + header + '\n' is a multiple of 64
    let unpadded = PREAMBLE_LEN + header.len() + 1;
    let pad = (HEADER_ALIGN - unpadded % HEADER_ALIGN) % HEADER_ALIGN;
    header.extend(std::iter::repeat_n(' ', pad));
    header.push('\n');
    let header_len = u16::try_from(header.len())
        .map_err(|_| Error::InvalidShape("npy header too long for version 1.0".into()))?;

    let mut out = Vec::with_capacity(PREAMBLE_LEN + header.len() + tensor.data().len() * 8);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&[1, 0]);
    out.extend_from_slice(&header_len.to_le_bytes());
    out.extend_from_slice(header.as_bytes());
    for v in tensor.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

fn parse_header(text: &str) -> Result<Header> {
    let mut p = DictParser { s: text.as_bytes(), pos: 0 };
    let mut descr = None;
    let mut fortran = None;
    let mut shape = None;

    p.skip_ws();
    p.expect(b'{')?;
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
            other => return Err(Error::Format(format!("unexpected header key `{other}`"))),
        }
        p.skip_ws();
        if !p.eat(b',') {
            p.skip_ws();
            p.expect(b'}')?;
            break;
        }
    }
    p.skip_ws();
    if p.pos != p.s.len() {
        return Err(Error::Format("trailing bytes after header dict".into()));
    }

    let descr = descr.ok_or_else(|| Error::Format("header lacks `descr`".into()))?;
    let fortran = fortran.ok_or_else(|| Error::Format("header lacks `fortran_order`".into()))?;
    let shape = shape.ok_or_else(|| Error::Format("header lacks `shape`".into()))?;
    if fortran {
        return Err(Error::UnsupportedLayout("fortran_order: True".into()));
    }
    let dtype = match descr.as_str() {
        "<f4" => Dtype::F4,
        "<f8" => Dtype::F8,
        _ => return Err(Error::UnsupportedDtype(descr)),
    };
    Ok(Header { dtype, shape })
}

/// Minimal parser for the Python literal dict in an npy header.
struct DictParser<'a> {
    s: &'a [u8],
    pos: usize,
}

impl DictParser<'_> {
    fn err(&self, what: &str) -> Error {
        Error::Format(format!("malformed header at byte {}: {what}", self.pos))
    }

    fn peek(&self) -> Option<u8> {
        self.s.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(b' ' | b'\t' | b'\n' | b'\r')) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
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
            Err(self.err(&format!("expected `{}`", c as char)))
        }
    }

    fn string(&mut self) -> Result<String> {
        let quote = match self.peek() {
            Some(q @ (b'\'' | b'"')) => q,
            _ => return Err(self.err("expected string literal")),
        };
        self.pos += 1;
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c == quote {
                let s = std::str::from_utf8(&self.s[start..self.pos])
                    .map_err(|_| self.err("non-UTF-8 string"))?
                    .to_owned();
                self.pos += 1;
                return Ok(s);
            }
            if c == b'\\' {
                return Err(self.err("escapes are not supported"));
            }
            self.pos += 1;
        }
        Err(self.err("unterminated string"))
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
            Err(self.err("expected True or False"))
        }
    }

    fn integer(&mut self) -> Result<usize> {
        let start = self.pos;
        while matches!(self.peek(), Some(b'0'..=b'9')) {
            self.pos += 1;
        }
        // python 2 exporters may write long literals such as `3L`
        let digits = std::str::from_utf8(&self.s[start..self.pos]).unwrap();
        self.eat(b'L');
        digits
            .parse()
            .map_err(|_| self.err("expected non-negative integer"))
    }

    fn tuple(&mut self) -> Result<Vec<usize>> {
        self.expect(b'(')?;
        let mut dims = Vec::new();
        loop {
            self.skip_ws();
            if self.eat(b')') {
                return Ok(dims);
            }
            dims.push(self.integer()?);
            self.skip_ws();
            if !self.eat(b',') {
                self.skip_ws();
                self.expect(b')')?;
                return Ok(dims);
            }
        }
    }
}
