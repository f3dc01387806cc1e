//! Portable bitmap (PBM) reading and writing, plain (`P1`) and raw (`P4`).
//!
//! PBM's 1 is black; here 1 is a patch pixel. `P4` rows are packed MSB-first
//! and padded to a byte boundary with zero bits.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use patch_completion::BinaryMask;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PbmFormat {
    /// ASCII `P1`.
    Plain,
    /// Binary `P4`.
    Raw,
}

impl fmt::Display for PbmFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PbmFormat::Plain => "p1",
            PbmFormat::Raw => "p4",
        })
    }
}

impl FromStr for PbmFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "p1" | "plain" => Ok(PbmFormat::Plain),
            "p4" | "raw" => Ok(PbmFormat::Raw),
            _ => Err(format!("unknown PBM format '{s}' (expected p1 or p4)")),
        }
    }
}

#[derive(Debug, Error)]
pub enum PbmError {
    #[error("not a PBM file (expected P1 or P4 magic)")]
    BadMagic,
    #[error("malformed header: {0}")]
    Header(String),
    #[error("pixel data ended early: expected {expected} {unit}, found {found}")]
    Truncated {
        expected: usize,
        found: usize,
        unit: &'static str,
    },
    #[error("invalid pixel character {0:?} in P1 data")]
    InvalidPixel(char),
    #[error("unexpected data after the image")]
    TrailingData,
    #[error(transparent)]
    Mask(#[from] patch_completion::Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Plain lines are kept within 70 characters.
const P1_LINE: usize = 70;

pub fn encode(mask: &BinaryMask, format: PbmFormat) -> Vec<u8> {
    let (h, w) = mask.dims();
    let mut out = Vec::new();
    match format {
        PbmFormat::Plain => {
            out.extend_from_slice(format!("P1\n{w} {h}\n").as_bytes());
            for i in 0..h {
                for chunk in mask.row(i).chunks(P1_LINE) {
                    out.extend(chunk.iter().map(|&b| b'0' + b));
                    out.push(b'\n');
                }
            }
        }
        PbmFormat::Raw => {
            out.extend_from_slice(format!("P4\n{w} {h}\n").as_bytes());
            let row_bytes = w.div_ceil(8);
            for i in 0..h {
                let row = mask.row(i);
                let start = out.len();
                out.resize(start + row_bytes, 0);
                for (j, &b) in row.iter().enumerate() {
                    out[start + j / 8] |= b << (7 - j % 8);
                }
            }
        }
    }
    out
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&c) = self.data.get(self.pos) {
            if c == b'#' {
                while self.data.get(self.pos).is_some_and(|&c| c != b'\n') {
                    self.pos += 1;
                }
            } else if c.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn header_number(&mut self, what: &str) -> Result<usize, PbmError> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.data.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(PbmError::Header(format!("missing {what}")));
        }
        let text = std::str::from_utf8(&self.data[start..self.pos]).expect("ascii digits");
        text.parse()
            .map_err(|_| PbmError::Header(format!("{what} '{text}' out of range")))
    }
}

pub fn decode(data: &[u8]) -> Result<BinaryMask, PbmError> {
    let format = match data.get(..2) {
        Some(b"P1") => PbmFormat::Plain,
        Some(b"P4") => PbmFormat::Raw,
        _ => return Err(PbmError::BadMagic),
    };
    let mut cur = Cursor { data, pos: 2 };
    if !cur.data.get(2).is_some_and(|c| c.is_ascii_whitespace() || *c == b'#') {
        return Err(PbmError::BadMagic);
    }
    let width = cur.header_number("width")?;
    let height = cur.header_number("height")?;
    if width == 0 || height == 0 {
        return Err(PbmError::Header(format!("empty image {width}x{height}")));
    }
    let total = width
        .checked_mul(height)
        .ok_or_else(|| PbmError::Header("image too large".into()))?;

    let bits = match format {
        PbmFormat::Plain => {
            let mut bits = Vec::with_capacity(total);
            while bits.len() < total {
                cur.skip_space_and_comments();
                match cur.data.get(cur.pos) {
                    Some(b'0') => bits.push(0),
                    Some(b'1') => bits.push(1),
                    Some(&c) => return Err(PbmError::InvalidPixel(c as char)),
                    None => {
                        return Err(PbmError::Truncated {
                            expected: total,
                            found: bits.len(),
                            unit: "pixels",
                        })
                    }
                }
                cur.pos += 1;
            }
            cur.skip_space_and_comments();
            if cur.pos != cur.data.len() {
                return Err(PbmError::TrailingData);
            }
            bits
        }
        PbmFormat::Raw => {
            // exactly one whitespace byte separates the header from the raster
            match cur.data.get(cur.pos) {
                Some(c) if c.is_ascii_whitespace() => cur.pos += 1,
                _ => return Err(PbmError::Header("missing separator before raster".into())),
            }
            let row_bytes = width.div_ceil(8);
            let raster = &cur.data[cur.pos..];
            let needed = row_bytes * height;
            if raster.len() < needed {
                return Err(PbmError::Truncated {
                    expected: needed,
                    found: raster.len(),
                    unit: "bytes",
                });
            }
            if raster.len() > needed {
                return Err(PbmError::TrailingData);
            }
            let mut bits = Vec::with_capacity(total);
            for row in raster.chunks_exact(row_bytes) {
                bits.extend((0..width).map(|j| (row[j / 8] >> (7 - j % 8)) & 1));
            }
            bits
        }
    };
    Ok(BinaryMask::from_bits(height, width, bits)?)
}

pub fn read_file(path: &Path) -> Result<BinaryMask, PbmError> {
    let data = std::fs::read(path).map_err(|source| PbmError::Io {
        path: path.display().to_string(),
        source,
    })?;
    decode(&data)
}

/// Writes via a temporary file in the destination directory and renames it
/// into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn write_file(path: &Path, mask: &BinaryMask, format: PbmFormat) -> Result<(), PbmError> {
    write_atomic(path, &encode(mask, format)).map_err(|source| PbmError::Io {
        path: path.display().to_string(),
        source,
    })
}
