//! Binary Netpbm codecs: PGM (`P5`) for grayscale and PBM (`P4`) for bilevel
//! images. PBM stores 1 for black, which maps directly to ink.

use std::path::Path;

use crate::error::{Error, Result};
use crate::raster::{BinaryImage, GrayImage};

/// Either kind of image a Netpbm file can hold.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PnmImage {
    Gray(GrayImage),
    Binary(BinaryImage),
}

struct Header {
    magic: [u8; 2],
    width: usize,
    height: usize,
    maxval: Option<u32>,
    data_offset: usize,
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn skip_whitespace_and_comments(&mut self) {
        while let Some(&b) = self.data.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.data.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn read_uint(&mut self, what: &str) -> Result<u32> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        let mut value: u32 = 0;
        while let Some(&b) = self.data.get(self.pos) {
            if !b.is_ascii_digit() {
                break;
            }
            value = value
                .checked_mul(10)
                .and_then(|v| v.checked_add((b - b'0') as u32))
                .ok_or_else(|| Error::format(start, format!("{what} does not fit in 32 bits")))?;
            self.pos += 1;
        }
        if self.pos == start {
            return Err(Error::format(start, format!("expected {what}")));
        }
        Ok(value)
    }
}

fn parse_header(data: &[u8]) -> Result<Header> {
    if data.len() < 2 {
        return Err(Error::format(0, "truncated magic number"));
    }
    let magic = [data[0], data[1]];
    let has_maxval = match &magic {
        b"P5" => true,
        b"P4" => false,
        _ => {
            return Err(Error::format(
                0,
                "unsupported magic number, expected P4 or P5",
            ))
        }
    };
    let mut cur = Cursor { data, pos: 2 };
    let width = cur.read_uint("width")? as usize;
    let height = cur.read_uint("height")? as usize;
    if width == 0 || height == 0 {
        return Err(Error::format(cur.pos, "zero image dimension"));
    }
    let maxval = if has_maxval {
        let start = cur.pos;
        let m = cur.read_uint("maxval")?;
        if m == 0 || m > 255 {
            return Err(Error::format(start, format!("maxval {m} not in 1..=255")));
        }
        Some(m)
    } else {
        None
    };
    // Exactly one whitespace byte separates the header from the raster.
    match data.get(cur.pos) {
        Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
        Some(_) => return Err(Error::format(cur.pos, "expected whitespace after header")),
        None => return Err(Error::format(cur.pos, "truncated header")),
    }
    Ok(Header {
        magic,
        width,
        height,
        maxval,
        data_offset: cur.pos,
    })
}

fn raster<'a>(data: &'a [u8], header: &Header, row_bytes: usize) -> Result<&'a [u8]> {
    let need = row_bytes
        .checked_mul(header.height)
        .ok_or_else(|| Error::format(header.data_offset, "image size overflows"))?;
    let available = data.len() - header.data_offset;
    if available < need {
        return Err(Error::format(
            data.len(),
            format!("truncated raster: expected {need} bytes, found {available}"),
        ));
    }
    Ok(&data[header.data_offset..header.data_offset + need])
}

pub fn decode_pgm(data: &[u8]) -> Result<GrayImage> {
    match decode(data)? {
        PnmImage::Gray(g) => Ok(g),
        PnmImage::Binary(_) => Err(Error::format(0, "expected P5 graymap, found P4 bitmap")),
    }
}

pub fn decode_pbm(data: &[u8]) -> Result<BinaryImage> {
    match decode(data)? {
        PnmImage::Binary(b) => Ok(b),
        PnmImage::Gray(_) => Err(Error::format(0, "expected P4 bitmap, found P5 graymap")),
    }
}

/// Decodes a `P4` or `P5` file from memory.
pub fn decode(data: &[u8]) -> Result<PnmImage> {
    let header = parse_header(data)?;
    match &header.magic {
        b"P5" => {
            let raw = raster(data, &header, header.width)?;
            let maxval = header.maxval.unwrap_or(255);
            let pixels = if maxval == 255 {
                raw.to_vec()
            } else {
                raw.iter()
                    .enumerate()
                    .map(|(i, &v)| {
                        if v as u32 > maxval {
                            Err(Error::format(
                                header.data_offset + i,
                                format!("sample {v} exceeds maxval {maxval}"),
                            ))
                        } else {
                            Ok(((v as u32 * 255 + maxval / 2) / maxval) as u8)
                        }
                    })
                    .collect::<Result<Vec<u8>>>()?
            };
            Ok(PnmImage::Gray(GrayImage::new(
                header.width,
                header.height,
                pixels,
            )?))
        }
        _ => {
            let row_bytes = header.width.div_ceil(8);
            let raw = raster(data, &header, row_bytes)?;
            let mut pixels = Vec::with_capacity(header.width * header.height);
            for row in raw.chunks_exact(row_bytes) {
                for x in 0..header.width {
                    pixels.push((row[x / 8] >> (7 - x % 8)) & 1);
                }
            }
            Ok(PnmImage::Binary(BinaryImage::new(
                header.width,
                header.height,
                pixels,
            )?))
        }
    }
}

pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(img.pixels());
    out
}

pub fn encode_pbm(img: &BinaryImage) -> Vec<u8> {
    let mut out = format!("P4\n{} {}\n", img.width(), img.height()).into_bytes();
    let row_bytes = img.width().div_ceil(8);
    for row in img.pixels().chunks_exact(img.width()) {
        let mut packed = vec![0u8; row_bytes];
        for (x, &p) in row.iter().enumerate() {
            packed[x / 8] |= p << (7 - x % 8);
        }
        out.extend_from_slice(&packed);
    }
    out
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

pub fn read_pnm(path: impl AsRef<Path>) -> Result<PnmImage> {
    let path = path.as_ref();
    decode(&read_file(path)?).map_err(|e| e.with_path(path))
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    decode_pgm(&read_file(path)?).map_err(|e| e.with_path(path))
}

pub fn read_pbm(path: impl AsRef<Path>) -> Result<BinaryImage> {
    let path = path.as_ref();
    decode_pbm(&read_file(path)?).map_err(|e| e.with_path(path))
}

pub fn write_pgm(path: impl AsRef<Path>, img: &GrayImage) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_pgm(img)).map_err(|e| Error::io(path, e))
}

pub fn write_pbm(path: impl AsRef<Path>, img: &BinaryImage) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_pbm(img)).map_err(|e| Error::io(path, e))
}
