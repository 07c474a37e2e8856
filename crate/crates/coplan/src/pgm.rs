//! Binary greyscale PGM (`P5`, maxval 255) and its base64 transport form.

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use coplan_core::bev::{BevMap, GridSpec};

use crate::{Error, Result};

/// An 8-bit greyscale image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            pixels: vec![0; width * height],
        }
    }

    pub fn from_bev(map: &BevMap) -> Self {
        Self {
            width: map.grid.width,
            height: map.grid.height,
            pixels: map.to_gray8(),
        }
    }

    pub fn to_bev(&self, grid: GridSpec, timestamp: f64) -> Result<BevMap> {
        if grid.width != self.width || grid.height != self.height {
            return Err(Error::Format("image size does not match the grid".into()));
        }
        Ok(BevMap::from_gray8(grid, &self.pixels, timestamp)?)
    }

    pub fn get(&self, u: usize, v: usize) -> u8 {
        self.pixels[v * self.width + u]
    }

    /// Writes are silently clipped to the image.
    pub fn set(&mut self, u: i64, v: i64, value: u8) {
        if u >= 0 && v >= 0 && (u as usize) < self.width && (v as usize) < self.height {
            self.pixels[v as usize * self.width + u as usize] = value;
        }
    }

    pub fn encode_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }

    pub fn decode_pgm(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| Error::Format(format!("malformed PGM: {m}"));
        // header: magic, width, height, maxval separated by whitespace,
        // followed by exactly one whitespace byte
        let mut fields = Vec::with_capacity(4);
        let mut i = 0;
        while fields.len() < 4 {
            while i < bytes.len() && bytes[i].is_ascii_whitespace() {
                i += 1;
            }
            if i < bytes.len() && bytes[i] == b'#' {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
                continue;
            }
            let start = i;
            while i < bytes.len() && !bytes[i].is_ascii_whitespace() {
                i += 1;
            }
            if start == i {
                return Err(bad("truncated header"));
            }
            fields.push(std::str::from_utf8(&bytes[start..i]).map_err(|_| bad("header is not ASCII"))?);
        }
        if fields[0] != "P5" {
            return Err(bad("not a binary greymap"));
        }
        let num = |s: &str| s.parse::<usize>().map_err(|_| bad("bad number"));
        let (width, height, maxval) = (num(fields[1])?, num(fields[2])?, num(fields[3])?);
        if maxval != 255 {
            return Err(bad("only maxval 255 is supported"));
        }
        let data = bytes.get(i + 1..).ok_or_else(|| bad("missing raster"))?;
        if data.len() != width * height {
            return Err(bad("raster size does not match header"));
        }
        Ok(Self {
            width,
            height,
            pixels: data.to_vec(),
        })
    }

    pub fn to_base64_pgm(&self) -> String {
        STANDARD.encode(self.encode_pgm())
    }

    pub fn from_base64_pgm(text: &str) -> Result<Self> {
        let bytes = STANDARD
            .decode(text)
            .map_err(|e| Error::Format(format!("bad base64: {e}")))?;
        Self::decode_pgm(&bytes)
    }
}

pub fn bev_to_base64_pgm(map: &BevMap) -> String {
    GrayImage::from_bev(map).to_base64_pgm()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_round_trip() {
        let mut img = GrayImage::new(3, 2);
        img.set(2, 1, 200);
        img.set(-1, 0, 9);
        let bytes = img.encode_pgm();
        assert!(bytes.starts_with(b"P5\n3 2\n255\n"));
        assert_eq!(GrayImage::decode_pgm(&bytes).unwrap(), img);
        assert_eq!(GrayImage::from_base64_pgm(&img.to_base64_pgm()).unwrap(), img);
    }

    #[test]
    fn header_comments_and_errors() {
        let img = GrayImage::decode_pgm(b"P5 # c\n2 1 255\n\x01\x02").unwrap();
        assert_eq!(img.pixels, vec![1, 2]);
        assert!(GrayImage::decode_pgm(b"P2\n1 1\n255\n\x00").is_err());
        assert!(GrayImage::decode_pgm(b"P5\n2 2\n255\n\x00").is_err());
        assert!(GrayImage::decode_pgm(b"P5\n1 1\n65535\n\x00\x00").is_err());
    }
}
