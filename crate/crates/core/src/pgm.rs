//! 8-bit grayscale PGM (P5 binary and P2 ASCII) reading; P5 writing.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::ScalarField;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub maxval: u8,
    /// Row-major samples in `0..=maxval`.
    pub pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 || pixels.len() != width * height {
            return Err(Error::InvalidInput(format!(
                "{} pixels for a {width}x{height} image",
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            maxval: 255,
            pixels,
        })
    }

    /// Intensities scaled into `[0, 1]` by `maxval` (255 for ordinary files).
    pub fn to_field(&self) -> ScalarField {
        let m = f64::from(self.maxval);
        ScalarField::new(
            self.width,
            self.height,
            self.pixels.iter().map(|&p| f64::from(p) / m).collect(),
        )
        .expect("image dimensions are valid")
    }

    /// Quantizes a field with values nominally in `[0, 1]` to 0–255.
    pub fn from_unit_field(u: &ScalarField) -> Self {
        let pixels = u
            .as_slice()
            .iter()
            .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
            .collect();
        Self {
            width: u.width(),
            height: u.height(),
            maxval: 255,
            pixels,
        }
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut cur = Cursor { bytes, pos: 0 };
        let magic = cur.token()?;
        let binary = match magic.as_str() {
            "P5" => true,
            "P2" => false,
            other => return Err(Error::Pgm(format!("unsupported magic {other:?}"))),
        };
        let width = cur.number("width")?;
        let height = cur.number("height")?;
        let maxval = cur.number("maxval")?;
        if width == 0 || height == 0 {
            return Err(Error::Pgm(format!("empty image {width}x{height}")));
        }
        if !(1..=255).contains(&maxval) {
            return Err(Error::Pgm(format!("maxval {maxval} is not 8-bit")));
        }
        let n = width
            .checked_mul(height)
            .ok_or_else(|| Error::Pgm("image dimensions overflow".into()))?;
        let pixels = if binary {
            // exactly one whitespace byte separates the header from the raster
            cur.pos += 1;
            let raster = bytes
                .get(cur.pos..cur.pos + n)
                .ok_or_else(|| Error::Pgm(format!("raster truncated, expected {n} bytes")))?;
            raster.to_vec()
        } else {
            (0..n)
                .map(|_| cur.number("sample").map(|v| v as u8))
                .collect::<Result<Vec<u8>>>()?
        };
        if let Some(p) = pixels.iter().find(|&&p| usize::from(p) > maxval) {
            return Err(Error::Pgm(format!("sample {p} exceeds maxval {maxval}")));
        }
        Ok(Self {
            width,
            height,
            maxval: maxval as u8,
            pixels,
        })
    }

    /// Binary P5 bytes.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n{}\n", self.width, self.height, self.maxval).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::decode(&std::fs::read(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut file = std::fs::File::create(path)?;
        file.write_all(&self.encode())?;
        Ok(())
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn token(&mut self) -> Result<String> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self
            .bytes
            .get(self.pos)
            .is_some_and(|b| !b.is_ascii_whitespace())
        {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::Pgm("unexpected end of header".into()));
        }
        Ok(String::from_utf8_lossy(&self.bytes[start..self.pos]).into_owned())
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        let tok = self.token()?;
        tok.parse()
            .map_err(|_| Error::Pgm(format!("bad {what} {tok:?}")))
    }
}
