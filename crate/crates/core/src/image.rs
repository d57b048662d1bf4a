//! 8-bit Netpbm images: PGM (P2, P5) and PPM (P3, P6).

use std::fs;
use std::path::Path;

use crate::error::{contract, Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl RgbImage {
    /// `data` is row-major, three bytes per pixel.
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        contract!(
            data.len() == width * height * 3,
            "RGB buffer has {} bytes, expected {}",
            data.len(),
            width * height * 3
        );
        Ok(RgbImage { width, height, data })
    }

    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Self {
        let data = rgb.iter().copied().cycle().take(width * height * 3).collect();
        RgbImage { width, height, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let o = 3 * (y * self.width + x);
        [self.data[o], self.data[o + 1], self.data[o + 2]]
    }

    pub fn set_pixel(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        let o = 3 * (y * self.width + x);
        self.data[o..o + 3].copy_from_slice(&rgb);
    }

    /// Binary PPM (P6).
    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.data);
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        Ok(fs::write(path, self.to_ppm())?)
    }

    /// Reads any of P2, P3, P5, P6; gray inputs are replicated to RGB.
    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let img = decode(bytes)?;
        let data = if img.channels == 3 { img.data } else { img.data.iter().flat_map(|&v| [v, v, v]).collect() };
        RgbImage::new(img.width, img.height, data)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::decode(&fs::read(path)?)
    }
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        contract!(
            data.len() == width * height,
            "gray buffer has {} bytes, expected {}",
            data.len(),
            width * height
        );
        Ok(GrayImage { width, height, data })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    /// Binary PGM (P5).
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.data);
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        Ok(fs::write(path, self.to_pgm())?)
    }

    /// Reads P2 or P5. Color inputs are rejected.
    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let img = decode(bytes)?;
        if img.channels != 1 {
            return Err(Error::Parse("expected a PGM (P2/P5) image, found PPM".into()));
        }
        GrayImage::new(img.width, img.height, img.data)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::decode(&fs::read(path)?)
    }

    /// Label map with labels spread over `0..=255`.
    pub fn from_labels(width: usize, height: usize, labels: &[usize], num_labels: usize) -> Result<Self> {
        let scale = if num_labels > 1 { 255.0 / (num_labels - 1) as f64 } else { 0.0 };
        let data = labels.iter().map(|&l| (l as f64 * scale).round().min(255.0) as u8).collect();
        GrayImage::new(width, height, data)
    }
}

struct Decoded {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<u8>,
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Parse(format!("expected {what} at byte {start}")))
    }
}

fn decode(bytes: &[u8]) -> Result<Decoded> {
    if bytes.len() < 2 || bytes[0] != b'P' {
        return Err(Error::Parse("not a Netpbm file".into()));
    }
    let (channels, ascii) = match bytes[1] {
        b'2' => (1, true),
        b'3' => (3, true),
        b'5' => (1, false),
        b'6' => (3, false),
        m => return Err(Error::Parse(format!("unsupported Netpbm magic P{}", m as char))),
    };
    let mut c = Cursor { bytes, pos: 2 };
    let width = c.number("width")?;
    let height = c.number("height")?;
    let maxval = c.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::Parse(format!("degenerate image size {width}x{height}")));
    }
    if !(1..=255).contains(&maxval) {
        return Err(Error::Parse(format!("maxval {maxval} unsupported; only 8-bit images are read")));
    }
    let n = width * height * channels;
    let rescale = |v: usize| -> u8 { ((v * 255 + maxval / 2) / maxval) as u8 };
    let mut data = Vec::with_capacity(n);
    if ascii {
        for _ in 0..n {
            let v = c.number("sample")?;
            if v > maxval {
                return Err(Error::Parse(format!("sample {v} exceeds maxval {maxval}")));
            }
            data.push(rescale(v));
        }
    } else {
        // Exactly one whitespace byte separates the header from the raster.
        let start = c.pos + 1;
        let raster = bytes
            .get(start..start + n)
            .ok_or_else(|| Error::Parse(format!("raster truncated: expected {n} bytes")))?;
        if raster.iter().any(|&v| v as usize > maxval) {
            return Err(Error::Parse(format!("sample exceeds maxval {maxval}")));
        }
        data.extend(raster.iter().map(|&v| rescale(v as usize)));
    }
    Ok(Decoded { width, height, channels, data })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ascii_and_binary_agree() {
        let p3 = b"P3\n# two pixels\n2 1\n255\n10 20 30  40 50 60\n";
        let a = RgbImage::decode(p3).unwrap();
        let b = RgbImage::decode(&a.to_ppm()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.pixel(1, 0), [40, 50, 60]);
    }

    #[test]
    fn pgm_round_trip_and_maxval_rescale() {
        let g = GrayImage::decode(b"P2 2 2 15 0 15 7 8").unwrap();
        assert_eq!(g.data(), &[0, 255, 119, 136]);
        assert_eq!(GrayImage::decode(&g.to_pgm()).unwrap(), g);
    }

    #[test]
    fn gray_is_replicated_to_rgb() {
        let g = GrayImage::new(1, 1, vec![9]).unwrap();
        assert_eq!(RgbImage::decode(&g.to_pgm()).unwrap().pixel(0, 0), [9, 9, 9]);
    }

    #[test]
    fn malformed_inputs_are_parse_errors() {
        for bad in [&b"P7 1 1 255 0"[..], b"P5 2 2 255\nab", b"P2 1 1 300 1", b"P2 1 1 10 11", b"hello"] {
            assert!(matches!(GrayImage::decode(bad), Err(Error::Parse(_))), "{:?}", String::from_utf8_lossy(bad));
        }
        assert!(GrayImage::decode(&RgbImage::filled(1, 1, [1, 2, 3]).to_ppm()).is_err());
    }

    #[test]
    fn label_map_spans_full_range() {
        let g = GrayImage::from_labels(3, 1, &[0, 1, 2], 3).unwrap();
        assert_eq!(g.data(), &[0, 128, 255]);
    }
}
