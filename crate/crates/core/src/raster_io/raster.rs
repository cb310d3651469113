//! Scalar rasters and the binary Netpbm codecs (PGM `P5`, PBM `P4`, and
//! single-plane extraction from PPM `P6`).

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// A `width × height` grid of finite scalars stored row-major, row 0 at the top.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster2D {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl Raster2D {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::domain(format!(
                "raster must be at least 1x1, got {width}x{height}"
            )));
        }
        if values.len() != width * height {
            return Err(Error::domain(format!(
                "raster {width}x{height} needs {} values, got {}",
                width * height,
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::domain(format!("non-finite value at index {i}")));
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        assert!(width > 0 && height > 0, "raster must be at least 1x1");
        Self {
            width,
            height,
            values: vec![0.0; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut r = Self::zeros(width, height);
        for y in 0..height {
            for x in 0..width {
                r.values[y * width + x] = f(x, y);
            }
        }
        r
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.values[y * self.width + x] = v;
    }

    /// Out-of-bounds reads return zero.
    #[inline]
    pub fn get_or_zero(&self, x: i64, y: i64) -> f64 {
        if x < 0 || y < 0 || x >= self.width as i64 || y >= self.height as i64 {
            0.0
        } else {
            self.values[y as usize * self.width + x as usize]
        }
    }

    pub fn same_shape(&self, other: &Raster2D) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn is_binary(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0 || v == 1.0)
    }

    pub fn count_nonzero(&self) -> usize {
        self.values.iter().filter(|&&v| v != 0.0).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RasterKind {
    /// Values scaled to `[0, 1]` by `maxval`.
    Gray,
    /// Values thresholded at `> maxval / 2` to `{0, 1}`; PBM black bits are foreground.
    Mask,
    /// Raw integer sample values, unscaled (artery/vein label rasters).
    Labels,
}

/// RGB plane selector for `P6` inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    Red = 0,
    Green = 1,
    Blue = 2,
}

struct Header {
    magic: [u8; 2],
    width: usize,
    height: usize,
    maxval: usize,
    data_offset: usize,
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn err(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            offset: self.pos,
            message: message.into(),
        }
    }

    fn skip_ws_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b' ' | b'\t' | b'\n' | b'\r' | 0x0b | 0x0c => self.pos += 1,
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                _ => break,
            }
        }
    }

    fn uint(&mut self, what: &str) -> Result<usize> {
        self.skip_ws_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err(format!("expected {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Parse {
                offset: start,
                message: format!("{what} out of range"),
            })
    }
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    if bytes.len() < 2 || bytes[0] != b'P' {
        return Err(Error::Parse {
            offset: 0,
            message: "missing Netpbm magic".into(),
        });
    }
    let magic = [bytes[0], bytes[1]];
    match magic[1] {
        b'4' | b'5' | b'6' => {}
        b'1' | b'2' | b'3' | b'7' => {
            return Err(Error::UnsupportedFormat(format!(
                "P{} (only binary P4/P5/P6 are read)",
                magic[1] as char
            )))
        }
        _ => {
            return Err(Error::Parse {
                offset: 1,
                message: "unknown Netpbm magic".into(),
            })
        }
    }
    let mut c = Cursor { bytes, pos: 2 };
    let width = c.uint("width")?;
    let height = c.uint("height")?;
    if width == 0 || height == 0 {
        return Err(c.err("zero image dimension"));
    }
    let maxval = if magic[1] == b'4' {
        1
    } else {
        let m = c.uint("maxval")?;
        if m == 0 || m > 65535 {
            return Err(c.err(format!("maxval {m} outside 1..=65535")));
        }
        m
    };
    // exactly one whitespace byte separates header and payload
    if c.pos >= bytes.len() || !bytes[c.pos].is_ascii_whitespace() {
        return Err(c.err("expected single whitespace before payload"));
    }
    Ok(Header {
        magic,
        width,
        height,
        maxval,
        data_offset: c.pos + 1,
    })
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

/// Decodes the samples of a `P5`/`P6` payload; `plane` selects one of the
/// `planes` interleaved samples per pixel.
fn decode_samples(bytes: &[u8], h: &Header, planes: usize, plane: usize) -> Result<Vec<u32>> {
    let bps = if h.maxval < 256 { 1 } else { 2 };
    let n = h.width * h.height;
    let need = n * planes * bps;
    let payload = &bytes[h.data_offset.min(bytes.len())..];
    if payload.len() < need {
        return Err(Error::Parse {
            offset: bytes.len(),
            message: format!(
                "payload truncated: {} pixels need {need} bytes, found {}",
                n,
                payload.len()
            ),
        });
    }
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let s = (i * planes + plane) * bps;
        let v = if bps == 1 {
            payload[s] as u32
        } else {
            u16::from_be_bytes([payload[s], payload[s + 1]]) as u32
        };
        if v as usize > h.maxval {
            return Err(Error::Parse {
                offset: h.data_offset + s,
                message: format!("sample {v} exceeds maxval {}", h.maxval),
            });
        }
        out.push(v);
    }
    Ok(out)
}

fn decode_pbm(bytes: &[u8], h: &Header) -> Result<Vec<f64>> {
    let row_bytes = h.width.div_ceil(8);
    let need = row_bytes * h.height;
    let payload = &bytes[h.data_offset.min(bytes.len())..];
    if payload.len() < need {
        return Err(Error::Parse {
            offset: bytes.len(),
            message: format!("payload truncated: need {need} bytes, found {}", payload.len()),
        });
    }
    let mut out = Vec::with_capacity(h.width * h.height);
    for y in 0..h.height {
        for x in 0..h.width {
            let byte = payload[y * row_bytes + x / 8];
            let bit = (byte >> (7 - (x % 8))) & 1;
            out.push(bit as f64);
        }
    }
    Ok(out)
}

fn samples_to_values(samples: &[u32], maxval: usize, kind: RasterKind) -> Vec<f64> {
    let m = maxval as f64;
    samples
        .iter()
        .map(|&s| match kind {
            RasterKind::Gray => s as f64 / m,
            RasterKind::Mask => {
                if s as f64 > 0.5 * m {
                    1.0
                } else {
                    0.0
                }
            }
            RasterKind::Labels => s as f64,
        })
        .collect()
}

/// Decodes an in-memory Netpbm image. `P4` is accepted only for masks and
/// `P6` is rejected; use [`decode_ppm_channel`] for colour inputs.
pub fn decode_raster(bytes: &[u8], kind: RasterKind) -> Result<Raster2D> {
    let h = parse_header(bytes)?;
    let values = match (h.magic[1], kind) {
        (b'5', _) => samples_to_values(&decode_samples(bytes, &h, 1, 0)?, h.maxval, kind),
        (b'4', RasterKind::Mask) => decode_pbm(bytes, &h)?,
        (b'4', _) => {
            return Err(Error::UnsupportedFormat(
                "P4 bitmaps can only be read as masks".into(),
            ))
        }
        _ => {
            return Err(Error::UnsupportedFormat(
                "P6 colour image; select a plane explicitly".into(),
            ))
        }
    };
    Raster2D::new(h.width, h.height, values)
}

pub fn decode_ppm_channel(bytes: &[u8], channel: Channel) -> Result<Raster2D> {
    let h = parse_header(bytes)?;
    if h.magic[1] != b'6' {
        return Err(Error::UnsupportedFormat(format!(
            "P{} is not a colour PPM",
            h.magic[1] as char
        )));
    }
    let samples = decode_samples(bytes, &h, 3, channel as usize)?;
    Raster2D::new(
        h.width,
        h.height,
        samples_to_values(&samples, h.maxval, RasterKind::Gray),
    )
}

pub fn load_raster(path: impl AsRef<Path>, kind: RasterKind) -> Result<Raster2D> {
    decode_raster(&read_bytes(path.as_ref())?, kind)
}

/// Loads one plane of a binary PPM, scaled to `[0, 1]` (e.g. the green
/// channel of a fundus photograph).
pub fn load_ppm_channel(path: impl AsRef<Path>, channel: Channel) -> Result<Raster2D> {
    decode_ppm_channel(&read_bytes(path.as_ref())?, channel)
}

/// Encodes a raster of values in `[0, 1]` as an 8-bit `P5` image (values are clamped).
pub fn encode_pgm(raster: &Raster2D) -> Vec<u8> {
    let levels: Vec<u16> = raster
        .values()
        .iter()
        .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u16)
        .collect();
    encode_pgm_levels(raster.width(), raster.height(), &levels, 255)
}

/// Encodes raw gray levels; 16-bit big-endian samples are used when `maxval > 255`.
pub fn encode_pgm_levels(width: usize, height: usize, levels: &[u16], maxval: u16) -> Vec<u8> {
    assert_eq!(levels.len(), width * height);
    assert!(maxval > 0);
    let mut out = format!("P5\n{width} {height}\n{maxval}\n").into_bytes();
    for &l in levels {
        let l = l.min(maxval);
        if maxval > 255 {
            out.extend_from_slice(&l.to_be_bytes());
        } else {
            out.push(l as u8);
        }
    }
    out
}

pub fn write_pgm(path: impl AsRef<Path>, raster: &Raster2D) -> Result<()> {
    write_bytes(path.as_ref(), &encode_pgm(raster))
}

pub fn write_pgm_levels(
    path: impl AsRef<Path>,
    width: usize,
    height: usize,
    levels: &[u16],
    maxval: u16,
) -> Result<()> {
    write_bytes(
        path.as_ref(),
        &encode_pgm_levels(width, height, levels, maxval),
    )
}

pub(crate) fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p5(w: usize, h: usize, maxval: usize, data: &[u8]) -> Vec<u8> {
        let mut v = format!("P5\n{w} {h}\n{maxval}\n").into_bytes();
        v.extend_from_slice(data);
        v
    }

    #[test]
    fn gray_values_are_scaled_by_maxval() {
        let r = decode_raster(&p5(2, 2, 255, &[0, 255, 128, 64]), RasterKind::Gray).unwrap();
        assert_eq!(r.values(), &[0.0, 1.0, 128.0 / 255.0, 64.0 / 255.0]);
    }

    #[test]
    fn mask_thresholds_at_half_maxval() {
        let r = decode_raster(&p5(1, 1, 255, &[200]), RasterKind::Mask).unwrap();
        assert_eq!(r.values(), &[1.0]);
        let r = decode_raster(&p5(2, 1, 255, &[127, 128]), RasterKind::Mask).unwrap();
        assert_eq!(r.values(), &[0.0, 1.0]);
    }

    #[test]
    fn truncated_payload_is_a_parse_error() {
        let err = decode_raster(&p5(2, 2, 255, &[1, 2, 3]), RasterKind::Gray).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }), "{err}");
    }

    #[test]
    fn malformed_header_names_offset() {
        let err = decode_raster(b"P5\n2 x\n255\n", RasterKind::Gray).unwrap_err();
        match err {
            Error::Parse { offset, .. } => assert_eq!(offset, 5),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn ascii_variants_are_unsupported() {
        let err = decode_raster(b"P2\n1 1\n255\n7\n", RasterKind::Gray).unwrap_err();
        assert!(matches!(err, Error::UnsupportedFormat(_)));
    }

    #[test]
    fn header_comments_and_sixteen_bit_samples() {
        let mut bytes = b"P5\n# a comment\n2 1\n1000\n".to_vec();
        bytes.extend_from_slice(&500u16.to_be_bytes());
        bytes.extend_from_slice(&1000u16.to_be_bytes());
        let r = decode_raster(&bytes, RasterKind::Gray).unwrap();
        assert_eq!(r.values(), &[0.5, 1.0]);
    }

    #[test]
    fn pbm_mask_bits() {
        // 10 px wide: two bytes per row
        let mut bytes = b"P4\n10 1\n".to_vec();
        bytes.extend_from_slice(&[0b1000_0001, 0b0100_0000]);
        let r = decode_raster(&bytes, RasterKind::Mask).unwrap();
        assert_eq!(
            r.values(),
            &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 1.0]
        );
        assert!(decode_raster(&bytes, RasterKind::Gray).is_err());
    }

    #[test]
    fn ppm_green_plane() {
        let mut bytes = b"P6\n2 1\n255\n".to_vec();
        bytes.extend_from_slice(&[10, 255, 30, 40, 0, 60]);
        let g = decode_ppm_channel(&bytes, Channel::Green).unwrap();
        assert_eq!(g.values(), &[1.0, 0.0]);
        assert!(matches!(
            decode_raster(&bytes, RasterKind::Gray),
            Err(Error::UnsupportedFormat(_))
        ));
    }

    #[test]
    fn pgm_levels_round_trip() {
        let r = Raster2D::from_fn(3, 2, |x, y| (x + 3 * y) as f64 / 5.0);
        let back = decode_raster(&encode_pgm(&r), RasterKind::Gray).unwrap();
        for (a, b) in r.values().iter().zip(back.values()) {
            assert!((a - b).abs() <= 0.5 / 255.0 + 1e-12);
        }
    }

    #[test]
    fn constructor_rejects_non_finite() {
        assert!(Raster2D::new(1, 1, vec![f64::NAN]).is_err());
        assert!(Raster2D::new(0, 1, vec![]).is_err());
    }
}
