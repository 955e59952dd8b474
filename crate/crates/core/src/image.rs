//! 8-bit grayscale raster and its file formats.
//!
//! Binary PGM (`P5`, maxval 255) is always supported. PNG is read in any
//! 8-bit color type; color input is reduced to luma with integer BT.601
//! weights.

use std::fs;
use std::io::{BufWriter, Cursor};
use std::path::Path;

use crate::{Error, Result, Scalar};

/// Row-major single-channel 8-bit image.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ImageBuffer {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl ImageBuffer {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        Self::filled(width, height, 0)
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::ZeroExtent { width, height });
        }
        Ok(Self {
            width,
            height,
            pixels: vec![value; width * height],
        })
    }

    pub fn from_pixels(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::ZeroExtent { width, height });
        }
        if pixels.len() != width * height {
            return Err(Error::Format(format!(
                "{} pixels for a {width}x{height} image",
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> u8,
    ) -> Result<Self> {
        let mut img = Self::new(width, height)?;
        for y in 0..height {
            for x in 0..width {
                img.pixels[y * width + x] = f(x, y);
            }
        }
        Ok(img)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [u8] {
        &mut self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: u8) {
        self.pixels[y * self.width + x] = value;
    }

    pub fn row(&self, y: usize) -> &[u8] {
        &self.pixels[y * self.width..(y + 1) * self.width]
    }

    pub fn mean(&self) -> f64 {
        self.pixels.iter().map(|&p| p as f64).sum::<f64>() / self.pixels.len() as f64
    }

    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        self.pixels
            .iter()
            .map(|&p| (p as f64 - mean).powi(2))
            .sum::<f64>()
            / self.pixels.len() as f64
    }

    /// Top-left `width x height` crop (clipped to the image).
    pub fn crop(&self, width: usize, height: usize) -> Result<Self> {
        let (w, h) = (width.min(self.width), height.min(self.height));
        Self::from_fn(w, h, |x, y| self.get(x, y))
    }
}

/// Final pixel write: round half away from zero, then clamp to `[0, 255]`.
/// NaN maps to 0.
#[inline]
pub fn quantize<T: Scalar>(v: T) -> u8 {
    let r = v.round();
    if !(r > T::zero()) {
        0
    } else if r >= T::lit(255.0) {
        255
    } else {
        r.to_u8().unwrap_or(0)
    }
}

/// Encodes as binary PGM.
pub fn encode_pgm(img: &ImageBuffer) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend_from_slice(&img.pixels);
    out
}

/// Decodes a binary PGM with maxval 255.
pub fn decode_pgm(data: &[u8]) -> Result<ImageBuffer> {
    let mut pos = 0;
    let magic = header_token(data, &mut pos)?;
    if magic != b"P5" {
        return Err(Error::Format(format!(
            "not a binary PGM (magic `{}`)",
            String::from_utf8_lossy(magic)
        )));
    }
    let width = header_number(data, &mut pos, "width")?;
    let height = header_number(data, &mut pos, "height")?;
    let maxval = header_number(data, &mut pos, "maxval")?;
    if maxval != 255 {
        return Err(Error::UnsupportedDepth(format!("PGM maxval {maxval}")));
    }
    // Exactly one whitespace byte separates the header from the raster.
    if pos >= data.len() || !data[pos].is_ascii_whitespace() {
        return Err(Error::Format("missing whitespace after PGM header".into()));
    }
    pos += 1;
    let n = width
        .checked_mul(height)
        .ok_or_else(|| Error::Format("PGM dimensions overflow".into()))?;
    let raster = data
        .get(pos..pos + n)
        .ok_or_else(|| Error::Format(format!("PGM raster truncated: need {n} bytes")))?;
    ImageBuffer::from_pixels(width, height, raster.to_vec())
}

fn header_token<'a>(data: &'a [u8], pos: &mut usize) -> Result<&'a [u8]> {
    loop {
        while *pos < data.len() && data[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < data.len() && data[*pos] == b'#' {
            while *pos < data.len() && data[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < data.len() && !data[*pos].is_ascii_whitespace() && data[*pos] != b'#' {
        *pos += 1;
    }
    if start == *pos {
        return Err(Error::Format("truncated PGM header".into()));
    }
    Ok(&data[start..*pos])
}

fn header_number(data: &[u8], pos: &mut usize, what: &str) -> Result<usize> {
    let tok = header_token(data, pos)?;
    std::str::from_utf8(tok)
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Format(format!("bad PGM {what} `{}`", String::from_utf8_lossy(tok))))
}

/// BT.601 luma with integer weights, rounded half away from zero.
#[inline]
pub fn luma_bt601(r: u8, g: u8, b: u8) -> u8 {
    let sum = 299 * r as u32 + 587 * g as u32 + 114 * b as u32;
    // Non-negative, so adding half the divisor rounds half away from zero.
    ((sum + 500) / 1000) as u8
}

/// Encodes as 8-bit grayscale PNG.
pub fn encode_png(img: &ImageBuffer) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(
            BufWriter::new(&mut out),
            img.width as u32,
            img.height as u32,
        );
        enc.set_color(png::ColorType::Grayscale);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc
            .write_header()
            .map_err(|e| Error::Format(format!("png encode: {e}")))?;
        writer
            .write_image_data(&img.pixels)
            .map_err(|e| Error::Format(format!("png encode: {e}")))?;
    }
    Ok(out)
}

/// Decodes an 8-bit PNG; color images are converted to luma with a warning.
pub fn decode_png(data: &[u8]) -> Result<ImageBuffer> {
    let decoder = png::Decoder::new(Cursor::new(data));
    let mut reader = decoder
        .read_info()
        .map_err(|e| Error::Format(format!("png decode: {e}")))?;
    let (color, depth) = reader.output_color_type();
    if depth != png::BitDepth::Eight {
        return Err(Error::UnsupportedDepth(format!("PNG bit depth {depth:?}")));
    }
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::Format("png decode: image too large".into()))?;
    let mut buf = vec![0; size];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| Error::Format(format!("png decode: {e}")))?;
    let (w, h) = (info.width as usize, info.height as usize);
    let stride = info.line_size;
    let channels = color.samples();
    let pixels = (0..h)
        .flat_map(|y| {
            let line = &buf[y * stride..y * stride + w * channels];
            (0..w).map(move |x| {
                let p = &line[x * channels..(x + 1) * channels];
                match color {
                    png::ColorType::Grayscale | png::ColorType::GrayscaleAlpha => p[0],
                    png::ColorType::Rgb | png::ColorType::Rgba => luma_bt601(p[0], p[1], p[2]),
                    png::ColorType::Indexed => p[0],
                }
            })
        })
        .collect();
    if matches!(color, png::ColorType::Rgb | png::ColorType::Rgba) {
        log::warn!("converting {w}x{h} color PNG to grayscale (BT.601 luma)");
    }
    ImageBuffer::from_pixels(w, h, pixels)
}

fn is_png(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("png"))
}

/// Loads a PGM or PNG, dispatching on the file signature.
pub fn load_image(path: impl AsRef<Path>) -> Result<ImageBuffer> {
    let path = path.as_ref();
    let data = fs::read(path).map_err(|e| Error::io(path, e))?;
    if data.starts_with(b"\x89PNG") {
        decode_png(&data)
    } else {
        decode_pgm(&data)
    }
}

/// Saves as PNG when the extension is `.png`, PGM otherwise.
pub fn save_image(img: &ImageBuffer, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let data = if is_png(path) {
        encode_png(img)?
    } else {
        encode_pgm(img)
    };
    fs::write(path, data).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn quantize_rounds_half_away_and_clamps() {
        assert_eq!(quantize(127.5f64), 128);
        assert_eq!(quantize(127.4999f64), 127);
        assert_eq!(quantize(-0.4f64), 0);
        assert_eq!(quantize(-15.9f64), 0);
        assert_eq!(quantize(254.5f64), 255);
        assert_eq!(quantize(300.0f64), 255);
        assert_eq!(quantize(f64::NAN), 0);
        assert_eq!(quantize(2.5f32), 3);
    }

    #[test]
    fn pgm_header_with_comments() {
        let mut data = b"P5 # comment\n# another\n3 2\n255\n".to_vec();
        data.extend_from_slice(&[1, 2, 3, 4, 5, 6]);
        let img = decode_pgm(&data).unwrap();
        assert_eq!((img.width(), img.height()), (3, 2));
        assert_eq!(img.pixels(), &[1, 2, 3, 4, 5, 6]);
    }

    #[test]
    fn pgm_errors() {
        let mut deep = b"P5\n2 1\n65535\n".to_vec();
        deep.extend_from_slice(&[0, 0, 0, 0]);
        assert!(matches!(decode_pgm(&deep), Err(Error::UnsupportedDepth(_))));
        assert!(matches!(
            decode_pgm(b"P2\n1 1\n255\n0"),
            Err(Error::Format(_))
        ));
        assert!(matches!(
            decode_pgm(b"P5\n2 2\n255\n\x01"),
            Err(Error::Format(_))
        ));
        assert!(matches!(decode_pgm(b"P5\n2"), Err(Error::Format(_))));
        assert!(matches!(
            decode_pgm(b"P5\n0 2\n255\n"),
            Err(Error::ZeroExtent { .. })
        ));
    }

    #[test]
    fn rgb_png_converts_to_luma() {
        let rgb = [(255u8, 0u8, 0u8), (0, 255, 0), (0, 0, 255), (10, 200, 31)];
        let mut out = Vec::new();
        {
            let mut enc = png::Encoder::new(&mut out, 4, 1);
            enc.set_color(png::ColorType::Rgb);
            enc.set_depth(png::BitDepth::Eight);
            let mut w = enc.write_header().unwrap();
            let raw: Vec<u8> = rgb.iter().flat_map(|&(r, g, b)| [r, g, b]).collect();
            w.write_image_data(&raw).unwrap();
        }
        let img = decode_png(&out).unwrap();
        // 0.299*255 = 76.245, 0.587*255 = 149.685, 0.114*255 = 29.07,
        // 0.299*10 + 0.587*200 + 0.114*31 = 123.924
        assert_eq!(img.pixels(), &[76, 150, 29, 124]);
        assert_eq!(luma_bt601(255, 255, 255), 255);
    }

    #[test]
    fn save_load_both_formats() {
        let dir = tempfile::tempdir().unwrap();
        let img = ImageBuffer::from_fn(13, 7, |x, y| (x * 17 + y * 31) as u8).unwrap();
        for name in ["a.pgm", "a.png"] {
            let path = dir.path().join(name);
            save_image(&img, &path).unwrap();
            assert_eq!(load_image(&path).unwrap(), img);
        }
        assert!(matches!(
            load_image(dir.path().join("missing.pgm")),
            Err(Error::Io { .. })
        ));
    }

    proptest! {
        #[test]
        fn pgm_and_png_round_trip(w in 1usize..20, h in 1usize..20, seed in any::<u64>()) {
            let img = ImageBuffer::from_fn(w, h, |x, y| {
                (seed.wrapping_mul(x as u64 * 31 + y as u64 * 7 + 1) >> 13) as u8
            }).unwrap();
            prop_assert_eq!(decode_pgm(&encode_pgm(&img)).unwrap(), img.clone());
            prop_assert_eq!(decode_png(&encode_png(&img).unwrap()).unwrap(), img);
        }
    }
}
