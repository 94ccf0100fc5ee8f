//! Pixel containers and PNG codecs.

use std::io::Cursor;

use image::{ImageBuffer, ImageFormat, Luma};

use crate::error::{Error, Result};

pub type Rgb = [u8; 3];

/// Row-major 8-bit RGB raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    pixels: Vec<Rgb>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, pixels: Vec<Rgb>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidInput(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        if pixels.len() != width * height {
            return Err(Error::InvalidInput(format!(
                "expected {} pixels for {width}x{height}, got {}",
                width * height,
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> Rgb) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self::new(width, height, pixels)
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

    pub fn pixels(&self) -> &[Rgb] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> Rgb {
        self.pixels[y * self.width + x]
    }

    pub fn color(&self, index: usize) -> [f64; 3] {
        let p = self.pixels[index];
        [p[0] as f64, p[1] as f64, p[2] as f64]
    }

    /// Luma (0.299, 0.587, 0.114) per pixel.
    pub fn gray(&self) -> Vec<f64> {
        self.pixels
            .iter()
            .map(|p| 0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64)
            .collect()
    }
}

/// Decodes an encoded image (PNG required; gray and alpha variants are converted to RGB).
pub fn load_image(bytes: &[u8]) -> Result<RgbImage> {
    let decoded = image::load_from_memory(bytes).map_err(|e| Error::Decode(e.to_string()))?;
    let rgb = decoded.to_rgb8();
    let (w, h) = rgb.dimensions();
    let pixels = rgb.pixels().map(|p| p.0).collect();
    RgbImage::new(w as usize, h as usize, pixels)
}

/// Width and height from the image header, without decoding pixels.
pub fn image_dimensions(bytes: &[u8]) -> Result<(usize, usize)> {
    let (w, h) = image::ImageReader::new(Cursor::new(bytes))
        .with_guessed_format()
        .map_err(|e| Error::Decode(e.to_string()))?
        .into_dimensions()
        .map_err(|e| Error::Decode(e.to_string()))?;
    Ok((w as usize, h as usize))
}

pub fn encode_rgb_png(image: &RgbImage) -> Result<Vec<u8>> {
    let raw: Vec<u8> = image.pixels.iter().flat_map(|p| p.iter().copied()).collect();
    let buf: ImageBuffer<image::Rgb<u8>, Vec<u8>> =
        ImageBuffer::from_raw(image.width as u32, image.height as u32, raw)
            .ok_or_else(|| Error::Encode("buffer size mismatch".into()))?;
    write_png(|c| buf.write_to(c, ImageFormat::Png))
}

fn write_png(
    f: impl FnOnce(&mut Cursor<Vec<u8>>) -> image::ImageResult<()>,
) -> Result<Vec<u8>> {
    let mut cursor = Cursor::new(Vec::new());
    f(&mut cursor).map_err(|e| Error::Encode(e.to_string()))?;
    Ok(cursor.into_inner())
}

/// Binary per-pixel mask; `true` marks the object.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl Mask {
    pub fn new(width: usize, height: usize, data: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 || data.len() != width * height {
            return Err(Error::InvalidInput(format!(
                "mask of {} values does not fit {width}x{height}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: bool) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    /// Builds a mask from per-pixel {0, 1} labels.
    pub fn from_labels(width: usize, height: usize, labels: &[u8]) -> Result<Self> {
        Self::new(width, height, labels.iter().map(|&l| l != 0).collect())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&v| v).count()
    }

    pub fn to_labels(&self) -> Vec<u8> {
        self.data.iter().map(|&v| v as u8).collect()
    }

    pub fn complement(&self) -> Self {
        Self {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|v| !v).collect(),
        }
    }

    pub fn same_dims(&self, other: &Mask) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// 8-bit grayscale PNG, 255 = object, 0 = background.
    pub fn to_png(&self) -> Result<Vec<u8>> {
        let raw: Vec<u8> = self.data.iter().map(|&v| if v { 255 } else { 0 }).collect();
        let buf: ImageBuffer<Luma<u8>, Vec<u8>> =
            ImageBuffer::from_raw(self.width as u32, self.height as u32, raw)
                .ok_or_else(|| Error::Encode("buffer size mismatch".into()))?;
        write_png(|c| buf.write_to(c, ImageFormat::Png))
    }

    /// Decodes a mask image; any nonzero luma is object.
    pub fn from_png(bytes: &[u8]) -> Result<Self> {
        let decoded = image::load_from_memory(bytes).map_err(|e| Error::Decode(e.to_string()))?;
        let gray = decoded.to_luma8();
        let (w, h) = gray.dimensions();
        Self::new(
            w as usize,
            h as usize,
            gray.pixels().map(|p| p.0[0] != 0).collect(),
        )
    }
}

/// 16-bit grayscale PNG of arbitrary `u16` values (region label maps).
pub fn encode_gray16_png(width: usize, height: usize, values: &[u16]) -> Result<Vec<u8>> {
    let buf: ImageBuffer<Luma<u16>, Vec<u16>> =
        ImageBuffer::from_raw(width as u32, height as u32, values.to_vec())
            .ok_or_else(|| Error::Encode("buffer size mismatch".into()))?;
    write_png(|c| buf.write_to(c, ImageFormat::Png))
}

pub fn decode_gray16_png(bytes: &[u8]) -> Result<(usize, usize, Vec<u16>)> {
    let decoded = image::load_from_memory(bytes).map_err(|e| Error::Decode(e.to_string()))?;
    let gray = decoded.to_luma16();
    let (w, h) = gray.dimensions();
    Ok((w as usize, h as usize, gray.into_raw()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decodes_single_white_pixel() {
        let img = RgbImage::new(1, 1, vec![[255, 255, 255]]).unwrap();
        let png = encode_rgb_png(&img).unwrap();
        let back = load_image(&png).unwrap();
        assert_eq!(back, img);
    }

    #[test]
    fn checkerboard_is_row_major() {
        let img = RgbImage::from_fn(2, 2, |x, y| if (x + y) % 2 == 0 { [0, 0, 0] } else { [255, 255, 255] })
            .unwrap();
        let back = load_image(&encode_rgb_png(&img).unwrap()).unwrap();
        assert_eq!(
            back.pixels(),
            &[[0, 0, 0], [255, 255, 255], [255, 255, 255], [0, 0, 0]]
        );
    }

    #[test]
    fn gray_png_is_promoted() {
        let mask = Mask::from_fn(3, 1, |x, _| x == 1);
        let img = load_image(&mask.to_png().unwrap()).unwrap();
        assert_eq!(img.pixels(), &[[0, 0, 0], [255, 255, 255], [0, 0, 0]]);
    }

    #[test]
    fn truncated_stream_is_decode_error() {
        let img = RgbImage::from_fn(4, 4, |x, y| [x as u8, y as u8, 7]).unwrap();
        let png = encode_rgb_png(&img).unwrap();
        let err = load_image(&png[..png.len() / 2]).unwrap_err();
        assert!(matches!(err, Error::Decode(_)));
        assert!(matches!(load_image(b"not an image").unwrap_err(), Error::Decode(_)));
    }

    #[test]
    fn zero_dimension_rejected() {
        assert!(matches!(
            RgbImage::new(0, 3, vec![]).unwrap_err(),
            Error::InvalidInput(_)
        ));
    }

    #[test]
    fn mask_png_round_trip() {
        let mask = Mask::from_fn(5, 3, |x, y| (x * y) % 2 == 1);
        assert_eq!(Mask::from_png(&mask.to_png().unwrap()).unwrap(), mask);
    }

    #[test]
    fn gray16_round_trip() {
        let values: Vec<u16> = (0..12).map(|v| v * 1000).collect();
        let png = encode_gray16_png(4, 3, &values).unwrap();
        assert_eq!(decode_gray16_png(&png).unwrap(), (4, 3, values));
    }
}
