//! 8-bit RGB rasters and the floating-point canvas the transforms work on.

use std::path::Path;

use crate::error::{Error, Result};

/// Row-major, interleaved 8-bit RGB image.
#[derive(Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl std::fmt::Debug for RgbImage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RgbImage")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish_non_exhaustive()
    }
}

impl RgbImage {
    pub fn new(width: u32, height: u32, data: Vec<u8>) -> Result<Self> {
        let expected = width as usize * height as usize * 3;
        if data.len() != expected {
            return Err(Error::input(format!(
                "RGB buffer holds {} bytes, expected {expected} for {width}x{height}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> [u8; 3]) -> Self {
        let mut data = Vec::with_capacity(width as usize * height as usize * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn load(path: &Path) -> Result<Self> {
        let img = image::open(path)?.to_rgb8();
        let (w, h) = img.dimensions();
        Self::new(w, h, img.into_raw())
    }

    /// Encodes as PNG. The encoder settings are fixed so equal images give equal bytes.
    pub fn to_png_bytes(&self) -> Result<Vec<u8>> {
        use image::ImageEncoder;
        let mut out = Vec::new();
        image::codecs::png::PngEncoder::new(&mut out).write_image(
            &self.data,
            self.width,
            self.height,
            image::ExtendedColorType::Rgb8,
        )?;
        Ok(out)
    }

    pub fn save_png(&self, path: &Path) -> Result<()> {
        let bytes = self.to_png_bytes()?;
        std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
    }
}

/// Peak signal-to-noise ratio in dB, capped at 100 dB for identical images.
pub fn psnr(a: &RgbImage, b: &RgbImage) -> f64 {
    assert_eq!(
        (a.width, a.height),
        (b.width, b.height),
        "PSNR needs equal dimensions"
    );
    let n = a.data.len() as f64;
    let mse = a
        .data
        .iter()
        .zip(&b.data)
        .map(|(&p, &q)| {
            let d = p as f64 - q as f64;
            d * d
        })
        .sum::<f64>()
        / n;
    if mse == 0.0 {
        100.0
    } else {
        (10.0 * (255.0f64 * 255.0 / mse).log10()).min(100.0)
    }
}

/// Interleaved RGB samples in [0, 1] (values may leave that range mid-transform).
#[derive(Clone, Debug)]
pub(crate) struct Canvas {
    pub w: usize,
    pub h: usize,
    pub data: Vec<f32>,
}

impl Canvas {
    pub fn from_image(img: &RgbImage) -> Self {
        Self {
            w: img.width as usize,
            h: img.height as usize,
            data: img.data.iter().map(|&v| v as f32 / 255.0).collect(),
        }
    }

    #[inline]
    pub fn idx(&self, x: usize, y: usize, c: usize) -> usize {
        (y * self.w + x) * 3 + c
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize, c: usize) -> f32 {
        self.data[self.idx(x, y, c)]
    }

    /// Clamp to [0, 1] and round half-to-even onto the 8-bit grid.
    pub fn to_image(&self) -> RgbImage {
        let data = self.data.iter().map(|&v| quantize(v)).collect();
        RgbImage {
            width: self.w as u32,
            height: self.h as u32,
            data,
        }
    }
}

#[inline]
pub(crate) fn quantize(v: f32) -> u8 {
    let scaled = (v.clamp(0.0, 1.0) * 255.0).round_ties_even();
    scaled as u8
}

/// Symmetric reflection (`-1 -> 0`, `n -> n-1`), valid for any offset.
#[inline]
pub(crate) fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    if n == 1 {
        return 0;
    }
    let period = 2 * n;
    let m = i.rem_euclid(period);
    (if m < n { m } else { period - 1 - m }) as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn buffer_length_checked() {
        assert!(RgbImage::new(2, 2, vec![0; 11]).is_err());
        assert!(RgbImage::new(2, 2, vec![0; 12]).is_ok());
    }

    #[test]
    fn reflect_is_symmetric() {
        assert_eq!(reflect(-1, 5), 0);
        assert_eq!(reflect(-2, 5), 1);
        assert_eq!(reflect(5, 5), 4);
        assert_eq!(reflect(6, 5), 3);
        assert_eq!(reflect(-13, 5), 2);
        assert_eq!(reflect(7, 1), 0);
    }

    #[test]
    fn quantize_rounds_half_to_even() {
        // 0.5/255 and 1.5/255 land exactly on .5 after scaling in f32 for these
        assert_eq!(quantize(0.0), 0);
        assert_eq!(quantize(1.0), 255);
        assert_eq!(quantize(-0.3), 0);
        assert_eq!(quantize(2.0), 255);
        assert_eq!((2.5f32).round_ties_even(), 2.0);
    }

    #[test]
    fn canvas_round_trip_is_lossless() {
        let img = RgbImage::from_fn(7, 5, |x, y| [(x * 30) as u8, (y * 40) as u8, 255]);
        assert_eq!(Canvas::from_image(&img).to_image(), img);
    }

    #[test]
    fn psnr_identical_is_capped() {
        let img = RgbImage::from_fn(4, 4, |_, _| [1, 2, 3]);
        assert_eq!(psnr(&img, &img), 100.0);
    }
}
