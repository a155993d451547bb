//! 8-bit grayscale rasters (0 = black, 255 = white).

use std::io::Cursor;
use std::path::Path;

use image::{GrayImage, ImageFormat};

use crate::error::{Error, Result};

pub const WHITE: u8 = 255;
pub const BLACK: u8 = 0;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PageImage {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

impl PageImage {
    /// A white page.
    pub fn blank(width: u32, height: u32) -> Self {
        Self::filled(width, height, WHITE)
    }

    pub fn filled(width: u32, height: u32, value: u8) -> Self {
        PageImage {
            width,
            height,
            pixels: vec![value; width as usize * height as usize],
        }
    }

    pub fn from_pixels(width: u32, height: u32, pixels: Vec<u8>) -> Result<Self> {
        if pixels.len() != width as usize * height as usize {
            return Err(Error::InvalidParameter(format!(
                "pixel buffer of {} bytes does not match {width}x{height}",
                pixels.len()
            )));
        }
        Ok(PageImage {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [u8] {
        &mut self.pixels
    }

    pub fn is_empty(&self) -> bool {
        self.width == 0 || self.height == 0
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.pixels[y as usize * self.width as usize + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, v: u8) {
        let w = self.width as usize;
        self.pixels[y as usize * w + x as usize] = v;
    }

    /// Sets a pixel given signed coordinates, ignoring anything off the page.
    #[inline]
    pub fn put(&mut self, x: i64, y: i64, v: u8) {
        if x >= 0 && y >= 0 && (x as u64) < self.width as u64 && (y as u64) < self.height as u64 {
            self.set(x as u32, y as u32, v);
        }
    }

    pub fn fill_rect(&mut self, x0: i64, y0: i64, x1: i64, y1: i64, v: u8) {
        let x0 = x0.max(0);
        let y0 = y0.max(0);
        let x1 = x1.min(self.width as i64);
        let y1 = y1.min(self.height as i64);
        for y in y0..y1 {
            for x in x0..x1 {
                self.set(x as u32, y as u32, v);
            }
        }
    }

    /// Copies the pixel rectangle `[x0, x1) x [y0, y1)`.
    pub fn crop(&self, x0: u32, y0: u32, x1: u32, y1: u32) -> Result<PageImage> {
        if x1 <= x0 || y1 <= y0 || x1 > self.width || y1 > self.height {
            return Err(Error::DegenerateBox);
        }
        let w = x1 - x0;
        let mut out = Vec::with_capacity(w as usize * (y1 - y0) as usize);
        for y in y0..y1 {
            let row = y as usize * self.width as usize;
            out.extend_from_slice(&self.pixels[row + x0 as usize..row + x1 as usize]);
        }
        PageImage::from_pixels(w, y1 - y0, out)
    }

    /// Bilinear sample at continuous index coordinates, `fill` outside.
    pub fn sample_bilinear(&self, x: f64, y: f64, fill: f64) -> f64 {
        let x0 = x.floor();
        let y0 = y.floor();
        let fx = x - x0;
        let fy = y - y0;
        let (xi, yi) = (x0 as i64, y0 as i64);
        let at = |xx: i64, yy: i64| -> f64 {
            if xx < 0 || yy < 0 || xx >= self.width as i64 || yy >= self.height as i64 {
                fill
            } else {
                self.get(xx as u32, yy as u32) as f64
            }
        };
        let top = at(xi, yi) * (1.0 - fx) + at(xi + 1, yi) * fx;
        let bottom = at(xi, yi + 1) * (1.0 - fx) + at(xi + 1, yi + 1) * fx;
        top * (1.0 - fy) + bottom * fy
    }

    /// Resizes with bilinear (linear) interpolation, half-pixel centres,
    /// edge pixels replicated. Same-size requests return an exact copy.
    pub fn resize_bilinear(&self, new_w: u32, new_h: u32) -> Result<PageImage> {
        if new_w == 0 || new_h == 0 || self.is_empty() {
            return Err(Error::DegenerateBox);
        }
        if new_w == self.width && new_h == self.height {
            return Ok(self.clone());
        }
        let sx = self.width as f64 / new_w as f64;
        let sy = self.height as f64 / new_h as f64;
        let max_x = (self.width - 1) as f64;
        let max_y = (self.height - 1) as f64;
        let mut out = Vec::with_capacity(new_w as usize * new_h as usize);
        for y in 0..new_h {
            let src_y = ((y as f64 + 0.5) * sy - 0.5).clamp(0.0, max_y);
            for x in 0..new_w {
                let src_x = ((x as f64 + 0.5) * sx - 0.5).clamp(0.0, max_x);
                let v = self.sample_bilinear(src_x, src_y, WHITE as f64);
                out.push(v.round().clamp(0.0, 255.0) as u8);
            }
        }
        PageImage::from_pixels(new_w, new_h, out)
    }

    /// `true` where the pixel is darker than `threshold`.
    pub fn binarize(&self, threshold: u8) -> Vec<bool> {
        self.pixels.iter().map(|&p| p < threshold).collect()
    }

    pub fn count_dark(&self, threshold: u8) -> usize {
        self.pixels.iter().filter(|&&p| p < threshold).count()
    }

    pub fn to_gray_image(&self) -> GrayImage {
        GrayImage::from_raw(self.width, self.height, self.pixels.clone())
            .expect("buffer length matches dimensions")
    }

    pub fn encode_png(&self) -> Result<Vec<u8>> {
        let mut buf = Cursor::new(Vec::new());
        self.to_gray_image().write_to(&mut buf, ImageFormat::Png)?;
        Ok(buf.into_inner())
    }

    /// Binary PGM (P5).
    pub fn encode_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<PageImage> {
        let img = image::load_from_memory(bytes)?.to_luma8();
        let (w, h) = img.dimensions();
        PageImage::from_pixels(w, h, img.into_raw())
    }

    pub fn save_png(&self, path: &Path) -> Result<()> {
        let bytes = self.encode_png()?;
        std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
    }

    pub fn save_pgm(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.encode_pgm()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<PageImage> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        PageImage::decode(&bytes)
    }
}
