//! Image and rain-mask I/O.
//!
//! Processing is luminance-only: RGB inputs are converted to a [0,1] luma
//! grid plus two pass-through chroma channels that are recombined on save.

use std::path::Path;

use crate::error::{Error, Result};

/// A grayscale working image with optional pass-through chroma.
///
/// `luma` is row-major with values in [0,1]. For RGB sources the two chroma
/// channels (Cb, Cr offsets around zero) ride along untouched so that a
/// luminance-only pipeline can still emit color output.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    luma: Vec<f64>,
    chroma: Option<[Vec<f64>; 2]>,
}

impl Image {
    pub fn from_luma(width: usize, height: usize, luma: Vec<f64>) -> Self {
        assert_eq!(luma.len(), width * height, "luma length must be w*h");
        Self {
            width,
            height,
            luma,
            chroma: None,
        }
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Self {
        Self::from_luma(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn luma(&self) -> &[f64] {
        &self.luma
    }

    pub fn luma_mut(&mut self) -> &mut [f64] {
        &mut self.luma
    }

    pub fn chroma(&self) -> Option<&[Vec<f64>; 2]> {
        self.chroma.as_ref()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.luma[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.luma[row * self.width + col] = value;
    }

    /// Replaces the luma plane, keeping dimensions and chroma.
    pub fn with_luma(&self, luma: Vec<f64>) -> Self {
        assert_eq!(luma.len(), self.width * self.height);
        Self {
            width: self.width,
            height: self.height,
            luma,
            chroma: self.chroma.clone(),
        }
    }

    pub fn clamp_luma(&mut self) {
        for v in &mut self.luma {
            *v = v.clamp(0.0, 1.0);
        }
    }
}

/// Boolean rain annotation paired with an [`Image`]; `true` marks rain.
#[derive(Debug, Clone)]
pub struct RainMask {
    width: usize,
    height: usize,
    flags: Vec<bool>,
}

impl RainMask {
    pub fn new(width: usize, height: usize, flags: Vec<bool>) -> Self {
        assert_eq!(flags.len(), width * height);
        Self {
            width,
            height,
            flags,
        }
    }

    pub fn all(width: usize, height: usize, value: bool) -> Self {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn flags(&self) -> &[bool] {
        &self.flags
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.flags[row * self.width + col]
    }
}

// ITU-R BT.601 luma weights and the matching JPEG-style chroma transform.
const WR: f64 = 0.299;
const WG: f64 = 0.587;
const WB: f64 = 0.114;

fn rgb_to_ycbcr(r: f64, g: f64, b: f64) -> (f64, f64, f64) {
    let y = WR * r + WG * g + WB * b;
    let cb = 0.5 * (b - y) / (1.0 - WB);
    let cr = 0.5 * (r - y) / (1.0 - WR);
    (y, cb, cr)
}

fn ycbcr_to_rgb(y: f64, cb: f64, cr: f64) -> (f64, f64, f64) {
    let r = y + 2.0 * (1.0 - WR) * cr;
    let b = y + 2.0 * (1.0 - WB) * cb;
    let g = (y - WR * r - WB * b) / WG;
    (r, g, b)
}

/// Rounds a [0,1] value to an 8-bit level, clamping overshoot.
pub fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

pub fn load_image(path: &Path) -> Result<Image> {
    let dyn_img = image::open(path).map_err(|source| Error::ImageRead {
        path: path.to_path_buf(),
        source,
    })?;
    use image::DynamicImage::*;
    match dyn_img {
        ImageLuma8(g) => {
            let (w, h) = (g.width() as usize, g.height() as usize);
            let luma = g.pixels().map(|p| p.0[0] as f64 / 255.0).collect();
            Ok(Image::from_luma(w, h, luma))
        }
        ImageRgb8(rgb) => {
            let (w, h) = (rgb.width() as usize, rgb.height() as usize);
            let mut luma = Vec::with_capacity(w * h);
            let mut cb = Vec::with_capacity(w * h);
            let mut cr = Vec::with_capacity(w * h);
            for p in rgb.pixels() {
                let (y, b, r) = rgb_to_ycbcr(
                    p.0[0] as f64 / 255.0,
                    p.0[1] as f64 / 255.0,
                    p.0[2] as f64 / 255.0,
                );
                luma.push(y);
                cb.push(b);
                cr.push(r);
            }
            Ok(Image {
                width: w,
                height: h,
                luma,
                chroma: Some([cb, cr]),
            })
        }
        ImageRgba8(rgba) => load_image_rgba(rgba),
        other => Err(Error::UnsupportedImage {
            path: path.to_path_buf(),
            detail: format!("unsupported pixel layout {:?}", other.color()),
        }),
    }
}

fn load_image_rgba(rgba: image::RgbaImage) -> Result<Image> {
    let (w, h) = (rgba.width() as usize, rgba.height() as usize);
    let mut luma = Vec::with_capacity(w * h);
    let mut cb = Vec::with_capacity(w * h);
    let mut cr = Vec::with_capacity(w * h);
    for p in rgba.pixels() {
        let (y, b, r) = rgb_to_ycbcr(
            p.0[0] as f64 / 255.0,
            p.0[1] as f64 / 255.0,
            p.0[2] as f64 / 255.0,
        );
        luma.push(y);
        cb.push(b);
        cr.push(r);
    }
    Ok(Image {
        width: w,
        height: h,
        luma,
        chroma: Some([cb, cr]),
    })
}

pub fn save_image(img: &Image, path: &Path) -> Result<()> {
    let w = img.width as u32;
    let h = img.height as u32;
    let is_pgm = path
        .extension()
        .map(|e| e.eq_ignore_ascii_case("pgm"))
        .unwrap_or(false);
    match (&img.chroma, is_pgm) {
        (Some([cb, cr]), false) => {
            let mut buf = image::RgbImage::new(w, h);
            for (i, px) in buf.pixels_mut().enumerate() {
                let y = img.luma[i].clamp(0.0, 1.0);
                let (r, g, b) = ycbcr_to_rgb(y, cb[i], cr[i]);
                px.0 = [quantize(r), quantize(g), quantize(b)];
            }
            buf.save(path).map_err(|source| Error::ImageWrite {
                path: path.to_path_buf(),
                source,
            })
        }
        _ => {
            // PGM output is grayscale by definition; chroma is dropped there.
            let mut buf = image::GrayImage::new(w, h);
            for (i, px) in buf.pixels_mut().enumerate() {
                px.0 = [quantize(img.luma[i])];
            }
            buf.save(path).map_err(|source| Error::ImageWrite {
                path: path.to_path_buf(),
                source,
            })
        }
    }
}

/// Reads a mask image; any nonzero value in any channel marks a rain pixel.
pub fn load_mask(path: &Path, img: &Image) -> Result<RainMask> {
    let dyn_img = image::open(path).map_err(|source| Error::ImageRead {
        path: path.to_path_buf(),
        source,
    })?;
    let rgb = dyn_img.to_rgb8();
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    if w != img.width || h != img.height {
        return Err(Error::MaskDimensionMismatch {
            mask_w: w,
            mask_h: h,
            img_w: img.width,
            img_h: img.height,
        });
    }
    let flags = rgb
        .pixels()
        .map(|p| p.0[0] != 0 || p.0[1] != 0 || p.0[2] != 0)
        .collect();
    Ok(RainMask::new(w, h, flags))
}
