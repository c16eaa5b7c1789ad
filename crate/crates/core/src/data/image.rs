use std::path::Path;

use image::{DynamicImage, ImageFormat, RgbImage};

use crate::nn::Tensor;

use super::DataError;

/// RGB image with channel values in `[0, 1]`, row-major `(height, width, 3)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl Image {
    pub const CHANNELS: usize = 3;

    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Result<Self, DataError> {
        if width == 0 || height == 0 || data.len() != width * height * Self::CHANNELS {
            return Err(DataError::InvalidArgument(format!(
                "{width}x{height} RGB image needs {} values, got {}",
                width * height * Self::CHANNELS,
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, rgb: [f32; 3]) -> Self {
        let data = rgb.iter().copied().cycle().take(width * height * 3).collect();
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn pixel(&self, x: usize, y: usize) -> [f32; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn set_pixel(&mut self, x: usize, y: usize, rgb: [f32; 3]) {
        let i = (y * self.width + x) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    /// Mean Rec. 601 luma.
    pub fn mean_luminance(&self) -> f32 {
        let sum: f64 = self
            .data
            .chunks_exact(3)
            .map(|p| 0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64)
            .sum();
        (sum / (self.width * self.height) as f64) as f32
    }

    /// Bilinear sample at continuous pixel-centre coordinates, clamping to the
    /// edge outside the image.
    pub fn sample_bilinear(&self, x: f32, y: f32) -> [f32; 3] {
        let max_x = (self.width - 1) as f32;
        let max_y = (self.height - 1) as f32;
        let x = x.clamp(0.0, max_x);
        let y = y.clamp(0.0, max_y);
        let x0 = x.floor() as usize;
        let y0 = y.floor() as usize;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let fx = x - x0 as f32;
        let fy = y - y0 as f32;
        let (a, b, c, d) = (
            self.pixel(x0, y0),
            self.pixel(x1, y0),
            self.pixel(x0, y1),
            self.pixel(x1, y1),
        );
        let mut out = [0.0; 3];
        for k in 0..3 {
            let top = a[k] + (b[k] - a[k]) * fx;
            let bottom = c[k] + (d[k] - c[k]) * fx;
            out[k] = top + (bottom - top) * fy;
        }
        out
    }

    /// Bilinear resize with half-pixel centres. Same-size resizing returns a
    /// copy.
    pub fn resize(&self, width: usize, height: usize) -> Image {
        if width == self.width && height == self.height {
            return self.clone();
        }
        let sx = self.width as f32 / width as f32;
        let sy = self.height as f32 / height as f32;
        let mut out = Image::filled(width, height, [0.0; 3]);
        for y in 0..height {
            let src_y = (y as f32 + 0.5) * sy - 0.5;
            for x in 0..width {
                let src_x = (x as f32 + 0.5) * sx - 0.5;
                out.set_pixel(x, y, self.sample_bilinear(src_x, src_y));
            }
        }
        out
    }

    pub fn flip_horizontal(&self) -> Image {
        let mut out = self.clone();
        for y in 0..self.height {
            for x in 0..self.width {
                out.set_pixel(self.width - 1 - x, y, self.pixel(x, y));
            }
        }
        out
    }

    pub fn from_dynamic(img: &DynamicImage) -> Image {
        // Grayscale and alpha inputs become plain RGB.
        let rgb = img.to_rgb8();
        let data = rgb.as_raw().iter().map(|&v| v as f32 / 255.0).collect();
        Image {
            width: rgb.width() as usize,
            height: rgb.height() as usize,
            data,
        }
    }

    pub fn decode(bytes: &[u8]) -> Result<Image, DataError> {
        let img = image::load_from_memory(bytes).map_err(|e| DataError::Decode {
            path: "<memory>".into(),
            msg: e.to_string(),
        })?;
        Ok(Image::from_dynamic(&img))
    }

    /// Decodes a PNG or PPM/PGM file.
    pub fn load(path: impl AsRef<Path>) -> Result<Image, DataError> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| DataError::Decode {
            path: path.display().to_string(),
            msg: e.to_string(),
        })?;
        let img = image::load_from_memory(&bytes).map_err(|e| DataError::Decode {
            path: path.display().to_string(),
            msg: e.to_string(),
        })?;
        Ok(Image::from_dynamic(&img))
    }

    pub fn to_rgb8(&self) -> RgbImage {
        let raw = self
            .data
            .iter()
            .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
            .collect();
        RgbImage::from_raw(self.width as u32, self.height as u32, raw)
            .expect("buffer length matches dimensions")
    }

    /// Encodes as PNG.
    pub fn encode_png(&self) -> Vec<u8> {
        let mut out = std::io::Cursor::new(Vec::new());
        self.to_rgb8()
            .write_to(&mut out, ImageFormat::Png)
            .expect("PNG encoding into memory cannot fail");
        out.into_inner()
    }

    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<(), DataError> {
        std::fs::write(path, self.encode_png())?;
        Ok(())
    }

    /// `(height, width, 3)` tensor.
    pub fn to_tensor(&self) -> Tensor<f32> {
        Tensor::new(vec![self.height, self.width, 3], self.data.clone())
            .expect("image buffer matches its shape")
    }

    /// Quantises to 8 bits per channel, as saving and reloading would.
    pub fn quantized(&self) -> Image {
        Image {
            width: self.width,
            height: self.height,
            data: self
                .data
                .iter()
                .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() / 255.0)
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn png_round_trip_of_quantized_image() {
        let img = Image::new(2, 1, vec![0.0, 0.5, 1.0, 0.25, 0.75, 0.1]).unwrap().quantized();
        let back = Image::decode(&img.encode_png()).unwrap();
        assert_eq!(back, img);
    }

    #[test]
    fn grayscale_is_replicated() {
        let gray = image::GrayImage::from_raw(2, 2, vec![0, 255, 128, 64]).unwrap();
        let img = Image::from_dynamic(&DynamicImage::ImageLuma8(gray));
        let p = img.pixel(1, 0);
        assert_eq!(p, [1.0, 1.0, 1.0]);
        let q = img.pixel(0, 1);
        assert!(q[0] == q[1] && q[1] == q[2]);
    }

    #[test]
    fn resize_preserves_constant_and_range() {
        let img = Image::filled(7, 5, [0.2, 0.4, 0.6]);
        let r = img.resize(16, 16);
        assert_eq!((r.width(), r.height()), (16, 16));
        assert!(r.data().chunks(3).all(|p| (p[0] - 0.2).abs() < 1e-6 && (p[2] - 0.6).abs() < 1e-6));
    }

    #[test]
    fn flip_is_involution() {
        let img = Image::new(3, 1, vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]).unwrap();
        assert_ne!(img.flip_horizontal(), img);
        assert_eq!(img.flip_horizontal().flip_horizontal(), img);
    }

    #[test]
    fn garbage_does_not_decode() {
        assert!(matches!(Image::decode(b"not an image"), Err(DataError::Decode { .. })));
    }
}
