use std::path::Path;

use image::{DynamicImage, GrayImage, RgbImage};

use super::IoError;

/// A raster image with values in `[0, 1]`, row-major with interleaved channels.
///
/// Row 0 is the top of the image.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterImage {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl RasterImage {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self, IoError> {
        if width == 0 || height == 0 {
            return Err(IoError::InvalidImage(format!("dimensions {width}x{height} must be at least 1")));
        }
        if channels != 1 && channels != 3 {
            return Err(IoError::InvalidImage(format!("{channels} channels; expected 1 or 3")));
        }
        if data.len() != width * height * channels {
            return Err(IoError::InvalidImage(format!(
                "{} values for a {width}x{height}x{channels} image",
                data.len()
            )));
        }
        if let Some(v) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(IoError::InvalidImage(format!("value {v} outside [0, 1]")));
        }
        Ok(Self { width, height, channels, data })
    }

    /// Builds an image from `f(x, y)`, where `(x, y)` are pixel-centre coordinates in `[0, 1]²`.
    /// Values are clamped to `[0, 1]`.
    pub fn from_fn(width: usize, height: usize, channels: usize, f: impl Fn(f64, f64) -> Vec<f64>) -> Self {
        let mut data = Vec::with_capacity(width * height * channels);
        for y in 0..height {
            for x in 0..width {
                let v = f((x as f64 + 0.5) / width as f64, (y as f64 + 0.5) / height as f64);
                assert_eq!(v.len(), channels);
                data.extend(v.into_iter().map(|c| c.clamp(0.0, 1.0)));
            }
        }
        Self { width, height, channels, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn pixel(&self, x: usize, y: usize) -> &[f64] {
        let start = (y * self.width + x) * self.channels;
        &self.data[start..start + self.channels]
    }

    /// Three-channel copy (gray images are replicated).
    pub fn to_rgb(&self) -> Self {
        if self.channels == 3 {
            return self.clone();
        }
        let data = self.data.iter().flat_map(|&v| [v, v, v]).collect();
        Self { data, channels: 3, ..*self }
    }

    /// Bilinear lookup at texture coordinates `(a, b) ∈ [0, 1]²`.
    ///
    /// `a` runs left to right and `b` top to bottom. A wrapped axis is periodic,
    /// otherwise lookups clamp to the border pixels.
    pub fn sample(&self, a: f64, b: f64, wrap: (bool, bool)) -> Vec<f64> {
        let (x0, x1, fx) = Self::axis(a, self.width, wrap.0);
        let (y0, y1, fy) = Self::axis(b, self.height, wrap.1);
        (0..self.channels)
            .map(|c| {
                let top = (1.0 - fx) * self.pixel(x0, y0)[c] + fx * self.pixel(x1, y0)[c];
                let bottom = (1.0 - fx) * self.pixel(x0, y1)[c] + fx * self.pixel(x1, y1)[c];
                (1.0 - fy) * top + fy * bottom
            })
            .collect()
    }

    fn axis(t: f64, n: usize, wrap: bool) -> (usize, usize, f64) {
        let s = t * n as f64 - 0.5;
        let base = s.floor();
        let frac = s - base;
        if wrap {
            let i0 = (base as i64).rem_euclid(n as i64) as usize;
            (i0, (i0 + 1) % n, frac)
        } else if s <= 0.0 {
            (0, 0, 0.0)
        } else if s >= (n - 1) as f64 {
            (n - 1, n - 1, 0.0)
        } else {
            (base as usize, base as usize + 1, frac)
        }
    }

    /// Loads an 8- or 16-bit PNG; images with color become RGB, others gray.
    pub fn load_png(path: &Path) -> Result<Self, IoError> {
        let img = image::open(path).map_err(|source| IoError::Image { path: path.to_path_buf(), source })?;
        let has_color = img.color().has_color();
        let (width, height) = (img.width() as usize, img.height() as usize);
        let (channels, data): (usize, Vec<f64>) = if has_color {
            (3, img.to_rgb16().into_raw().into_iter().map(|v| v as f64 / 65535.0).collect())
        } else {
            (1, img.to_luma16().into_raw().into_iter().map(|v| v as f64 / 65535.0).collect())
        };
        Self::new(width, height, channels, data)
    }

    /// Writes an 8-bit PNG.
    pub fn save_png(&self, path: &Path) -> Result<(), IoError> {
        let bytes: Vec<u8> = self.data.iter().map(|&v| quantize(v)).collect();
        let (w, h) = (self.width as u32, self.height as u32);
        let img = if self.channels == 3 {
            DynamicImage::ImageRgb8(RgbImage::from_raw(w, h, bytes).expect("buffer size matches"))
        } else {
            DynamicImage::ImageLuma8(GrayImage::from_raw(w, h, bytes).expect("buffer size matches"))
        };
        img.save(path).map_err(|source| IoError::Image { path: path.to_path_buf(), source })
    }
}

/// Clamps to `[0, 1]` and rounds to the nearest 8-bit level.
pub fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_images() {
        assert!(RasterImage::new(0, 1, 1, vec![]).is_err());
        assert!(RasterImage::new(1, 1, 2, vec![0.0, 0.0]).is_err());
        assert!(RasterImage::new(1, 1, 1, vec![1.5]).is_err());
        assert!(RasterImage::new(2, 1, 1, vec![0.5]).is_err());
    }

    #[test]
    fn bilinear_sampling() {
        let img = RasterImage::new(2, 1, 1, vec![0.0, 1.0]).unwrap();
        assert_eq!(img.sample(0.25, 0.5, (false, false)), vec![0.0]);
        assert_eq!(img.sample(0.5, 0.5, (false, false)), vec![0.5]);
        assert_eq!(img.sample(0.0, 0.5, (false, false)), vec![0.0]);
        assert_eq!(img.sample(1.0, 0.5, (false, false)), vec![1.0]);
        // across the seam the two border pixels are blended
        assert_eq!(img.sample(0.0, 0.5, (true, false)), vec![0.5]);
        assert_eq!(img.sample(1.0, 0.5, (true, false)), vec![0.5]);
    }

    #[test]
    fn png_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let img = RasterImage::from_fn(7, 5, 3, |x, y| vec![x, y, 0.5 * (x + y)]);
        let path = dir.path().join("img.png");
        img.save_png(&path).unwrap();
        let back = RasterImage::load_png(&path).unwrap();
        assert_eq!((back.width(), back.height(), back.channels()), (7, 5, 3));
        for (a, b) in img.data().iter().zip(back.data()) {
            assert!((a - b).abs() <= 1.0 / 510.0 + 1e-12);
        }
        let gray = RasterImage::from_fn(3, 3, 1, |x, _| vec![x]);
        gray.save_png(&path).unwrap();
        assert_eq!(RasterImage::load_png(&path).unwrap().channels(), 1);
    }
}
