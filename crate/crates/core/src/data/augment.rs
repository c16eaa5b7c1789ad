use rand::Rng;
use serde::{Deserialize, Serialize};

use super::image::Image;
use super::DataError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentConfig {
    pub flip_probability: f64,
    /// Scale range; values above 1 zoom in.
    pub zoom: (f64, f64),
    /// Rotation range in degrees, symmetric about zero.
    pub rotation_deg: (f64, f64),
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            flip_probability: 0.5,
            zoom: (0.9, 1.1),
            rotation_deg: (-15.0, 15.0),
        }
    }
}

impl AugmentConfig {
    pub fn identity() -> Self {
        Self {
            flip_probability: 0.0,
            zoom: (1.0, 1.0),
            rotation_deg: (0.0, 0.0),
        }
    }

    pub fn validate(&self) -> Result<(), DataError> {
        let bad = |m: &str| Err(DataError::InvalidArgument(m.to_string()));
        if !(0.0..=1.0).contains(&self.flip_probability) {
            return bad("flip probability must be in [0, 1]");
        }
        let (lo, hi) = self.zoom;
        if !(lo > 0.0 && lo <= 1.0 && hi >= 1.0) {
            return bad("zoom range must be positive and contain 1.0");
        }
        let (a, b) = self.rotation_deg;
        if a != -b || a > 0.0 {
            return bad("rotation range must be symmetric about 0");
        }
        Ok(())
    }
}

fn uniform(rng: &mut impl Rng, (lo, hi): (f64, f64)) -> f64 {
    // Always consumes one draw, even for a degenerate range.
    lo + (hi - lo) * rng.gen::<f64>()
}

/// Random horizontal flip, then zoom about the centre and rotation, both
/// resampled bilinearly with edge replication. The output has the input's
/// dimensions. Exactly three random draws are consumed per call.
pub fn augment(image: &Image, config: &AugmentConfig, rng: &mut impl Rng) -> Image {
    let flip = rng.gen::<f64>() < config.flip_probability;
    let scale = uniform(rng, config.zoom) as f32;
    let angle = (uniform(rng, config.rotation_deg) as f32).to_radians();

    let base = if flip {
        image.flip_horizontal()
    } else {
        image.clone()
    };
    if scale == 1.0 && angle == 0.0 {
        return base;
    }
    let (w, h) = (image.width(), image.height());
    let cx = (w as f32 - 1.0) / 2.0;
    let cy = (h as f32 - 1.0) / 2.0;
    let (sin, cos) = angle.sin_cos();
    let mut out = Image::filled(w, h, [0.0; 3]);
    for y in 0..h {
        for x in 0..w {
            // Inverse map: output pixel -> source location.
            let dx = (x as f32 - cx) / scale;
            let dy = (y as f32 - cy) / scale;
            let sx = cos * dx + sin * dy + cx;
            let sy = -sin * dx + cos * dy + cy;
            out.set_pixel(x, y, base.sample_bilinear(sx, sy));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn gradient(w: usize, h: usize) -> Image {
        let data = (0..w * h * 3).map(|i| (i % 17) as f32 / 16.0).collect();
        Image::new(w, h, data).unwrap()
    }

    #[test]
    fn identity_config_is_identity() {
        let img = gradient(9, 7);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..5 {
            assert_eq!(augment(&img, &AugmentConfig::identity(), &mut rng), img);
        }
    }

    #[test]
    fn forced_flip_twice_restores() {
        let img = gradient(8, 8);
        let cfg = AugmentConfig {
            flip_probability: 1.0,
            ..AugmentConfig::identity()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let once = augment(&img, &cfg, &mut rng);
        assert_ne!(once, img);
        assert_eq!(augment(&once, &cfg, &mut rng), img);
    }

    #[test]
    fn seeded_runs_match_and_keep_shape() {
        let img = gradient(12, 10);
        let cfg = AugmentConfig::default();
        let run = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..4).map(|_| augment(&img, &cfg, &mut rng)).collect::<Vec<_>>()
        };
        let a = run(5);
        assert_eq!(a, run(5));
        assert!(a.iter().all(|i| i.width() == 12 && i.height() == 10));
        assert!(a.iter().flat_map(|i| i.data()).all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn config_validation() {
        assert!(AugmentConfig::default().validate().is_ok());
        let c = AugmentConfig { zoom: (1.1, 1.2), ..AugmentConfig::default() };
        assert!(c.validate().is_err());
        let c = AugmentConfig { rotation_deg: (-10.0, 15.0), ..AugmentConfig::default() };
        assert!(c.validate().is_err());
    }
}
