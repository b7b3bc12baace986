//! Deterministic image corruptions: 16 kinds at severities 1 to 5, plus the
//! identity at severity 0.

mod dataset;
mod filters;
mod params;
mod raster;
mod spec;
mod transforms;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub use dataset::{corrupt_dataset, corrupted_image_path, CorruptionRunReport, ItemFailure};
pub use params::{ParamSet, ParamTable, DEFAULT_PARAMS_TOML};
pub use raster::{psnr, RgbImage};
pub use spec::{enumerate_corruptions, CorruptionKind, CorruptionSpec, CLEAN_KEY, MAX_SEVERITY};

use crate::error::{Error, Result};
use raster::Canvas;

/// Applies corruptions using one parameter table.
#[derive(Clone, Debug)]
pub struct Corruptor {
    params: ParamTable,
}

impl Default for Corruptor {
    fn default() -> Self {
        Self::new(ParamTable::builtin())
    }
}

impl Corruptor {
    pub fn new(params: ParamTable) -> Self {
        Self { params }
    }

    pub fn params(&self) -> &ParamTable {
        &self.params
    }

    /// Corrupt `image`. Stochastic kinds draw only from a ChaCha stream keyed by
    /// `(seed, image_id, spec key)`, so equal arguments give equal bytes.
    pub fn corrupt(
        &self,
        image: &RgbImage,
        spec: &CorruptionSpec,
        seed: u64,
        image_id: &str,
    ) -> Result<RgbImage> {
        if image.width() == 0 || image.height() == 0 {
            return Err(Error::input(format!("image {image_id:?} has zero size")));
        }
        let (kind, severity) = match *spec {
            CorruptionSpec::Clean => return Ok(image.clone()),
            CorruptionSpec::Corrupted { kind, severity } => (kind, severity),
        };
        let p = self.params.params(kind, severity)?;
        let mut rng = if self.params.is_stochastic(kind) {
            run_stream(seed, image_id, &spec.key())
        } else {
            pattern_stream(self.params.pattern_seed(), kind)
        };

        use CorruptionKind::*;
        if kind == JpegCompression {
            return transforms::jpeg_compression(image, p);
        }
        let canvas = Canvas::from_image(image);
        let out = match kind {
            GaussianNoise => transforms::gaussian_noise(&canvas, p, &mut rng)?,
            ShotNoise => transforms::shot_noise(&canvas, p, &mut rng)?,
            ImpulseNoise => transforms::impulse_noise(&canvas, p, &mut rng)?,
            SpeckleNoise => transforms::speckle_noise(&canvas, p, &mut rng)?,
            DefocusBlur => transforms::defocus_blur(&canvas, p)?,
            GlassBlur => transforms::glass_blur(&canvas, p, &mut rng)?,
            MotionBlur => transforms::motion_blur(&canvas, p)?,
            ZoomBlur => transforms::zoom_blur(&canvas, p)?,
            Snow => transforms::snow(&canvas, p, &mut rng)?,
            Frost => transforms::frost(&canvas, p, &mut rng)?,
            Fog => transforms::fog(&canvas, p, &mut rng)?,
            Brightness => transforms::brightness(&canvas, p)?,
            Contrast => transforms::contrast(&canvas, p)?,
            Elastic => transforms::elastic(&canvas, p, &mut rng)?,
            Pixelate => transforms::pixelate(&canvas, p)?,
            JpegCompression => unreachable!("handled above"),
        };
        Ok(out.to_image())
    }
}

fn run_stream(seed: u64, image_id: &str, key: &str) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(b"corrobe/run/v1");
    h.update(seed.to_le_bytes());
    h.update((image_id.len() as u64).to_le_bytes());
    h.update(image_id.as_bytes());
    h.update((key.len() as u64).to_le_bytes());
    h.update(key.as_bytes());
    ChaCha8Rng::from_seed(h.finalize().into())
}

fn pattern_stream(pattern_seed: u64, kind: CorruptionKind) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(b"corrobe/pattern/v1");
    h.update(pattern_seed.to_le_bytes());
    h.update(kind.as_str().as_bytes());
    ChaCha8Rng::from_seed(h.finalize().into())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gradient(w: u32, h: u32) -> RgbImage {
        RgbImage::from_fn(w, h, |x, y| [(x * 4) as u8, (y * 4) as u8, ((x + y) * 2) as u8])
    }

    #[test]
    fn clean_is_byte_identical() {
        let c = Corruptor::default();
        let img = gradient(32, 24);
        let spec = CorruptionSpec::new(CorruptionKind::Snow, 0).unwrap();
        assert_eq!(c.corrupt(&img, &spec, 99, "a").unwrap(), img);
    }

    #[test]
    fn zero_sized_image_is_input_error() {
        let c = Corruptor::default();
        let img = RgbImage::new(0, 0, vec![]).unwrap();
        let spec: CorruptionSpec = "fog_2".parse().unwrap();
        assert!(matches!(c.corrupt(&img, &spec, 0, "z"), Err(Error::Input(_))));
    }

    #[test]
    fn every_spec_preserves_shape_and_repeats_exactly() {
        let c = Corruptor::default();
        let img = gradient(21, 17);
        for spec in enumerate_corruptions() {
            let a = c.corrupt(&img, &spec, 5, "img").unwrap();
            let b = c.corrupt(&img, &spec, 5, "img").unwrap();
            assert_eq!((a.width(), a.height()), (21, 17), "{spec}");
            assert_eq!(a, b, "{spec}");
        }
    }

    #[test]
    fn stochastic_stream_depends_on_seed_and_id() {
        let c = Corruptor::default();
        let img = gradient(16, 16);
        let spec: CorruptionSpec = "gaussian_noise_2".parse().unwrap();
        let base = c.corrupt(&img, &spec, 1, "a").unwrap();
        assert_ne!(base, c.corrupt(&img, &spec, 2, "a").unwrap());
        assert_ne!(base, c.corrupt(&img, &spec, 1, "b").unwrap());
    }

    #[test]
    fn deterministic_kinds_ignore_seed() {
        let c = Corruptor::default();
        let img = gradient(16, 16);
        for key in ["fog_3", "elastic_4", "motion_blur_2"] {
            let spec: CorruptionSpec = key.parse().unwrap();
            assert_eq!(
                c.corrupt(&img, &spec, 1, "a").unwrap(),
                c.corrupt(&img, &spec, 777, "b").unwrap(),
                "{key}"
            );
        }
    }

    #[test]
    fn gaussian_noise_variance_matches_config() {
        let c = Corruptor::default();
        let img = RgbImage::from_fn(64, 64, |_, _| [128, 128, 128]);
        let spec: CorruptionSpec = "gaussian_noise_3".parse().unwrap();
        let sigma = c
            .params()
            .params(CorruptionKind::GaussianNoise, 3)
            .unwrap()
            .get("sigma")
            .unwrap();
        let out = c.corrupt(&img, &spec, 7, "gray").unwrap();
        let vals: Vec<f64> = out.data().iter().map(|&v| v as f64 / 255.0).collect();
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let rel = (var - sigma * sigma).abs() / (sigma * sigma);
        assert!(rel < 0.10, "variance {var} vs sigma^2 {} (rel {rel})", sigma * sigma);
    }

    #[test]
    fn pixelate_is_blockwise_constant() {
        let c = Corruptor::default();
        let img = RgbImage::from_fn(64, 64, |x, y| if (x + y) % 2 == 0 { [255; 3] } else { [0; 3] });
        let b = c
            .params()
            .params(CorruptionKind::Pixelate, 5)
            .unwrap()
            .get_usize("block")
            .unwrap() as u32;
        let out = c.corrupt(&img, &"pixelate_5".parse().unwrap(), 0, "cb").unwrap();
        // brute-force scan: every tile uniform, tiles counted independently
        let mut blocks = 0;
        for by in (0..64).step_by(b as usize) {
            for bx in (0..64).step_by(b as usize) {
                blocks += 1;
                let first = out.pixel(bx, by);
                for y in by..(by + b).min(64) {
                    for x in bx..(bx + b).min(64) {
                        assert_eq!(out.pixel(x, y), first, "tile ({bx},{by})");
                    }
                }
            }
        }
        let per_side = 64u32.div_ceil(b);
        assert_eq!(blocks, per_side * per_side);
    }
}
