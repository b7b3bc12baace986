//! The individual corruption transforms. Each works on a [`Canvas`] in [0, 1]
//! and leaves clamping/quantisation to the caller, except JPEG which needs the
//! 8-bit image itself.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};

use super::filters::{self, bilinear};
use super::params::ParamSet;
use super::raster::{Canvas, RgbImage};
use crate::error::{Error, Result};

pub(crate) fn gaussian_noise(img: &Canvas, p: &ParamSet, rng: &mut ChaCha8Rng) -> Result<Canvas> {
    let normal = normal(0.0, p.get("sigma")?)?;
    let mut out = img.clone();
    for v in &mut out.data {
        *v += normal.sample(rng) as f32;
    }
    Ok(out)
}

pub(crate) fn shot_noise(img: &Canvas, p: &ParamSet, rng: &mut ChaCha8Rng) -> Result<Canvas> {
    let rate = p.get("rate")?;
    if rate <= 0.0 {
        return Err(Error::config("shot_noise rate must be positive"));
    }
    let mut out = img.clone();
    for v in &mut out.data {
        let lambda = (*v as f64).clamp(0.0, 1.0) * rate;
        let draw = if lambda > 0.0 {
            Poisson::new(lambda)
                .map_err(|e| Error::config(format!("shot_noise: {e}")))?
                .sample(rng)
        } else {
            0.0
        };
        *v = (draw / rate) as f32;
    }
    Ok(out)
}

pub(crate) fn impulse_noise(img: &Canvas, p: &ParamSet, rng: &mut ChaCha8Rng) -> Result<Canvas> {
    let amount = p.get("amount")?;
    let mut out = img.clone();
    for v in &mut out.data {
        let hit: f64 = rng.random();
        let salt: bool = rng.random();
        if hit < amount {
            *v = if salt { 1.0 } else { 0.0 };
        }
    }
    Ok(out)
}

pub(crate) fn speckle_noise(img: &Canvas, p: &ParamSet, rng: &mut ChaCha8Rng) -> Result<Canvas> {
    let normal = normal(0.0, p.get("sigma")?)?;
    let mut out = img.clone();
    for v in &mut out.data {
        *v += *v * normal.sample(rng) as f32;
    }
    Ok(out)
}

pub(crate) fn defocus_blur(img: &Canvas, p: &ParamSet) -> Result<Canvas> {
    let taps = filters::disk_taps(p.get("radius")? as f32);
    let blurred = filters::convolve_taps(&img.data, img.w, img.h, 3, &taps);
    let data = filters::gaussian_blur(&blurred, img.w, img.h, 3, p.get("alias_sigma")? as f32);
    Ok(Canvas { data, ..*img })
}

pub(crate) fn glass_blur(img: &Canvas, p: &ParamSet, rng: &mut ChaCha8Rng) -> Result<Canvas> {
    let sigma = p.get("sigma")? as f32;
    let delta = p.get_usize("max_delta")?;
    let iterations = p.get_usize("iterations")?;
    let (w, h) = (img.w, img.h);
    let mut data = filters::gaussian_blur(&img.data, w, h, 3, sigma);
    if w > 2 * delta && h > 2 * delta {
        let d = delta as i64;
        for _ in 0..iterations {
            for y in (delta..h - delta).rev() {
                for x in (delta..w - delta).rev() {
                    let dx = rng.random_range(-d..=d);
                    let dy = rng.random_range(-d..=d);
                    let (sx, sy) = ((x as i64 + dx) as usize, (y as i64 + dy) as usize);
                    for c in 0..3 {
                        data.swap((y * w + x) * 3 + c, (sy * w + sx) * 3 + c);
                    }
                }
            }
        }
    }
    let data = filters::gaussian_blur(&data, w, h, 3, sigma);
    Ok(Canvas { data, ..*img })
}

pub(crate) fn motion_blur(img: &Canvas, p: &ParamSet) -> Result<Canvas> {
    let taps = filters::motion_taps(
        p.get_usize("length")?,
        p.get("sigma")? as f32,
        p.get("angle_deg")? as f32,
    );
    let data = filters::convolve_taps(&img.data, img.w, img.h, 3, &taps);
    Ok(Canvas { data, ..*img })
}

pub(crate) fn zoom_blur(img: &Canvas, p: &ParamSet) -> Result<Canvas> {
    let max_zoom = p.get("max_zoom")?;
    let step = p.get("step")?;
    if step <= 0.0 {
        return Err(Error::config("zoom_blur step must be positive"));
    }
    let (w, h) = (img.w, img.h);
    let cx = (w as f32 - 1.0) / 2.0;
    let cy = (h as f32 - 1.0) / 2.0;
    let mut acc = img.data.clone();
    let mut layers = 1usize;
    let mut k = 1;
    loop {
        let zoom = 1.0 + k as f64 * step;
        if zoom > max_zoom + 1e-9 {
            break;
        }
        let z = zoom as f32;
        for y in 0..h {
            for x in 0..w {
                let sx = cx + (x as f32 - cx) / z;
                let sy = cy + (y as f32 - cy) / z;
                for c in 0..3 {
                    acc[(y * w + x) * 3 + c] += bilinear(&img.data, w, h, 3, sx, sy, c);
                }
            }
        }
        layers += 1;
        k += 1;
    }
    let inv = 1.0 / layers as f32;
    acc.iter_mut().for_each(|v| *v *= inv);
    Ok(Canvas { data: acc, ..*img })
}

pub(crate) fn snow(img: &Canvas, p: &ParamSet, rng: &mut ChaCha8Rng) -> Result<Canvas> {
    let normal = normal(p.get("mean")?, p.get("std")?)?;
    let zoom = p.get("zoom")?.max(1.0) as f32;
    let threshold = p.get("threshold")? as f32;
    let blend = p.get("blend")? as f32;
    let (w, h) = (img.w, img.h);

    // coarse flake field, upsampled so flakes span several pixels
    let lw = ((w as f32 / zoom).ceil() as usize).max(1);
    let lh = ((h as f32 / zoom).ceil() as usize).max(1);
    let coarse: Vec<f32> = (0..lw * lh).map(|_| normal.sample(rng) as f32).collect();
    let mut layer = vec![0.0f32; w * h];
    for y in 0..h {
        for x in 0..w {
            let v = bilinear(&coarse, lw, lh, 1, x as f32 / zoom, y as f32 / zoom, 0);
            layer[y * w + x] = if v < threshold { 0.0 } else { v };
        }
    }
    let angle = rng.random_range(-135.0f32..-45.0);
    let taps = filters::motion_taps(p.get_usize("length")?, p.get("sigma")? as f32, angle);
    let layer = filters::convolve_taps(&layer, w, h, 1, &taps);

    let mut out = img.clone();
    for y in 0..h {
        for x in 0..w {
            let i = out.idx(x, y, 0);
            let gray = 0.299 * img.data[i] + 0.587 * img.data[i + 1] + 0.114 * img.data[i + 2];
            let lifted = gray * 1.5 + 0.5;
            let flakes = layer[y * w + x] + layer[(h - 1 - y) * w + (w - 1 - x)];
            for c in 0..3 {
                let v = img.data[i + c];
                out.data[i + c] = blend * v + (1.0 - blend) * v.max(lifted) + flakes;
            }
        }
    }
    Ok(out)
}

pub(crate) fn frost(img: &Canvas, p: &ParamSet, rng: &mut ChaCha8Rng) -> Result<Canvas> {
    let image_weight = p.get("image_weight")? as f32;
    let frost_weight = p.get("frost_weight")? as f32;
    let (w, h) = (img.w, img.h);

    // multi-octave smoothed noise, normalised and squared into bright streaks
    let mut texture = vec![0.0f32; w * h];
    let mut amplitude = 1.0f32;
    for octave in 0..4 {
        let noise: Vec<f32> = (0..w * h).map(|_| rng.random::<f32>()).collect();
        let smooth = filters::gaussian_blur(&noise, w, h, 1, (1u32 << octave) as f32 * 0.75);
        for (t, s) in texture.iter_mut().zip(&smooth) {
            *t += amplitude * s;
        }
        amplitude *= 0.6;
    }
    normalise_unit(&mut texture);
    let tint = [0.88f32, 0.94, 1.0];

    let mut out = img.clone();
    for (px, t) in texture.iter().enumerate() {
        let f = t * t;
        for c in 0..3 {
            let i = px * 3 + c;
            out.data[i] = image_weight * img.data[i] + frost_weight * f * tint[c];
        }
    }
    Ok(out)
}

pub(crate) fn fog(img: &Canvas, p: &ParamSet, rng: &mut ChaCha8Rng) -> Result<Canvas> {
    let strength = p.get("strength")? as f32;
    let decay = p.get("decay")?;
    let size = img.w.max(img.h).max(2).next_power_of_two();
    let plasma = plasma_fractal(size, decay, rng)?;
    let max_val = img.data.iter().copied().fold(0.0f32, f32::max);
    let scale = max_val / (max_val + strength);
    let mut out = img.clone();
    for y in 0..img.h {
        for x in 0..img.w {
            let fogv = strength * plasma[y * size + x];
            for c in 0..3 {
                let i = out.idx(x, y, c);
                out.data[i] = (img.data[i] + fogv) * scale;
            }
        }
    }
    Ok(out)
}

/// Diamond-square fractal on a `size` x `size` torus, normalised to [0, 1].
fn plasma_fractal(size: usize, decay: f64, rng: &mut ChaCha8Rng) -> Result<Vec<f32>> {
    if decay <= 0.0 {
        return Err(Error::config("fog decay must be positive"));
    }
    let mut m = vec![0.0f64; size * size];
    let at = |r: usize, c: usize| (r % size) * size + (c % size);
    let mut step = size;
    let mut wibble = 100.0f64;
    while step >= 2 {
        let half = step / 2;
        let jitter = |rng: &mut ChaCha8Rng| wibble * rng.random_range(-wibble..=wibble);
        // squares
        for r in (0..size).step_by(step) {
            for c in (0..size).step_by(step) {
                let sum = m[at(r, c)] + m[at(r + step, c)] + m[at(r, c + step)] + m[at(r + step, c + step)];
                m[at(r + half, c + half)] = sum / 4.0 + jitter(rng);
            }
        }
        // diamonds on the grid rows, then on the grid columns
        for r in (0..size).step_by(step) {
            for c in (0..size).step_by(step) {
                let sum = m[at(r + size - half, c + half)]
                    + m[at(r + half, c + half)]
                    + m[at(r, c)]
                    + m[at(r, c + step)];
                m[at(r, c + half)] = sum / 4.0 + jitter(rng);
            }
        }
        for r in (0..size).step_by(step) {
            for c in (0..size).step_by(step) {
                let sum = m[at(r + half, c + size - half)]
                    + m[at(r + half, c + half)]
                    + m[at(r, c)]
                    + m[at(r + step, c)];
                m[at(r + half, c)] = sum / 4.0 + jitter(rng);
            }
        }
        step /= 2;
        wibble /= decay;
    }
    let mut out: Vec<f32> = m.into_iter().map(|v| v as f32).collect();
    normalise_unit(&mut out);
    Ok(out)
}

pub(crate) fn brightness(img: &Canvas, p: &ParamSet) -> Result<Canvas> {
    let shift = p.get("shift")? as f32;
    let mut out = img.clone();
    for px in out.data.chunks_exact_mut(3) {
        let (h, s, v) = rgb_to_hsv(px[0], px[1], px[2]);
        let (r, g, b) = hsv_to_rgb(h, s, (v + shift).clamp(0.0, 1.0));
        px.copy_from_slice(&[r, g, b]);
    }
    Ok(out)
}

pub(crate) fn contrast(img: &Canvas, p: &ParamSet) -> Result<Canvas> {
    let factor = p.get("factor")? as f32;
    let n = (img.w * img.h) as f64;
    let mut means = [0.0f64; 3];
    for px in img.data.chunks_exact(3) {
        for c in 0..3 {
            means[c] += px[c] as f64;
        }
    }
    let means = means.map(|m| (m / n) as f32);
    let mut out = img.clone();
    for px in out.data.chunks_exact_mut(3) {
        for c in 0..3 {
            px[c] = (px[c] - means[c]) * factor + means[c];
        }
    }
    Ok(out)
}

pub(crate) fn elastic(img: &Canvas, p: &ParamSet, rng: &mut ChaCha8Rng) -> Result<Canvas> {
    let (w, h) = (img.w, img.h);
    let side = w.min(h) as f32;
    let alpha = p.get("alpha_frac")? as f32 * side;
    let sigma = p.get("sigma_frac")? as f32 * side;
    let mut field: Vec<f32> = (0..w * h * 2).map(|_| rng.random_range(-1.0f32..=1.0)).collect();
    field = filters::gaussian_blur(&field, w, h, 2, sigma);
    let peak = field.iter().fold(0.0f32, |m, v| m.max(v.abs()));
    let scale = if peak > 0.0 { alpha / peak } else { 0.0 };
    let mut out = img.clone();
    for y in 0..h {
        for x in 0..w {
            let f = (y * w + x) * 2;
            let sx = x as f32 + field[f] * scale;
            let sy = y as f32 + field[f + 1] * scale;
            for c in 0..3 {
                let i = out.idx(x, y, c);
                out.data[i] = bilinear(&img.data, w, h, 3, sx, sy, c);
            }
        }
    }
    Ok(out)
}

pub(crate) fn pixelate(img: &Canvas, p: &ParamSet) -> Result<Canvas> {
    let block = p.get_usize("block")?;
    if block == 0 {
        return Err(Error::config("pixelate block must be at least 1"));
    }
    let (w, h) = (img.w, img.h);
    let mut out = img.clone();
    for by in (0..h).step_by(block) {
        for bx in (0..w).step_by(block) {
            let (ey, ex) = ((by + block).min(h), (bx + block).min(w));
            let count = ((ey - by) * (ex - bx)) as f32;
            let mut sums = [0.0f32; 3];
            for y in by..ey {
                for x in bx..ex {
                    for (c, s) in sums.iter_mut().enumerate() {
                        *s += img.at(x, y, c);
                    }
                }
            }
            let means = sums.map(|s| s / count);
            for y in by..ey {
                for x in bx..ex {
                    for (c, m) in means.iter().enumerate() {
                        let i = out.idx(x, y, c);
                        out.data[i] = *m;
                    }
                }
            }
        }
    }
    Ok(out)
}

pub(crate) fn jpeg_compression(img: &RgbImage, p: &ParamSet) -> Result<RgbImage> {
    use image::ImageEncoder;
    let quality = p.get_usize("quality")?;
    if !(1..=100).contains(&quality) {
        return Err(Error::config(format!("jpeg quality {quality} outside 1..=100")));
    }
    let mut encoded = Vec::new();
    image::codecs::jpeg::JpegEncoder::new_with_quality(&mut encoded, quality as u8).write_image(
        img.data(),
        img.width(),
        img.height(),
        image::ExtendedColorType::Rgb8,
    )?;
    let decoded = image::load_from_memory_with_format(&encoded, image::ImageFormat::Jpeg)?.to_rgb8();
    RgbImage::new(img.width(), img.height(), decoded.into_raw())
}

fn normal(mean: f64, sigma: f64) -> Result<Normal<f64>> {
    Normal::new(mean, sigma).map_err(|e| Error::config(format!("invalid normal parameters: {e}")))
}

fn normalise_unit(values: &mut [f32]) {
    let (lo, hi) = values
        .iter()
        .fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let range = hi - lo;
    for v in values.iter_mut() {
        *v = if range > 0.0 { (*v - lo) / range } else { 0.0 };
    }
}

fn rgb_to_hsv(r: f32, g: f32, b: f32) -> (f32, f32, f32) {
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let d = max - min;
    let h = if d == 0.0 {
        0.0
    } else if max == r {
        ((g - b) / d).rem_euclid(6.0)
    } else if max == g {
        (b - r) / d + 2.0
    } else {
        (r - g) / d + 4.0
    };
    let s = if max == 0.0 { 0.0 } else { d / max };
    (h / 6.0, s, max)
}

fn hsv_to_rgb(h: f32, s: f32, v: f32) -> (f32, f32, f32) {
    let h6 = (h * 6.0).rem_euclid(6.0);
    let sector = h6.floor();
    let f = h6 - sector;
    let p = v * (1.0 - s);
    let q = v * (1.0 - s * f);
    let t = v * (1.0 - s * (1.0 - f));
    match sector as u8 {
        0 => (v, t, p),
        1 => (q, v, p),
        2 => (p, v, t),
        3 => (p, q, v),
        4 => (t, p, v),
        _ => (v, p, q),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hsv_round_trip() {
        for &(r, g, b) in &[(0.2, 0.4, 0.6), (1.0, 0.0, 0.0), (0.5, 0.5, 0.5), (0.9, 0.8, 0.1)] {
            let (h, s, v) = rgb_to_hsv(r, g, b);
            let (r2, g2, b2) = hsv_to_rgb(h, s, v);
            assert!((r - r2).abs() < 1e-5 && (g - g2).abs() < 1e-5 && (b - b2).abs() < 1e-5);
        }
    }

    #[test]
    fn plasma_is_normalised() {
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = plasma_fractal(32, 2.0, &mut rng).unwrap();
        let lo = p.iter().copied().fold(f32::INFINITY, f32::min);
        let hi = p.iter().copied().fold(f32::NEG_INFINITY, f32::max);
        assert_eq!((lo, hi), (0.0, 1.0));
    }
}
