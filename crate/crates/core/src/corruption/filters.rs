//! Convolution and resampling helpers shared by the blur-like transforms.
//! All borders use symmetric reflection.

use super::raster::reflect;

/// Normalised 1-D Gaussian with radius `ceil(3 sigma)`.
pub(crate) fn gaussian_kernel(sigma: f32) -> Vec<f32> {
    if sigma <= 0.0 {
        return vec![1.0];
    }
    let radius = (3.0 * sigma).ceil().max(1.0) as isize;
    let mut k: Vec<f32> = (-radius..=radius)
        .map(|i| (-(i * i) as f32 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f32 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

/// Separable convolution of an interleaved buffer with `ch` channels.
pub(crate) fn separable(data: &[f32], w: usize, h: usize, ch: usize, kernel: &[f32]) -> Vec<f32> {
    let r = (kernel.len() / 2) as isize;
    let mut tmp = vec![0.0f32; data.len()];
    for y in 0..h {
        for x in 0..w {
            for c in 0..ch {
                let mut acc = 0.0;
                for (i, kv) in kernel.iter().enumerate() {
                    let sx = reflect(x as isize + i as isize - r, w);
                    acc += kv * data[(y * w + sx) * ch + c];
                }
                tmp[(y * w + x) * ch + c] = acc;
            }
        }
    }
    let mut out = vec![0.0f32; data.len()];
    for y in 0..h {
        for x in 0..w {
            for c in 0..ch {
                let mut acc = 0.0;
                for (i, kv) in kernel.iter().enumerate() {
                    let sy = reflect(y as isize + i as isize - r, h);
                    acc += kv * tmp[(sy * w + x) * ch + c];
                }
                out[(y * w + x) * ch + c] = acc;
            }
        }
    }
    out
}

pub(crate) fn gaussian_blur(data: &[f32], w: usize, h: usize, ch: usize, sigma: f32) -> Vec<f32> {
    if sigma <= 0.0 {
        return data.to_vec();
    }
    separable(data, w, h, ch, &gaussian_kernel(sigma))
}

/// Sparse 2-D kernel: (dx, dy, weight) taps.
pub(crate) type Taps = Vec<(isize, isize, f32)>;

pub(crate) fn convolve_taps(data: &[f32], w: usize, h: usize, ch: usize, taps: &Taps) -> Vec<f32> {
    let mut out = vec![0.0f32; data.len()];
    for y in 0..h {
        for x in 0..w {
            for c in 0..ch {
                let mut acc = 0.0;
                for &(dx, dy, kv) in taps {
                    let sx = reflect(x as isize + dx, w);
                    let sy = reflect(y as isize + dy, h);
                    acc += kv * data[(sy * w + sx) * ch + c];
                }
                out[(y * w + x) * ch + c] = acc;
            }
        }
    }
    out
}

/// Normalised disk of the given radius.
pub(crate) fn disk_taps(radius: f32) -> Taps {
    let r = radius.ceil() as isize;
    let mut taps = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            if ((dx * dx + dy * dy) as f32) <= radius * radius {
                taps.push((dx, dy, 1.0));
            }
        }
    }
    normalise(taps)
}

/// One-sided line of `length` taps along `angle_deg`, Gaussian-weighted by distance.
pub(crate) fn motion_taps(length: usize, sigma: f32, angle_deg: f32) -> Taps {
    let (sin, cos) = angle_deg.to_radians().sin_cos();
    let mut taps: Taps = Vec::new();
    for k in 0..length.max(1) {
        let dx = (k as f32 * cos).round() as isize;
        let dy = (k as f32 * sin).round() as isize;
        let wgt = if sigma > 0.0 {
            (-((k * k) as f32) / (2.0 * sigma * sigma)).exp()
        } else {
            1.0
        };
        match taps.iter_mut().find(|t| t.0 == dx && t.1 == dy) {
            Some(t) => t.2 += wgt,
            None => taps.push((dx, dy, wgt)),
        }
    }
    normalise(taps)
}

fn normalise(mut taps: Taps) -> Taps {
    let sum: f32 = taps.iter().map(|t| t.2).sum();
    taps.iter_mut().for_each(|t| t.2 /= sum);
    taps
}

/// Bilinear sample of channel `c` at continuous coordinates (pixel centres on integers).
pub(crate) fn bilinear(data: &[f32], w: usize, h: usize, ch: usize, x: f32, y: f32, c: usize) -> f32 {
    let x0f = x.floor();
    let y0f = y.floor();
    let fx = x - x0f;
    let fy = y - y0f;
    let (x0, y0) = (x0f as isize, y0f as isize);
    let at = |xi: isize, yi: isize| data[(reflect(yi, h) * w + reflect(xi, w)) * ch + c];
    let top = at(x0, y0) + (at(x0 + 1, y0) - at(x0, y0)) * fx;
    let bottom = at(x0, y0 + 1) + (at(x0 + 1, y0 + 1) - at(x0, y0 + 1)) * fx;
    top + (bottom - top) * fy
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernels_are_normalised() {
        let sum: f32 = gaussian_kernel(1.3).iter().sum();
        assert!((sum - 1.0).abs() < 1e-6);
        let sum: f32 = disk_taps(2.5).iter().map(|t| t.2).sum();
        assert!((sum - 1.0).abs() < 1e-6);
        let sum: f32 = motion_taps(9, 4.0, 30.0).iter().map(|t| t.2).sum();
        assert!((sum - 1.0).abs() < 1e-6);
    }

    #[test]
    fn blur_preserves_constant_field() {
        let data = vec![0.25f32; 10 * 6 * 3];
        for v in gaussian_blur(&data, 10, 6, 3, 2.0) {
            assert!((v - 0.25).abs() < 1e-6);
        }
        for v in convolve_taps(&data, 10, 6, 3, &disk_taps(3.0)) {
            assert!((v - 0.25).abs() < 1e-6);
        }
    }

    #[test]
    fn bilinear_interpolates_midpoints() {
        // 2x1 single-channel: 0 and 1
        let data = vec![0.0f32, 1.0];
        assert!((bilinear(&data, 2, 1, 1, 0.5, 0.0, 0) - 0.5).abs() < 1e-6);
        assert_eq!(bilinear(&data, 2, 1, 1, 1.0, 0.0, 0), 1.0);
    }
}
