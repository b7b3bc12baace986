use serde::{Deserialize, Serialize};

use crate::tasks::silverman;

pub const GRID_SIZE: usize = 64;
const PAD_FRACTION: f64 = 0.1;
/// Kernel reach kept inside the grid, in bandwidths.
const PAD_BANDWIDTHS: f64 = 3.0;

/// Kernel density sampled on a square grid. `values[row * GRID_SIZE + col]`
/// holds the expected number of points in that cell, so the grid sums to
/// roughly the number of points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub size: usize,
    pub values: Vec<f64>,
}

impl DensityGrid {
    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.size + col]
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Cell (row, col) containing the point, clamped to the grid.
    pub fn cell_of(&self, x: f64, y: f64) -> (usize, usize) {
        let f = |v: f64, lo: f64, hi: f64| (((v - lo) / (hi - lo) * self.size as f64) as usize).min(self.size - 1);
        (f(y, self.y_min, self.y_max), f(x, self.x_min, self.x_max))
    }
}

fn axis_bandwidth(values: &[f64], floor: f64) -> f64 {
    silverman(values).max(floor)
}

/// Product-Gaussian KDE of the points over their bounding box, padded by 10%
/// of the span and at least three bandwidths so almost no mass is clipped.
/// `None` for an empty set.
pub fn density_grid(points: &[[f64; 2]]) -> Option<DensityGrid> {
    if points.is_empty() {
        return None;
    }
    let xs: Vec<f64> = points.iter().map(|p| p[0]).collect();
    let ys: Vec<f64> = points.iter().map(|p| p[1]).collect();
    let bounds = |v: &[f64]| v.iter().fold((f64::MAX, f64::MIN), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    let (x0, x1) = bounds(&xs);
    let (y0, y1) = bounds(&ys);
    let floor = (0.05 * (x1 - x0).max(y1 - y0)).max(1e-3);
    let (hx, hy) = (axis_bandwidth(&xs, floor), axis_bandwidth(&ys, floor));
    let px = (PAD_FRACTION * (x1 - x0)).max(PAD_BANDWIDTHS * hx);
    let py = (PAD_FRACTION * (y1 - y0)).max(PAD_BANDWIDTHS * hy);
    let (x_min, x_max, y_min, y_max) = (x0 - px, x1 + px, y0 - py, y1 + py);
    let dx = (x_max - x_min) / GRID_SIZE as f64;
    let dy = (y_max - y_min) / GRID_SIZE as f64;
    let norm = dx * dy / (2.0 * std::f64::consts::PI * hx * hy);

    let kx: Vec<Vec<f64>> = (0..GRID_SIZE)
        .map(|c| {
            let x = x_min + (c as f64 + 0.5) * dx;
            xs.iter().map(|&p| (-0.5 * ((x - p) / hx).powi(2)).exp()).collect()
        })
        .collect();
    let ky: Vec<Vec<f64>> = (0..GRID_SIZE)
        .map(|r| {
            let y = y_min + (r as f64 + 0.5) * dy;
            ys.iter().map(|&p| (-0.5 * ((y - p) / hy).powi(2)).exp()).collect()
        })
        .collect();
    let mut values = Vec::with_capacity(GRID_SIZE * GRID_SIZE);
    for row in &ky {
        for col in &kx {
            values.push(norm * row.iter().zip(col).map(|(a, b)| a * b).sum::<f64>());
        }
    }
    Some(DensityGrid {
        x_min,
        x_max,
        y_min,
        y_max,
        size: GRID_SIZE,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn argmax(g: &DensityGrid) -> (usize, usize) {
        let k = (0..g.values.len()).max_by(|&a, &b| g.values[a].total_cmp(&g.values[b])).unwrap();
        (k / g.size, k % g.size)
    }

    #[test]
    fn singleton_peaks_at_the_point() {
        let g = density_grid(&[[2.0, -1.0]]).unwrap();
        let (r, c) = argmax(&g);
        let (pr, pc) = g.cell_of(2.0, -1.0);
        assert!(r.abs_diff(pr) <= 1 && c.abs_diff(pc) <= 1);
        assert!((g.total() - 1.0).abs() < 0.05);
    }

    #[test]
    fn two_points_are_bimodal() {
        let g = density_grid(&[[0.0, 0.0], [10.0, 0.0]]).unwrap();
        let (r, _) = g.cell_of(0.0, 0.0);
        let row: Vec<f64> = (0..g.size).map(|c| g.at(r, c)).collect();
        let peaks = (1..g.size - 1).filter(|&c| row[c] > row[c - 1] && row[c] >= row[c + 1]).count();
        assert_eq!(peaks, 2);
        assert!((g.total() - 2.0).abs() < 0.1);
    }

    #[test]
    fn disk_sample_is_centre_heavy() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut pts = Vec::new();
        while pts.len() < 300 {
            let (x, y): (f64, f64) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            if x * x + y * y <= 1.0 {
                pts.push([x, y]);
            }
        }
        let g = density_grid(&pts).unwrap();
        let (cr, cc) = g.cell_of(0.0, 0.0);
        let (er, ec) = g.cell_of(0.95, 0.0);
        assert!(g.at(cr, cc) > 1.5 * g.at(er, ec));
        assert!((g.total() - 300.0).abs() < 15.0);
    }
}
