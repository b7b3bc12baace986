/// Number of evenly spaced sample points over [0, 1].
pub const DENSITY_POINTS: usize = 101;
pub const MIN_BANDWIDTH: f64 = 0.01;

/// Sample standard deviation (n − 1 denominator); 0 for fewer than two values.
pub(crate) fn sample_std(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Silverman's rule of thumb: 0.9 · min(σ, IQR / 1.34) · n^(−1/5), using σ
/// alone when the interquartile range is zero.
pub(crate) fn silverman(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let std = sample_std(values);
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = quantile(&sorted, 0.75) - quantile(&sorted, 0.25);
    let spread = if iqr > 0.0 { std.min(iqr / 1.34) } else { std };
    0.9 * spread * (values.len() as f64).powf(-0.2)
}

/// Gaussian KDE of `values` sampled at 101 points over [0, 1]. Not
/// renormalised, so the integral over [0, 1] is the share of kernel mass that
/// falls inside the interval. `None` for empty input.
pub fn metric_density(values: &[f64]) -> Option<Vec<f64>> {
    if values.is_empty() {
        return None;
    }
    let h = silverman(values).max(MIN_BANDWIDTH);
    let norm = 1.0 / (values.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt());
    Some(
        (0..DENSITY_POINTS)
            .map(|k| {
                let x = k as f64 / (DENSITY_POINTS - 1) as f64;
                norm * values.iter().map(|v| (-0.5 * ((x - v) / h).powi(2)).exp()).sum::<f64>()
            })
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn argmax(v: &[f64]) -> usize {
        v.iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap()
    }

    fn trapezoid(v: &[f64]) -> f64 {
        let dx = 1.0 / (v.len() - 1) as f64;
        v.windows(2).map(|w| (w[0] + w[1]) * dx / 2.0).sum()
    }

    #[test]
    fn single_value_peaks_at_its_index() {
        let d = metric_density(&[0.5]).unwrap();
        assert_eq!(d.len(), DENSITY_POINTS);
        assert_eq!(argmax(&d), 50);
    }

    #[test]
    fn zeros_peak_at_origin() {
        assert_eq!(argmax(&metric_density(&[0.0, 0.0, 0.0]).unwrap()), 0);
    }

    #[test]
    fn integral_matches_mass_inside_interval() {
        // All mass of a point at 0.5 with tiny bandwidth lies inside [0, 1].
        assert!((trapezoid(&metric_density(&[0.5]).unwrap()) - 1.0).abs() < 0.05);
        // Half the mass of a point at 0 lies outside.
        assert!((trapezoid(&metric_density(&[0.0]).unwrap()) - 0.5).abs() < 0.05);
    }

    #[test]
    fn uniform_grid_is_flat_inside() {
        let vals: Vec<f64> = (0..=200).map(|i| i as f64 / 200.0).collect();
        let d = metric_density(&vals).unwrap();
        let interior = &d[30..=70];
        let (lo, hi) = interior
            .iter()
            .fold((f64::MAX, f64::MIN), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        assert!((hi - lo) / hi < 0.02, "{lo} {hi}");
        assert!((interior[20] - 1.0).abs() < 0.05);
    }

    #[test]
    fn empty_is_absent() {
        assert!(metric_density(&[]).is_none());
    }
}
