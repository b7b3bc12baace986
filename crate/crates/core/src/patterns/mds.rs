use nalgebra::{DMatrix, SymmetricEigen};

use super::distance::DistanceMatrix;

/// Classical MDS to two dimensions: double-centre the squared distances and
/// scale the top two eigenvectors by the square roots of their eigenvalues.
/// Each axis is flipped so its largest-magnitude entry is positive. One point
/// sits at the origin; two points sit on the x axis.
pub fn project_2d(d: &DistanceMatrix) -> Vec<[f64; 2]> {
    let n = d.len();
    match n {
        0 => return Vec::new(),
        1 => return vec![[0.0, 0.0]],
        2 => {
            let h = d.get(0, 1) / 2.0;
            return vec![[-h, 0.0], [h, 0.0]];
        }
        _ => {}
    }
    let sq = DMatrix::from_fn(n, n, |i, j| d.get(i, j).powi(2));
    let row_means: Vec<f64> = (0..n).map(|i| sq.row(i).sum() / n as f64).collect();
    let grand = row_means.iter().sum::<f64>() / n as f64;
    let b = DMatrix::from_fn(n, n, |i, j| -0.5 * (sq[(i, j)] - row_means[i] - row_means[j] + grand));
    let eig = SymmetricEigen::new(b);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));

    let mut coords = vec![[0.0; 2]; n];
    for (axis, &k) in order.iter().take(2).enumerate() {
        let lambda = eig.eigenvalues[k].max(0.0);
        let v = eig.eigenvectors.column(k);
        let pivot = (0..n).fold(0, |best, i| if v[i].abs() > v[best].abs() { i } else { best });
        let sign = if v[pivot] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            coords[i][axis] = sign * v[i] * lambda.sqrt();
        }
    }
    coords
}

/// Pearson correlation between the input distances and the layout's
/// Euclidean distances over all pairs.
pub fn layout_correlation(d: &DistanceMatrix, coords: &[[f64; 2]]) -> f64 {
    let mut a = Vec::new();
    let mut b = Vec::new();
    for i in 0..d.len() {
        for j in i + 1..d.len() {
            a.push(d.get(i, j));
            b.push(((coords[i][0] - coords[j][0]).powi(2) + (coords[i][1] - coords[j][1]).powi(2)).sqrt());
        }
    }
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(&b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_is_recovered() {
        let pts = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)];
        let d = DistanceMatrix::from_fn(4, |i, j| {
            let (a, b): ((f64, f64), (f64, f64)) = (pts[i], pts[j]);
            ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
        })
        .unwrap();
        let c = project_2d(&d);
        assert!(layout_correlation(&d, &c) >= 0.999);
        for i in 0..4 {
            for j in 0..4 {
                let e = ((c[i][0] - c[j][0]).powi(2) + (c[i][1] - c[j][1]).powi(2)).sqrt();
                assert!((e - d.get(i, j)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn trivial_sizes() {
        assert_eq!(project_2d(&DistanceMatrix::from_condensed(1, vec![]).unwrap()), vec![[0.0, 0.0]]);
        let two = project_2d(&DistanceMatrix::from_condensed(2, vec![3.0]).unwrap());
        assert_eq!(two, vec![[-1.5, 0.0], [1.5, 0.0]]);
    }

    #[test]
    fn duplicates_share_coordinates() {
        let pts = [0.0f64, 0.0, 1.0, 3.0];
        let d = DistanceMatrix::from_fn(4, |i, j| (pts[i] - pts[j]).abs()).unwrap();
        let c = project_2d(&d);
        assert!((c[0][0] - c[1][0]).abs() < 1e-12 && (c[0][1] - c[1][1]).abs() < 1e-12);
    }

    #[test]
    fn sign_convention_is_stable() {
        let pts = [0.0f64, 1.0, 5.0];
        let d = DistanceMatrix::from_fn(3, |i, j| (pts[i] - pts[j]).abs()).unwrap();
        let c = project_2d(&d);
        let pivot = (0..3).max_by(|&a, &b| c[a][0].abs().total_cmp(&c[b][0].abs())).unwrap();
        assert!(c[pivot][0] > 0.0);
    }
}
