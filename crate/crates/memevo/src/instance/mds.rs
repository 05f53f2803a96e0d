//! Classical (Torgerson) multidimensional scaling.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::instance::TaskFeatureMatrix;

/// Embeds an `n x n` distance matrix into `p` dimensions.
///
/// Double-centers the squared distances, `B = -1/2 H D^2 H`, eigendecomposes
/// `B` and keeps the `p` largest eigenvalues, clipping negative ones to zero.
/// Column `i` of the result is the embedded coordinate of point `i`; when
/// fewer than `p` positive eigenvalues exist the remaining coordinates are
/// zero-filled.
pub fn mds_embed(distances: &DMatrix<f64>, p: usize) -> Result<TaskFeatureMatrix> {
    let n = distances.nrows();
    if distances.ncols() != n {
        return Err(Error::Dimension(format!(
            "distance matrix is {}x{}",
            n,
            distances.ncols()
        )));
    }
    if p > n {
        return Err(Error::Dimension(format!(
            "embedding dimension {} exceeds point count {}",
            p, n
        )));
    }
    for i in 0..n {
        for j in 0..n {
            let d = distances[(i, j)];
            if !d.is_finite() || d < 0.0 {
                return Err(Error::NonFinite(format!("distance ({}, {})", i, j)));
            }
        }
    }

    let sq = distances.map(|d| d * d);
    let b = double_center(&sq);

    let eig = b.symmetric_eigen();
    // Sort eigenpairs by descending eigenvalue.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &c| {
        eig.eigenvalues[c]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });

    let mut coords = DMatrix::zeros(p, n);
    for (row, &idx) in order.iter().take(p).enumerate() {
        let lambda = eig.eigenvalues[idx].max(0.0);
        let scale = lambda.sqrt();
        for col in 0..n {
            coords[(row, col)] = scale * eig.eigenvectors[(col, idx)];
        }
    }
    TaskFeatureMatrix::new(coords)
}

fn double_center(sq: &DMatrix<f64>) -> DMatrix<f64> {
    let n = sq.nrows();
    let nf = n as f64;
    let row_means: Vec<f64> = (0..n).map(|i| sq.row(i).sum() / nf).collect();
    let col_means: Vec<f64> = (0..n).map(|j| sq.column(j).sum() / nf).collect();
    let grand = sq.sum() / (nf * nf);
    DMatrix::from_fn(n, n, |i, j| {
        -0.5 * (sq[(i, j)] - row_means[i] - col_means[j] + grand)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn pairwise(coords: &TaskFeatureMatrix) -> DMatrix<f64> {
        let n = coords.len();
        DMatrix::from_fn(n, n, |i, j| coords.distance(i, j))
    }

    #[test]
    fn collinear_points_embed_exactly_in_one_dimension() {
        let pts: [f64; 4] = [0.0, 1.0, 2.0, 3.0];
        let d = DMatrix::from_fn(4, 4, |i, j| (pts[i] - pts[j]).abs());
        let x = mds_embed(&d, 1).unwrap();
        let rebuilt = pairwise(&x);
        for i in 0..4 {
            for j in 0..4 {
                assert!((rebuilt[(i, j)] - d[(i, j)]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn planar_points_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts: Vec<[f64; 2]> = (0..10)
            .map(|_| [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)])
            .collect();
        let d = DMatrix::from_fn(10, 10, |i, j| {
            let dx = pts[i][0] - pts[j][0];
            let dy = pts[i][1] - pts[j][1];
            (dx * dx + dy * dy).sqrt()
        });
        let x = mds_embed(&d, 2).unwrap();
        let rebuilt = pairwise(&x);
        let mut max_err = 0.0f64;
        for i in 0..10 {
            for j in 0..10 {
                max_err = max_err.max((rebuilt[(i, j)] - d[(i, j)]).abs());
            }
        }
        assert!(max_err < 1e-8, "max embedding error {}", max_err);
    }

    #[test]
    fn zero_distances_collapse_to_identical_columns() {
        let d = DMatrix::zeros(3, 3);
        let x = mds_embed(&d, 2).unwrap();
        for i in 1..3 {
            assert_eq!(x.column(i), x.column(0));
        }
    }

    #[test]
    fn dimension_larger_than_points_is_rejected() {
        let d = DMatrix::zeros(3, 3);
        assert!(mds_embed(&d, 4).is_err());
    }

    #[test]
    fn extra_dimensions_beyond_rank_are_zero_filled() {
        let pts: [f64; 3] = [0.0, 1.0, 5.0];
        let d = DMatrix::from_fn(3, 3, |i, j| (pts[i] - pts[j]).abs());
        let x = mds_embed(&d, 3).unwrap();
        // Rank-one geometry: rows beyond the first stay numerically tiny.
        for col in 0..3 {
            let v = x.column(col);
            assert!(v[1].abs() < 1e-6 && v[2].abs() < 1e-6);
        }
    }
}
