//! Cyclic Jacobi eigen-decomposition for symmetric positive semi-definite
//! 3×3 matrices.

use crate::error::{Error, Result};

pub type Matrix3 = [[f64; 3]; 3];

const MAX_SWEEPS: usize = 50;
const OFF_DIAGONAL_TOLERANCE: f64 = 1e-15;
const SYMMETRY_TOLERANCE: f64 = 1e-12;
const NEGATIVE_EIGENVALUE_TOLERANCE: f64 = 1e-10;
const SIGN_TIE_TOLERANCE: f64 = 1e-12;

/// Eigenvalues in non-increasing order with their unit eigenvectors.
///
/// `vectors[k]` pairs with `values[k]`. Each vector has its largest-magnitude
/// component positive (the first such component when magnitudes tie).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eigen3 {
    pub values: [f64; 3],
    pub vectors: [[f64; 3]; 3],
}

fn frobenius(a: &Matrix3) -> f64 {
    a.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
}

fn off_diagonal(a: &Matrix3) -> f64 {
    (2.0 * (a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2])).sqrt()
}

/// Annihilates `a[p][q]` with one plane rotation, accumulating it into `v`
/// (whose columns are the eigenvector estimates).
fn rotate(a: &mut Matrix3, v: &mut Matrix3, p: usize, q: usize) {
    let apq = a[p][q];
    if apq == 0.0 {
        return;
    }
    let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
    let t = if theta.abs() > 1e150 {
        0.5 / theta
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    let app = a[p][p];
    let aqq = a[q][q];
    a[p][p] = app - t * apq;
    a[q][q] = aqq + t * apq;
    a[p][q] = 0.0;
    a[q][p] = 0.0;
    let r = 3 - p - q;
    let arp = a[r][p];
    let arq = a[r][q];
    a[r][p] = c * arp - s * arq;
    a[p][r] = a[r][p];
    a[r][q] = s * arp + c * arq;
    a[q][r] = a[r][q];

    for row in v.iter_mut() {
        let vp = row[p];
        let vq = row[q];
        row[p] = c * vp - s * vq;
        row[q] = s * vp + c * vq;
    }
}

fn fix_sign(vector: &mut [f64; 3]) {
    let largest = vector.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if let Some(lead) = vector
        .iter()
        .copied()
        .find(|v| v.abs() >= largest - SIGN_TIE_TOLERANCE)
    {
        if lead < 0.0 {
            for v in vector.iter_mut() {
                *v = -*v;
            }
        }
    }
}

pub fn eigen_decompose(matrix: &Matrix3) -> Result<Eigen3> {
    if matrix.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("covariance matrix entry".into()));
    }
    let scale = matrix.iter().flatten().fold(1.0_f64, |m, v| m.max(v.abs()));
    let mut asymmetry = 0.0_f64;
    for i in 0..3 {
        for j in (i + 1)..3 {
            asymmetry = asymmetry.max((matrix[i][j] - matrix[j][i]).abs());
        }
    }
    if asymmetry > SYMMETRY_TOLERANCE * scale {
        return Err(Error::NonSymmetric(asymmetry));
    }

    let mut a = *matrix;
    for i in 0..3 {
        for j in (i + 1)..3 {
            let m = 0.5 * (a[i][j] + a[j][i]);
            a[i][j] = m;
            a[j][i] = m;
        }
    }
    let mut v = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    let threshold = OFF_DIAGONAL_TOLERANCE * frobenius(&a);
    for _ in 0..MAX_SWEEPS {
        if off_diagonal(&a) <= threshold {
            break;
        }
        rotate(&mut a, &mut v, 0, 1);
        rotate(&mut a, &mut v, 0, 2);
        rotate(&mut a, &mut v, 1, 2);
    }

    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| a[j][j].total_cmp(&a[i][i]));

    let largest = a[order[0]][order[0]];
    let floor = -NEGATIVE_EIGENVALUE_TOLERANCE * largest.abs().max(1.0);
    let mut values = [0.0; 3];
    let mut vectors = [[0.0; 3]; 3];
    for (k, &col) in order.iter().enumerate() {
        let lambda = a[col][col];
        if lambda < floor {
            return Err(Error::NotPositiveSemiDefinite(lambda));
        }
        values[k] = lambda.max(0.0);
        vectors[k] = [v[0][col], v[1][col], v[2][col]];
        fix_sign(&mut vectors[k]);
    }
    Ok(Eigen3 { values, vectors })
}
