//! Brute-force reimplementation of the predictor pipeline used as a test
//! oracle: linear scans for every neighborhood, nalgebra for the
//! eigen-decomposition and the formulas written out directly.

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use pointpca::Method;

pub type P3 = [f64; 3];

#[derive(Debug, Clone)]
pub struct Cloud {
    pub positions: Vec<P3>,
    pub colors: Option<Vec<P3>>,
}

#[derive(Debug, Clone, Copy)]
pub struct Settings {
    /// `Some` for an absolute radius, otherwise `factor` times the largest side.
    pub radius: Option<f64>,
    pub factor: f64,
    pub k: usize,
    pub exclude_query: bool,
}

/// Features of both clouds and their nearest-neighbor matches, kept so that
/// every comparison method can be evaluated without recomputation.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub reference: Vec<Vec<f64>>,
    pub distorted: Vec<Vec<f64>>,
    /// For each distorted point, its nearest reference point.
    pub dist_to_ref: Vec<usize>,
    /// For each reference point, its nearest distorted point.
    pub ref_to_dist: Vec<usize>,
}

/// Reasons a random pair is unsuitable for a tight numerical comparison.
#[derive(Debug, Clone, PartialEq)]
pub enum IllConditioned {
    SmallNeighborhood(usize),
    NormalGap(f64),
    FlatNeighborhood(f64),
    /// A standard deviation over several neighbors that is zero in exact
    /// arithmetic, so any computed value is rounding noise.
    VanishingSpread(usize),
}

fn d2(a: &P3, b: &P3) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)
}

pub fn fuse(cloud: &Cloud) -> Cloud {
    let mut positions: Vec<P3> = Vec::new();
    let mut sums: Vec<P3> = Vec::new();
    let mut counts: Vec<f64> = Vec::new();
    for (i, p) in cloud.positions.iter().enumerate() {
        let slot = match positions.iter().position(|q| q == p) {
            Some(s) => s,
            None => {
                positions.push(*p);
                sums.push([0.0; 3]);
                counts.push(0.0);
                positions.len() - 1
            }
        };
        if let Some(c) = &cloud.colors {
            for a in 0..3 {
                sums[slot][a] += c[i][a];
            }
        }
        counts[slot] += 1.0;
    }
    let colors = cloud.colors.as_ref().map(|_| {
        sums.iter()
            .zip(&counts)
            .map(|(s, n)| [s[0] / n, s[1] / n, s[2] / n])
            .collect()
    });
    Cloud { positions, colors }
}

pub fn max_side(points: &[P3]) -> f64 {
    (0..3)
        .map(|a| {
            let lo = points.iter().map(|p| p[a]).fold(f64::INFINITY, f64::min);
            let hi = points
                .iter()
                .map(|p| p[a])
                .fold(f64::NEG_INFINITY, f64::max);
            hi - lo
        })
        .fold(0.0, f64::max)
}

fn luminance(c: &P3) -> f64 {
    0.2126 * c[0] + 0.7152 * c[1] + 0.0722 * c[2]
}

/// Point indices sorted by (squared distance, index).
fn by_distance(points: &[P3], q: &P3) -> Vec<(f64, usize)> {
    let mut all: Vec<(f64, usize)> = points
        .iter()
        .enumerate()
        .map(|(j, p)| (d2(q, p), j))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    all
}

fn descriptors(cloud: &Cloud, radius: f64, exclude: bool) -> Result<Vec<Vec<f64>>, IllConditioned> {
    let eps = f64::EPSILON;
    let pts = &cloud.positions;
    let mut out = Vec::with_capacity(pts.len());
    for (i, q) in pts.iter().enumerate() {
        let hood: Vec<P3> = (0..pts.len())
            .filter(|&j| !(exclude && j == i) && d2(q, &pts[j]) <= radius * radius)
            .map(|j| pts[j])
            .collect();
        if hood.len() < 4 {
            return Err(IllConditioned::SmallNeighborhood(hood.len()));
        }
        let n = hood.len() as f64;
        let mut c = Vector3::zeros();
        for p in &hood {
            c += Vector3::from(*p);
        }
        c /= n;
        let mut cov = Matrix3::zeros();
        for p in &hood {
            let d = Vector3::from(*p) - c;
            cov += d * d.transpose();
        }
        cov /= n;
        let eig = SymmetricEigen::new(cov);
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let l1 = eig.eigenvalues[order[0]].max(0.0);
        let l2 = eig.eigenvalues[order[1]].max(0.0);
        let l3 = eig.eigenvalues[order[2]].max(0.0);
        if l2 - l3 < 1e-4 * l1 {
            return Err(IllConditioned::NormalGap((l2 - l3) / l1));
        }
        if l3 < 1e-8 * l1 {
            return Err(IllConditioned::FlatNeighborhood(l3 / l1));
        }
        let e3 = eig.eigenvectors.column(order[2]).into_owned();
        let sum = l1 + l2 + l3;
        let p = [l1 / (sum + eps), l2 / (sum + eps), l3 / (sum + eps)];
        let entropy = -(p[0] * p[0].ln() + p[1] * p[1].ln() + p[2] * p[2].ln());
        let roughness = (Vector3::from(*q) - c).dot(&e3).abs();
        let mut row = vec![
            l1,
            l2,
            l3,
            sum,
            (l1 - l2) / (l1 + eps),
            (l2 - l3) / (l1 + eps),
            l3 / (l1 + eps),
            (l1 - l3) / (l1 + eps),
            (l1 * l2 * l3).powf(1.0 / 3.0),
            entropy,
            l3 / (sum + eps),
            roughness,
            1.0 - e3[0].abs(),
            1.0 - e3[1].abs(),
            1.0 - e3[2].abs(),
        ];
        if let Some(colors) = &cloud.colors {
            row.push(luminance(&colors[i]));
        }
        out.push(row);
    }
    Ok(out)
}

fn features(cloud: &Cloud, desc: &[Vec<f64>], k: usize, exclude: bool) -> Vec<Vec<f64>> {
    let width = desc[0].len();
    cloud
        .positions
        .iter()
        .enumerate()
        .map(|(i, q)| {
            let hood: Vec<usize> = by_distance(&cloud.positions, q)
                .into_iter()
                .map(|(_, j)| j)
                .filter(|&j| !(exclude && j == i))
                .take(k)
                .collect();
            let n = hood.len() as f64;
            let mut row = vec![0.0; 2 * width];
            for d in 0..width {
                let mean = hood.iter().map(|&j| desc[j][d]).sum::<f64>() / n;
                let var = hood
                    .iter()
                    .map(|&j| (desc[j][d] - mean).powi(2))
                    .sum::<f64>()
                    / n;
                row[d] = mean;
                row[width + d] = var.sqrt();
            }
            row
        })
        .collect()
}

fn nearest_all(from: &[P3], to: &[P3]) -> Vec<usize> {
    from.iter().map(|q| by_distance(to, q)[0].1).collect()
}

pub fn prepare(
    reference: &Cloud,
    distorted: &Cloud,
    s: &Settings,
) -> Result<Prepared, IllConditioned> {
    let mut a = fuse(reference);
    let mut b = fuse(distorted);
    if a.colors.is_none() || b.colors.is_none() {
        a.colors = None;
        b.colors = None;
    }
    let radius = s.radius.unwrap_or(s.factor * max_side(&a.positions));
    let da = descriptors(&a, radius, s.exclude_query)?;
    let db = descriptors(&b, radius, s.exclude_query)?;
    let fa = features(&a, &da, s.k, s.exclude_query);
    let fb = features(&b, &db, s.k, s.exclude_query);
    if s.k > 1 {
        for row in fa.iter().chain(&fb) {
            let width = row.len() / 2;
            if let Some(d) = (0..width).find(|&d| row[width + d] <= 1e-9 * row[d].abs().max(1e-300))
            {
                return Err(IllConditioned::VanishingSpread(d));
            }
        }
    }
    Ok(Prepared {
        reference: fa,
        distorted: fb,
        dist_to_ref: nearest_all(&b.positions, &a.positions),
        ref_to_dist: nearest_all(&a.positions, &b.positions),
    })
}

pub fn compare(a: f64, b: f64, method: Method) -> f64 {
    let eps = f64::EPSILON;
    match method {
        Method::Ad => (a - b).abs(),
        Method::Sd => (a - b).powi(2),
        Method::Rd1 => (a - b).abs() / (f64::max(a.abs(), b.abs()) + eps),
        Method::Rd2 => 2.0 * a * b / (a.powi(2) * b.powi(2) + eps),
        Method::Rd3 => (a - b).abs() / ((a + b).abs() + eps),
        Method::Rd4 => f64::max(a.abs(), b.abs()) / ((a - b).abs() + eps),
    }
}

fn directional(
    evaluated: &[Vec<f64>],
    reference: &[Vec<f64>],
    corr: &[usize],
    method: Method,
) -> Vec<f64> {
    let width = evaluated[0].len();
    (0..width)
        .map(|j| {
            let total: f64 = evaluated
                .iter()
                .zip(corr)
                .map(|(row, &c)| compare(reference[c][j], row[j], method))
                .sum();
            total / evaluated.len() as f64
        })
        .collect()
}

/// Symmetric predictor vector of a prepared pair.
pub fn symmetric(p: &Prepared, method: Method) -> Vec<f64> {
    let ba = directional(&p.distorted, &p.reference, &p.dist_to_ref, method);
    let ab = directional(&p.reference, &p.distorted, &p.ref_to_dist, method);
    ba.iter().zip(&ab).map(|(x, y)| x.max(*y)).collect()
}

/// Average-rank oracle: 1 + (number smaller) + (ties - 1) / 2, by counting.
pub fn ranks(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|v| {
            let below = x.iter().filter(|w| *w < v).count() as f64;
            let equal = x.iter().filter(|w| *w == v).count() as f64;
            1.0 + below + (equal - 1.0) / 2.0
        })
        .collect()
}

pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    sxy / (sxx * syy).sqrt()
}

pub fn root_mean_square(x: &[f64], y: &[f64]) -> f64 {
    (x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / x.len() as f64).sqrt()
}
