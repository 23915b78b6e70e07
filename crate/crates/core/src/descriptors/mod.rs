//! Per-point local shape and appearance descriptors.
//!
//! Each point gets 15 geometric descriptors derived from the eigen-decomposition
//! of the covariance of its radius neighborhood (query point included), and
//! one texture descriptor per channel of the selected color space.
//!
//! Every division is guarded by adding [`EPSILON`] to its denominator, so
//! degenerate neighborhoods (fewer than three points, or a vanishing largest
//! eigenvalue) yield finite values; those points are flagged.

mod color;
mod eigen;

use std::io::Write;

use arrayvec::ArrayVec;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cloud::{Point3, PointCloud};
use crate::error::{Error, Result};
use crate::layout::{FeatureLayout, GEOMETRIC_DESCRIPTORS};
use crate::spatial::SpatialIndex;

pub use color::{convert_color, Channels, ColorSpace};
pub use eigen::{eigen_decompose, Eigen3, Matrix3};

/// Denominator guard: double-precision machine epsilon.
pub const EPSILON: f64 = f64::EPSILON;

/// Neighborhoods smaller than this are flagged as degenerate.
pub const MIN_NEIGHBORHOOD: usize = 3;

/// How the eigenentropy descriptor treats the eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntropyMode {
    /// Eigenvalues divided by their sum before `-Σ λ ln λ`.
    #[default]
    Normalized,
    /// `-Σ λ ln λ` over the raw eigenvalues.
    Raw,
}

/// Options controlling the descriptor stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DescriptorOptions {
    pub color_space: ColorSpace,
    pub entropy: EntropyMode,
    /// Leave the query point out of its own neighborhood.
    pub exclude_query: bool,
}

impl Default for DescriptorOptions {
    fn default() -> Self {
        Self {
            color_space: ColorSpace::Y,
            entropy: EntropyMode::Normalized,
            exclude_query: false,
        }
    }
}

/// Centroid and population covariance (1/N normalization) of a point set.
pub fn local_covariance(points: &[Point3]) -> Result<(Point3, Matrix3)> {
    if points.is_empty() {
        return Err(Error::InvalidArgument("empty neighborhood".into()));
    }
    let n = points.len() as f64;
    let mut centroid = [0.0; 3];
    for p in points {
        for a in 0..3 {
            centroid[a] += p[a];
        }
    }
    centroid = centroid.map(|c| c / n);

    let mut cov = [[0.0; 3]; 3];
    for p in points {
        let d = [p[0] - centroid[0], p[1] - centroid[1], p[2] - centroid[2]];
        for i in 0..3 {
            for j in i..3 {
                cov[i][j] += d[i] * d[j];
            }
        }
    }
    for i in 0..3 {
        for j in i..3 {
            cov[i][j] /= n;
            cov[j][i] = cov[i][j];
        }
    }
    Ok((centroid, cov))
}

/// Principal axes of a neighborhood together with its centroid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenSystem {
    pub centroid: Point3,
    /// λ1 ≥ λ2 ≥ λ3 ≥ 0.
    pub values: [f64; 3],
    /// `vectors[k]` is the unit eigenvector of `values[k]`.
    pub vectors: [[f64; 3]; 3],
}

impl EigenSystem {
    pub fn from_neighborhood(points: &[Point3]) -> Result<Self> {
        let (centroid, cov) = local_covariance(points)?;
        let Eigen3 { values, vectors } = eigen_decompose(&cov)?;
        Ok(Self {
            centroid,
            values,
            vectors,
        })
    }

    pub fn normal(&self) -> [f64; 3] {
        self.vectors[2]
    }
}

fn entropy_term(p: f64) -> f64 {
    -p * p.max(EPSILON).ln()
}

/// The 15 geometric descriptors of a point, in layout order:
/// λ1, λ2, λ3, Σλ, linearity, planarity, sphericity, anisotropy,
/// omnivariance, eigenentropy, surface variation, roughness,
/// parallelity x/y/z.
pub fn geometric_descriptors(
    eig: &EigenSystem,
    query: &Point3,
    entropy: EntropyMode,
) -> [f64; GEOMETRIC_DESCRIPTORS] {
    let [l1, l2, l3] = eig.values;
    let sum = l1 + l2 + l3;
    let e3 = eig.normal();

    let eigenentropy = match entropy {
        EntropyMode::Normalized => {
            let total = sum + EPSILON;
            eig.values.iter().map(|l| entropy_term(l / total)).sum()
        }
        EntropyMode::Raw => eig.values.iter().map(|&l| entropy_term(l)).sum(),
    };
    let offset = [
        query[0] - eig.centroid[0],
        query[1] - eig.centroid[1],
        query[2] - eig.centroid[2],
    ];
    let roughness = (offset[0] * e3[0] + offset[1] * e3[1] + offset[2] * e3[2]).abs();

    [
        l1,
        l2,
        l3,
        sum,
        (l1 - l2) / (l1 + EPSILON),
        (l2 - l3) / (l1 + EPSILON),
        l3 / (l1 + EPSILON),
        (l1 - l3) / (l1 + EPSILON),
        (l1 * l2 * l3).cbrt(),
        eigenentropy,
        l3 / (sum + EPSILON),
        roughness,
        1.0 - e3[0].abs(),
        1.0 - e3[1].abs(),
        1.0 - e3[2].abs(),
    ]
}

/// Descriptors of one point.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorVector {
    pub geometric: [f64; GEOMETRIC_DESCRIPTORS],
    pub texture: ArrayVec<f64, 3>,
    pub degenerate: bool,
}

impl DescriptorVector {
    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.geometric.iter().chain(self.texture.iter()).copied()
    }
}

/// Descriptors of every point of a cloud, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorMap {
    layout: FeatureLayout,
    values: Vec<f64>,
    degenerate: Vec<bool>,
}

impl DescriptorMap {
    pub fn from_rows(layout: FeatureLayout, rows: &[DescriptorVector]) -> Result<Self> {
        let width = layout.descriptors();
        let mut values = Vec::with_capacity(rows.len() * width);
        for (i, row) in rows.iter().enumerate() {
            if row.texture.len() != layout.texture_channels() {
                return Err(Error::DimensionMismatch(format!(
                    "row {i} has {} texture channels, layout expects {}",
                    row.texture.len(),
                    layout.texture_channels()
                )));
            }
            values.extend(row.values());
        }
        Ok(Self {
            layout,
            values,
            degenerate: rows.iter().map(|r| r.degenerate).collect(),
        })
    }

    pub fn layout(&self) -> FeatureLayout {
        self.layout
    }

    pub fn len(&self) -> usize {
        self.degenerate.len()
    }

    pub fn is_empty(&self) -> bool {
        self.degenerate.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.layout.descriptors();
        &self.values[i * w..(i + 1) * w]
    }

    pub fn is_degenerate(&self, i: usize) -> bool {
        self.degenerate[i]
    }

    pub fn degenerate_count(&self) -> usize {
        self.degenerate.iter().filter(|&&d| d).count()
    }

    pub fn get(&self, i: usize) -> DescriptorVector {
        let row = self.row(i);
        DescriptorVector {
            geometric: row[..GEOMETRIC_DESCRIPTORS].try_into().unwrap(),
            texture: row[GEOMETRIC_DESCRIPTORS..].iter().copied().collect(),
            degenerate: self.degenerate[i],
        }
    }

    /// Debug dump: `d_g_01..d_g_15`, one `d_t_NN` column per texture
    /// channel, then `degenerate` (0/1).
    pub fn write_csv(&self, out: &mut impl Write) -> std::io::Result<()> {
        let mut header: Vec<String> = (1..=GEOMETRIC_DESCRIPTORS)
            .map(|d| format!("d_g_{d:02}"))
            .collect();
        header.extend((1..=self.layout.texture_channels()).map(|d| format!("d_t_{d:02}")));
        header.push("degenerate".into());
        writeln!(out, "{}", header.join(","))?;
        for i in 0..self.len() {
            let row: Vec<String> = self.row(i).iter().map(|v| v.to_string()).collect();
            writeln!(out, "{},{}", row.join(","), u8::from(self.degenerate[i]))?;
        }
        Ok(())
    }
}

/// Computes the descriptors of every point of `cloud` from its radius
/// neighborhoods in `index` (built over the same cloud).
pub fn compute_descriptor_map(
    cloud: &PointCloud,
    index: &SpatialIndex,
    radius: f64,
    options: &DescriptorOptions,
) -> Result<DescriptorMap> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "descriptor radius must be positive, got {radius}"
        )));
    }
    if index.len() != cloud.len() {
        return Err(Error::DimensionMismatch(format!(
            "index over {} points, cloud has {}",
            index.len(),
            cloud.len()
        )));
    }
    let layout = match cloud.colors() {
        Some(_) => FeatureLayout::new(options.color_space.channels()),
        None => FeatureLayout::GEOMETRY_ONLY,
    };
    let width = layout.descriptors();
    let positions = cloud.positions();
    let colors = cloud.colors();

    let mut values = vec![0.0; positions.len() * width];
    let mut degenerate = vec![false; positions.len()];
    values
        .par_chunks_mut(width)
        .zip(degenerate.par_iter_mut())
        .enumerate()
        .try_for_each(|(i, (row, flag))| -> Result<()> {
            let query = positions[i];
            let mut neighborhood: Vec<Point3> = index
                .within_radius(&query, radius)
                .into_iter()
                .filter(|n| !options.exclude_query || n.index != i)
                .map(|n| positions[n.index])
                .collect();
            if neighborhood.is_empty() {
                neighborhood.push(query);
            }
            let eig = EigenSystem::from_neighborhood(&neighborhood)?;
            row[..GEOMETRIC_DESCRIPTORS].copy_from_slice(&geometric_descriptors(
                &eig,
                &query,
                options.entropy,
            ));
            if let Some(colors) = colors {
                let channels = convert_color(&colors[i], options.color_space)?;
                row[GEOMETRIC_DESCRIPTORS..].copy_from_slice(&channels);
            }
            *flag = neighborhood.len() < MIN_NEIGHBORHOOD || eig.values[0] <= EPSILON;
            Ok(())
        })?;

    Ok(DescriptorMap {
        layout,
        values,
        degenerate,
    })
}
