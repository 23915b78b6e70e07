//! Local statistics of descriptors: mean and population standard deviation
//! over each point's k nearest neighbors.

use std::io::Write;

use rayon::prelude::*;

use crate::cloud::PointCloud;
use crate::descriptors::DescriptorMap;
use crate::error::{Error, Result};
use crate::layout::FeatureLayout;
use crate::spatial::SpatialIndex;

pub const DEFAULT_K: usize = 25;

/// Neighborhood sizes of fully occupied square grids with half-widths 1..4.
pub const K_GRID: [usize; 4] = [9, 25, 49, 81];

/// Mean and population standard deviation of each column of `rows`.
///
/// All rows must have the same width.
pub fn statistical_features<R: AsRef<[f64]>>(rows: &[R]) -> Result<(Vec<f64>, Vec<f64>)> {
    let first = rows
        .first()
        .ok_or_else(|| Error::InvalidArgument("no descriptor rows".into()))?;
    let width = first.as_ref().len();
    let n = rows.len() as f64;
    let mut mean = vec![0.0; width];
    for row in rows {
        let row = row.as_ref();
        if row.len() != width {
            return Err(Error::DimensionMismatch(format!(
                "descriptor rows of width {} and {width}",
                row.len()
            )));
        }
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    let mut std = vec![0.0; width];
    for row in rows {
        for ((s, v), m) in std.iter_mut().zip(row.as_ref()).zip(&mean) {
            let d = v - m;
            *s += d * d;
        }
    }
    for s in &mut std {
        *s = (*s / n).sqrt();
    }
    Ok((mean, std))
}

/// Statistical features of one point: `[mean..., std...]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl FeatureVector {
    pub fn to_vec(&self) -> Vec<f64> {
        self.mean.iter().chain(&self.std).copied().collect()
    }
}

/// Per-point feature vectors of a whole cloud, row-major in layout order.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    layout: FeatureLayout,
    values: Vec<f64>,
}

impl FeatureMap {
    pub fn from_rows(layout: FeatureLayout, rows: &[Vec<f64>]) -> Result<Self> {
        let width = layout.features();
        let mut values = Vec::with_capacity(rows.len() * width);
        for row in rows {
            if row.len() != width {
                return Err(Error::DimensionMismatch(format!(
                    "feature row of width {}, layout {} has {width}",
                    row.len(),
                    layout.id()
                )));
            }
            values.extend_from_slice(row);
        }
        Ok(Self { layout, values })
    }

    pub fn layout(&self) -> FeatureLayout {
        self.layout
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.layout.features()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.layout.features();
        &self.values[i * w..(i + 1) * w]
    }

    pub fn get(&self, i: usize) -> FeatureVector {
        let (mean, std) = self.row(i).split_at(self.layout.descriptors());
        FeatureVector {
            mean: mean.to_vec(),
            std: std.to_vec(),
        }
    }

    /// Debug dump with columns `phi_01..phi_NN` in layout order.
    pub fn write_csv(&self, out: &mut impl Write) -> std::io::Result<()> {
        let header: Vec<String> = (1..=self.layout.features())
            .map(|j| format!("phi_{j:02}"))
            .collect();
        writeln!(out, "{}", header.join(","))?;
        for i in 0..self.len() {
            let row: Vec<String> = self.row(i).iter().map(|v| v.to_string()).collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Computes the feature vector of every point from the descriptors of its
/// `k` nearest neighbors (the point itself included unless `exclude_query`).
pub fn compute_feature_map(
    cloud: &PointCloud,
    index: &SpatialIndex,
    descriptors: &DescriptorMap,
    k: usize,
    exclude_query: bool,
) -> Result<FeatureMap> {
    if k < 1 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if descriptors.len() != cloud.len() || index.len() != cloud.len() {
        return Err(Error::DimensionMismatch(format!(
            "cloud of {} points, descriptor map of {}, index of {}",
            cloud.len(),
            descriptors.len(),
            index.len()
        )));
    }
    let layout = descriptors.layout();
    let width = layout.features();
    let positions = cloud.positions();
    let mut values = vec![0.0; positions.len() * width];
    values
        .par_chunks_mut(width)
        .enumerate()
        .try_for_each(|(i, out)| -> Result<()> {
            let wanted = if exclude_query { k + 1 } else { k };
            let mut rows: Vec<&[f64]> = index
                .knn(&positions[i], wanted)
                .into_iter()
                .filter(|n| !exclude_query || n.index != i)
                .take(k)
                .map(|n| descriptors.row(n.index))
                .collect();
            if rows.is_empty() {
                rows.push(descriptors.row(i));
            }
            let (mean, std) = statistical_features(&rows)?;
            let d = layout.descriptors();
            out[..d].copy_from_slice(&mean);
            out[d..].copy_from_slice(&std);
            Ok(())
        })?;
    Ok(FeatureMap { layout, values })
}
