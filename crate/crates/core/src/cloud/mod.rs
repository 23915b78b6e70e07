//! Point cloud data model, duplicate fusion and bounding extent.
//!
//! A [`PointCloud`] stores positions at double precision and an optional
//! per-point RGB color on the 0–255 scale. Colors stay real-valued so that the
//! averages produced by [`fuse_duplicates`] are not re-quantized before the
//! color transform.

mod ply;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use ply::{load_ply, read_ply, save_ply, write_ply, PlyFormat};

pub type Point3 = [f64; 3];
pub type Rgb = [f64; 3];

#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    positions: Vec<Point3>,
    colors: Option<Vec<Rgb>>,
}

impl PointCloud {
    /// Builds a cloud, checking that positions are finite and non-empty and
    /// that colors (when present) are finite and aligned with positions.
    pub fn new(positions: Vec<Point3>, colors: Option<Vec<Rgb>>) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::EmptyCloud);
        }
        if let Some(i) = positions
            .iter()
            .position(|p| p.iter().any(|c| !c.is_finite()))
        {
            return Err(Error::InvalidCloud(format!(
                "non-finite coordinate at point {i}"
            )));
        }
        if let Some(colors) = &colors {
            if colors.len() != positions.len() {
                return Err(Error::InvalidCloud(format!(
                    "{} colors for {} positions",
                    colors.len(),
                    positions.len()
                )));
            }
            if let Some(i) = colors.iter().position(|c| c.iter().any(|v| !v.is_finite())) {
                return Err(Error::InvalidCloud(format!(
                    "non-finite color at point {i}"
                )));
            }
        }
        Ok(Self { positions, colors })
    }

    pub fn from_positions(positions: Vec<Point3>) -> Result<Self> {
        Self::new(positions, None)
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[Point3] {
        &self.positions
    }

    pub fn colors(&self) -> Option<&[Rgb]> {
        self.colors.as_deref()
    }

    pub fn has_colors(&self) -> bool {
        self.colors.is_some()
    }

    pub fn into_parts(self) -> (Vec<Point3>, Option<Vec<Rgb>>) {
        (self.positions, self.colors)
    }

    /// Applies `f` to every position, keeping colors.
    pub fn map_positions(&self, f: impl Fn(Point3) -> Point3) -> Result<Self> {
        Self::new(
            self.positions.iter().copied().map(f).collect(),
            self.colors.clone(),
        )
    }
}

/// Axis-aligned bounds of a cloud.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingExtent {
    pub min_corner: Point3,
    pub max_corner: Point3,
    /// Largest of the three side lengths.
    pub max_side: f64,
}

pub fn bounding_extent(cloud: &PointCloud) -> Result<BoundingExtent> {
    let first = *cloud.positions.first().ok_or(Error::EmptyCloud)?;
    let (min_corner, max_corner) =
        cloud
            .positions
            .iter()
            .fold((first, first), |(mut lo, mut hi), p| {
                for a in 0..3 {
                    lo[a] = lo[a].min(p[a]);
                    hi[a] = hi[a].max(p[a]);
                }
                (lo, hi)
            });
    let max_side = (0..3)
        .map(|a| max_corner[a] - min_corner[a])
        .fold(0.0_f64, f64::max);
    Ok(BoundingExtent {
        min_corner,
        max_corner,
        max_side,
    })
}

// -0.0 and 0.0 compare equal, so they must hash to the same key.
fn coordinate_key(p: &Point3) -> [u64; 3] {
    p.map(|c| (c + 0.0).to_bits())
}

/// Collapses points with exactly equal coordinates into one, averaging their
/// colors. First occurrences keep their relative order.
pub fn fuse_duplicates(cloud: &PointCloud) -> PointCloud {
    let mut slot_of: HashMap<[u64; 3], usize> = HashMap::with_capacity(cloud.len());
    let mut positions = Vec::with_capacity(cloud.len());
    let mut sums: Vec<[f64; 3]> = Vec::new();
    let mut counts: Vec<u32> = Vec::new();

    for (i, p) in cloud.positions.iter().enumerate() {
        let slot = *slot_of.entry(coordinate_key(p)).or_insert_with(|| {
            positions.push(*p);
            sums.push([0.0; 3]);
            counts.push(0);
            positions.len() - 1
        });
        if let Some(colors) = &cloud.colors {
            for c in 0..3 {
                sums[slot][c] += colors[i][c];
            }
        }
        counts[slot] += 1;
    }

    if positions.len() == cloud.len() {
        return cloud.clone();
    }

    let colors = cloud.colors.as_ref().map(|_| {
        sums.iter()
            .zip(&counts)
            .map(|(s, &n)| s.map(|v| v / f64::from(n)))
            .collect()
    });
    PointCloud { positions, colors }
}
