//! End-to-end predictor computation for a reference/distorted pair.

use serde::{Deserialize, Serialize};

use crate::cloud::{bounding_extent, fuse_duplicates, BoundingExtent, PointCloud};
use crate::comparison::{
    error_map, pool, symmetric_predictors, Direction, Method, PredictorVector,
};
use crate::descriptors::{compute_descriptor_map, DescriptorMap, DescriptorOptions};
use crate::error::{Error, Result};
use crate::features::{compute_feature_map, FeatureMap, DEFAULT_K};
use crate::layout::FeatureLayout;
use crate::spatial::{correspondence, SpatialIndex};

pub const DEFAULT_RADIUS_FACTOR: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Descriptor radius as a fraction of the reference's largest bounding-box side.
    pub radius_factor: f64,
    /// Absolute descriptor radius; takes precedence over `radius_factor`.
    pub radius: Option<f64>,
    pub k: usize,
    pub method: Method,
    /// `exclude_query` applies to both the radius and the k-nn neighborhoods.
    pub descriptors: DescriptorOptions,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            radius_factor: DEFAULT_RADIUS_FACTOR,
            radius: None,
            k: DEFAULT_K,
            method: Method::default(),
            descriptors: DescriptorOptions::default(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.radius_factor.is_finite() && self.radius_factor > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "radius factor must be positive, got {}",
                self.radius_factor
            )));
        }
        if let Some(r) = self.radius {
            if !(r.is_finite() && r > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "radius must be positive, got {r}"
                )));
            }
        }
        if self.k < 1 {
            return Err(Error::InvalidArgument("k must be at least 1".into()));
        }
        Ok(())
    }
}

/// Per-cloud bookkeeping reported alongside the predictors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CloudSummary {
    pub input_points: usize,
    pub fused_points: usize,
    pub degenerate_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineOutput {
    pub symmetric: PredictorVector,
    pub distorted_to_reference: PredictorVector,
    pub reference_to_distorted: PredictorVector,
    pub layout: FeatureLayout,
    /// False when either input lacks colors; texture predictors are then omitted.
    pub texture_available: bool,
    pub radius: f64,
    pub reference_extent: BoundingExtent,
    pub reference: CloudSummary,
    pub distorted: CloudSummary,
}

struct Prepared {
    cloud: PointCloud,
    descriptors: DescriptorMap,
    features: FeatureMap,
    index: SpatialIndex,
}

fn prepare(cloud: PointCloud, radius: f64, config: &PipelineConfig) -> Result<Prepared> {
    let index = SpatialIndex::build(&cloud)?;
    let descriptors = compute_descriptor_map(&cloud, &index, radius, &config.descriptors)?;
    let features = compute_feature_map(
        &cloud,
        &index,
        &descriptors,
        config.k,
        config.descriptors.exclude_query,
    )?;
    Ok(Prepared {
        cloud,
        descriptors,
        features,
        index,
    })
}

fn without_colors(cloud: PointCloud) -> Result<PointCloud> {
    let (positions, _) = cloud.into_parts();
    PointCloud::from_positions(positions)
}

/// Descriptor radius for a pair: the explicit radius if configured, else the
/// factor times the largest side of the fused reference's bounding box.
pub fn descriptor_radius(reference: &PointCloud, config: &PipelineConfig) -> Result<f64> {
    config.validate()?;
    let radius = match config.radius {
        Some(r) => r,
        None => config.radius_factor * bounding_extent(&fuse_duplicates(reference))?.max_side,
    };
    if radius > 0.0 && radius.is_finite() {
        Ok(radius)
    } else {
        Err(Error::InvalidCloud(
            "reference bounding box is degenerate, so the descriptor radius is zero".into(),
        ))
    }
}

/// Computes the symmetric and both directional predictor vectors.
pub fn compute_predictors(
    reference: &PointCloud,
    distorted: &PointCloud,
    config: &PipelineConfig,
) -> Result<PipelineOutput> {
    config.validate()?;
    let mut fused_ref = fuse_duplicates(reference);
    let mut fused_dist = fuse_duplicates(distorted);
    let reference_extent = bounding_extent(&fused_ref)?;
    let radius = descriptor_radius(&fused_ref, config)?;

    let texture_available = fused_ref.has_colors() && fused_dist.has_colors();
    if !texture_available {
        if fused_ref.has_colors() {
            fused_ref = without_colors(fused_ref)?;
        }
        if fused_dist.has_colors() {
            fused_dist = without_colors(fused_dist)?;
        }
    }

    let (a, b) = rayon::join(
        || prepare(fused_ref, radius, config),
        || prepare(fused_dist, radius, config),
    );
    let (a, b) = (a?, b?);
    let layout = a.features.layout();

    let (ba, ab) = rayon::join(
        || -> Result<PredictorVector> {
            let corr = correspondence(&b.cloud, &a.index);
            let errors = error_map(&b.features, &a.features, &corr, config.method)?;
            pool(&errors, Direction::DistortedToReference)
        },
        || -> Result<PredictorVector> {
            let corr = correspondence(&a.cloud, &b.index);
            let errors = error_map(&a.features, &b.features, &corr, config.method)?;
            pool(&errors, Direction::ReferenceToDistorted)
        },
    );
    let (ba, ab) = (ba?, ab?);
    let symmetric = symmetric_predictors(&ba, &ab)?;

    Ok(PipelineOutput {
        symmetric,
        distorted_to_reference: ba,
        reference_to_distorted: ab,
        layout,
        texture_available,
        radius,
        reference_extent,
        reference: CloudSummary {
            input_points: reference.len(),
            fused_points: a.cloud.len(),
            degenerate_points: a.descriptors.degenerate_count(),
        },
        distorted: CloudSummary {
            input_points: distorted.len(),
            fused_points: b.cloud.len(),
            degenerate_points: b.descriptors.degenerate_count(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn textured_grid(n: i32, jitter: f64) -> PointCloud {
        let mut pts = Vec::new();
        let mut colors = Vec::new();
        for x in 0..n {
            for y in 0..n {
                let z = jitter * f64::from((x * 7 + y * 3) % 5);
                pts.push([f64::from(x), f64::from(y), z]);
                colors.push([f64::from((x * 40) % 256), f64::from((y * 25) % 256), 100.0]);
            }
        }
        PointCloud::new(pts, Some(colors)).unwrap()
    }

    fn config() -> PipelineConfig {
        PipelineConfig {
            radius_factor: 0.25,
            k: 9,
            ..PipelineConfig::default()
        }
    }

    #[test]
    fn identity_gives_zero_predictors() {
        let cloud = textured_grid(8, 0.1);
        let out = compute_predictors(&cloud, &cloud, &config()).unwrap();
        assert_eq!(out.layout, FeatureLayout::LUMINANCE);
        assert_eq!(out.symmetric.values, vec![0.0; 32]);
        assert!(out.texture_available);
        assert!((out.radius - 0.25 * 7.0).abs() < 1e-12);
    }

    #[test]
    fn duplicates_are_fused_before_scoring() {
        let cloud = textured_grid(6, 0.2);
        let (mut pts, colors) = cloud.clone().into_parts();
        let mut colors = colors.unwrap();
        pts.push(pts[4]);
        colors.push(colors[4]);
        let duplicated = PointCloud::new(pts, Some(colors)).unwrap();
        let out = compute_predictors(&cloud, &duplicated, &config()).unwrap();
        assert_eq!(out.symmetric.values, vec![0.0; 32]);
        assert_eq!(out.distorted.input_points, 37);
        assert_eq!(out.distorted.fused_points, 36);
    }

    #[test]
    fn colorless_input_drops_texture() {
        let cloud = textured_grid(6, 0.2);
        let bare = PointCloud::from_positions(cloud.positions().to_vec()).unwrap();
        let out = compute_predictors(&cloud, &bare, &config()).unwrap();
        assert!(!out.texture_available);
        assert_eq!(out.layout, FeatureLayout::GEOMETRY_ONLY);
        assert_eq!(out.symmetric.len(), 30);
    }

    #[test]
    fn rd1_predictors_stay_in_unit_interval() {
        let a = textured_grid(7, 0.0);
        let b = textured_grid(7, 0.4);
        let out = compute_predictors(&a, &b, &config()).unwrap();
        assert!(out.symmetric.values.iter().all(|v| (0.0..=1.0).contains(v)));
        assert!(out.symmetric.values.iter().any(|&v| v > 0.0));
        for j in 0..32 {
            let m = out.distorted_to_reference.values[j].max(out.reference_to_distorted.values[j]);
            assert_eq!(out.symmetric.values[j], m);
        }
    }

    #[test]
    fn rejects_bad_configuration_and_flat_reference() {
        let cloud = textured_grid(4, 0.0);
        let bad = PipelineConfig { k: 0, ..config() };
        assert!(compute_predictors(&cloud, &cloud, &bad).is_err());
        let bad = PipelineConfig {
            radius_factor: -1.0,
            ..config()
        };
        assert!(compute_predictors(&cloud, &cloud, &bad).is_err());
        let single = PointCloud::from_positions(vec![[1.0, 2.0, 3.0]]).unwrap();
        assert!(compute_predictors(&single, &single, &PipelineConfig::default()).is_err());
        let fixed = PipelineConfig {
            radius: Some(1.0),
            ..PipelineConfig::default()
        };
        assert!(compute_predictors(&single, &single, &fixed).is_ok());
    }
}
