//! PointPCA: a full-reference point cloud quality metric built on local PCA
//! descriptors of geometry and texture.
//!
//! The pipeline fuses duplicate points, computes per-point descriptors over
//! radius neighborhoods, summarizes them with k-nn means and standard
//! deviations, compares matched points in both directions, pools the errors
//! into per-feature predictors and fuses those into a quality score.

pub mod calibration;
pub mod cloud;
pub mod comparison;
pub mod descriptors;
pub mod error;
pub mod features;
pub mod layout;
pub mod pipeline;
pub mod quality;
pub mod spatial;

pub use cloud::{bounding_extent, fuse_duplicates, load_ply, save_ply, PlyFormat, PointCloud};
pub use comparison::{compare_features, Direction, Method, Polarity, PredictorVector};
pub use descriptors::{ColorSpace, DescriptorOptions, EntropyMode};
pub use error::{Error, Result};
pub use layout::{Domain, FeatureLayout};
pub use pipeline::{compute_predictors, PipelineConfig, PipelineOutput};
pub use quality::{blend, combine, default_weights, QualityScore, WeightVector};
