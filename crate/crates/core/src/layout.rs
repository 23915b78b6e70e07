//! Feature index layout shared by every stage.
//!
//! Each point carries 15 geometric descriptors followed by `c` texture
//! descriptors (`c = 1` for luminance, `0` for colorless clouds, `3` for
//! three-channel color spaces). The statistical feature vector is
//! `[mean of every descriptor, standard deviation of every descriptor]`, so
//! with luminance:
//!
//! | feature (0-based) | 1-based | quantity                         |
//! |-------------------|---------|----------------------------------|
//! | 0..=14            | 1..=15  | mean of geometric descriptor 1–15 |
//! | 15                | 16      | mean of luminance                |
//! | 16..=30           | 17..=31 | std of geometric descriptor 1–15  |
//! | 31                | 32      | std of luminance                 |
//!
//! The layout identifier `pointpca-v1` names exactly this 32-wide ordering.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const GEOMETRIC_DESCRIPTORS: usize = 15;

const GEOMETRIC_NAMES: [&str; GEOMETRIC_DESCRIPTORS] = [
    "eigenvalue_1",
    "eigenvalue_2",
    "eigenvalue_3",
    "eigenvalue_sum",
    "linearity",
    "planarity",
    "sphericity",
    "anisotropy",
    "omnivariance",
    "eigenentropy",
    "surface_variation",
    "roughness",
    "parallelity_x",
    "parallelity_y",
    "parallelity_z",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistic {
    Mean,
    Std,
}

/// Attribute domain of a predictor subset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Domain {
    #[serde(rename = "g")]
    Geometry,
    #[serde(rename = "t")]
    Texture,
    #[serde(rename = "gt")]
    Joint,
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Domain::Geometry => "g",
            Domain::Texture => "t",
            Domain::Joint => "gt",
        })
    }
}

impl FromStr for Domain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "g" | "geometry" => Ok(Domain::Geometry),
            "t" | "texture" => Ok(Domain::Texture),
            "gt" | "g+t" | "joint" | "all" => Ok(Domain::Joint),
            other => Err(Error::InvalidArgument(format!("unknown domain `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeatureLayout {
    texture_channels: usize,
}

impl FeatureLayout {
    /// The 32-feature layout with luminance as the only texture descriptor.
    pub const LUMINANCE: FeatureLayout = FeatureLayout {
        texture_channels: 1,
    };
    pub const GEOMETRY_ONLY: FeatureLayout = FeatureLayout {
        texture_channels: 0,
    };

    pub fn new(texture_channels: usize) -> Self {
        Self { texture_channels }
    }

    pub fn texture_channels(&self) -> usize {
        self.texture_channels
    }

    pub fn has_texture(&self) -> bool {
        self.texture_channels > 0
    }

    pub fn descriptors(&self) -> usize {
        GEOMETRIC_DESCRIPTORS + self.texture_channels
    }

    pub fn features(&self) -> usize {
        2 * self.descriptors()
    }

    pub fn id(&self) -> String {
        match self.texture_channels {
            1 => "pointpca-v1".to_string(),
            0 => "pointpca-v1-geometry".to_string(),
            n => format!("pointpca-v1-texture{n}"),
        }
    }

    pub fn from_id(id: &str) -> Result<Self> {
        let channels = match id {
            "pointpca-v1" => Some(1),
            "pointpca-v1-geometry" => Some(0),
            other => other
                .strip_prefix("pointpca-v1-texture")
                .and_then(|n| n.parse().ok()),
        };
        channels
            .map(Self::new)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown feature layout `{id}`")))
    }

    /// Maps a 0-based feature index to its statistic and descriptor.
    pub fn feature(&self, j: usize) -> (Statistic, usize) {
        let d = self.descriptors();
        assert!(
            j < 2 * d,
            "feature index {j} out of range for {}",
            self.id()
        );
        if j < d {
            (Statistic::Mean, j)
        } else {
            (Statistic::Std, j - d)
        }
    }

    pub fn feature_index(&self, statistic: Statistic, descriptor: usize) -> usize {
        assert!(descriptor < self.descriptors());
        match statistic {
            Statistic::Mean => descriptor,
            Statistic::Std => self.descriptors() + descriptor,
        }
    }

    pub fn is_geometric_descriptor(&self, descriptor: usize) -> bool {
        descriptor < GEOMETRIC_DESCRIPTORS
    }

    /// 0-based feature indices belonging to `domain`, ascending.
    pub fn domain_indices(&self, domain: Domain) -> Vec<usize> {
        (0..self.features())
            .filter(|&j| {
                let geometric = self.is_geometric_descriptor(self.feature(j).1);
                match domain {
                    Domain::Geometry => geometric,
                    Domain::Texture => !geometric,
                    Domain::Joint => true,
                }
            })
            .collect()
    }

    pub fn descriptor_name(&self, descriptor: usize) -> String {
        match GEOMETRIC_NAMES.get(descriptor) {
            Some(name) => (*name).to_string(),
            None if self.texture_channels == 1 => "luminance".to_string(),
            None => format!("texture_{}", descriptor - GEOMETRIC_DESCRIPTORS + 1),
        }
    }

    /// `s_01`-style 1-based column label.
    pub fn column_label(&self, j: usize) -> String {
        format!("s_{:02}", j + 1)
    }

    /// Human-readable name such as `mean(linearity)`.
    pub fn feature_name(&self, j: usize) -> String {
        let (stat, d) = self.feature(j);
        let stat = match stat {
            Statistic::Mean => "mean",
            Statistic::Std => "std",
        };
        format!("{stat}({})", self.descriptor_name(d))
    }
}

impl Default for FeatureLayout {
    fn default() -> Self {
        Self::LUMINANCE
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn luminance_layout_matches_documented_table() {
        let l = FeatureLayout::LUMINANCE;
        assert_eq!(l.features(), 32);
        assert_eq!(l.feature(0), (Statistic::Mean, 0));
        assert_eq!(l.feature(15), (Statistic::Mean, 15));
        assert_eq!(l.feature(16), (Statistic::Std, 0));
        assert_eq!(l.feature(31), (Statistic::Std, 15));
        assert_eq!(l.feature_name(4), "mean(linearity)");
        assert_eq!(l.feature_name(31), "std(luminance)");
        assert_eq!(l.column_label(31), "s_32");
    }

    #[test]
    fn feature_index_is_a_bijection() {
        for layout in [
            FeatureLayout::GEOMETRY_ONLY,
            FeatureLayout::LUMINANCE,
            FeatureLayout::new(3),
        ] {
            for j in 0..layout.features() {
                let (s, d) = layout.feature(j);
                assert_eq!(layout.feature_index(s, d), j);
            }
        }
    }

    #[test]
    fn domain_sizes() {
        let l = FeatureLayout::LUMINANCE;
        assert_eq!(l.domain_indices(Domain::Geometry).len(), 30);
        assert_eq!(l.domain_indices(Domain::Texture), vec![15, 31]);
        assert_eq!(l.domain_indices(Domain::Joint).len(), 32);
        assert!(FeatureLayout::GEOMETRY_ONLY
            .domain_indices(Domain::Texture)
            .is_empty());
    }

    #[test]
    fn ids_round_trip() {
        for layout in [
            FeatureLayout::GEOMETRY_ONLY,
            FeatureLayout::LUMINANCE,
            FeatureLayout::new(3),
        ] {
            assert_eq!(FeatureLayout::from_id(&layout.id()).unwrap(), layout);
        }
        assert!(FeatureLayout::from_id("other-v2").is_err());
    }
}
