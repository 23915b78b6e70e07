//! Fusion of predictors into quality scores and the weight file format.
//!
//! A weight file is plain text:
//!
//! ```text
//! # layout: pointpca-v1
//! # domain: gt
//! 1 0.5
//! 17 0.5
//! ```
//!
//! Feature indices are 1-based. Indices that are not listed have weight 0.
//! The `# domain:` line is optional and defaults to `gt`.

use std::fmt::{self, Write as _};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::comparison::{Method, PredictorVector};
use crate::descriptors::ColorSpace;
use crate::error::{Error, Result};
use crate::layout::{Domain, FeatureLayout};

pub const DEFAULT_OMEGA: f64 = 0.5;

/// Tolerance of the unit-sum constraint for weights held in memory.
pub const SIMPLEX_TOLERANCE: f64 = 1e-9;
/// Weight files whose sum is further than this from 1 are rejected in strict
/// mode and renormalized with a warning otherwise.
pub const FILE_SUM_TOLERANCE: f64 = 1e-6;

/// Non-negative weights over a subset of predictors, summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    layout: FeatureLayout,
    domain: Domain,
    /// `(0-based feature index, weight)`, sorted by index.
    entries: Vec<(usize, f64)>,
}

fn check_entries(layout: FeatureLayout, domain: Domain, entries: &[(usize, f64)]) -> Result<()> {
    let allowed = layout.domain_indices(domain);
    for pair in entries.windows(2) {
        if pair[0].0 == pair[1].0 {
            return Err(Error::InvalidWeights(format!(
                "feature {} listed twice",
                layout.column_label(pair[0].0)
            )));
        }
    }
    for &(j, w) in entries {
        if j >= layout.features() {
            return Err(Error::InvalidWeights(format!(
                "feature index {} outside layout {}",
                j + 1,
                layout.id()
            )));
        }
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::InvalidWeights(format!(
                "weight {w} of {} outside [0, 1]",
                layout.column_label(j)
            )));
        }
        if w > 0.0 && !allowed.contains(&j) {
            return Err(Error::InvalidWeights(format!(
                "{} is not a predictor of domain {domain}",
                layout.column_label(j)
            )));
        }
    }
    Ok(())
}

impl WeightVector {
    pub fn new(
        layout: FeatureLayout,
        domain: Domain,
        mut entries: Vec<(usize, f64)>,
    ) -> Result<Self> {
        entries.sort_by_key(|e| e.0);
        check_entries(layout, domain, &entries)?;
        let sum: f64 = entries.iter().map(|e| e.1).sum();
        if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(Error::InvalidWeights(format!(
                "weights sum to {sum}, not 1"
            )));
        }
        Ok(Self {
            layout,
            domain,
            entries,
        })
    }

    /// Builds a weight vector from a dense vector of length `layout.features()`,
    /// dropping zeros.
    pub fn from_dense(layout: FeatureLayout, domain: Domain, dense: &[f64]) -> Result<Self> {
        if dense.len() != layout.features() {
            return Err(Error::DimensionMismatch(format!(
                "{} weights for layout {}",
                dense.len(),
                layout.id()
            )));
        }
        let entries = dense
            .iter()
            .enumerate()
            .filter(|(_, &w)| w != 0.0)
            .map(|(j, &w)| (j, w))
            .collect();
        Self::new(layout, domain, entries)
    }

    pub fn layout(&self) -> FeatureLayout {
        self.layout
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.layout.features()];
        for &(j, w) in &self.entries {
            out[j] = w;
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut s = format!(
            "# layout: {}\n# domain: {}\n",
            self.layout.id(),
            self.domain
        );
        for &(j, w) in &self.entries {
            let _ = writeln!(s, "{} {w}", j + 1);
        }
        s
    }

    /// Parses the weight file format. See the module docs.
    pub fn parse(text: &str, strict: bool) -> Result<Self> {
        let mut layout = None;
        let mut domain = Domain::Joint;
        let mut entries = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line_no = n + 1;
            let err = |message: String| Error::WeightFile {
                line: line_no,
                message,
            };
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                if let Some((key, value)) = comment.split_once(':') {
                    match key.trim() {
                        "layout" => {
                            layout = Some(
                                FeatureLayout::from_id(value.trim())
                                    .map_err(|e| err(e.to_string()))?,
                            )
                        }
                        "domain" => {
                            domain = value
                                .trim()
                                .parse()
                                .map_err(|e: Error| err(e.to_string()))?
                        }
                        _ => {}
                    }
                }
                continue;
            }
            let layout = layout.ok_or_else(|| err("weights before the `# layout:` line".into()))?;
            let mut fields = line.split_whitespace();
            let (Some(j), Some(w), None) = (fields.next(), fields.next(), fields.next()) else {
                return Err(err(format!("expected `index weight`, found `{line}`")));
            };
            let j: usize = j
                .parse()
                .map_err(|_| err(format!("bad feature index `{j}`")))?;
            let w: f64 = w.parse().map_err(|_| err(format!("bad weight `{w}`")))?;
            if j == 0 || j > layout.features() {
                return Err(err(format!(
                    "feature index {j} outside 1..={}",
                    layout.features()
                )));
            }
            if !w.is_finite() || w < 0.0 {
                return Err(err(format!("weight {w} must be a non-negative number")));
            }
            entries.push((j - 1, w));
        }
        let layout = layout.ok_or_else(|| Error::WeightFile {
            line: 0,
            message: "missing `# layout:` line".into(),
        })?;
        entries.sort_by_key(|e| e.0);
        let sum: f64 = entries.iter().map(|e| e.1).sum();
        if sum <= 0.0 {
            return Err(Error::InvalidWeights("weights sum to zero".into()));
        }
        if (sum - 1.0).abs() > FILE_SUM_TOLERANCE {
            if strict {
                return Err(Error::InvalidWeights(format!(
                    "weights sum to {sum}, not 1"
                )));
            }
            log::warn!("weights sum to {sum}; renormalizing");
        }
        if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
            for e in &mut entries {
                e.1 /= sum;
            }
        }
        Self::new(layout, domain, entries)
    }
}

pub fn load_weights(path: impl AsRef<Path>, strict: bool) -> Result<WeightVector> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    WeightVector::parse(&text, strict)
}

pub fn save_weights(weights: &WeightVector, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, weights.to_text()).map_err(|e| Error::io(path, e))
}

/// Equal weights over the predictors of `domain`.
pub fn default_weights(domain: Domain, layout: FeatureLayout) -> Result<WeightVector> {
    let selection = layout.domain_indices(domain);
    if selection.is_empty() {
        return Err(Error::TextureUnavailable(format!(
            "domain {domain} has no predictors in layout {}",
            layout.id()
        )));
    }
    let w = 1.0 / selection.len() as f64;
    WeightVector::new(
        layout,
        domain,
        selection.into_iter().map(|j| (j, w)).collect(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ScoreKind {
    Domain { domain: Domain },
    Blended { omega: f64 },
}

impl fmt::Display for ScoreKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScoreKind::Domain { domain } => write!(f, "q_{domain}"),
            ScoreKind::Blended { omega } => write!(f, "blend(omega={omega})"),
        }
    }
}

/// Settings that produced a score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub method: Method,
    pub k: usize,
    pub radius_factor: f64,
    pub radius: f64,
    pub color_space: ColorSpace,
    pub weights: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityScore {
    pub value: f64,
    pub kind: ScoreKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

impl QualityScore {
    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = Some(provenance);
        self
    }
}

/// `Σ w_j s_j / Σ w_j` over arbitrary non-negative weights.
pub fn combine_raw(predictors: &[f64], weights: &[(usize, f64)]) -> Result<f64> {
    let mut num = 0.0;
    let mut den = 0.0;
    for &(j, w) in weights {
        let s = *predictors.get(j).ok_or_else(|| {
            Error::InvalidWeights(format!(
                "weight index {} beyond {} predictors",
                j + 1,
                predictors.len()
            ))
        })?;
        if !(w.is_finite() && w >= 0.0) {
            return Err(Error::InvalidWeights(format!(
                "weight {w} is not non-negative"
            )));
        }
        num += w * s;
        den += w;
    }
    if den <= 0.0 {
        return Err(Error::InvalidWeights("weights sum to zero".into()));
    }
    Ok(num / den)
}

/// Weighted linear combination of predictors.
pub fn combine(predictors: &PredictorVector, weights: &WeightVector) -> Result<QualityScore> {
    if predictors.layout != weights.layout {
        return Err(Error::LayoutMismatch {
            expected: weights.layout.id(),
            found: predictors.layout.id(),
        });
    }
    Ok(QualityScore {
        value: combine_raw(&predictors.values, &weights.entries)?,
        kind: ScoreKind::Domain {
            domain: weights.domain,
        },
        provenance: None,
    })
}

/// `ω·q_g + (1 − ω)·q_t`.
pub fn blend(q_g: &QualityScore, q_t: &QualityScore, omega: f64) -> Result<QualityScore> {
    if !(0.0..=1.0).contains(&omega) {
        return Err(Error::InvalidArgument(format!(
            "omega {omega} outside [0, 1]"
        )));
    }
    let geometry = ScoreKind::Domain {
        domain: Domain::Geometry,
    };
    let texture = ScoreKind::Domain {
        domain: Domain::Texture,
    };
    if q_g.kind != geometry || q_t.kind != texture {
        return Err(Error::InvalidArgument(format!(
            "blend needs a geometry and a texture score, got {} and {}",
            q_g.kind, q_t.kind
        )));
    }
    Ok(QualityScore {
        value: omega * q_g.value + (1.0 - omega) * q_t.value,
        kind: ScoreKind::Blended { omega },
        provenance: q_g.provenance.clone(),
    })
}
