//! Point-wise comparison of corresponding feature vectors, pooling into
//! per-feature predictors, and the symmetric max over both directions.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::descriptors::EPSILON;
use crate::error::{Error, Result};
use crate::features::FeatureMap;
use crate::layout::FeatureLayout;
use crate::spatial::CorrespondenceMap;

/// How two corresponding feature values are compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// `|a - b|`
    Ad,
    /// `(a - b)²`
    Sd,
    /// `|a - b| / (max(|a|, |b|) + ε)`
    #[default]
    Rd1,
    /// `2ab / (a²·b² + ε)`
    Rd2,
    /// `|a - b| / (|a + b| + ε)`
    Rd3,
    /// `max(|a|, |b|) / (|a - b| + ε)`
    Rd4,
}

/// Whether larger predictor values mean larger or smaller differences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    /// 0 for identical inputs, grows with distortion.
    Distance,
    /// Grows as the inputs become more alike.
    Similarity,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Ad,
        Method::Sd,
        Method::Rd1,
        Method::Rd2,
        Method::Rd3,
        Method::Rd4,
    ];

    pub fn polarity(self) -> Polarity {
        match self {
            Method::Rd2 | Method::Rd4 => Polarity::Similarity,
            _ => Polarity::Distance,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Ad => "ad",
            Method::Sd => "sd",
            Method::Rd1 => "rd1",
            Method::Rd2 => "rd2",
            Method::Rd3 => "rd3",
            Method::Rd4 => "rd4",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown comparison method `{s}`")))
    }
}

#[inline]
fn compare_unchecked(a: f64, b: f64, method: Method) -> f64 {
    match method {
        Method::Ad => (a - b).abs(),
        Method::Sd => (a - b) * (a - b),
        Method::Rd1 => (a - b).abs() / (a.abs().max(b.abs()) + EPSILON),
        Method::Rd2 => 2.0 * a * b / (a * a * (b * b) + EPSILON),
        Method::Rd3 => (a - b).abs() / ((a + b).abs() + EPSILON),
        Method::Rd4 => a.abs().max(b.abs()) / ((a - b).abs() + EPSILON),
    }
}

/// Compares a reference feature value with the corresponding distorted one.
pub fn compare_features(reference: f64, distorted: f64, method: Method) -> Result<f64> {
    if !reference.is_finite() || !distorted.is_finite() {
        return Err(Error::NonFinite(format!(
            "feature values {reference} and {distorted}"
        )));
    }
    Ok(compare_unchecked(reference, distorted, method))
}

/// Per-point, per-feature comparison values of an evaluated cloud against a
/// reference, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorMap {
    layout: FeatureLayout,
    method: Method,
    values: Vec<f64>,
}

impl ErrorMap {
    pub fn layout(&self) -> FeatureLayout {
        self.layout
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn rows(&self) -> usize {
        self.values.len() / self.layout.features()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.layout.features();
        &self.values[i * w..(i + 1) * w]
    }
}

/// Compares the features of every evaluated point with those of its matched
/// reference point.
pub fn error_map(
    evaluated: &FeatureMap,
    reference: &FeatureMap,
    correspondence: &CorrespondenceMap,
    method: Method,
) -> Result<ErrorMap> {
    if evaluated.layout() != reference.layout() {
        return Err(Error::LayoutMismatch {
            expected: reference.layout().id(),
            found: evaluated.layout().id(),
        });
    }
    if correspondence.len() != evaluated.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} correspondences for {} evaluated points",
            correspondence.len(),
            evaluated.len()
        )));
    }
    if let Some(&bad) = correspondence
        .as_slice()
        .iter()
        .find(|&&m| m >= reference.len())
    {
        return Err(Error::DimensionMismatch(format!(
            "correspondence index {bad} outside reference of {} points",
            reference.len()
        )));
    }
    let layout = evaluated.layout();
    let width = layout.features();
    let mut values = vec![0.0; evaluated.len() * width];
    values
        .par_chunks_mut(width)
        .enumerate()
        .try_for_each(|(i, out)| -> Result<()> {
            let eval = evaluated.row(i);
            let refr = reference.row(correspondence.get(i));
            for ((o, &a), &b) in out.iter_mut().zip(refr).zip(eval) {
                *o = compare_features(a, b, method)?;
            }
            Ok(())
        })?;
    Ok(ErrorMap {
        layout,
        method,
        values,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Distorted points evaluated against reference matches.
    DistortedToReference,
    /// Reference points evaluated against distorted matches.
    ReferenceToDistorted,
    Symmetric,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::DistortedToReference => "distorted_to_reference",
            Direction::ReferenceToDistorted => "reference_to_distorted",
            Direction::Symmetric => "symmetric",
        })
    }
}

/// One pooled value per feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorVector {
    pub layout: FeatureLayout,
    pub direction: Direction,
    pub values: Vec<f64>,
}

impl PredictorVector {
    pub fn new(layout: FeatureLayout, direction: Direction, values: Vec<f64>) -> Result<Self> {
        if values.len() != layout.features() {
            return Err(Error::DimensionMismatch(format!(
                "{} predictors for layout {}",
                values.len(),
                layout.id()
            )));
        }
        Ok(Self {
            layout,
            direction,
            values,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Column means of the error map, summed in row order.
pub fn pool(errors: &ErrorMap, direction: Direction) -> Result<PredictorVector> {
    let rows = errors.rows();
    if rows == 0 {
        return Err(Error::InvalidArgument(
            "cannot pool an empty error map".into(),
        ));
    }
    let mut sums = vec![0.0; errors.layout.features()];
    for i in 0..rows {
        for (s, v) in sums.iter_mut().zip(errors.row(i)) {
            *s += v;
        }
    }
    let n = rows as f64;
    PredictorVector::new(
        errors.layout,
        direction,
        sums.into_iter().map(|s| s / n).collect(),
    )
}

/// Componentwise max of two opposite directional predictor vectors.
pub fn symmetric_predictors(a: &PredictorVector, b: &PredictorVector) -> Result<PredictorVector> {
    if a.layout != b.layout || a.values.len() != b.values.len() {
        return Err(Error::DimensionMismatch(format!(
            "predictor vectors of layouts {} and {}",
            a.layout.id(),
            b.layout.id()
        )));
    }
    let opposite = matches!(
        (a.direction, b.direction),
        (
            Direction::DistortedToReference,
            Direction::ReferenceToDistorted
        ) | (
            Direction::ReferenceToDistorted,
            Direction::DistortedToReference
        )
    );
    if !opposite {
        return Err(Error::InvalidArgument(format!(
            "symmetric predictors need opposite directions, got {} and {}",
            a.direction, b.direction
        )));
    }
    let values = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| x.max(*y))
        .collect();
    PredictorVector::new(a.layout, Direction::Symmetric, values)
}
