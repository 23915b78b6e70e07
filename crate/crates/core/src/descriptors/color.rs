use std::fmt;
use std::str::FromStr;

use arrayvec::ArrayVec;
use serde::{Deserialize, Serialize};

use crate::cloud::Rgb;
use crate::error::{Error, Result};

/// BT.709 RGB→YCbCr with offsets (0, 128, 128); applied to 0–255 values.
/// Every chroma row sums to zero, so greys map to Cb = Cr = 128.
const BT709: [[f64; 3]; 3] = [
    [0.2126, 0.7152, 0.0722],
    [-0.1146, -0.3854, 0.5000],
    [0.5000, -0.4542, -0.0458],
];
const BT709_OFFSET: [f64; 3] = [0.0, 128.0, 128.0];

// sRGB (linear) → XYZ, D65.
const SRGB_TO_XYZ: [[f64; 3]; 3] = [
    [0.4124564, 0.3575761, 0.1804375],
    [0.2126729, 0.7151522, 0.0721750],
    [0.0193339, 0.1191920, 0.9503041],
];
const D65_WHITE: [f64; 3] = [0.95047, 1.0, 1.08883];

/// Color space of the texture descriptors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColorSpace {
    /// Luminance only.
    #[default]
    Y,
    YCbCr,
    Rgb,
    CieLab,
}

impl ColorSpace {
    pub fn channels(self) -> usize {
        match self {
            ColorSpace::Y => 1,
            _ => 3,
        }
    }
}

impl fmt::Display for ColorSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ColorSpace::Y => "y",
            ColorSpace::YCbCr => "ycbcr",
            ColorSpace::Rgb => "rgb",
            ColorSpace::CieLab => "cielab",
        })
    }
}

impl FromStr for ColorSpace {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "y" => Ok(ColorSpace::Y),
            "ycbcr" => Ok(ColorSpace::YCbCr),
            "rgb" => Ok(ColorSpace::Rgb),
            "cielab" | "lab" => Ok(ColorSpace::CieLab),
            other => Err(Error::InvalidArgument(format!(
                "unknown color space `{other}`"
            ))),
        }
    }
}

pub type Channels = ArrayVec<f64, 3>;

fn bt709(rgb: &Rgb) -> [f64; 3] {
    let mut out = BT709_OFFSET;
    for (row, o) in BT709.iter().zip(out.iter_mut()) {
        *o += row[0] * rgb[0] + row[1] * rgb[1] + row[2] * rgb[2];
    }
    out
}

fn srgb_to_linear(c: f64) -> f64 {
    let c = c / 255.0;
    if c <= 0.04045 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

fn lab_f(t: f64) -> f64 {
    const DELTA: f64 = 6.0 / 29.0;
    if t > DELTA * DELTA * DELTA {
        t.cbrt()
    } else {
        t / (3.0 * DELTA * DELTA) + 4.0 / 29.0
    }
}

fn cielab(rgb: &Rgb) -> [f64; 3] {
    let linear = rgb.map(srgb_to_linear);
    let mut xyz = [0.0; 3];
    for (k, row) in SRGB_TO_XYZ.iter().enumerate() {
        xyz[k] = (row[0] * linear[0] + row[1] * linear[1] + row[2] * linear[2]) / D65_WHITE[k];
    }
    let [fx, fy, fz] = xyz.map(lab_f);
    [116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)]
}

/// Converts one 0–255 RGB triple into the channels of `space`. No clamping is
/// applied to the output.
pub fn convert_color(rgb: &Rgb, space: ColorSpace) -> Result<Channels> {
    if rgb.iter().any(|c| !(0.0..=255.0).contains(c)) {
        return Err(Error::InvalidArgument(format!(
            "color {rgb:?} outside the 0-255 range"
        )));
    }
    let values: ArrayVec<f64, 3> = match space {
        ColorSpace::Y => [bt709(rgb)[0]].into_iter().collect(),
        ColorSpace::YCbCr => bt709(rgb).into(),
        ColorSpace::Rgb => (*rgb).into(),
        ColorSpace::CieLab => cielab(rgb).into(),
    };
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn white_black_red() {
        let white = convert_color(&[255.0; 3], ColorSpace::YCbCr).unwrap();
        assert!((white[0] - 255.0).abs() < 1e-9);
        assert!((white[1] - 128.0).abs() < 0.05);
        assert!((white[2] - 128.0).abs() < 0.05);

        let black = convert_color(&[0.0; 3], ColorSpace::YCbCr).unwrap();
        assert_eq!(black.as_slice(), &[0.0, 128.0, 128.0]);

        let red = convert_color(&[255.0, 0.0, 0.0], ColorSpace::YCbCr).unwrap();
        assert!((red[0] - 54.213).abs() < 1e-9);
        assert!((red[1] - 98.777).abs() < 1e-9);
        assert!((red[2] - 255.5).abs() < 1e-9);

        let y = convert_color(&[255.0, 0.0, 0.0], ColorSpace::Y).unwrap();
        assert_eq!(y.len(), 1);
        assert_eq!(y[0], red[0]);
    }

    #[test]
    fn rgb_is_pass_through() {
        let c = convert_color(&[1.0, 2.5, 200.0], ColorSpace::Rgb).unwrap();
        assert_eq!(c.as_slice(), &[1.0, 2.5, 200.0]);
    }

    #[test]
    fn cielab_reference_points() {
        let white = convert_color(&[255.0; 3], ColorSpace::CieLab).unwrap();
        assert!((white[0] - 100.0).abs() < 1e-3);
        assert!(white[1].abs() < 1e-2 && white[2].abs() < 1e-2);
        let black = convert_color(&[0.0; 3], ColorSpace::CieLab).unwrap();
        assert!(black.iter().all(|v| v.abs() < 1e-9));
        // sRGB pure red: L* 53.24, a* 80.09, b* 67.20
        let red = convert_color(&[255.0, 0.0, 0.0], ColorSpace::CieLab).unwrap();
        assert!((red[0] - 53.24).abs() < 0.01);
        assert!((red[1] - 80.09).abs() < 0.01);
        assert!((red[2] - 67.20).abs() < 0.01);
    }

    #[test]
    fn out_of_range_is_rejected() {
        assert!(convert_color(&[256.0, 0.0, 0.0], ColorSpace::Y).is_err());
        assert!(convert_color(&[-1.0, 0.0, 0.0], ColorSpace::Rgb).is_err());
    }
}
