//! Flags shared by every command and the scoring rules built from them.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use pointpca::comparison::Method;
use pointpca::descriptors::{ColorSpace, DescriptorOptions};
use pointpca::layout::Domain;
use pointpca::pipeline::{PipelineConfig, PipelineOutput, DEFAULT_RADIUS_FACTOR};
use pointpca::quality::{blend, combine, default_weights, load_weights, WeightVector};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Descriptor radius as a fraction of the reference bounding box's largest side
    #[arg(long, env = "POINTPCA_RADIUS_FACTOR", default_value_t = DEFAULT_RADIUS_FACTOR)]
    pub radius_factor: f64,

    /// Absolute descriptor radius; overrides --radius-factor
    #[arg(long, env = "POINTPCA_RADIUS")]
    pub radius: Option<f64>,

    /// Neighbors per statistical feature
    #[arg(long, env = "POINTPCA_K", default_value_t = 25)]
    pub k: usize,

    /// Comparison method: rd1, rd2, rd3, rd4, ad or sd
    #[arg(long, env = "POINTPCA_METHOD", default_value = "rd1")]
    pub method: Method,

    /// Texture color space: y, ycbcr, rgb or cielab
    #[arg(long, env = "POINTPCA_COLOR_SPACE", default_value = "y")]
    pub color_space: ColorSpace,

    /// `equal` for equal weights, or the path of a weight file
    #[arg(long, env = "POINTPCA_WEIGHTS", default_value = "equal")]
    pub weights: String,

    /// Blend equal-weight geometry and texture scores: omega*q_g + (1-omega)*q_t
    #[arg(long, env = "POINTPCA_OMEGA")]
    pub omega: Option<f64>,

    /// Worker threads (0 uses every core)
    #[arg(long, env = "POINTPCA_THREADS", default_value_t = 0)]
    pub threads: usize,

    /// Write the report here instead of stdout
    #[arg(long, env = "POINTPCA_OUTPUT")]
    pub output: Option<PathBuf>,

    /// Report format
    #[arg(long, env = "POINTPCA_FORMAT", value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,

    /// Directory for cached predictor vectors
    #[arg(long, env = "POINTPCA_CACHE")]
    pub cache: Option<PathBuf>,

    /// Seed for sampled leave-p-out splits
    #[arg(long, env = "POINTPCA_SEED", default_value_t = 0)]
    pub seed: u64,

    /// Reject weight files whose weights do not sum to 1 instead of renormalizing
    #[arg(long, env = "POINTPCA_STRICT")]
    pub strict: bool,
}

impl CommonArgs {
    pub fn pipeline_config(&self) -> Result<PipelineConfig> {
        let config = PipelineConfig {
            radius_factor: self.radius_factor,
            radius: self.radius,
            k: self.k,
            method: self.method,
            descriptors: DescriptorOptions {
                color_space: self.color_space,
                ..DescriptorOptions::default()
            },
        };
        config.validate()?;
        Ok(config)
    }

    pub fn thread_pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.threads)
            .build()
            .context("building the thread pool")
    }
}

/// Echo of the settings that produced a report.
#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub radius_factor: f64,
    pub radius_override: Option<f64>,
    pub k: usize,
    pub method: Method,
    pub polarity: pointpca::comparison::Polarity,
    pub color_space: ColorSpace,
    pub weights: String,
    pub omega: Option<f64>,
}

impl Provenance {
    pub fn new(args: &CommonArgs) -> Self {
        Self {
            radius_factor: args.radius_factor,
            radius_override: args.radius,
            k: args.k,
            method: args.method,
            polarity: args.method.polarity(),
            color_space: args.color_space,
            weights: args.weights.clone(),
            omega: args.omega,
        }
    }

    pub fn pairs(&self) -> Vec<(&'static str, String)> {
        let opt = |v: Option<f64>| v.map_or_else(|| "none".to_string(), |v| v.to_string());
        vec![
            ("radius_factor", self.radius_factor.to_string()),
            ("radius_override", opt(self.radius_override)),
            ("k", self.k.to_string()),
            ("method", self.method.to_string()),
            ("polarity", format!("{:?}", self.polarity).to_lowercase()),
            ("color_space", self.color_space.to_string()),
            ("weights", self.weights.clone()),
            ("omega", opt(self.omega)),
        ]
    }
}

/// How predictor vectors are fused into one score.
#[derive(Debug, Clone)]
pub enum Scorer {
    Equal {
        omega: Option<f64>,
    },
    File {
        path: PathBuf,
        weights: WeightVector,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct Score {
    pub value: f64,
    pub kind: String,
    pub q_g: Option<f64>,
    pub q_t: Option<f64>,
    pub notices: Vec<String>,
}

impl Scorer {
    pub fn new(args: &CommonArgs) -> Result<Self> {
        if let Some(omega) = args.omega {
            if !(0.0..=1.0).contains(&omega) {
                bail!("--omega must lie in [0, 1], got {omega}");
            }
        }
        if args.weights == "equal" {
            return Ok(Scorer::Equal { omega: args.omega });
        }
        if args.omega.is_some() {
            bail!("--omega applies to equal weights only; a weight file fixes the fusion");
        }
        let path = PathBuf::from(&args.weights);
        let weights = load_weights(&path, args.strict)
            .with_context(|| format!("loading weights from {}", path.display()))?;
        Ok(Scorer::File { path, weights })
    }

    pub fn score(&self, output: &PipelineOutput) -> Result<Score> {
        let s = &output.symmetric;
        let domain_score = |d: Domain| -> Result<f64> {
            Ok(combine(s, &default_weights(d, output.layout)?)?.value)
        };
        let q_g = domain_score(Domain::Geometry)?;
        let q_t = if output.texture_available {
            Some(domain_score(Domain::Texture)?)
        } else {
            None
        };
        let mut notices = Vec::new();
        let (value, kind) = match self {
            Scorer::File { path, weights } => {
                let value = combine(s, weights)
                    .with_context(|| format!("applying weights from {}", path.display()))?
                    .value;
                (value, format!("weights({})", path.display()))
            }
            Scorer::Equal { omega } if !output.texture_available => {
                notices.push(
                    "input lacks color; texture predictors omitted, reporting geometry-only score q_g".into(),
                );
                if omega.is_some() {
                    notices.push("--omega ignored without texture".into());
                }
                (q_g, "q_g".to_string())
            }
            Scorer::Equal { omega: Some(omega) } => {
                let g = combine(s, &default_weights(Domain::Geometry, output.layout)?)?;
                let t = combine(s, &default_weights(Domain::Texture, output.layout)?)?;
                (
                    blend(&g, &t, *omega)?.value,
                    format!("blend(omega={omega})"),
                )
            }
            Scorer::Equal { omega: None } => (domain_score(Domain::Joint)?, "q_gt".to_string()),
        };
        Ok(Score {
            value,
            kind,
            q_g: Some(q_g),
            q_t,
            notices,
        })
    }
}
