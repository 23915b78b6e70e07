use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use pointpca::pipeline::{CloudSummary, PipelineOutput};
use serde::Serialize;

use crate::cache::predictors_for;
use crate::settings::{CommonArgs, OutputFormat, Provenance, Score, Scorer};
use crate::write_output;

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Reference (pristine) point cloud, PLY
    pub reference: PathBuf,
    /// Distorted point cloud, PLY
    pub distorted: PathBuf,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Serialize)]
struct Predictors {
    labels: Vec<String>,
    names: Vec<String>,
    symmetric: Vec<f64>,
    distorted_to_reference: Vec<f64>,
    reference_to_distorted: Vec<f64>,
}

#[derive(Debug, Serialize)]
struct CompareReport {
    reference: String,
    distorted: String,
    config: Provenance,
    layout: String,
    texture_available: bool,
    radius: f64,
    reference_max_side: f64,
    reference_points: CloudSummary,
    distorted_points: CloudSummary,
    score: Score,
    predictors: Predictors,
}

impl CompareReport {
    fn new(args: &CompareArgs, output: PipelineOutput, score: Score) -> Self {
        let layout = output.layout;
        let n = layout.features();
        Self {
            reference: args.reference.display().to_string(),
            distorted: args.distorted.display().to_string(),
            config: Provenance::new(&args.common),
            layout: layout.id(),
            texture_available: output.texture_available,
            radius: output.radius,
            reference_max_side: output.reference_extent.max_side,
            reference_points: output.reference,
            distorted_points: output.distorted,
            score,
            predictors: Predictors {
                labels: (0..n).map(|j| layout.column_label(j)).collect(),
                names: (0..n).map(|j| layout.feature_name(j)).collect(),
                symmetric: output.symmetric.values,
                distorted_to_reference: output.distorted_to_reference.values,
                reference_to_distorted: output.reference_to_distorted.values,
            },
        }
    }

    /// `# key: value` provenance lines followed by one table row per
    /// predictor vector: `direction,method,score,s_01,...`.
    fn to_csv(&self) -> Result<Vec<u8>> {
        let opt = |v: Option<f64>| v.map_or_else(String::new, |v| v.to_string());
        let mut out = Vec::new();
        let mut meta: Vec<(&str, String)> = vec![
            ("reference", self.reference.clone()),
            ("distorted", self.distorted.clone()),
        ];
        meta.extend(self.config.pairs());
        meta.extend([
            ("layout", self.layout.clone()),
            ("texture_available", self.texture_available.to_string()),
            ("radius", self.radius.to_string()),
            ("reference_max_side", self.reference_max_side.to_string()),
            (
                "reference_points",
                self.reference_points.fused_points.to_string(),
            ),
            (
                "distorted_points",
                self.distorted_points.fused_points.to_string(),
            ),
            ("score_kind", self.score.kind.clone()),
            ("score", self.score.value.to_string()),
            ("q_g", opt(self.score.q_g)),
            ("q_t", opt(self.score.q_t)),
        ]);
        for (k, v) in meta {
            out.extend_from_slice(format!("# {k}: {v}\n").as_bytes());
        }
        {
            let mut w = csv::Writer::from_writer(&mut out);
            let mut header = vec!["direction".to_string(), "method".into(), "score".into()];
            header.extend(self.predictors.labels.iter().cloned());
            w.write_record(&header)?;
            let method = self.config.method.to_string();
            let rows = [
                (
                    "symmetric",
                    self.score.value.to_string(),
                    &self.predictors.symmetric,
                ),
                (
                    "distorted_to_reference",
                    String::new(),
                    &self.predictors.distorted_to_reference,
                ),
                (
                    "reference_to_distorted",
                    String::new(),
                    &self.predictors.reference_to_distorted,
                ),
            ];
            for (direction, score, values) in rows {
                let mut row = vec![direction.to_string(), method.clone(), score];
                row.extend(values.iter().map(|v| v.to_string()));
                w.write_record(&row)?;
            }
            w.flush()?;
        }
        Ok(out)
    }
}

pub fn run(args: &CompareArgs) -> Result<()> {
    let common = &args.common;
    let config = common.pipeline_config()?;
    let scorer = Scorer::new(common)?;
    let pool = common.thread_pool()?;
    let output = pool.install(|| {
        predictors_for(
            &args.reference,
            &args.distorted,
            &config,
            common.cache.as_deref(),
        )
    })?;
    let score = scorer.score(&output)?;
    for notice in &score.notices {
        eprintln!("notice: {notice}");
    }
    let report = CompareReport::new(args, output, score);
    let bytes = match common.format {
        OutputFormat::Csv => report.to_csv()?,
        OutputFormat::Json => {
            let mut b = serde_json::to_vec_pretty(&report)?;
            b.push(b'\n');
            b
        }
    };
    write_output(common.output.as_deref(), &bytes)
}
