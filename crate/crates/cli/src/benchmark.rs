//! `benchmark` and `fit-weights`: commands driven by a rated-stimulus manifest.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use pointpca::calibration::{
    evaluate, leave_p_out, BenchmarkRecord, Evaluation, SplitPolicy, DEFAULT_MAX_SPLITS,
};
use pointpca::layout::{Domain, FeatureLayout};
use pointpca::pipeline::PipelineOutput;
use pointpca::quality::{combine, save_weights};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cache::predictors_for;
use crate::settings::{CommonArgs, OutputFormat, Provenance, Scorer};
use crate::write_output;

#[derive(Debug, Deserialize)]
struct ManifestRow {
    content_id: String,
    reference_path: PathBuf,
    distorted_path: PathBuf,
    mos: f64,
}

/// Reads `content_id,reference_path,distorted_path,mos`; relative paths are
/// resolved against the manifest's directory.
fn read_manifest(path: &Path) -> Result<Vec<ManifestRow>> {
    let base = path.parent().unwrap_or(Path::new("."));
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("opening manifest {}", path.display()))?;
    let mut rows = Vec::new();
    for (i, row) in reader.deserialize::<ManifestRow>().enumerate() {
        let mut row =
            row.with_context(|| format!("manifest {} record {}", path.display(), i + 1))?;
        if row.content_id.is_empty() {
            bail!("manifest record {} has an empty content_id", i + 1);
        }
        if !row.mos.is_finite() {
            bail!("manifest record {} has a non-finite mos", i + 1);
        }
        for p in [&mut row.reference_path, &mut row.distorted_path] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Computes predictors for every manifest row; reports every failure before
/// giving up.
fn compute_records(
    rows: &[ManifestRow],
    common: &CommonArgs,
) -> Result<Vec<(BenchmarkRecord, PipelineOutput)>> {
    let config = common.pipeline_config()?;
    let pool = common.thread_pool()?;
    let results: Vec<Result<PipelineOutput>> = pool.install(|| {
        rows.par_iter()
            .map(|r| {
                predictors_for(
                    &r.reference_path,
                    &r.distorted_path,
                    &config,
                    common.cache.as_deref(),
                )
            })
            .collect()
    });
    let mut failures = 0;
    let mut records = Vec::with_capacity(rows.len());
    for (i, (row, result)) in rows.iter().zip(results).enumerate() {
        match result {
            Ok(output) => records.push((
                BenchmarkRecord {
                    content_id: row.content_id.clone(),
                    reference_path: row.reference_path.clone(),
                    distorted_path: row.distorted_path.clone(),
                    mos: row.mos,
                    predictors: output.symmetric.clone(),
                },
                output,
            )),
            Err(e) => {
                failures += 1;
                eprintln!(
                    "error: record {} ({}): {}",
                    i + 1,
                    row.distorted_path.display(),
                    one_line(&e)
                );
            }
        }
    }
    if failures > 0 {
        bail!("{failures} of {} manifest records failed", rows.len());
    }
    let layouts: BTreeSet<String> = records.iter().map(|(_, o)| o.layout.id()).collect();
    if layouts.len() > 1 {
        bail!(
            "records produced different feature layouts ({}); mixing colored and colorless inputs is not supported",
            layouts.into_iter().collect::<Vec<_>>().join(", ")
        );
    }
    Ok(records)
}

fn one_line(e: &anyhow::Error) -> String {
    format!("{e:#}").replace('\n', " ")
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    /// CSV manifest with columns content_id,reference_path,distorted_path,mos
    pub manifest: PathBuf,
    /// Also write per-stimulus scatter data (stimulus,content_id,pqs,p_mos,mos) here
    #[arg(long, env = "POINTPCA_SCATTER")]
    pub scatter: Option<PathBuf>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Serialize)]
struct VariantRow {
    variant: String,
    name: String,
    plcc: Option<f64>,
    srocc: Option<f64>,
    rmse: Option<f64>,
    /// Mean of |PLCC| and |SROCC|.
    ranking_score: Option<f64>,
    beta: Option<[f64; 4]>,
    converged: Option<bool>,
    error: Option<String>,
}

impl VariantRow {
    fn new(variant: String, name: String, result: Result<Evaluation, String>) -> Self {
        match result {
            Ok(e) => Self {
                variant,
                name,
                plcc: Some(e.plcc),
                srocc: Some(e.srocc),
                rmse: Some(e.rmse),
                ranking_score: Some(0.5 * (e.plcc.abs() + e.srocc.abs())),
                beta: Some(e.model.beta),
                converged: Some(e.model.converged),
                error: None,
            },
            Err(error) => Self {
                variant,
                name,
                plcc: None,
                srocc: None,
                rmse: None,
                ranking_score: None,
                beta: None,
                converged: None,
                error: Some(error),
            },
        }
    }

    fn csv_row(&self) -> Vec<String> {
        let opt = |v: Option<f64>| v.map_or_else(String::new, |v| v.to_string());
        let beta = |k: usize| self.beta.map_or_else(String::new, |b| b[k].to_string());
        vec![
            self.variant.clone(),
            self.name.clone(),
            opt(self.plcc),
            opt(self.srocc),
            opt(self.rmse),
            opt(self.ranking_score),
            beta(0),
            beta(1),
            beta(2),
            beta(3),
            self.converged.map_or_else(String::new, |c| c.to_string()),
            self.error.clone().unwrap_or_default(),
        ]
    }
}

#[derive(Debug, Serialize)]
struct ScatterPoint {
    stimulus: String,
    content_id: String,
    pqs: f64,
    p_mos: f64,
    mos: f64,
}

#[derive(Debug, Serialize)]
struct BenchmarkReport {
    manifest: String,
    records: usize,
    config: Provenance,
    layout: String,
    score_kind: String,
    fused: VariantRow,
    predictors: Vec<VariantRow>,
    descriptors: Vec<VariantRow>,
}

impl BenchmarkReport {
    fn to_csv(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        let mut meta = vec![
            ("manifest", self.manifest.clone()),
            ("records", self.records.to_string()),
            ("layout", self.layout.clone()),
            ("score_kind", self.score_kind.clone()),
        ];
        meta.extend(self.config.pairs());
        for (k, v) in meta {
            out.extend_from_slice(format!("# {k}: {v}\n").as_bytes());
        }
        {
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record([
                "variant",
                "name",
                "plcc",
                "srocc",
                "rmse",
                "ranking_score",
                "beta_1",
                "beta_2",
                "beta_3",
                "beta_4",
                "converged",
                "error",
            ])?;
            for row in std::iter::once(&self.fused)
                .chain(&self.predictors)
                .chain(&self.descriptors)
            {
                w.write_record(row.csv_row())?;
            }
            w.flush()?;
        }
        Ok(out)
    }
}

/// Per-descriptor ranking: the mean PLCC, SROCC and ranking score of its
/// mean and standard-deviation predictors.
fn descriptor_rows(layout: FeatureLayout, predictors: &[VariantRow]) -> Vec<VariantRow> {
    (0..layout.descriptors())
        .map(|d| {
            let rows: Vec<&VariantRow> = (0..layout.features())
                .filter(|&j| layout.feature(j).1 == d)
                .map(|j| &predictors[j])
                .collect();
            let avg = |f: fn(&VariantRow) -> Option<f64>| -> Option<f64> {
                let vals: Option<Vec<f64>> = rows.iter().map(|r| f(r)).collect();
                vals.map(|v| v.iter().sum::<f64>() / v.len() as f64)
            };
            let plcc = avg(|r| r.plcc);
            VariantRow {
                variant: format!("d_{:02}", d + 1),
                name: layout.descriptor_name(d),
                plcc,
                srocc: avg(|r| r.srocc),
                rmse: None,
                ranking_score: avg(|r| r.ranking_score),
                beta: None,
                converged: None,
                error: plcc
                    .is_none()
                    .then(|| "a predictor of this descriptor could not be evaluated".into()),
            }
        })
        .collect()
}

pub fn run_benchmark(args: &BenchmarkArgs) -> Result<()> {
    let common = &args.common;
    let scorer = Scorer::new(common)?;
    let rows = read_manifest(&args.manifest)?;
    if rows.len() < 5 {
        bail!(
            "insufficient data: {} manifest record(s); regression needs at least 5",
            rows.len()
        );
    }
    let records = compute_records(&rows, common)?;
    let layout = records[0].1.layout;
    let mos: Vec<f64> = records.iter().map(|(r, _)| r.mos).collect();

    let mut pqs = Vec::with_capacity(records.len());
    let mut score_kind = String::new();
    for (_, output) in &records {
        let score = scorer.score(output)?;
        for notice in &score.notices {
            log::info!("{notice}");
        }
        score_kind = score.kind;
        pqs.push(score.value);
    }
    if !records[0].1.texture_available {
        eprintln!(
            "notice: inputs lack color; texture predictors omitted, scores are geometry-only"
        );
    }
    let fused_eval = evaluate(&pqs, &mos).context("fitting the fused score")?;
    let fused = VariantRow::new("fused".into(), score_kind.clone(), Ok(fused_eval));

    let predictors: Vec<VariantRow> = (0..layout.features())
        .map(|j| {
            let x: Vec<f64> = records
                .iter()
                .map(|(r, _)| r.predictors.values[j])
                .collect();
            let result = evaluate(&x, &mos).map_err(|e| e.to_string());
            VariantRow::new(layout.column_label(j), layout.feature_name(j), result)
        })
        .collect();
    let descriptors = descriptor_rows(layout, &predictors);

    if let Some(path) = &args.scatter {
        let mut w = csv::Writer::from_writer(Vec::new());
        for ((record, _), &x) in records.iter().zip(&pqs) {
            w.serialize(ScatterPoint {
                stimulus: record.distorted_path.display().to_string(),
                content_id: record.content_id.clone(),
                pqs: x,
                p_mos: fused_eval.model.predict(x),
                mos: record.mos,
            })?;
        }
        let bytes = w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?;
        std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))?;
    }

    let report = BenchmarkReport {
        manifest: args.manifest.display().to_string(),
        records: records.len(),
        config: Provenance::new(common),
        layout: layout.id(),
        score_kind,
        fused,
        predictors,
        descriptors,
    };
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

#[derive(Debug, Args)]
pub struct FitWeightsArgs {
    /// CSV manifest with columns content_id,reference_path,distorted_path,mos
    pub manifest: PathBuf,
    /// Where to write the learned weight file
    pub weights_out: PathBuf,
    /// Predictor domain: g, t or gt
    #[arg(long, env = "POINTPCA_DOMAIN", default_value = "gt")]
    pub domain: Domain,
    /// Comma-separated 1-based predictor indices to learn (default: the whole domain)
    #[arg(long, env = "POINTPCA_FEATURES", value_delimiter = ',')]
    pub features: Option<Vec<usize>>,
    /// Sample this many content splits when more exist
    #[arg(long, env = "POINTPCA_MAX_SPLITS", default_value_t = DEFAULT_MAX_SPLITS)]
    pub max_splits: usize,
    #[command(flatten)]
    pub common: CommonArgs,
}

pub fn run_fit_weights(args: &FitWeightsArgs) -> Result<()> {
    let common = &args.common;
    let rows = read_manifest(&args.manifest)?;
    let contents: BTreeSet<&str> = rows.iter().map(|r| r.content_id.as_str()).collect();
    if contents.len() < 2 {
        bail!(
            "insufficient data: {} distinct content(s); leave-p-out needs at least 2",
            contents.len()
        );
    }
    let computed = compute_records(&rows, common)?;
    let layout = computed[0].1.layout;
    let records: Vec<BenchmarkRecord> = computed.into_iter().map(|(r, _)| r).collect();
    let selection: Vec<usize> = match &args.features {
        Some(list) => list
            .iter()
            .map(|&j| {
                if j == 0 || j > layout.features() {
                    bail!("--features index {j} outside 1..={}", layout.features());
                }
                Ok(j - 1)
            })
            .collect::<Result<_>>()?,
        None => layout.domain_indices(args.domain),
    };
    let policy = SplitPolicy {
        max_splits: args.max_splits,
        seed: common.seed,
    };
    let pool = common.thread_pool()?;
    let lpo = pool.install(|| leave_p_out(&records, args.domain, &selection, &policy))?;

    // Full-data fit of the averaged weights, the same fit `benchmark` reports.
    let pqs: Vec<f64> = records
        .iter()
        .map(|r| Ok(combine(&r.predictors, &lpo.weights)?.value))
        .collect::<Result<_>>()?;
    let mos: Vec<f64> = records.iter().map(|r| r.mos).collect();
    let full = evaluate(&pqs, &mos).context("fitting the averaged weights on the full data")?;
    save_weights(&lpo.weights, &args.weights_out)?;

    let mut out = Vec::new();
    for (k, v) in [
        ("manifest", args.manifest.display().to_string()),
        ("weights_out", args.weights_out.display().to_string()),
        ("domain", args.domain.to_string()),
        ("contents", contents.len().to_string()),
        ("total_splits", lpo.total_splits.to_string()),
        ("used_splits", lpo.used_splits.to_string()),
        ("sampled", lpo.sampled.to_string()),
        ("seed", lpo.seed.to_string()),
    ] {
        out.extend_from_slice(format!("# {k}: {v}\n").as_bytes());
    }
    {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record([
            "split",
            "training_contents",
            "objective",
            "rmse",
            "converged",
        ])?;
        for h in &lpo.halves {
            w.write_record([
                h.split.to_string(),
                h.training_contents.join(";"),
                h.objective.to_string(),
                h.rmse.to_string(),
                h.converged.to_string(),
            ])?;
        }
        let all: Vec<&str> = contents.iter().copied().collect();
        w.write_record([
            "averaged".to_string(),
            all.join(";"),
            full.model.sse.to_string(),
            full.rmse.to_string(),
            full.model.converged.to_string(),
        ])?;
        w.flush()?;
    }
    write_output(common.output.as_deref(), &out)
}
