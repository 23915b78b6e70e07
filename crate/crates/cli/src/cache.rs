//! Predictor computation for file pairs, optionally memoized on disk.
//!
//! Entries are keyed by the SHA-256 of both files' bytes and of the pipeline
//! configuration, so edited inputs or changed settings never hit stale data.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use pointpca::cloud::read_ply;
use pointpca::pipeline::{compute_predictors, PipelineConfig, PipelineOutput};
use sha2::{Digest, Sha256};

const CACHE_VERSION: &str = "pointpca-cache-1";

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).with_context(|| format!("reading {}", path.display()))
}

pub fn cache_key(reference: &[u8], distorted: &[u8], config: &PipelineConfig) -> Result<String> {
    let mut hasher = Sha256::new();
    hasher.update(CACHE_VERSION);
    hasher.update(Sha256::digest(reference));
    hasher.update(Sha256::digest(distorted));
    hasher.update(serde_json::to_vec(config)?);
    Ok(hex::encode(hasher.finalize()))
}

pub fn predictors_for(
    reference: &Path,
    distorted: &Path,
    config: &PipelineConfig,
    cache: Option<&Path>,
) -> Result<PipelineOutput> {
    let ref_bytes = read(reference)?;
    let dist_bytes = read(distorted)?;
    let entry: Option<PathBuf> = match cache {
        Some(dir) => Some(dir.join(format!(
            "{}.json",
            cache_key(&ref_bytes, &dist_bytes, config)?
        ))),
        None => None,
    };
    if let Some(entry) = &entry {
        if let Ok(text) = fs::read(entry) {
            match serde_json::from_slice(&text) {
                Ok(output) => return Ok(output),
                Err(e) => log::warn!("ignoring unreadable cache entry {}: {e}", entry.display()),
            }
        }
    }
    let ref_cloud =
        read_ply(&ref_bytes).with_context(|| format!("parsing {}", reference.display()))?;
    let dist_cloud =
        read_ply(&dist_bytes).with_context(|| format!("parsing {}", distorted.display()))?;
    let output = compute_predictors(&ref_cloud, &dist_cloud, config)?;
    if let Some(entry) = &entry {
        let dir = entry.parent().expect("cache entries live in a directory");
        fs::create_dir_all(dir)
            .with_context(|| format!("creating cache directory {}", dir.display()))?;
        let tmp = entry.with_extension(format!("tmp{}", std::process::id()));
        fs::write(&tmp, serde_json::to_vec(&output)?)
            .and_then(|()| fs::rename(&tmp, entry))
            .with_context(|| format!("writing cache entry {}", entry.display()))?;
    }
    Ok(output)
}
