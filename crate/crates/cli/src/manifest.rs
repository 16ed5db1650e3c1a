//! Run manifests: staged writing, digests and replay.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};

use crate::commands::execute;
use crate::output::{sha256_hex, to_json_compact, to_json_pretty, Artifact};
use crate::params::Params;
use crate::UserError;

pub const MANIFEST_SCHEMA: &str = "wsaw-manifest/1";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub file: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema: String,
    pub version: String,
    pub subcommand: String,
    pub params: serde_json::Value,
    pub seed: Option<u64>,
    /// Digest of everything that determines the outputs; stamped into each artifact.
    pub run_digest: String,
    pub threads: usize,
    pub parallel: bool,
    pub started_at: String,
    pub finished_at: String,
    pub outputs: Vec<OutputRecord>,
}

#[derive(Serialize)]
struct Identity<'a> {
    schema: &'a str,
    version: &'a str,
    subcommand: &'a str,
    params: &'a serde_json::Value,
    seed: Option<u64>,
}

pub fn version_tag() -> String {
    format!("wsaw-core {}", env!("CARGO_PKG_VERSION"))
}

pub fn run_digest(params: &Params) -> anyhow::Result<String> {
    let value = params_value(params)?;
    digest_of(&version_tag(), params.subcommand(), &value, params.seed())
}

fn params_value(params: &Params) -> anyhow::Result<serde_json::Value> {
    let tagged = serde_json::to_value(params)?;
    tagged.get("params").cloned().context("parameters did not serialize")
}

fn digest_of(version: &str, subcommand: &str, params: &serde_json::Value, seed: Option<u64>) -> anyhow::Result<String> {
    let id = Identity {
        schema: MANIFEST_SCHEMA,
        version,
        subcommand,
        params,
        seed,
    };
    Ok(sha256_hex(&to_json_compact(&id)?))
}

/// Rendered artifacts of one run.
pub struct RunOutput {
    pub run_digest: String,
    pub files: Vec<(String, Vec<u8>)>,
}

pub fn compute(params: &Params) -> anyhow::Result<RunOutput> {
    let digest = run_digest(params)?;
    let artifacts: Vec<Artifact> = execute(params)?;
    let files = artifacts
        .iter()
        .map(|a| Ok((a.file.clone(), a.render(&digest)?)))
        .collect::<anyhow::Result<Vec<_>>>()?;
    Ok(RunOutput { run_digest: digest, files })
}

pub fn default_out_dir(params: &Params) -> anyhow::Result<PathBuf> {
    let digest = run_digest(params)?;
    Ok(PathBuf::from("wsaw-runs").join(format!("{}-{}", params.subcommand(), &digest[..12])))
}

/// Runs `params` and writes the artifacts and manifest into `out`. Files are staged in a
/// sibling directory and renamed into place, so a failed run leaves nothing behind.
pub fn run_to_dir(params: &Params, out: &Path, force: bool, threads: usize) -> anyhow::Result<Manifest> {
    if out.exists() && !force {
        return Err(UserError(format!("{} exists; pass --force to replace it", out.display())).into());
    }
    let started_at = chrono::Utc::now().to_rfc3339();
    let run = compute(params)?;
    let finished_at = chrono::Utc::now().to_rfc3339();
    let manifest = Manifest {
        schema: MANIFEST_SCHEMA.into(),
        version: version_tag(),
        subcommand: params.subcommand().into(),
        params: params_value(params)?,
        seed: params.seed(),
        run_digest: run.run_digest.clone(),
        threads,
        parallel: wsaw_core::Exec::Parallel.is_parallel(),
        started_at,
        finished_at,
        outputs: run
            .files
            .iter()
            .map(|(f, b)| OutputRecord {
                file: f.clone(),
                sha256: sha256_hex(b),
                bytes: b.len() as u64,
            })
            .collect(),
    };
    let staging = staging_dir(out)?;
    let written = write_staged(&staging, &run, &manifest).and_then(|_| {
        if out.exists() {
            fs::remove_dir_all(out).with_context(|| format!("removing {}", out.display()))?;
        }
        fs::rename(&staging, out).with_context(|| format!("moving results to {}", out.display()))
    });
    if let Err(e) = written {
        let _ = fs::remove_dir_all(&staging);
        return Err(e);
    }
    Ok(manifest)
}

fn staging_dir(out: &Path) -> anyhow::Result<PathBuf> {
    let parent = match out.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&parent).with_context(|| format!("creating {}", parent.display()))?;
    let name = out.file_name().context("output path has no final component")?.to_string_lossy();
    Ok(parent.join(format!(".{name}.partial-{}", std::process::id())))
}

fn write_staged(staging: &Path, run: &RunOutput, manifest: &Manifest) -> anyhow::Result<()> {
    if staging.exists() {
        fs::remove_dir_all(staging)?;
    }
    fs::create_dir(staging).with_context(|| format!("creating {}", staging.display()))?;
    for (file, bytes) in &run.files {
        fs::write(staging.join(file), bytes).with_context(|| format!("writing {file}"))?;
    }
    fs::write(staging.join(MANIFEST_FILE), to_json_pretty(manifest)?)?;
    Ok(())
}

pub fn read_manifest(path: &Path) -> anyhow::Result<Manifest> {
    let text = fs::read_to_string(path).map_err(|e| UserError(format!("reading {}: {e}", path.display())))?;
    let m: Manifest = serde_json::from_str(&text).map_err(|e| UserError(format!("parsing {}: {e}", path.display())))?;
    if m.schema != MANIFEST_SCHEMA {
        return Err(UserError(format!("unsupported manifest schema {}", m.schema)).into());
    }
    Ok(m)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileDiff {
    pub file: String,
    pub recorded_sha256: String,
    pub replayed_sha256: Option<String>,
    /// Digest of the file next to the manifest, when present.
    pub on_disk_sha256: Option<String>,
    pub identical: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplayReport {
    pub manifest: String,
    pub subcommand: String,
    pub run_digest: String,
    pub run_digest_matches: bool,
    pub version_matches: bool,
    pub files: Vec<FileDiff>,
    pub identical: bool,
}

/// Re-executes the run a manifest describes and compares every output digest.
pub fn reproduce(path: &Path) -> anyhow::Result<ReplayReport> {
    let m = read_manifest(path)?;
    let params = Params::from_manifest(&m.subcommand, m.params.clone())?;
    let recomputed = digest_of(&m.version, &m.subcommand, &params_value(&params)?, params.seed())?;
    let run = compute(&params)?;
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let mut files: Vec<FileDiff> = m
        .outputs
        .iter()
        .map(|rec| {
            let replayed = run.files.iter().find(|(f, _)| *f == rec.file).map(|(_, b)| sha256_hex(b));
            let on_disk = fs::read(dir.join(&rec.file)).ok().map(|b| sha256_hex(&b));
            let identical = replayed.as_deref() == Some(rec.sha256.as_str())
                && on_disk.as_deref().map_or(true, |d| d == rec.sha256);
            FileDiff {
                file: rec.file.clone(),
                recorded_sha256: rec.sha256.clone(),
                replayed_sha256: replayed,
                on_disk_sha256: on_disk,
                identical,
            }
        })
        .collect();
    for (file, bytes) in &run.files {
        if !m.outputs.iter().any(|r| r.file == *file) {
            files.push(FileDiff {
                file: file.clone(),
                recorded_sha256: String::new(),
                replayed_sha256: Some(sha256_hex(bytes)),
                on_disk_sha256: None,
                identical: false,
            });
        }
    }
    let run_digest_matches = recomputed == m.run_digest && run.run_digest == m.run_digest;
    let version_matches = m.version == version_tag();
    let identical = run_digest_matches && files.iter().all(|f| f.identical);
    Ok(ReplayReport {
        manifest: path.display().to_string(),
        subcommand: m.subcommand,
        run_digest: m.run_digest,
        run_digest_matches,
        version_matches,
        files,
        identical,
    })
}
