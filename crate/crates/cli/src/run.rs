use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use relnet_core::canon::{canonicalize, sha256_hex};

use crate::config::{load_config, resolve_output_dir, ExperimentConfig};
use crate::error::{HarnessError, Result};
use crate::experiments::{self, RunEnv, Summary};
use crate::manifest::{load_manifest, ArtifactSink, RunManifest, FORMAT_VERSION, MANIFEST_FILE, TOOL_VERSION};

pub const CONFIG_FILE: &str = "config.json";
pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Replace a completed run of a different config.
    pub force: bool,
    pub seed_override: Option<u64>,
    pub out: Option<PathBuf>,
    pub verbose: bool,
}

#[derive(Debug)]
pub enum RunOutcome {
    Completed { dir: PathBuf, summary: Summary },
    /// A complete, intact run of the same config was already there.
    Skipped { dir: PathBuf },
}

impl RunOutcome {
    pub fn dir(&self) -> &Path {
        match self {
            RunOutcome::Completed { dir, .. } | RunOutcome::Skipped { dir } => dir,
        }
    }
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

pub fn run_experiment(config_path: &Path, opts: &RunOptions) -> Result<RunOutcome> {
    let mut config = load_config(config_path)?;
    if let Some(seed) = opts.seed_override {
        config.set_master_seed(seed);
    }
    let config_dir = config_path.parent().map(Path::to_path_buf).unwrap_or_default();
    let dir = resolve_output_dir(&config, opts.out.as_deref());
    run_config(&config, &config_dir, &dir, opts)
}

/// Run an already-validated config into `dir`.
pub fn run_config(config: &ExperimentConfig, config_dir: &Path, dir: &Path, opts: &RunOptions) -> Result<RunOutcome> {
    let canonical = config.to_canonical();
    let config_sha = sha256_hex(canonical.as_bytes());
    let manifest_path = dir.join(MANIFEST_FILE);
    if manifest_path.exists() {
        let previous = load_manifest(&manifest_path);
        match previous {
            Ok(m) if m.is_complete() && m.config_sha256 == config_sha && m.verify(dir).is_ok() && !opts.force => {
                return Ok(RunOutcome::Skipped { dir: dir.to_path_buf() });
            }
            Ok(m) if m.is_complete() && m.config_sha256 != config_sha && !opts.force => {
                return Err(HarnessError::Conflict { path: dir.to_path_buf() });
            }
            Ok(m) => remove_previous(dir, &m)?,
            Err(e) if !opts.force => return Err(e),
            Err(_) => {}
        }
        fs::remove_file(&manifest_path).map_err(|e| HarnessError::io(&manifest_path, e))?;
    }
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;

    let started = unix_now();
    let mut sink = ArtifactSink::new(dir);
    sink.write(CONFIG_FILE, canonical.as_bytes(), "config")?;
    let mut env = RunEnv {
        sink: &mut sink,
        arms: Vec::new(),
        config_dir: config_dir.to_path_buf(),
        verbose: opts.verbose,
    };
    let (summary, notes) = match config {
        ExperimentConfig::ParametricSimilarity(c) => {
            let (s, n) = experiments::parametric::run(c, &mut env)?;
            (Summary::ParametricSimilarity(s), n)
        }
        ExperimentConfig::Oddball(c) => {
            let (s, n) = experiments::oddball::run(c, &mut env)?;
            (Summary::Oddball(s), n)
        }
        ExperimentConfig::Categorical(c) => {
            let (s, n) = experiments::categorical::run(c, &mut env)?;
            (Summary::Categorical(s), n)
        }
    };
    let arms = std::mem::take(&mut env.arms);
    let summary_json = canonicalize(&serde_json::to_value(&summary).expect("summary serializes"));
    sink.write(SUMMARY_FILE, summary_json.as_bytes(), "summary")?;

    let manifest = RunManifest {
        format_version: FORMAT_VERSION,
        tool_version: TOOL_VERSION.to_string(),
        status: "complete".to_string(),
        experiment: config.kind().as_str().to_string(),
        config: serde_json::to_value(config).expect("config serializes"),
        config_sha256: config_sha,
        started_unix: started,
        finished_unix: unix_now(),
        arms,
        summary: SUMMARY_FILE.to_string(),
        notes,
        artifacts: sink.into_records(),
    };
    // Written last: its presence marks the run complete.
    fs::write(&manifest_path, manifest.to_canonical()).map_err(|e| HarnessError::io(&manifest_path, e))?;
    Ok(RunOutcome::Completed {
        dir: dir.to_path_buf(),
        summary,
    })
}

/// Delete the files an earlier manifest lists. Paths that would leave the
/// run directory are refused.
fn remove_previous(dir: &Path, manifest: &RunManifest) -> Result<()> {
    for a in &manifest.artifacts {
        let rel = Path::new(&a.path);
        if rel.is_absolute() || rel.components().any(|c| matches!(c, std::path::Component::ParentDir)) {
            return Err(HarnessError::Corrupt {
                path: dir.join(MANIFEST_FILE),
                detail: format!("artifact path {:?} leaves the run directory", a.path),
            });
        }
        let path = dir.join(rel);
        match fs::remove_file(&path) {
            Ok(()) => {}
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
            Err(e) => return Err(HarnessError::io(path, e)),
        }
    }
    Ok(())
}

/// Load the summary a completed run recorded.
pub fn load_summary(dir: &Path, manifest: &RunManifest) -> Result<Summary> {
    let path = dir.join(&manifest.summary);
    let text = fs::read_to_string(&path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => HarnessError::Missing { path: path.clone() },
        _ => HarnessError::io(&path, e),
    })?;
    serde_json::from_str(&text).map_err(|e| HarnessError::Corrupt {
        path,
        detail: e.to_string(),
    })
}
