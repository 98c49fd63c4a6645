use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::gateway::{GenerationParams, RateLimit, RetryPolicy};
use crate::ingest::CommandConverter;
use crate::ordinance::{FeatureType, ReferenceTurbine};
use crate::text::{ChunkingConfig, NgramCheck};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    /// Chat-completions endpoint from the environment.
    #[default]
    Live,
    /// Canned replies loaded from a directory of JSON scripts.
    Scripted,
}

/// Everything a pipeline run needs. Loaded from TOML; command-line flags
/// override individual fields.
///
/// ```toml
/// backend = "scripted"
/// script_dir = "scripts"
/// features = ["structures_nonparticipating", "roads"]
/// workers = 2
///
/// [params]
/// model_id = "gpt-4"
/// temperature = 0.0
/// max_output_tokens = 1024
///
/// [ngram]
/// n = 2
/// threshold = 0.8
/// ```
///
/// Relative paths in a config file are resolved against the file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub backend: BackendKind,
    pub script_dir: Option<PathBuf>,
    pub params: GenerationParams,
    pub chunking: ChunkingConfig,
    pub ngram: NgramCheck,
    pub turbine: ReferenceTurbine,
    /// `None` means all features.
    pub features: Option<Vec<FeatureType>>,
    /// Documents processed at once.
    pub workers: usize,
    /// Concurrent requests per document.
    pub request_workers: usize,
    pub cache_dir: Option<PathBuf>,
    pub no_cache: bool,
    /// Directory of `<feature>.toml` trees replacing the built-in ones.
    pub tree_dir: Option<PathBuf>,
    pub converter: CommandConverter,
    pub retry: RetryPolicy,
    pub rate_limit: RateLimit,
    pub manifest: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            backend: BackendKind::default(),
            script_dir: None,
            params: GenerationParams::default(),
            chunking: ChunkingConfig::default(),
            ngram: NgramCheck::default(),
            turbine: ReferenceTurbine::default(),
            features: None,
            workers: 4,
            request_workers: 4,
            cache_dir: None,
            no_cache: false,
            tree_dir: None,
            converter: CommandConverter::default(),
            retry: RetryPolicy::default(),
            rate_limit: RateLimit::unlimited(),
            manifest: None,
            out: None,
        }
    }
}

fn rebase(base: &Path, p: &mut Option<PathBuf>) {
    if let Some(path) = p {
        if path.is_relative() {
            *path = base.join(&*path);
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg = Self::from_toml(&text)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [
            &mut cfg.script_dir,
            &mut cfg.cache_dir,
            &mut cfg.tree_dir,
            &mut cfg.manifest,
            &mut cfg.out,
        ] {
            rebase(base, p);
        }
        Ok(cfg)
    }

    pub fn features(&self) -> Vec<FeatureType> {
        self.features
            .clone()
            .unwrap_or_else(|| FeatureType::ALL.to_vec())
    }

    /// Check value ranges and that the paths a run needs exist.
    pub fn validate(&self) -> Result<(), CliError> {
        let usage = |m: String| CliError::Usage(m);
        self.params.validate().map_err(|e| usage(e.to_string()))?;
        self.chunking.validate().map_err(usage)?;
        self.turbine.validate().map_err(|e| usage(e.to_string()))?;
        if self.ngram.n == 0 {
            return Err(usage("ngram n must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.ngram.threshold) {
            return Err(usage(format!(
                "threshold must be in [0, 1], got {}",
                self.ngram.threshold
            )));
        }
        if self.workers == 0 || self.request_workers == 0 {
            return Err(usage("workers must be at least 1".into()));
        }
        if self.features.as_ref().is_some_and(Vec::is_empty) {
            return Err(usage("feature list is empty".into()));
        }
        if self.retry.max_attempts == 0 {
            return Err(usage("retry max_attempts must be at least 1".into()));
        }
        if self.backend == BackendKind::Scripted {
            match &self.script_dir {
                None => return Err(usage("the scripted backend needs --script-dir".into())),
                Some(d) if !d.is_dir() => {
                    return Err(usage(format!(
                        "script directory {} does not exist",
                        d.display()
                    )))
                }
                _ => {}
            }
        }
        if let Some(d) = &self.tree_dir {
            if !d.is_dir() {
                return Err(usage(format!(
                    "tree directory {} does not exist",
                    d.display()
                )));
            }
        }
        Ok(())
    }
}

/// Parse a comma-separated feature list; `all` selects every feature.
pub fn parse_features(s: &str) -> Result<Vec<FeatureType>, String> {
    if s.trim().eq_ignore_ascii_case("all") {
        return Ok(FeatureType::ALL.to_vec());
    }
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let f: FeatureType = part
            .parse()
            .map_err(|e: crate::ordinance::UnknownFeature| e.to_string())?;
        if !out.contains(&f) {
            out.push(f);
        }
    }
    if out.is_empty() {
        return Err("feature list is empty".into());
    }
    Ok(out)
}
