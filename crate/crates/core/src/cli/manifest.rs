use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::ingest::{DocFormat, Jurisdiction, RawDocument};

/// One document per county.
///
/// ```toml
/// [[document]]
/// county = "Monroe"
/// state = "WI"
/// path = "docs/monroe.pdf"
/// format = "pdf"            # optional; inferred from the extension
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    #[serde(rename = "document", default)]
    pub documents: Vec<ManifestEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub county: String,
    pub state: String,
    pub path: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<DocFormat>,
}

impl Manifest {
    /// Parse and check; relative document paths are resolved against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self, String> {
        let mut m: Manifest = toml::from_str(text).map_err(|e| e.to_string())?;
        for d in &mut m.documents {
            if d.path.is_relative() {
                d.path = base.join(&d.path);
            }
        }
        m.validate()?;
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
            .map_err(|e| CliError::Usage(format!("manifest {}: {e}", path.display())))
    }

    /// Jurisdictions must be non-empty and unique by slug, since the slug
    /// names every output file.
    pub fn validate(&self) -> Result<(), String> {
        let mut seen = HashSet::new();
        for (i, d) in self.documents.iter().enumerate() {
            let j = Jurisdiction::new(d.county.clone(), d.state.clone())
                .map_err(|e| format!("document {}: {e}", i + 1))?;
            if d.path.as_os_str().is_empty() {
                return Err(format!("document {}: empty path", i + 1));
            }
            if !seen.insert(j.slug()) {
                return Err(format!("duplicate jurisdiction {j}"));
            }
        }
        Ok(())
    }

    pub fn raw_documents(&self) -> Vec<RawDocument> {
        self.documents
            .iter()
            .map(|d| RawDocument {
                source_path: d.path.clone(),
                format: d.format.unwrap_or_else(|| DocFormat::from_path(&d.path)),
                jurisdiction: Jurisdiction {
                    county: d.county.clone(),
                    state: d.state.clone(),
                },
            })
            .collect()
    }
}
