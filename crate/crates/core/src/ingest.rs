//! Document ingestion: PDF conversion through an external converter, plain
//! text loading, and text cleaning.

use std::fmt;
use std::io;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde::{Deserialize, Serialize};

/// Marker line inserted between pages when a document is flattened.
pub const PAGE_BREAK_MARKER: &str = "--- page break ---";

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("file not found: {0}")]
    FileNotFound(PathBuf),
    #[error("converter `{program}` is not available: {detail}")]
    ConverterUnavailable { program: String, detail: String },
    #[error("conversion of {path} failed: {detail}")]
    ConversionFailed { path: PathBuf, detail: String },
    #[error("wrong document format for {path}: expected {expected}")]
    WrongFormat { path: PathBuf, expected: DocFormat },
    #[error("invalid document: {0}")]
    Invalid(String),
    #[error("i/o error reading {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DocFormat {
    Pdf,
    PlainText,
}

impl DocFormat {
    /// Guess the format from a file extension; anything other than `.pdf` is text.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("pdf") => DocFormat::Pdf,
            _ => DocFormat::PlainText,
        }
    }
}

impl fmt::Display for DocFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DocFormat::Pdf => "pdf",
            DocFormat::PlainText => "plain_text",
        })
    }
}

/// A county-level jurisdiction, e.g. Monroe, WI.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Jurisdiction {
    pub county: String,
    pub state: String,
}

impl Jurisdiction {
    pub fn new(county: impl Into<String>, state: impl Into<String>) -> Result<Self, IngestError> {
        let county = county.into();
        let state = state.into();
        if county.trim().is_empty() || state.trim().is_empty() {
            return Err(IngestError::Invalid(
                "jurisdiction county and state must be non-empty".into(),
            ));
        }
        Ok(Self { county, state })
    }

    /// Filesystem-safe identifier, e.g. `monroe_wi`.
    pub fn slug(&self) -> String {
        let raw = format!("{}_{}", self.county, self.state).to_lowercase();
        let mut out = String::with_capacity(raw.len());
        for c in raw.chars() {
            if c.is_ascii_alphanumeric() {
                out.push(c);
            } else if !out.ends_with('_') {
                out.push('_');
            }
        }
        out.trim_matches('_').to_string()
    }
}

impl fmt::Display for Jurisdiction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}, {}", self.county, self.state)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawDocument {
    pub source_path: PathBuf,
    pub format: DocFormat,
    pub jurisdiction: Jurisdiction,
}

impl RawDocument {
    pub fn new(
        source_path: impl Into<PathBuf>,
        format: DocFormat,
        jurisdiction: Jurisdiction,
    ) -> Result<Self, IngestError> {
        let source_path = source_path.into();
        if source_path.as_os_str().is_empty() {
            return Err(IngestError::Invalid("source path must be non-empty".into()));
        }
        Ok(Self {
            source_path,
            format,
            jurisdiction,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Page {
    pub number: u32,
    pub text: String,
}

/// Ordered page texts of one document. Page numbers run 1, 2, 3, ...
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentText {
    pages: Vec<Page>,
    pub jurisdiction: Jurisdiction,
}

impl DocumentText {
    /// Number pages from 1. NUL bytes are dropped from page text.
    pub fn from_pages<I, S>(jurisdiction: Jurisdiction, pages: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let pages = pages
            .into_iter()
            .zip(1u32..)
            .map(|(text, number)| {
                let mut text: String = text.into();
                if text.contains('\0') {
                    text.retain(|c| c != '\0');
                }
                Page { number, text }
            })
            .collect();
        Self {
            pages,
            jurisdiction,
        }
    }

    pub fn pages(&self) -> &[Page] {
        &self.pages
    }

    pub fn page_count(&self) -> usize {
        self.pages.len()
    }

    /// Apply [`clean_text`] to every page.
    pub fn cleaned(&self) -> Self {
        Self {
            pages: self
                .pages
                .iter()
                .map(|p| Page {
                    number: p.number,
                    text: clean_text(&p.text),
                })
                .collect(),
            jurisdiction: self.jurisdiction.clone(),
        }
    }

    /// The whole document as one string, pages separated by a marker line.
    pub fn joined(&self) -> String {
        let mut out = String::new();
        for (i, page) in self.pages.iter().enumerate() {
            if i > 0 {
                out.push('\n');
                out.push_str(PAGE_BREAK_MARKER);
                out.push('\n');
            }
            out.push_str(&page.text);
        }
        out
    }
}

/// Converts a PDF file into one text entry per physical page.
pub trait PdfConverter: Send + Sync {
    fn convert(&self, path: &Path) -> Result<Vec<String>, IngestError>;
}

/// Runs an external converter executable that writes page text to stdout,
/// separating pages with form feeds (the convention of poppler's `pdftotext`).
///
/// Arguments may contain the placeholder `{input}`, replaced by the PDF path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CommandConverter {
    pub program: String,
    pub args: Vec<String>,
}

impl Default for CommandConverter {
    fn default() -> Self {
        Self::poppler()
    }
}

impl CommandConverter {
    pub fn new(program: impl Into<String>, args: Vec<String>) -> Self {
        Self {
            program: program.into(),
            args,
        }
    }

    /// `pdftotext -layout -enc UTF-8 <input> -`
    pub fn poppler() -> Self {
        Self::new(
            "pdftotext",
            ["-layout", "-enc", "UTF-8", "{input}", "-"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
        )
    }
}

impl PdfConverter for CommandConverter {
    fn convert(&self, path: &Path) -> Result<Vec<String>, IngestError> {
        let input = path.to_string_lossy();
        let args: Vec<String> = self
            .args
            .iter()
            .map(|a| a.replace("{input}", &input))
            .collect();
        let output = Command::new(&self.program)
            .args(&args)
            .output()
            .map_err(|e| match e.kind() {
                io::ErrorKind::NotFound | io::ErrorKind::PermissionDenied => {
                    IngestError::ConverterUnavailable {
                        program: self.program.clone(),
                        detail: e.to_string(),
                    }
                }
                _ => IngestError::ConversionFailed {
                    path: path.to_path_buf(),
                    detail: e.to_string(),
                },
            })?;
        if !output.status.success() {
            let stderr = String::from_utf8_lossy(&output.stderr);
            return Err(IngestError::ConversionFailed {
                path: path.to_path_buf(),
                detail: format!(
                    "{} exited with {}: {}",
                    self.program,
                    output.status,
                    stderr.trim()
                ),
            });
        }
        let stdout = String::from_utf8_lossy(&output.stdout);
        let pages = split_form_feed_output(&stdout);
        if pages.is_empty() {
            return Err(IngestError::ConversionFailed {
                path: path.to_path_buf(),
                detail: "converter produced no pages".into(),
            });
        }
        Ok(pages)
    }
}

/// Converters terminate every page with a form feed, so a trailing empty
/// segment is not a page.
fn split_form_feed_output(stdout: &str) -> Vec<String> {
    let mut pages: Vec<String> = stdout.split('\u{c}').map(str::to_string).collect();
    if pages.last().is_some_and(|p| p.trim().is_empty()) {
        pages.pop();
    }
    pages
}

pub fn pdf_to_text(
    doc: &RawDocument,
    converter: &dyn PdfConverter,
) -> Result<DocumentText, IngestError> {
    if doc.format != DocFormat::Pdf {
        return Err(IngestError::WrongFormat {
            path: doc.source_path.clone(),
            expected: DocFormat::Pdf,
        });
    }
    if !doc.source_path.is_file() {
        return Err(IngestError::FileNotFound(doc.source_path.clone()));
    }
    let pages = converter.convert(&doc.source_path)?;
    Ok(DocumentText::from_pages(doc.jurisdiction.clone(), pages))
}

/// Load a UTF-8 text file. Form feeds split pages; otherwise the whole file
/// is page 1.
pub fn load_plain_text(doc: &RawDocument) -> Result<DocumentText, IngestError> {
    if doc.format != DocFormat::PlainText {
        return Err(IngestError::WrongFormat {
            path: doc.source_path.clone(),
            expected: DocFormat::PlainText,
        });
    }
    let bytes = std::fs::read(&doc.source_path).map_err(|e| match e.kind() {
        io::ErrorKind::NotFound => IngestError::FileNotFound(doc.source_path.clone()),
        _ => IngestError::Io {
            path: doc.source_path.clone(),
            source: e,
        },
    })?;
    let content = String::from_utf8_lossy(&bytes);
    Ok(DocumentText::from_pages(
        doc.jurisdiction.clone(),
        content.split('\u{c}'),
    ))
}

/// Dispatch on the document format.
pub fn load_document(
    doc: &RawDocument,
    converter: &dyn PdfConverter,
) -> Result<DocumentText, IngestError> {
    match doc.format {
        DocFormat::Pdf => pdf_to_text(doc, converter),
        DocFormat::PlainText => load_plain_text(doc),
    }
}

/// Normalize line endings, strip trailing whitespace on every line and
/// collapse runs of three or more newlines to two.
pub fn clean_text(text: &str) -> String {
    let normalized = text.replace("\r\n", "\n");
    let mut stripped = String::with_capacity(normalized.len());
    for (i, line) in normalized.split('\n').enumerate() {
        if i > 0 {
            stripped.push('\n');
        }
        stripped.push_str(line.trim_end());
    }

    let mut out = String::with_capacity(stripped.len());
    let mut newlines = 0usize;
    for c in stripped.chars() {
        if c == '\n' {
            newlines += 1;
            continue;
        }
        if newlines > 0 {
            out.push_str(if newlines >= 3 {
                "\n\n"
            } else {
                &"\n\n"[..newlines]
            });
            newlines = 0;
        }
        out.push(c);
    }
    if newlines > 0 {
        out.push_str(if newlines >= 3 {
            "\n\n"
        } else {
            &"\n\n"[..newlines]
        });
    }
    out
}
