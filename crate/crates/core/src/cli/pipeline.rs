use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::config::{BackendKind, RunConfig};
use super::manifest::Manifest;
use super::output::{write_atomic, write_json, write_jsonl};
use super::CliError;
use crate::distill::{distill_detailed, DistillConfig};
use crate::gateway::{
    ChatBackend, Gateway, Journal, LiveBackend, LiveConfig, RateLimiter, ResponseCache,
    ScriptedBackend, SystemClock,
};
use crate::ingest::{load_document, RawDocument};
use crate::ordinance::{
    extract_ordinances, ExtractConfig, FeatureType, OrdinanceRecord, RecordStatus,
};
use crate::par::map_bounded;
use crate::tree::{validate, ConversationGraph};

pub const TEXT_DIR: &str = "text";
pub const DISTILLED_DIR: &str = "distilled";
pub const RECORDS_FILE: &str = "records.jsonl";
pub const REVIEW_FILE: &str = "review_queue.jsonl";
pub const JOURNAL_FILE: &str = "journal.jsonl";
pub const SUMMARY_FILE: &str = "run_summary.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Convert,
    Distill,
    Extract,
}

impl Stage {
    fn past_tense(self) -> &'static str {
        match self {
            Stage::Convert => "converted",
            Stage::Distill => "distilled",
            Stage::Extract => "extracted",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocFailure {
    pub jurisdiction: String,
    pub path: PathBuf,
    pub error: String,
}

/// Written to `run_summary.json` after every pipeline command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub stage: Stage,
    pub documents: usize,
    pub succeeded: usize,
    pub failures: Vec<DocFailure>,
    pub records: usize,
    pub found: usize,
    pub not_found: usize,
    pub needs_review: usize,
    pub backend_calls: u64,
    pub cache_hits: u64,
    pub config: RunConfig,
}

impl RunSummary {
    pub fn status_line(&self) -> String {
        format!(
            "{}/{} {}",
            self.succeeded,
            self.documents,
            self.stage.past_tense()
        )
    }
}

fn build_gateway(cfg: &RunConfig, out: &Path) -> Result<Gateway, CliError> {
    let backend: Arc<dyn ChatBackend> = match cfg.backend {
        BackendKind::Live => {
            let live = LiveConfig::from_env().map_err(|e| CliError::Usage(e.to_string()))?;
            Arc::new(LiveBackend::new(live).map_err(|e| CliError::Usage(e.to_string()))?)
        }
        BackendKind::Scripted => {
            let dir = cfg
                .script_dir
                .as_deref()
                .ok_or_else(|| CliError::Usage("the scripted backend needs --script-dir".into()))?;
            Arc::new(ScriptedBackend::from_dir(dir).map_err(|e| CliError::Usage(e.to_string()))?)
        }
    };
    let clock = Arc::new(SystemClock::new());
    let mut gateway = Gateway::new(backend)
        .with_retry(cfg.retry.clone())
        .with_clock(clock.clone());
    if !cfg.rate_limit.is_unlimited() {
        gateway = gateway.with_rate_limiter(Arc::new(RateLimiter::new(cfg.rate_limit, clock)));
    }
    if !cfg.no_cache {
        let dir = cfg.cache_dir.clone().unwrap_or_else(|| out.join("cache"));
        let cache = ResponseCache::on_disk(&dir).map_err(|e| CliError::io(&dir, e))?;
        gateway = gateway.with_cache(Arc::new(cache));
    }
    let journal_path = out.join(JOURNAL_FILE);
    let journal = Journal::open(&journal_path).map_err(|e| CliError::io(&journal_path, e))?;
    Ok(gateway.with_journal(Arc::new(journal)))
}

/// Load `<tree_dir>/<feature>.toml` for each requested feature that has one.
pub fn load_tree_overrides(
    dir: &Path,
    features: &[FeatureType],
) -> Result<BTreeMap<FeatureType, ConversationGraph>, CliError> {
    let mut trees = BTreeMap::new();
    for &f in features {
        let path = dir.join(format!("{f}.toml"));
        if !path.is_file() {
            continue;
        }
        let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
        let graph = ConversationGraph::from_toml(&text)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let violations = validate(&graph);
        if !violations.is_empty() {
            let list: Vec<String> = violations.iter().map(ToString::to_string).collect();
            return Err(CliError::Usage(format!(
                "{}: {}",
                path.display(),
                list.join("; ")
            )));
        }
        trees.insert(f, graph);
    }
    Ok(trees)
}

struct DocResult {
    records: Vec<OrdinanceRecord>,
    detail: String,
}

fn process_document(
    doc: &RawDocument,
    stage: Stage,
    cfg: &RunConfig,
    out: &Path,
    gateway: Option<&Gateway>,
    extract_cfg: &ExtractConfig,
) -> Result<DocResult, String> {
    let slug = doc.jurisdiction.slug();
    let text = load_document(doc, &cfg.converter).map_err(|e| e.to_string())?;
    let cleaned = text.cleaned();
    write_atomic(
        &out.join(TEXT_DIR).join(format!("{slug}.txt")),
        cleaned.joined().as_bytes(),
    )
    .map_err(|e| e.to_string())?;
    let mut detail = format!("{} page(s)", text.page_count());
    if stage == Stage::Convert {
        return Ok(DocResult {
            records: Vec::new(),
            detail,
        });
    }

    let gateway = gateway.expect("gateway is built for distill and extract");
    let dcfg = DistillConfig {
        chunking: cfg.chunking,
        check: cfg.ngram,
        params: cfg.params.clone(),
        workers: cfg.request_workers,
    };
    let distillation = distill_detailed(&cleaned, gateway, &dcfg).map_err(|e| e.to_string())?;
    let dir = out.join(DISTILLED_DIR);
    write_atomic(
        &dir.join(format!("{slug}.txt")),
        distillation.distilled.combined.as_bytes(),
    )
    .map_err(|e| e.to_string())?;
    write_json(&dir.join(format!("{slug}.excerpts.json")), &distillation)
        .map_err(|e| e.to_string())?;
    let accepted = distillation.excerpts.iter().filter(|e| e.accepted).count();
    detail.push_str(&format!(
        ", {accepted}/{} chunk(s) kept",
        distillation.chunk_count
    ));
    if !distillation.failures.is_empty() {
        detail.push_str(&format!(
            ", {} chunk(s) failed",
            distillation.failures.len()
        ));
    }
    if stage == Stage::Distill {
        return Ok(DocResult {
            records: Vec::new(),
            detail,
        });
    }

    let records = extract_ordinances(
        &distillation.distilled,
        &cfg.features(),
        gateway,
        extract_cfg,
    );
    let found = records
        .iter()
        .filter(|r| r.status == RecordStatus::Found)
        .count();
    let review = records
        .iter()
        .filter(|r| r.status == RecordStatus::NeedsReview)
        .count();
    detail.push_str(&format!(", {found} found, {review} for review"));
    Ok(DocResult { records, detail })
}

/// Run `stage` over every manifest document, writing outputs under `out`.
///
/// Per-document failures are reported and skipped; the caller decides the
/// exit code from the returned summary.
pub fn run_pipeline(
    stage: Stage,
    cfg: &RunConfig,
    manifest: &Manifest,
    out: &Path,
) -> Result<RunSummary, CliError> {
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let features = cfg.features();
    let extract_cfg = ExtractConfig {
        params: cfg.params.clone(),
        turbine: cfg.turbine,
        workers: cfg.request_workers,
        trees: match &cfg.tree_dir {
            Some(dir) if stage == Stage::Extract => load_tree_overrides(dir, &features)?,
            _ => BTreeMap::new(),
        },
    };
    let gateway = match stage {
        Stage::Convert => None,
        _ => Some(build_gateway(cfg, out)?),
    };

    let docs = manifest.raw_documents();
    let total = docs.len();
    let results = map_bounded(&docs, cfg.workers, |doc| {
        let res = process_document(doc, stage, cfg, out, gateway.as_ref(), &extract_cfg);
        match &res {
            Ok(r) => eprintln!("ok      {}  {}", doc.jurisdiction, r.detail),
            Err(e) => eprintln!(
                "FAILED  {}  {}: {e}",
                doc.jurisdiction,
                doc.source_path.display()
            ),
        }
        res
    });

    let mut records = Vec::new();
    let mut failures = Vec::new();
    for (doc, res) in docs.iter().zip(results) {
        match res {
            Ok(r) => records.extend(r.records),
            Err(error) => failures.push(DocFailure {
                jurisdiction: doc.jurisdiction.to_string(),
                path: doc.source_path.clone(),
                error,
            }),
        }
    }
    records.sort_by(|a, b| {
        (a.jurisdiction.slug(), a.feature).cmp(&(b.jurisdiction.slug(), b.feature))
    });

    if stage == Stage::Extract {
        write_jsonl(&out.join(RECORDS_FILE), &records)?;
        let review: Vec<&OrdinanceRecord> = records
            .iter()
            .filter(|r| r.status == RecordStatus::NeedsReview)
            .collect();
        write_jsonl(&out.join(REVIEW_FILE), &review)?;
    }
    let count = |s: RecordStatus| records.iter().filter(|r| r.status == s).count();
    let summary = RunSummary {
        stage,
        documents: total,
        succeeded: total - failures.len(),
        records: records.len(),
        found: count(RecordStatus::Found),
        not_found: count(RecordStatus::NotFound),
        needs_review: count(RecordStatus::NeedsReview),
        failures,
        backend_calls: gateway.as_ref().map_or(0, Gateway::backend_calls),
        cache_hits: gateway.as_ref().map_or(0, Gateway::cache_hits),
        config: cfg.clone(),
    };
    write_json(&out.join(SUMMARY_FILE), &summary)?;
    Ok(summary)
}
