use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ordex::cli::{RunSummary, RECORDS_FILE, REVIEW_FILE, SUMMARY_FILE};
use ordex::ordinance::{FeatureType, OrdinanceRecord, RecordStatus, ReviewReason};

fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(rel)
}

fn ordex(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ordex"))
        .args(args)
        .output()
        .expect("run ordex")
}

fn extract(out: &Path, extra: &[&str]) -> Output {
    let cfg = fixture("cli/run.toml");
    let mut args = vec![
        "extract",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    ordex(&args)
}

fn records(out: &Path) -> Vec<OrdinanceRecord> {
    std::fs::read_to_string(out.join(RECORDS_FILE))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn summary(out: &Path) -> RunSummary {
    serde_json::from_str(&std::fs::read_to_string(out.join(SUMMARY_FILE)).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn extract_writes_records_review_queue_and_journal() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = extract(&out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).contains("2/2 extracted"));

    let recs = records(&out);
    assert_eq!(recs.len(), 8);
    let find = |county: &str, f: FeatureType| {
        recs.iter()
            .find(|r| r.jurisdiction.county == county && r.feature == f)
            .unwrap()
    };
    let monroe = find("Monroe", FeatureType::StructuresNonparticipating);
    assert_eq!(monroe.status, RecordStatus::Found);
    assert_eq!(monroe.effective_setback_ft, Some(1250.0));
    assert!(monroe.source_excerpt.contains("1,250 feet"));
    let participating = find("Monroe", FeatureType::StructuresParticipating)
        .effective_setback_ft
        .unwrap();
    assert!((participating - 721.6).abs() < 1e-9 * 721.6);
    assert_eq!(
        find("Laramie", FeatureType::Roads).effective_setback_ft,
        Some(1402.5)
    );
    assert_eq!(
        find("Monroe", FeatureType::Roads).status,
        RecordStatus::NotFound
    );

    let review: Vec<OrdinanceRecord> = std::fs::read_to_string(out.join(REVIEW_FILE))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(review.len(), 1);
    let ctx = review[0].review.as_ref().unwrap();
    assert_eq!(review[0].feature, FeatureType::Noise);
    assert_eq!(ctx.reason, ReviewReason::NoMatch);
    // system prompt, question, unmatched reply
    assert_eq!(ctx.transcript.messages.len(), 3);
    assert!(ctx.transcript.messages[0].content.contains("Monroe County"));

    for name in [
        "text/monroe_wi.txt",
        "distilled/laramie_wy.txt",
        "distilled/monroe_wi.excerpts.json",
        "journal.jsonl",
    ] {
        assert!(out.join(name).is_file(), "{name} missing");
    }
    let s = summary(&out);
    assert!(s.backend_calls > 0);
    assert_eq!((s.found, s.not_found, s.needs_review), (4, 3, 1));
}

#[test]
fn reruns_are_byte_identical_and_warm_cache_is_free() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_eq!(extract(&a, &[]).status.code(), Some(0));
    assert_eq!(extract(&b, &["--workers", "1"]).status.code(), Some(0));
    let first = std::fs::read(a.join(RECORDS_FILE)).unwrap();
    assert_eq!(first, std::fs::read(b.join(RECORDS_FILE)).unwrap());

    assert_eq!(extract(&a, &[]).status.code(), Some(0));
    assert_eq!(summary(&a).backend_calls, 0);
    assert_eq!(first, std::fs::read(a.join(RECORDS_FILE)).unwrap());

    assert_eq!(extract(&b, &["--no-cache"]).status.code(), Some(0));
    assert!(summary(&b).backend_calls > 0);
}

#[test]
fn convert_single_document() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("a.txt"),
        "Section 1.\r\nText.   \n\n\n\nMore.\n",
    )
    .unwrap();
    let manifest = dir.path().join("m.toml");
    std::fs::write(
        &manifest,
        "[[document]]\ncounty = \"Adams\"\nstate = \"ND\"\npath = \"a.txt\"\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = ordex(&[
        "convert",
        "--manifest",
        manifest.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(
        std::fs::read_to_string(out.join("text/adams_nd.txt")).unwrap(),
        "Section 1.\nText.\n\nMore.\n"
    );
}

#[test]
fn convert_reports_failures_and_continues() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("a.txt"), "alpha").unwrap();
    std::fs::write(dir.path().join("b.txt"), "beta").unwrap();
    std::fs::write(dir.path().join("c.pdf"), b"%PDF-1.4 this is not a pdf").unwrap();
    let manifest = dir.path().join("m.toml");
    std::fs::write(
        &manifest,
        "[[document]]\ncounty = \"A\"\nstate = \"X\"\npath = \"a.txt\"\n\
         [[document]]\ncounty = \"B\"\nstate = \"X\"\npath = \"b.txt\"\n\
         [[document]]\ncounty = \"C\"\nstate = \"X\"\npath = \"c.pdf\"\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = ordex(&[
        "convert",
        "--manifest",
        manifest.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("2/3 converted"), "{err}");
    assert!(err.contains("c.pdf"), "{err}");
    assert_eq!(std::fs::read_dir(out.join("text")).unwrap().count(), 2);
    assert_eq!(summary(&out).failures.len(), 1);
}

#[test]
fn missing_document_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dir.path().join("m.toml");
    std::fs::write(
        &manifest,
        "[[document]]\ncounty = \"A\"\nstate = \"X\"\npath = \"gone.txt\"\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = ordex(&[
        "convert",
        "--manifest",
        manifest.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("gone.txt"));
    assert!(stderr(&o).contains("0/1 converted"));
}

#[test]
fn usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dir.path().join("m.toml");
    std::fs::write(
        &manifest,
        "[[document]]\ncounty = \"A\"\nstate = \"X\"\npath = \"a\"\n[[document]]\ncounty = \"A\"\nstate = \"X\"\npath = \"b\"\n",
    )
    .unwrap();
    let o = ordex(&[
        "convert",
        "--manifest",
        manifest.to_str().unwrap(),
        "--out",
        "unused",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("duplicate jurisdiction"));
    let o = ordex(&[
        "extract",
        "--manifest",
        manifest.to_str().unwrap(),
        "--out",
        "unused",
        "--backend",
        "scripted",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!Path::new("unused").exists());
}

#[test]
fn evaluate_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    assert_eq!(extract(&run, &[]).status.code(), Some(0));
    let truth = dir.path().join("truth.csv");
    std::fs::write(
        &truth,
        "county,state,feature,exists,kind,value,unit,combinator,condition_list\n\
         Monroe,WI,structures_participating,true,tip_height_multiplier,1.1,,,\n\
         Laramie,WY,roads,true,hub_plus_rotor_multiplier,1.5,,,\n\
         Monroe,WI,roads,false,,,,,\n\
         Laramie,WY,noise,true,fixed_distance,45,decibels,,\n",
    )
    .unwrap();
    let out = dir.path().join("eval");
    let o = ordex(&[
        "evaluate",
        "--records",
        run.join(RECORDS_FILE).to_str().unwrap(),
        "--truth",
        truth.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(out.join("evaluation.txt")).unwrap();
    assert_eq!(String::from_utf8_lossy(&o.stdout), text);
    assert!(text.contains("2 (50%) - Correct"), "{text}");
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("evaluation.json")).unwrap())
            .unwrap();
    assert_eq!(json["total"], 4);
    assert_eq!(json["counts"]["false_negative"], 1);
}

#[test]
fn evaluate_empty_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let records = dir.path().join("r.jsonl");
    std::fs::write(&records, "").unwrap();
    let truth = fixture("../../../../data/ground_truth/test.csv");
    let out = dir.path().join("eval");
    let o = ordex(&[
        "evaluate",
        "--records",
        records.to_str().unwrap(),
        "--truth",
        truth.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("(0 jurisdiction-feature pairs)"));
}

#[test]
fn evaluate_parse_errors_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let records = dir.path().join("r.jsonl");
    std::fs::write(&records, "").unwrap();
    let truth = dir.path().join("t.csv");
    std::fs::write(
        &truth,
        "county,state,feature,exists,kind,value,unit,combinator,condition_list\nA,X,roads,false,,,,,\nA,X,structure,false,,,,,\n",
    )
    .unwrap();
    let out = dir.path().join("eval");
    let args = |r: &Path, t: &Path| {
        ordex(&[
            "evaluate",
            "--records",
            r.to_str().unwrap(),
            "--truth",
            t.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ])
    };
    let o = args(&records, &truth);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));

    std::fs::write(&records, "{\"jurisdiction\": 1}\n").unwrap();
    std::fs::write(
        &truth,
        "county,state,feature,exists,kind,value,unit,combinator,condition_list\n",
    )
    .unwrap();
    let o = args(&records, &truth);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 1"), "{}", stderr(&o));
    assert!(!out.exists());
}

#[test]
fn tree_dump_round_trips_through_validate() {
    let dir = tempfile::tempdir().unwrap();
    let o = ordex(&["tree", "dump", "--feature", "noise"]);
    assert_eq!(o.status.code(), Some(0));
    let path = dir.path().join("noise.toml");
    std::fs::write(&path, &o.stdout).unwrap();
    let o = ordex(&["tree", "validate", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("ok"));
}

#[test]
fn tree_dir_overrides_builtin_tree() {
    let dir = tempfile::tempdir().unwrap();
    let trees = dir.path().join("trees");
    std::fs::create_dir(&trees).unwrap();
    // a noise tree that never asks: the promptless root is a leaf with no reply
    std::fs::write(
        trees.join("noise.toml"),
        "root = \"only\"\n[[nodes]]\nid = \"only\"\n",
    )
    .unwrap();
    let out = dir.path().join("run");
    let o = extract(
        &out,
        &["--tree-dir", trees.to_str().unwrap(), "--features", "noise"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let recs = records(&out);
    assert_eq!(recs.len(), 2);
    assert!(recs.iter().all(|r| r.status == RecordStatus::NeedsReview));
}
