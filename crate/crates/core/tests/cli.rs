use std::fs;
use std::path::Path;

use blendplan::cli;
use blendplan::schedule::read_binary;
use blendplan::{Catalog, TrainingPlan};
use serde_json::Value;

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = cli::run(std::iter::once("blendplan").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_string_lossy().into_owned()
}

fn write_plan(dir: &Path, total: &str) -> String {
    let plan = path(dir, "plan.json");
    let (code, _, err) = run(&[
        "plan", "--p1", "P1-Blend4", "--p2", "P2-Blend1", "--total", total, "--p2-fraction", "0.4", "-o", &plan,
    ]);
    assert_eq!(code, 0, "{err}");
    plan
}

#[test]
fn plan_writes_budgets() {
    let dir = tempfile::tempdir().unwrap();
    let plan = TrainingPlan::load(write_plan(dir.path(), "1T")).unwrap();
    assert_eq!(plan.phase1.token_budget, 600_000_000_000);
    assert_eq!(plan.phase2.token_budget, 400_000_000_000);
    assert!(plan.manifest_ref.is_some());
}

#[test]
fn plan_to_stdout_is_stable() {
    let args = ["plan", "--p1", "P1-Blend4", "--p2", "P2-Blend1", "--total", "1T", "--p2-fraction", "0.4"];
    let (a, first, _) = run(&args);
    let (b, second, _) = run(&args);
    assert_eq!((a, b), (0, 0));
    assert_eq!(first, second);
    first.parse::<TrainingPlan>().unwrap();
}

#[test]
fn plan_with_crawl_preset() {
    let (code, out, err) = run(&[
        "plan", "--p1", "P1-Blend1", "--p2", "P2-Blend1", "--p1-crawl", "CC-Blend1", "--total", "1T", "--p2-fraction",
        "0.3",
    ]);
    assert_eq!(code, 0, "{err}");
    let plan: TrainingPlan = out.parse().unwrap();
    assert!(plan.phase1.blend.weights.keys().all(|k| k != "crawl"));
    assert!(plan.phase1.blend.name.contains("CC-Blend1"));
}

#[test]
fn every_preset_validates() {
    for name in Catalog::builtin().blend_names() {
        let (code, out, err) = run(&["validate", "--blend", name]);
        assert_eq!(code, 0, "{name}: {err}");
        let v: Value = serde_json::from_str(out.trim()).unwrap();
        assert_eq!(v["valid"], true);
    }
}

#[test]
fn bad_blend_reports_sum_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let blend = path(dir.path(), "bad.json");
    fs::write(&blend, r#"{"name":"bad","weights":{"math":"50","code":"49"}}"#).unwrap();
    let (code, _, err) = run(&["validate", "--blend", &blend]);
    assert_eq!(code, 1);
    let v: Value = serde_json::from_str(err.lines().next().unwrap()).unwrap();
    assert_eq!(v["kind"], "SumMismatch");
    assert_eq!(v["total"], "99.0");
}

#[test]
fn unknown_blend_is_usage_error() {
    let (code, _, err) = run(&["validate", "--blend", "no-such-blend"]);
    assert_eq!(code, 2);
    assert!(err.contains("UsageError"));
    let (code, _, _) = run(&["schedule"]);
    assert_eq!(code, 2);
}

#[test]
fn schedule_partitions_reunite() {
    let dir = tempfile::tempdir().unwrap();
    let plan = write_plan(dir.path(), "40960000");
    let (code, full, err) = run(&["schedule", "--plan", &plan, "--seed", "3"]);
    assert_eq!(code, 0, "{err}");
    let lines: Vec<&str> = full.lines().collect();
    assert_eq!(lines.len(), 10_000);
    assert!(lines[0].starts_with("0\t"));
    assert!(lines[0].ends_with("\t4096"));

    let parts: Vec<String> = (0..3)
        .map(|w| run(&["schedule", "--plan", &plan, "--seed", "3", "--workers", "3", "--worker", &w.to_string()]).1)
        .collect();
    let mut merged: Vec<&str> = parts.iter().flat_map(|p| p.lines()).collect();
    merged.sort_by_key(|l| l.split('\t').next().unwrap().parse::<u64>().unwrap());
    assert_eq!(merged, lines);
}

#[test]
fn schedule_binary_matches_text() {
    let dir = tempfile::tempdir().unwrap();
    let plan = write_plan(dir.path(), "4096000");
    let bin = path(dir.path(), "s.bin");
    let (code, text, _) = run(&["schedule", "--plan", &plan, "--ordering", "random", "--seed", "9"]);
    assert_eq!(code, 0);
    let (code, _, err) = run(&["schedule", "--plan", &plan, "--ordering", "random", "--seed", "9", "--format", "bin", "-o", &bin]);
    assert_eq!(code, 0, "{err}");
    let (header, records) = read_binary(&mut fs::File::open(&bin).unwrap()).unwrap();
    assert_eq!(header.quantum, 4096);
    assert_eq!(records.len(), text.lines().count());
    for (r, line) in records.iter().zip(text.lines()) {
        let fields: Vec<&str> = line.split('\t').collect();
        assert_eq!(r.index.to_string(), fields[0]);
        assert_eq!(r.offset.to_string(), fields[3]);
    }
}

#[test]
fn simulate_formats() {
    let dir = tempfile::tempdir().unwrap();
    let plan = write_plan(dir.path(), "1T");
    let (code, json, err) = run(&["simulate", "--plan", &plan, "--milestones", "200B,600B"]);
    assert_eq!(code, 0, "{err}");
    let v: Value = serde_json::from_str(&json).unwrap();
    assert!(v.to_string().contains("math"));
    let (code, csv, _) = run(&["simulate", "--plan", &plan, "--milestones", "200B", "--format", "csv"]);
    assert_eq!(code, 0);
    assert_eq!(csv.lines().next(), Some("milestone,source,tokens_seen,epochs"));
    // The horizon is always reported even when not asked for.
    assert!(csv.lines().any(|l| l.starts_with("1000000000000,")));
}

#[test]
fn scale_writes_rescaled_plan() {
    let dir = tempfile::tempdir().unwrap();
    let plan = write_plan(dir.path(), "1T");
    let out = path(dir.path(), "scaled.json");
    let (code, _, err) = run(&["scale", "--plan", &plan, "--total", "1.7T", "-o", &out]);
    assert_eq!(code, 0, "{err}");
    let scaled = TrainingPlan::load(&out).unwrap();
    assert_eq!(scaled.total_tokens, 1_700_000_000_000);
    assert!(scaled.phase2.blend.name.ends_with("@1.700T"));
}

#[test]
fn lr_from_plan_ends_at_minimum() {
    let dir = tempfile::tempdir().unwrap();
    let plan = write_plan(dir.path(), "1T");
    let (code, csv, err) = run(&["lr", "--plan", &plan, "--stride", "250B"]);
    assert_eq!(code, 0, "{err}");
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "tokens,lr");
    assert_eq!(rows.len(), 6);
    let last: f64 = rows[5].split(',').nth(1).unwrap().parse().unwrap();
    assert_eq!(last, 3e-6);
}

#[test]
fn presets_json_round_trips() {
    let (code, out, _) = run(&["presets", "--format", "json"]);
    assert_eq!(code, 0);
    let catalog: Catalog = out.parse().unwrap();
    assert_eq!(catalog, Catalog::builtin());
}
