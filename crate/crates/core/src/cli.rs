//! Command-line front end. The `blendplan` binary is a thin wrapper over [`run`].
//!
//! Exit codes: 0 on success, 1 when inputs are well-formed but fail a check
//! (diagnostics go to stderr, one JSON object per line), 2 on usage errors
//! and unreadable inputs.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::blend::{compose_plan, load_blend, rescale_for_horizon, validate_blend, BlendSpec, EpochCaps, TrainingPlan};
use crate::catalog::Catalog;
use crate::crawl::expand_crawl;
use crate::error::{Error, Result};
use crate::lr::{self, Decay, LrConfig};
use crate::manifest::{load_manifest, reference_manifest, Manifest};
use crate::ratio::{format_percent, format_ratio, parse_ratio, to_f64, Ratio};
use crate::schedule::{build_schedule, partition_for_worker, write_binary, write_tsv, Ordering, ScheduleConfig, DEFAULT_QUANTUM};
use crate::simulate::{
    exposure_report, horizon_whatif, milestones_to_csv, milestones_to_json, milestones_to_text, overexposure_check,
    Horizon,
};
use crate::units::{format_tokens, parse_tokens};

#[derive(Parser, Debug)]
#[command(name = "blendplan", version, about = "Plan two-phase pretraining data blends")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compose a two-phase training plan from two blends.
    Plan(PlanArgs),
    /// Check a blend's weights and keys.
    Validate(ValidateArgs),
    /// Emit the token-stream schedule of a plan.
    Schedule(ScheduleArgs),
    /// Report per-source exposure at token milestones.
    Simulate(SimulateArgs),
    /// Rescale a plan to longer horizons under epoch caps.
    Scale(ScaleArgs),
    /// Sample the learning-rate schedule as CSV.
    Lr(LrArgs),
    /// List the preset catalog.
    Presets(PresetsArgs),
}

#[derive(Args, Debug)]
struct ManifestArg {
    /// Manifest JSON; defaults to the bundled reference manifest.
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PlanArgs {
    #[command(flatten)]
    manifest: ManifestArg,
    /// Phase-1 blend: preset name or JSON file.
    #[arg(long)]
    p1: String,
    /// Phase-2 blend: preset name or JSON file.
    #[arg(long)]
    p2: String,
    /// Split the phase-1 `crawl` weight with this crawl blend preset.
    #[arg(long)]
    p1_crawl: Option<String>,
    /// Split the phase-2 `crawl` weight with this crawl blend preset.
    #[arg(long)]
    p2_crawl: Option<String>,
    #[arg(long, value_parser = parse_tokens_arg)]
    total: u64,
    #[arg(long, value_parser = parse_ratio_arg)]
    p2_fraction: Ratio,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    #[arg(long)]
    blend: String,
    #[command(flatten)]
    manifest: ManifestArg,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum OrderingArg {
    TwoPhase,
    Random,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ScheduleFormat {
    Text,
    Bin,
}

#[derive(Args, Debug)]
struct ScheduleArgs {
    #[arg(long)]
    plan: PathBuf,
    /// Defaults to the manifest path recorded in the plan.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_QUANTUM, value_parser = parse_tokens_arg)]
    quantum: u64,
    #[arg(long, value_enum, default_value_t = OrderingArg::TwoPhase)]
    ordering: OrderingArg,
    #[arg(long, default_value_t = 1)]
    workers: u64,
    #[arg(long, default_value_t = 0)]
    worker: u64,
    #[arg(long, value_enum, default_value_t = ScheduleFormat::Text)]
    format: ScheduleFormat,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ReportFormat {
    Json,
    Text,
    Csv,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long)]
    plan: PathBuf,
    #[command(flatten)]
    manifest: ManifestArg,
    /// Comma-separated token counts, e.g. `200B,500B`.
    #[arg(long, value_delimiter = ',', value_parser = parse_tokens_arg)]
    milestones: Vec<u64>,
    /// Epoch targets JSON; defaults to 6 for high crawl, 8 for math and task.
    #[arg(long)]
    caps: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ReportFormat::Json)]
    format: ReportFormat,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ScaleArgs {
    #[arg(long)]
    plan: PathBuf,
    #[command(flatten)]
    manifest: ManifestArg,
    /// Comma-separated horizons.
    #[arg(long, value_delimiter = ',', value_parser = parse_tokens_arg, required = true)]
    total: Vec<u64>,
    /// Epoch caps JSON; defaults to the bundled horizon caps.
    #[arg(long)]
    caps: Option<PathBuf>,
    /// Replace the manifest's downsampling factor, e.g. `1` for a full-data run.
    #[arg(long, value_parser = parse_ratio_arg)]
    downsample: Option<Ratio>,
    #[arg(long, value_enum, default_value_t = ReportFormat::Json)]
    format: ReportFormat,
    /// Write the rescaled plan for the last horizon here.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum DecayArg {
    Cosine,
    Linear,
}

#[derive(Args, Debug)]
struct LrArgs {
    /// Take horizon and phase boundary from a plan.
    #[arg(long, conflicts_with_all = ["total", "p2_fraction"])]
    plan: Option<PathBuf>,
    #[arg(long, value_parser = parse_tokens_arg, requires = "p2_fraction")]
    total: Option<u64>,
    #[arg(long, value_parser = parse_ratio_arg)]
    p2_fraction: Option<Ratio>,
    #[arg(long, value_enum, default_value_t = DecayArg::Cosine)]
    decay: DecayArg,
    #[arg(long, default_value_t = lr::DEFAULT_LR_MAX)]
    lr_max: f64,
    #[arg(long, default_value_t = lr::DEFAULT_LR_MIN)]
    lr_min: f64,
    /// Phase-2 end point; defaults to `--lr-min`.
    #[arg(long)]
    final_lr: Option<f64>,
    /// Sampling stride in tokens; defaults to 1/100 of the horizon.
    #[arg(long, value_parser = parse_tokens_arg)]
    stride: Option<u64>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PresetsArgs {
    #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
    format: ReportFormat,
}

fn parse_tokens_arg(s: &str) -> std::result::Result<u64, String> {
    parse_tokens(s).map_err(|e| e.to_string())
}

fn parse_ratio_arg(s: &str) -> std::result::Result<Ratio, String> {
    parse_ratio(s).map_err(|e| e.to_string())
}

/// Runs one command. `argv[0]` is the program name.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    let result = match cli.command {
        Command::Plan(a) => cmd_plan(a, out),
        Command::Validate(a) => cmd_validate(a, out),
        Command::Schedule(a) => cmd_schedule(a, out),
        Command::Simulate(a) => cmd_simulate(a, out),
        Command::Scale(a) => cmd_scale(a, out),
        Command::Lr(a) => cmd_lr(a, out),
        Command::Presets(a) => cmd_presets(a, out),
    };
    match result {
        Ok(()) => 0,
        Err(e) => report(&e, err),
    }
}

fn report(e: &Error, err: &mut dyn Write) -> i32 {
    match e {
        Error::InvalidBlend { diagnostics, .. } => {
            for d in diagnostics {
                let _ = writeln!(err, "{}", serde_json::to_string(d).expect("diagnostic serializes"));
            }
            1
        }
        Error::Io { .. } | Error::Parse(_) | Error::UnknownPreset(_) => {
            let _ = writeln!(err, "{}", json!({"kind": "UsageError", "message": e.to_string()}));
            2
        }
        other => {
            let _ = writeln!(err, "{}", json!({"kind": error_kind(other), "message": other.to_string()}));
            1
        }
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Validation(_) => "ValidationError",
        Error::Domain(_) => "DomainError",
        Error::EmptyManifest => "EmptyManifest",
        Error::UnknownSource(_) => "UnknownSource",
        Error::UnknownDomain(_) => "UnknownDomain",
        Error::InfeasibleTarget { .. } => "InfeasibleTarget",
        Error::MissingCrawlKey(_) => "MissingCrawlKey",
        Error::CapInfeasible(_) => "CapInfeasible",
        Error::EmptyShardList(_) => "EmptyShardList",
        Error::BudgetOverflow(_) => "BudgetOverflow",
        Error::WeightPrecision(_) => "WeightPrecision",
        Error::CursorMismatch(_) => "CursorMismatch",
        _ => "Error",
    }
}

fn emit(output: Option<&Path>, bytes: &[u8], out: &mut dyn Write) -> Result<()> {
    match output {
        Some(path) => fs::write(path, bytes).map_err(|e| Error::io(path, e)),
        None => out.write_all(bytes).map_err(|e| Error::io("<stdout>", e)),
    }
}

fn manifest_from(path: Option<&Path>) -> Result<(Manifest, Option<String>)> {
    match path {
        Some(p) => Ok((load_manifest(p)?, Some(p.display().to_string()))),
        None => Ok((reference_manifest(), None)),
    }
}

/// A preset name from the catalog, or a blend JSON file.
fn blend_arg(arg: &str) -> Result<BlendSpec> {
    let catalog = Catalog::from_env()?;
    match catalog.blend(arg) {
        Ok(b) => Ok(b),
        Err(Error::UnknownPreset(_)) if Path::new(arg).exists() => load_blend(arg),
        Err(e) => Err(e),
    }
}

fn checked(blend: BlendSpec, manifest: &Manifest) -> Result<BlendSpec> {
    let diagnostics = validate_blend(&blend, manifest);
    if diagnostics.is_empty() {
        Ok(blend)
    } else {
        Err(Error::InvalidBlend {
            name: blend.name,
            diagnostics,
        })
    }
}

fn with_crawl(blend: BlendSpec, preset: Option<&str>) -> Result<BlendSpec> {
    match preset {
        Some(name) => expand_crawl(&blend, &Catalog::from_env()?.crawl_blend(name)?),
        None => Ok(blend),
    }
}

fn cmd_plan(a: PlanArgs, out: &mut dyn Write) -> Result<()> {
    let (manifest, path) = manifest_from(a.manifest.manifest.as_deref())?;
    let p1 = checked(with_crawl(blend_arg(&a.p1)?, a.p1_crawl.as_deref())?, &manifest)?;
    let p2 = checked(with_crawl(blend_arg(&a.p2)?, a.p2_crawl.as_deref())?, &manifest)?;
    let plan = compose_plan(p1, p2, a.total, a.p2_fraction)?.bind(&manifest, path);
    emit(a.output.as_deref(), plan.to_json().as_bytes(), out)
}

fn cmd_validate(a: ValidateArgs, out: &mut dyn Write) -> Result<()> {
    let (manifest, _) = manifest_from(a.manifest.manifest.as_deref())?;
    let blend = checked(blend_arg(&a.blend)?, &manifest)?;
    let line = json!({"blend": blend.name, "valid": true, "keys": blend.weights.len()});
    writeln!(out, "{line}").map_err(|e| Error::io("<stdout>", e))
}

/// The manifest named on the command line, else the one the plan records.
fn plan_manifest(plan: &TrainingPlan, explicit: Option<&Path>) -> Result<Manifest> {
    let manifest = match explicit {
        Some(p) => load_manifest(p)?,
        None => match plan.manifest_ref.as_ref().and_then(|r| r.path.as_deref()) {
            Some(p) => load_manifest(p)?,
            None => reference_manifest(),
        },
    };
    plan.check_manifest(&manifest)?;
    Ok(manifest)
}

fn cmd_schedule(a: ScheduleArgs, out: &mut dyn Write) -> Result<()> {
    let plan = TrainingPlan::load(&a.plan)?;
    let manifest = plan_manifest(&plan, a.manifest.as_deref())?;
    let cfg = ScheduleConfig {
        seed: a.seed,
        quantum: a.quantum,
        ordering: match a.ordering {
            OrderingArg::TwoPhase => Ordering::TwoPhase,
            OrderingArg::Random => Ordering::RandomOrder,
        },
        workers: a.workers,
    };
    let schedule = build_schedule(&plan, &manifest, &cfg)?;
    let items = partition_for_worker(schedule, a.worker, a.workers)?;
    let mut sink: Box<dyn Write + '_> = match &a.output {
        Some(path) => Box::new(fs::File::create(path).map_err(|e| Error::io(path, e))?),
        None => Box::new(&mut *out),
    };
    match a.format {
        ScheduleFormat::Text => {
            write_tsv(items, &mut sink).map_err(|e| Error::io("<schedule>", e))?;
        }
        ScheduleFormat::Bin => {
            write_binary(items, cfg.quantum, &mut sink)?;
        }
    }
    Ok(())
}

fn caps_arg(path: Option<&Path>, default: EpochCaps) -> Result<EpochCaps> {
    path.map_or(Ok(default), EpochCaps::load)
}

fn cmd_simulate(a: SimulateArgs, out: &mut dyn Write) -> Result<()> {
    let plan = TrainingPlan::load(&a.plan)?;
    let manifest = plan_manifest(&plan, a.manifest.manifest.as_deref())?;
    let targets = caps_arg(a.caps.as_deref(), EpochCaps::recommended())?;
    let milestones = exposure_report(&plan, &manifest, &a.milestones)?;
    let warnings = overexposure_check(&plan, &manifest, &targets)?;
    let text = match a.format {
        ReportFormat::Json => {
            let report: serde_json::Value = serde_json::from_str(&milestones_to_json(&milestones)).expect("valid json");
            let warnings: Vec<_> = warnings
                .iter()
                .map(|w| {
                    json!({
                        "key": w.key,
                        "epochs": to_f64(&w.epochs),
                        "cap": format_ratio(&w.cap),
                        "excess": to_f64(&w.excess()),
                    })
                })
                .collect();
            let mut s = serde_json::to_string_pretty(&json!({"milestones": report, "warnings": warnings}))
                .expect("report serializes");
            s.push('\n');
            s
        }
        ReportFormat::Text => {
            let mut s = milestones_to_text(&milestones);
            for w in &warnings {
                s.push_str(&format!("warning: {w}\n"));
            }
            s
        }
        ReportFormat::Csv => milestones_to_csv(&milestones),
    };
    emit(a.output.as_deref(), text.as_bytes(), out)
}

fn cmd_scale(a: ScaleArgs, out: &mut dyn Write) -> Result<()> {
    let plan = TrainingPlan::load(&a.plan)?;
    let manifest = plan_manifest(&plan, a.manifest.manifest.as_deref())?;
    let caps = caps_arg(a.caps.as_deref(), EpochCaps::horizon_preset())?;
    let horizons: Vec<Horizon> = a
        .total
        .iter()
        .map(|&total| Horizon {
            total,
            factor: a.downsample.clone(),
        })
        .collect();
    let rows = horizon_whatif(&plan, &manifest, &horizons, &caps)?;
    let text = match a.format {
        ReportFormat::Json => {
            let rows: Vec<_> = rows
                .iter()
                .map(|r| {
                    let epochs: serde_json::Map<_, _> =
                        r.epochs.iter().map(|(k, v)| (k.clone(), json!(to_f64(v)))).collect();
                    let rescaled: serde_json::Map<_, _> =
                        r.rescaled_epochs.iter().map(|(k, v)| (k.clone(), json!(to_f64(v)))).collect();
                    let weights: serde_json::Map<_, _> = r
                        .rescaled
                        .phase2
                        .blend
                        .weights
                        .iter()
                        .map(|(k, v)| (k.clone(), json!(format_percent(v))))
                        .collect();
                    json!({
                        "total_tokens": r.horizon.total,
                        "epochs": epochs,
                        "warnings": r.warnings.iter().map(|w| w.to_string()).collect::<Vec<_>>(),
                        "rescaled_phase2": {"name": r.rescaled.phase2.blend.name, "weights": weights},
                        "rescaled_epochs": rescaled,
                    })
                })
                .collect();
            let mut s = serde_json::to_string_pretty(&rows).expect("rows serialize");
            s.push('\n');
            s
        }
        ReportFormat::Text | ReportFormat::Csv => {
            let mut s = String::new();
            for r in &rows {
                s.push_str(&format!("horizon {}\n", format_tokens(r.horizon.total)));
                for (k, v) in &r.epochs {
                    s.push_str(&format!(
                        "  {k:<16} {:>8.2} -> {:>8.2}\n",
                        to_f64(v),
                        to_f64(&r.rescaled_epochs[k])
                    ));
                }
                for w in &r.warnings {
                    s.push_str(&format!("  warning: {w}\n"));
                }
            }
            s
        }
    };
    if let (Some(path), Some(last)) = (&a.output, a.total.last()) {
        let m = match &a.downsample {
            Some(f) => manifest.with_factor(f.clone())?,
            None => manifest.clone(),
        };
        rescale_for_horizon(&plan, &m, *last, &caps)?.bind(&m, None).to_file(path)?;
    }
    out.write_all(text.as_bytes()).map_err(|e| Error::io("<stdout>", e))
}

fn cmd_lr(a: LrArgs, out: &mut dyn Write) -> Result<()> {
    let mut cfg = match (&a.plan, a.total, &a.p2_fraction) {
        (Some(path), _, _) => LrConfig::from_plan(&TrainingPlan::load(path)?)?,
        (None, Some(total), Some(frac)) => {
            let p2 = crate::ratio::round_u64(&(frac * crate::ratio::int(total)))?;
            LrConfig::new(total, total - p2)?
        }
        _ => return Err(Error::Parse("lr needs --plan or --total with --p2-fraction".to_string())),
    };
    cfg.lr_max = a.lr_max;
    cfg.lr_min = a.lr_min;
    cfg.final_lr = a.final_lr;
    cfg.decay = match a.decay {
        DecayArg::Cosine => Decay::Cosine,
        DecayArg::Linear => Decay::Linear,
    };
    cfg.check()?;
    let stride = a.stride.unwrap_or((cfg.total_tokens / 100).max(1));
    let points = lr::sample(&cfg, stride)?;
    let mut buf = Vec::new();
    lr::write_csv(&points, &mut buf).map_err(|e| Error::io("<lr>", e))?;
    emit(a.output.as_deref(), &buf, out)
}

fn cmd_presets(a: PresetsArgs, out: &mut dyn Write) -> Result<()> {
    let catalog = Catalog::from_env()?;
    let text = match a.format {
        ReportFormat::Json => catalog.to_json(),
        ReportFormat::Text | ReportFormat::Csv => {
            let mut s = String::new();
            for name in catalog.blend_names() {
                let table = catalog.source_table(name).unwrap_or("");
                s.push_str(&format!("blend\t{name}\t{table}\n"));
            }
            for name in catalog.crawl_names() {
                let table = catalog.source_table(name).unwrap_or("");
                s.push_str(&format!("crawl\t{name}\t{table}\n"));
            }
            s
        }
    };
    out.write_all(text.as_bytes()).map_err(|e| Error::io("<stdout>", e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(std::iter::once("blendplan").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(run_capture(&[]).0, 2);
        assert_eq!(run_capture(&["plan", "--total", "1T"]).0, 2);
        assert_eq!(run_capture(&["validate", "--blend", "NoSuchPreset"]).0, 2);
    }

    #[test]
    fn validate_preset() {
        let (code, out, _) = run_capture(&["validate", "--blend", "P2-Blend1"]);
        assert_eq!(code, 0);
        assert!(out.contains("\"valid\":true"));
    }

    #[test]
    fn lr_csv() {
        let (code, out, _) = run_capture(&["lr", "--total", "1000", "--p2-fraction", "0.4", "--stride", "500"]);
        assert_eq!(code, 0);
        assert_eq!(out.lines().count(), 4);
        assert!(out.ends_with("1000,3e-6\n"));
    }
}
