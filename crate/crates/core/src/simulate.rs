//! Token accounting for a plan without building its schedule.
//!
//! Exposure at token `t` is piecewise linear: phase-1 weights up to the phase
//! boundary, phase-2 weights after it. Integer token counts are apportioned by
//! largest remainder so they add up to the milestone exactly; epochs are kept
//! as exact rationals.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_traits::Zero;
use serde::Serialize;

use crate::blend::{plan_key_epochs, resolve, rescale_for_horizon, EpochCaps, TrainingPlan};
use crate::error::{Error, Result};
use crate::manifest::Manifest;
use crate::ratio::{floor_u64, format_ratio, int, to_f64, Ratio};
use crate::units::format_tokens;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceExposure {
    pub id: String,
    pub tokens_seen: u64,
    pub epochs_seen: Ratio,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExposureReport {
    pub milestone: u64,
    pub sources: Vec<SourceExposure>,
}

impl ExposureReport {
    pub fn get(&self, id: &str) -> Option<&SourceExposure> {
        self.sources.iter().find(|s| s.id == id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Milestone {
    pub tokens: u64,
    pub report: ExposureReport,
}

/// Exact tokens per source after `t` tokens of `plan`.
fn exact_tokens(plan: &TrainingPlan, w1: &[Ratio], w2: &[Ratio], t: u64) -> Vec<Ratio> {
    let p1 = plan.phase1.token_budget;
    let first = int(t.min(p1));
    let second = int(t.saturating_sub(p1));
    w1.iter()
        .zip(w2)
        .map(|(a, b)| a * &first + b * &second)
        .collect()
}

/// Integer parts summing to `total`, largest remainders first (earlier sources win ties).
fn apportion(exact: &[Ratio], total: u64) -> Vec<u64> {
    let mut out: Vec<u64> = exact.iter().map(|x| floor_u64(x).unwrap_or(0)).collect();
    let assigned: u64 = out.iter().sum();
    let mut order: Vec<usize> = (0..exact.len()).collect();
    let rem = |i: usize| &exact[i] - int(out[i]);
    let rems: Vec<Ratio> = order.iter().map(|&i| rem(i)).collect();
    order.sort_by(|&a, &b| rems[b].cmp(&rems[a]).then(a.cmp(&b)));
    for &i in order.iter().take(total.saturating_sub(assigned) as usize) {
        out[i] += 1;
    }
    out
}

/// Exposure at each milestone; `total_tokens` is appended when missing.
pub fn exposure_report(plan: &TrainingPlan, manifest: &Manifest, milestones: &[u64]) -> Result<Vec<Milestone>> {
    let mut points = milestones.to_vec();
    if points.last() != Some(&plan.total_tokens) {
        points.push(plan.total_tokens);
    }
    if points.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain("milestones must be strictly increasing".to_string()));
    }
    if let Some(&bad) = points.iter().find(|&&t| t > plan.total_tokens) {
        return Err(Error::Domain(format!(
            "milestone {bad} is past the horizon {}",
            plan.total_tokens
        )));
    }
    let w1 = resolve(&plan.phase1.blend, manifest)?;
    let w2 = resolve(&plan.phase2.blend, manifest)?;
    points
        .into_iter()
        .map(|t| {
            let exact = exact_tokens(plan, &w1, &w2, t);
            let counts = apportion(&exact, t);
            let sources = manifest
                .sources()
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    let available = manifest.available_tokens(i);
                    let epochs_seen = if exact[i].is_zero() {
                        Ratio::zero()
                    } else if available == 0 {
                        return Err(Error::EmptyShardList(s.id.clone()));
                    } else {
                        &exact[i] / int(available)
                    };
                    Ok(SourceExposure {
                        id: s.id.clone(),
                        tokens_seen: counts[i],
                        epochs_seen,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Milestone {
                tokens: t,
                report: ExposureReport { milestone: t, sources },
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Warning {
    pub key: String,
    pub epochs: Ratio,
    pub cap: Ratio,
}

impl Warning {
    pub fn excess(&self) -> Ratio {
        &self.epochs - &self.cap
    }
}

impl std::fmt::Display for Warning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{}: {:.2} epochs exceeds the cap of {} by {:.2}",
            self.key,
            to_f64(&self.epochs),
            format_ratio(&self.cap),
            to_f64(&self.excess())
        )
    }
}

/// One warning per capped key whose final epochs exceed its cap. Keys that
/// match nothing in the manifest are ignored.
pub fn overexposure_check(plan: &TrainingPlan, manifest: &Manifest, targets: &EpochCaps) -> Result<Vec<Warning>> {
    let mut out = Vec::new();
    for (key, cap) in &targets.caps {
        if manifest.select(key).is_none() {
            continue;
        }
        let epochs = plan_key_epochs(plan, manifest, key)?;
        if epochs > *cap {
            out.push(Warning {
                key: key.clone(),
                epochs,
                cap: cap.clone(),
            });
        }
    }
    Ok(out)
}

/// Keys shown in reports: each source's domain, plus `crawl` and `task` totals.
pub fn report_keys(manifest: &Manifest) -> Vec<String> {
    let mut keys: Vec<String> = Vec::new();
    for s in manifest.sources() {
        let key = s.domain_key();
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    for group in ["crawl", "task"] {
        if manifest.select(group).is_some_and(|s| s.len() > 1) && !keys.iter().any(|k| k == group) {
            keys.push(group.to_string());
        }
    }
    keys
}

/// A horizon to compare, optionally with a different downsampling factor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Horizon {
    pub total: u64,
    pub factor: Option<Ratio>,
}

impl From<u64> for Horizon {
    fn from(total: u64) -> Self {
        Horizon { total, factor: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WhatIf {
    pub horizon: Horizon,
    pub epochs: BTreeMap<String, Ratio>,
    pub warnings: Vec<Warning>,
    pub rescaled: TrainingPlan,
    pub rescaled_epochs: BTreeMap<String, Ratio>,
}

/// For each horizon: per-domain epochs of the unchanged blends, cap warnings,
/// and the rescaled plan with its epochs.
pub fn horizon_whatif(
    plan: &TrainingPlan,
    manifest: &Manifest,
    horizons: &[Horizon],
    caps: &EpochCaps,
) -> Result<Vec<WhatIf>> {
    horizons
        .iter()
        .map(|h| {
            let m = match &h.factor {
                Some(f) => manifest.with_factor(f.clone())?,
                None => manifest.clone(),
            };
            let stretched = plan.with_total(h.total)?;
            let rescaled = rescale_for_horizon(plan, &m, h.total, caps)?;
            let keyed = |p: &TrainingPlan| -> Result<BTreeMap<String, Ratio>> {
                report_keys(&m)
                    .into_iter()
                    .map(|k| plan_key_epochs(p, &m, &k).map(|e| (k, e)))
                    .collect()
            };
            Ok(WhatIf {
                horizon: h.clone(),
                epochs: keyed(&stretched)?,
                warnings: overexposure_check(&stretched, &m, caps)?,
                rescaled_epochs: keyed(&rescaled)?,
                rescaled,
            })
        })
        .collect()
}

#[derive(Serialize)]
struct SourceRow<'a> {
    id: &'a str,
    tokens_seen: u64,
    epochs: f64,
    epochs_exact: String,
}

#[derive(Serialize)]
struct MilestoneRow<'a> {
    tokens: u64,
    sources: Vec<SourceRow<'a>>,
}

pub fn milestones_to_json(milestones: &[Milestone]) -> String {
    let rows: Vec<MilestoneRow> = milestones
        .iter()
        .map(|m| MilestoneRow {
            tokens: m.tokens,
            sources: m
                .report
                .sources
                .iter()
                .map(|s| SourceRow {
                    id: &s.id,
                    tokens_seen: s.tokens_seen,
                    epochs: to_f64(&s.epochs_seen),
                    epochs_exact: format_ratio(&s.epochs_seen),
                })
                .collect(),
        })
        .collect();
    let mut text = serde_json::to_string_pretty(&rows).expect("report serializes");
    text.push('\n');
    text
}

pub fn milestones_to_csv(milestones: &[Milestone]) -> String {
    let mut out = String::from("milestone,source,tokens_seen,epochs\n");
    for m in milestones {
        for s in &m.report.sources {
            let _ = writeln!(out, "{},{},{},{:.6}", m.tokens, s.id, s.tokens_seen, to_f64(&s.epochs_seen));
        }
    }
    out
}

pub fn milestones_to_text(milestones: &[Milestone]) -> String {
    let width = milestones
        .first()
        .map(|m| m.report.sources.iter().map(|s| s.id.len()).max().unwrap_or(0))
        .unwrap_or(0)
        .max(6);
    let mut out = String::new();
    for m in milestones {
        let _ = writeln!(out, "milestone {}", format_tokens(m.tokens));
        let _ = writeln!(out, "  {:<width$}  {:>16}  {:>10}", "source", "tokens", "epochs");
        for s in &m.report.sources {
            let _ = writeln!(
                out,
                "  {:<width$}  {:>16}  {:>10.4}",
                s.id,
                s.tokens_seen,
                to_f64(&s.epochs_seen)
            );
        }
    }
    out
}
