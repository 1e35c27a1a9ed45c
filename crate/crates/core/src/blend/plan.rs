use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use num_traits::{One, Signed};
use serde::{Deserialize, Serialize};

use super::{epochs_from_tokens, key_epochs_from_tokens, source_tokens, BlendSpec};
use crate::error::{Error, Result};
use crate::manifest::Manifest;
use crate::ratio::{self, format_ratio, int, round_u64, Ratio};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseConfig {
    pub blend: BlendSpec,
    pub token_budget: u64,
}

/// Where the manifest a plan was built against lives, and its fingerprint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestRef {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingPlan {
    pub phase1: PhaseConfig,
    pub phase2: PhaseConfig,
    pub total_tokens: u64,
    #[serde(with = "ratio::as_ratio")]
    pub p2_fraction: Ratio,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest_ref: Option<ManifestRef>,
}

fn split_budget(total: u64, p2_fraction: &Ratio) -> Result<(u64, u64)> {
    if p2_fraction.is_negative() || *p2_fraction >= Ratio::one() {
        return Err(Error::Domain(format!(
            "p2_fraction {} is outside [0, 1)",
            format_ratio(p2_fraction)
        )));
    }
    let phase2 = round_u64(&(p2_fraction * int(total)))?;
    let phase1 = total - phase2;
    if phase1 == 0 {
        return Err(Error::Domain(format!(
            "phase 1 gets no tokens with total {total} and p2_fraction {}",
            format_ratio(p2_fraction)
        )));
    }
    Ok((phase1, phase2))
}

/// Two-phase plan: phase 2 gets `round(p2_fraction * total)` tokens, phase 1 the rest.
pub fn compose_plan(p1: BlendSpec, p2: BlendSpec, total: u64, p2_fraction: Ratio) -> Result<TrainingPlan> {
    let (phase1, phase2) = split_budget(total, &p2_fraction)?;
    p1.ensure_valid()?;
    p2.ensure_valid()?;
    Ok(TrainingPlan {
        phase1: PhaseConfig {
            blend: p1,
            token_budget: phase1,
        },
        phase2: PhaseConfig {
            blend: p2,
            token_budget: phase2,
        },
        total_tokens: total,
        p2_fraction,
        manifest_ref: None,
    })
}

impl TrainingPlan {
    /// Same blends and phase split over a different horizon.
    pub fn with_total(&self, total: u64) -> Result<TrainingPlan> {
        let (phase1, phase2) = split_budget(total, &self.p2_fraction)?;
        let mut plan = self.clone();
        plan.total_tokens = total;
        plan.phase1.token_budget = phase1;
        plan.phase2.token_budget = phase2;
        Ok(plan)
    }

    pub fn bind(mut self, manifest: &Manifest, path: Option<String>) -> TrainingPlan {
        self.manifest_ref = Some(ManifestRef {
            path,
            sha256: manifest.fingerprint(),
        });
        self
    }

    /// Checks the budget invariants and both blends' weights.
    pub fn check(&self) -> Result<()> {
        let (phase1, phase2) = split_budget(self.total_tokens, &self.p2_fraction)?;
        if phase1 != self.phase1.token_budget || phase2 != self.phase2.token_budget {
            return Err(Error::Domain(format!(
                "phase budgets {}+{} do not match total {} at p2_fraction {}",
                self.phase1.token_budget,
                self.phase2.token_budget,
                self.total_tokens,
                format_ratio(&self.p2_fraction)
            )));
        }
        self.phase1.blend.ensure_valid()?;
        self.phase2.blend.ensure_valid()
    }

    /// Errors unless `manifest` matches the recorded fingerprint (when there is one).
    pub fn check_manifest(&self, manifest: &Manifest) -> Result<()> {
        match &self.manifest_ref {
            Some(r) if r.sha256 != manifest.fingerprint() => Err(Error::Domain(format!(
                "plan was built against manifest {} but got {}",
                r.sha256,
                manifest.fingerprint()
            ))),
            _ => Ok(()),
        }
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("plan serializes");
        text.push('\n');
        text
    }

    pub fn to_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<TrainingPlan> {
        let path = path.as_ref();
        fs::read_to_string(path)
            .map_err(|e| Error::io(path, e))?
            .parse()
    }
}

impl FromStr for TrainingPlan {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let plan: TrainingPlan =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("plan: {e}")))?;
        plan.check()?;
        Ok(plan)
    }
}

/// Exact tokens per source over both phases.
pub fn plan_source_tokens(plan: &TrainingPlan, manifest: &Manifest) -> Result<Vec<Ratio>> {
    let first = source_tokens(&plan.phase1.blend, plan.phase1.token_budget, manifest)?;
    let second = source_tokens(&plan.phase2.blend, plan.phase2.token_budget, manifest)?;
    Ok(first.into_iter().zip(second).map(|(a, b)| a + b).collect())
}

/// Epochs per source id summed over both phases.
pub fn plan_epochs(plan: &TrainingPlan, manifest: &Manifest) -> Result<BTreeMap<String, Ratio>> {
    epochs_from_tokens(&plan_source_tokens(plan, manifest)?, manifest)
}

/// Epochs of a key summed over both phases.
pub fn plan_key_epochs(plan: &TrainingPlan, manifest: &Manifest, key: &str) -> Result<Ratio> {
    key_epochs_from_tokens(&plan_source_tokens(plan, manifest)?, manifest, key)
}
