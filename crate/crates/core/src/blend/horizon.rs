use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::{plan_key_epochs, BlendSpec, TrainingPlan};
use crate::error::{Error, Result};
use crate::manifest::Manifest;
use crate::ratio::{self, format_ratio, int, round_places, Ratio};
use crate::units::format_tokens;

/// Maximum epochs per blend key. Keys without an entry are uncapped.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EpochCaps {
    #[serde(with = "ratio::as_ratio_map")]
    pub caps: BTreeMap<String, Ratio>,
}

const BLEND6_CAPS: &str = include_str!("../../data/blend6_caps.json");

impl EpochCaps {
    pub fn new(caps: impl IntoIterator<Item = (String, Ratio)>) -> Result<Self> {
        let caps: BTreeMap<String, Ratio> = caps.into_iter().collect();
        for (key, cap) in &caps {
            if !cap.is_positive() {
                return Err(Error::Domain(format!(
                    "epoch cap for `{key}` must be positive, got {}",
                    format_ratio(cap)
                )));
            }
        }
        Ok(EpochCaps { caps })
    }

    /// No caps at all.
    pub fn unbounded() -> Self {
        EpochCaps::default()
    }

    /// Warning thresholds: 6 epochs of high-quality crawl, 8 of math and task data.
    pub fn recommended() -> Self {
        EpochCaps::new([
            ("crawl/high".to_string(), int(6)),
            ("math".to_string(), int(8)),
            ("task".to_string(), int(8)),
        ])
        .expect("positive caps")
    }

    /// Caps used when stretching the best blend to a longer horizon.
    pub fn horizon_preset() -> Self {
        BLEND6_CAPS.parse().expect("bundled caps are valid")
    }

    pub fn get(&self, key: &str) -> Option<&Ratio> {
        self.caps.get(key)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        fs::read_to_string(path)
            .map_err(|e| Error::io(path, e))?
            .parse()
    }
}

impl FromStr for EpochCaps {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let parsed: EpochCaps =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("caps: {e}")))?;
        EpochCaps::new(parsed.caps)
    }
}

/// Stretches `plan` to `new_total` tokens while holding capped keys near their
/// old exposure.
///
/// Every phase-2 key whose epochs at `new_total` would exceed its cap is
/// multiplied by `s = old_total / new_total` rounded to one decimal (never
/// above 1). The freed weight goes to the phase-2 crawl keys in proportion to
/// their weights, or to a new `crawl` key when phase 2 has none.
pub fn rescale_for_horizon(
    plan: &TrainingPlan,
    manifest: &Manifest,
    new_total: u64,
    caps: &EpochCaps,
) -> Result<TrainingPlan> {
    if new_total == 0 {
        return Err(Error::Domain("new horizon must be positive".to_string()));
    }
    let mut stretched = plan.with_total(new_total)?;
    let ratio_old_new = int(plan.total_tokens) / int(new_total);
    let s = round_places(&ratio_old_new, 1).min(Ratio::one());

    let p2 = &plan.phase2.blend;
    let mut weights = p2.weights.clone();
    let mut freed = Ratio::zero();
    let mut capped = Vec::new();
    for (key, cap) in &caps.caps {
        let Some(weight) = p2.weights.get(key) else { continue };
        if weight.is_zero() {
            continue;
        }
        if plan_key_epochs(&stretched, manifest, key)? > *cap {
            let reduced = weight * &s;
            freed += weight - &reduced;
            weights.insert(key.clone(), reduced);
            capped.push(key.clone());
        }
    }
    if freed.is_zero() {
        return Ok(stretched);
    }

    let crawl_keys: Vec<String> = weights
        .iter()
        .filter(|(k, w)| !capped.contains(k) && w.is_positive() && manifest.is_crawl_key(k))
        .map(|(k, _)| k.clone())
        .collect();
    if crawl_keys.is_empty() {
        let crawl = manifest
            .select("crawl")
            .ok_or_else(|| Error::CapInfeasible("crawl".to_string()))?;
        for key in weights.keys() {
            let sel = manifest.select(key).unwrap_or_default();
            if sel.iter().any(|i| crawl.contains(i)) {
                return Err(Error::CapInfeasible(key.clone()));
            }
        }
        weights.insert("crawl".to_string(), freed);
    } else {
        let pool = crawl_keys
            .iter()
            .fold(Ratio::zero(), |acc, k| acc + &weights[k]);
        for key in &crawl_keys {
            let share = &weights[key] * &freed / &pool;
            *weights.get_mut(key).expect("crawl key present") += share;
        }
    }

    stretched.phase2.blend = BlendSpec::new(format!("{}@{}", p2.name, format_tokens(new_total)), weights);
    Ok(stretched)
}
