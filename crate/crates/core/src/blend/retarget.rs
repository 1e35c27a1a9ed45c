use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};

use super::BlendSpec;
use crate::error::{Error, Result};
use crate::manifest::Manifest;
use crate::ratio::{format_decimal, format_ratio, int, Ratio};

/// Reweights `domain` so it sees exactly `target_epochs` over `budget` tokens.
///
/// The weight change is absorbed by rescaling the other keys proportionally.
/// When `domain` is a crawl sub-bucket only the other crawl keys absorb it,
/// so the crawl total stays put.
pub fn target_epochs_blend(
    base: &BlendSpec,
    domain: &str,
    target_epochs: &Ratio,
    budget: u64,
    manifest: &Manifest,
) -> Result<BlendSpec> {
    base.ensure_valid()?;
    let selected = manifest
        .select(domain)
        .ok_or_else(|| Error::UnknownDomain(domain.to_string()))?;
    if target_epochs.is_negative() {
        return Err(Error::Domain(format!(
            "target epochs {} is negative",
            format_ratio(target_epochs)
        )));
    }
    if budget == 0 {
        return Err(Error::Domain("retargeting needs a positive budget".to_string()));
    }
    let available: u64 = selected.iter().map(|&i| manifest.available_tokens(i)).sum();
    if available == 0 && !target_epochs.is_zero() {
        return Err(Error::EmptyShardList(domain.to_string()));
    }
    let required = target_epochs * int(available) / int(budget);
    let infeasible = || Error::InfeasibleTarget {
        key: domain.to_string(),
        target: format_ratio(target_epochs),
        required: format_ratio(&required),
    };
    if required > Ratio::one() {
        return Err(infeasible());
    }

    // Every other key must be disjoint from the target, or the exact epoch
    // count could not be pinned down by this key's weight alone.
    let target_key = base
        .weights
        .keys()
        .find(|k| manifest.select(k).as_deref() == Some(selected.as_slice()))
        .cloned()
        .unwrap_or_else(|| domain.to_string());
    for key in base.weights.keys().filter(|k| **k != target_key) {
        let other = manifest.select(key).ok_or_else(|| Error::UnknownSource(key.clone()))?;
        if other.iter().any(|i| selected.contains(i)) {
            return Err(Error::Domain(format!(
                "`{key}` overlaps `{domain}`; split it before retargeting"
            )));
        }
    }

    let current = base.weight(&target_key);
    let crawl_bucket = manifest.is_crawl_key(domain) && manifest.select("crawl").map(|c| c.len()) != Some(selected.len());
    let in_pool = |key: &str| key != target_key && (!crawl_bucket || manifest.is_crawl_key(key));
    let pool: Ratio = base
        .weights
        .iter()
        .filter(|(k, _)| in_pool(k))
        .fold(Ratio::zero(), |acc, (_, w)| acc + w);
    let new_pool = &pool + &current - &required;
    if new_pool.is_negative() || (pool.is_zero() && !new_pool.is_zero()) {
        return Err(infeasible());
    }

    let mut weights: BTreeMap<String, Ratio> = BTreeMap::new();
    for (key, weight) in &base.weights {
        let value = if *key == target_key {
            required.clone()
        } else if in_pool(key) {
            weight * &new_pool / &pool
        } else {
            weight.clone()
        };
        weights.insert(key.clone(), value);
    }
    weights.insert(target_key, required);

    let label = format_decimal(target_epochs, 0).unwrap_or_else(|| format_ratio(target_epochs));
    Ok(BlendSpec::new(format!("{}@{domain}={label}ep", base.name), weights))
}
