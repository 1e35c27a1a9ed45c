//! Quality-bucketed web crawl blends.
//!
//! A [`CrawlBlend`] splits the crawl share of a blend across quality buckets.
//! Each part names one bucket, or several buckets pooled together; a pooled
//! part becomes a `crawl/medium+medium-low` style key, which the manifest
//! spreads over its members by available tokens.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Signed, Zero};

use crate::blend::BlendSpec;
use crate::catalog::Catalog;
use crate::error::{Error, Result};
use crate::manifest::{Category, Manifest, QualityLabel};
use crate::ratio::{format_percent, int, ratio, Ratio};
use crate::units::BILLION;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrawlPart {
    pub labels: Vec<QualityLabel>,
    pub weight: Ratio,
}

impl CrawlPart {
    pub fn single(label: QualityLabel, weight: Ratio) -> Self {
        CrawlPart {
            labels: vec![label],
            weight,
        }
    }

    /// Blend key for this part, e.g. `crawl/high` or `crawl/medium+medium-low`.
    pub fn key(&self) -> String {
        let names: Vec<&str> = self.labels.iter().map(|l| l.key_name()).collect();
        format!("crawl/{}", names.join("+"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrawlBlend {
    pub name: String,
    pub parts: Vec<CrawlPart>,
}

impl CrawlBlend {
    /// Checks weights sum to 1, are non-negative, and parts do not share buckets.
    pub fn new(name: impl Into<String>, parts: Vec<CrawlPart>) -> Result<Self> {
        let blend = CrawlBlend {
            name: name.into(),
            parts,
        };
        let mut problems = Vec::new();
        let mut seen = BTreeSet::new();
        for part in &blend.parts {
            if part.labels.is_empty() {
                problems.push("part with no buckets".to_string());
            }
            if part.weight.is_negative() {
                problems.push(format!("{} has negative weight", part.key()));
            }
            for label in &part.labels {
                if *label == QualityLabel::Unlabeled {
                    problems.push("Unlabeled is not a crawl bucket".to_string());
                }
                if !seen.insert(*label) {
                    problems.push(format!("{label} appears in more than one part"));
                }
            }
        }
        let total = blend.parts.iter().fold(Ratio::zero(), |acc, p| acc + &p.weight);
        if !total.is_one() {
            problems.push(format!("weights sum to {}%", format_percent(&total)));
        }
        if problems.is_empty() {
            Ok(blend)
        } else {
            Err(Error::Validation(
                problems
                    .into_iter()
                    .map(|p| format!("crawl blend `{}`: {p}", blend.name))
                    .collect(),
            ))
        }
    }

    /// Pooled bucket sets (parts with more than one label).
    pub fn merged_buckets(&self) -> Vec<Vec<QualityLabel>> {
        self.parts
            .iter()
            .filter(|p| p.labels.len() > 1)
            .map(|p| p.labels.clone())
            .collect()
    }

    /// Weight per bucket; pooled parts are split by bucket size in `manifest`.
    pub fn bucket_weights(&self, manifest: &Manifest) -> Result<BTreeMap<QualityLabel, Ratio>> {
        let mut out: BTreeMap<QualityLabel, Ratio> =
            QualityLabel::BUCKETS.iter().map(|&l| (l, Ratio::zero())).collect();
        for part in &self.parts {
            if let [label] = part.labels.as_slice() {
                *out.entry(*label).or_insert_with(Ratio::zero) += &part.weight;
                continue;
            }
            let sizes: Vec<u64> = part
                .labels
                .iter()
                .map(|l| manifest.key_available(&format!("crawl/{}", l.key_name())).unwrap_or(0))
                .collect();
            let pool: u64 = sizes.iter().sum();
            if pool == 0 {
                return Err(Error::EmptyShardList(part.key()));
            }
            for (label, size) in part.labels.iter().zip(sizes) {
                *out.entry(*label).or_insert_with(Ratio::zero) += &part.weight * int(size) / int(pool);
            }
        }
        Ok(out)
    }
}

/// Named crawl blend from the bundled catalog.
pub fn cc_blend_preset(name: &str) -> Result<CrawlBlend> {
    Catalog::builtin().crawl_blend(name)
}

/// Crawl blend proportional to each bucket's available tokens.
pub fn natural_crawl_blend(manifest: &Manifest) -> Result<CrawlBlend> {
    let sizes: Vec<(QualityLabel, u64)> = QualityLabel::BUCKETS
        .iter()
        .map(|&l| (l, manifest.key_available(&format!("crawl/{}", l.key_name())).unwrap_or(0)))
        .collect();
    let total: u64 = sizes.iter().map(|(_, s)| s).sum();
    if total == 0 {
        return Err(Error::Domain("manifest has no crawl tokens".to_string()));
    }
    let parts = sizes
        .into_iter()
        .map(|(l, s)| CrawlPart::single(l, int(s) / int(total)))
        .collect();
    CrawlBlend::new("crawl-natural", parts)
}

/// Replaces the `crawl` weight `w` with `w * part` for every part of `cb`.
pub fn expand_crawl(blend: &BlendSpec, cb: &CrawlBlend) -> Result<BlendSpec> {
    let crawl = blend
        .weights
        .get("crawl")
        .ok_or_else(|| Error::MissingCrawlKey(blend.name.clone()))?;
    if crawl.is_zero() {
        return Ok(blend.clone());
    }
    let mut weights = blend.weights.clone();
    weights.remove("crawl");
    for part in cb.parts.iter().filter(|p| !p.weight.is_zero()) {
        *weights.entry(part.key()).or_insert_with(Ratio::zero) += crawl * &part.weight;
    }
    Ok(BlendSpec::new(format!("{}+{}", blend.name, cb.name), weights))
}

/// A quality-probe blend and the continuation budget it is meant for.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProbeBlend {
    pub blend: BlendSpec,
    pub recommended_budget: u64,
}

/// `{tested: 66%, crawl/high: 34%}`, for a 50B-token continuation run.
pub fn probe_blend(tested: &str, manifest: &Manifest) -> Result<ProbeBlend> {
    let probe = manifest
        .select(tested)
        .ok_or_else(|| Error::UnknownSource(tested.to_string()))?;
    let high = manifest
        .select("crawl/high")
        .ok_or_else(|| Error::UnknownSource("crawl/high".to_string()))?;
    let weights = if probe == high {
        vec![("crawl/high".to_string(), Ratio::one())]
    } else {
        if probe.iter().any(|i| high.contains(i)) {
            return Err(Error::Domain(format!("`{tested}` overlaps crawl/high")));
        }
        vec![
            (tested.to_string(), ratio(66, 100)),
            ("crawl/high".to_string(), ratio(34, 100)),
        ]
    };
    Ok(ProbeBlend {
        blend: BlendSpec::new(format!("probe-{tested}"), weights),
        recommended_budget: 50 * BILLION,
    })
}

/// True when every source selected by `key` is web crawl with one of `labels`.
pub fn key_is_bucket(manifest: &Manifest, key: &str, labels: &[QualityLabel]) -> bool {
    manifest.select(key).is_some_and(|idx| {
        idx.iter().all(|&i| {
            let s = &manifest.sources()[i];
            s.category == Category::WebCrawl && labels.contains(&s.quality)
        })
    })
}
