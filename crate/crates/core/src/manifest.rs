//! Dataset manifests: the sources available for blending, their token counts
//! and shard layout, and the uniform downsampling factor applied to all of them.
//!
//! A manifest never touches corpus bytes. Each source is a token count plus an
//! ordered shard list; downsampling keeps a prefix of that shard list whose
//! length is `floor(f * raw_tokens)`.
//!
//! Blend keys are resolved here as well. A key is either a source id or a
//! group selector:
//!
//! | key                       | selects                                          |
//! |---------------------------|--------------------------------------------------|
//! | `crawl`                   | every web crawl source                           |
//! | `crawl/high`              | crawl sources with that quality label            |
//! | `crawl/medium+medium-low` | crawl sources with any of the listed labels      |
//! | `math`, `books`, ...      | high/medium quality sources with that subdomain  |
//! | `multilingual`            | every multilingual source                        |
//! | `task`, `task/flan`       | task data, optionally narrowed by subdomain      |
//!
//! Source ids take precedence over group selectors.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use num_traits::{One, Signed};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::ratio::{self, floor_u64, int, Ratio};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum QualityLabel {
    High,
    MediumHigh,
    Medium,
    MediumLow,
    Low,
    Unlabeled,
}

impl QualityLabel {
    /// The five crawl quality buckets, best first.
    pub const BUCKETS: [QualityLabel; 5] = [
        QualityLabel::High,
        QualityLabel::MediumHigh,
        QualityLabel::Medium,
        QualityLabel::MediumLow,
        QualityLabel::Low,
    ];

    /// Lower-case form used inside blend keys (`crawl/medium-high`).
    pub fn key_name(self) -> &'static str {
        match self {
            QualityLabel::High => "high",
            QualityLabel::MediumHigh => "medium-high",
            QualityLabel::Medium => "medium",
            QualityLabel::MediumLow => "medium-low",
            QualityLabel::Low => "low",
            QualityLabel::Unlabeled => "unlabeled",
        }
    }

    pub fn from_key_name(name: &str) -> Option<Self> {
        let name = name.to_ascii_lowercase();
        [QualityLabel::Unlabeled]
            .into_iter()
            .chain(Self::BUCKETS)
            .find(|label| label.key_name() == name)
    }
}

impl fmt::Display for QualityLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Category {
    WebCrawl,
    HighQuality,
    MediumQuality,
    Multilingual,
    TaskData,
}

impl Category {
    /// Category a well-known subdomain must belong to.
    pub fn required_for(subdomain: &str) -> Option<Category> {
        match subdomain.to_ascii_lowercase().as_str() {
            "math" | "wiki" | "code" => Some(Category::HighQuality),
            "books" | "papers" | "ccdv" => Some(Category::MediumQuality),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shard {
    pub id: String,
    pub tokens: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataSource {
    pub id: String,
    pub category: Category,
    pub subdomain: String,
    pub quality: QualityLabel,
    pub raw_tokens: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shards: Option<Vec<Shard>>,
}

impl DataSource {
    pub fn new(
        id: impl Into<String>,
        category: Category,
        subdomain: impl Into<String>,
        quality: QualityLabel,
        raw_tokens: u64,
    ) -> Self {
        DataSource {
            id: id.into(),
            category,
            subdomain: subdomain.into(),
            quality,
            raw_tokens,
            shards: None,
        }
    }

    pub fn with_shards(mut self, shards: Vec<Shard>) -> Self {
        self.shards = Some(shards);
        self
    }

    /// Shard list, with the implicit single shard when none were given.
    pub fn shard_list(&self) -> Vec<Shard> {
        match &self.shards {
            Some(shards) => shards.clone(),
            None => vec![Shard {
                id: "0".to_string(),
                tokens: self.raw_tokens,
            }],
        }
    }

    /// Reporting key: the narrowest group selector that contains this source.
    pub fn domain_key(&self) -> String {
        match self.category {
            Category::WebCrawl => format!("crawl/{}", self.quality.key_name()),
            Category::HighQuality | Category::MediumQuality => self.subdomain.to_ascii_lowercase(),
            Category::Multilingual => "multilingual".to_string(),
            Category::TaskData => format!("task/{}", self.subdomain.to_ascii_lowercase()),
        }
    }

    fn check(&self, problems: &mut Vec<String>) {
        if self.id.is_empty() {
            problems.push("source with empty id".to_string());
        }
        if self.raw_tokens == 0 {
            problems.push(format!("source `{}` has zero tokens", self.id));
        }
        if let Some(shards) = &self.shards {
            let sum = shards
                .iter()
                .try_fold(0u64, |acc, s| acc.checked_add(s.tokens));
            if sum != Some(self.raw_tokens) {
                problems.push(format!(
                    "source `{}`: shards sum to {} but raw_tokens is {}",
                    self.id,
                    sum.map_or_else(|| "overflow".to_string(), |s| s.to_string()),
                    self.raw_tokens
                ));
            }
            let mut seen = HashSet::new();
            for shard in shards {
                if !seen.insert(shard.id.as_str()) {
                    problems.push(format!("source `{}`: duplicate shard id `{}`", self.id, shard.id));
                }
            }
        }
        if self.category == Category::WebCrawl && self.quality == QualityLabel::Unlabeled {
            problems.push(format!("crawl source `{}` has no quality label", self.id));
        }
        if let Some(required) = Category::required_for(&self.subdomain) {
            if required != self.category {
                problems.push(format!(
                    "source `{}`: subdomain {} belongs to {:?}, not {:?}",
                    self.id, self.subdomain, required, self.category
                ));
            }
        }
    }
}

/// Validated set of sources sharing one downsampling factor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    sources: Vec<DataSource>,
    downsample_factor: Ratio,
}

#[derive(Serialize, Deserialize)]
struct ManifestFile {
    #[serde(with = "ratio::as_ratio")]
    downsample_factor: Ratio,
    sources: Vec<DataSource>,
}

impl Manifest {
    /// Builds a manifest after checking every invariant.
    pub fn new(sources: Vec<DataSource>, downsample_factor: Ratio) -> Result<Self> {
        let mut problems = Vec::new();
        if !downsample_factor.is_positive() || downsample_factor > Ratio::one() {
            problems.push(format!(
                "downsample_factor {} is outside (0, 1]",
                ratio::format_ratio(&downsample_factor)
            ));
        }
        let mut ids = HashSet::new();
        for source in &sources {
            source.check(&mut problems);
            if !ids.insert(source.id.as_str()) {
                problems.push(format!("duplicate source id `{}`", source.id));
            }
        }
        if problems.is_empty() {
            Ok(Manifest {
                sources,
                downsample_factor,
            })
        } else {
            Err(Error::Validation(problems))
        }
    }

    pub fn sources(&self) -> &[DataSource] {
        &self.sources
    }

    pub fn downsample_factor(&self) -> &Ratio {
        &self.downsample_factor
    }

    pub fn is_empty(&self) -> bool {
        self.sources.is_empty()
    }

    pub fn len(&self) -> usize {
        self.sources.len()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.sources.iter().position(|s| s.id == id)
    }

    pub fn source(&self, id: &str) -> Option<&DataSource> {
        self.sources.iter().find(|s| s.id == id)
    }

    /// `floor(f * raw_tokens)` for source `index`.
    pub fn available_tokens(&self, index: usize) -> u64 {
        let raw = int(self.sources[index].raw_tokens);
        floor_u64(&(raw * &self.downsample_factor)).expect("available tokens never exceed raw tokens")
    }

    pub fn available_by_id(&self, id: &str) -> Option<u64> {
        self.index_of(id).map(|i| self.available_tokens(i))
    }

    pub fn total_available(&self) -> u64 {
        (0..self.sources.len()).map(|i| self.available_tokens(i)).sum()
    }

    /// Shards remaining after prefix truncation to the available budget; the
    /// last kept shard may be cut short.
    pub fn available_shards(&self, index: usize) -> Vec<Shard> {
        let mut budget = self.available_tokens(index);
        let mut kept = Vec::new();
        for shard in self.sources[index].shard_list() {
            if budget == 0 {
                break;
            }
            let take = shard.tokens.min(budget);
            budget -= take;
            if take > 0 {
                kept.push(Shard {
                    id: shard.id,
                    tokens: take,
                });
            }
        }
        kept
    }

    /// Applies a further factor; factors compose exactly.
    pub fn downsample(&self, factor: &Ratio) -> Result<Manifest> {
        if !factor.is_positive() || *factor > Ratio::one() {
            return Err(Error::Domain(format!(
                "downsample factor {} is outside (0, 1]",
                ratio::format_ratio(factor)
            )));
        }
        Ok(Manifest {
            sources: self.sources.clone(),
            downsample_factor: &self.downsample_factor * factor,
        })
    }

    /// Same sources with the factor replaced (e.g. reset to 1 for a full-data run).
    pub fn with_factor(&self, factor: Ratio) -> Result<Manifest> {
        Manifest::new(self.sources.clone(), factor)
    }

    /// Sources selected by a blend key, in manifest order. `None` when the key
    /// matches nothing.
    pub fn select(&self, key: &str) -> Option<Vec<usize>> {
        if let Some(index) = self.index_of(key) {
            return Some(vec![index]);
        }
        let lower = key.to_ascii_lowercase();
        let (group, narrow) = match lower.split_once('/') {
            Some((g, n)) => (g, Some(n)),
            None => (lower.as_str(), None),
        };
        let matches: Vec<usize> = match (group, narrow) {
            ("crawl", None) => self.filter(|s| s.category == Category::WebCrawl),
            ("crawl", Some(labels)) => {
                let labels: Option<Vec<QualityLabel>> =
                    labels.split('+').map(QualityLabel::from_key_name).collect();
                let labels = labels?;
                self.filter(|s| s.category == Category::WebCrawl && labels.contains(&s.quality))
            }
            ("multilingual", None) => self.filter(|s| s.category == Category::Multilingual),
            ("task", None) => self.filter(|s| s.category == Category::TaskData),
            ("task", Some(sub)) => self.filter(|s| {
                s.category == Category::TaskData && s.subdomain.eq_ignore_ascii_case(sub)
            }),
            (sub, None) => self.filter(|s| {
                matches!(s.category, Category::HighQuality | Category::MediumQuality)
                    && s.subdomain.eq_ignore_ascii_case(sub)
            }),
            _ => Vec::new(),
        };
        (!matches.is_empty()).then_some(matches)
    }

    /// True when every source selected by `key` is web crawl.
    pub fn is_crawl_key(&self, key: &str) -> bool {
        self.select(key).is_some_and(|idx| {
            idx.iter()
                .all(|&i| self.sources[i].category == Category::WebCrawl)
        })
    }

    fn filter(&self, pred: impl Fn(&DataSource) -> bool) -> Vec<usize> {
        self.sources
            .iter()
            .enumerate()
            .filter(|(_, s)| pred(s))
            .map(|(i, _)| i)
            .collect()
    }

    /// Available tokens summed over the sources selected by `key`.
    pub fn key_available(&self, key: &str) -> Option<u64> {
        self.select(key)
            .map(|idx| idx.iter().map(|&i| self.available_tokens(i)).sum())
    }

    pub fn to_json(&self) -> String {
        let file = ManifestFile {
            downsample_factor: self.downsample_factor.clone(),
            sources: self.sources.clone(),
        };
        let mut text = serde_json::to_string_pretty(&file).expect("manifest serializes");
        text.push('\n');
        text
    }

    /// SHA-256 of the canonical JSON form; used as the manifest identity in plans.
    pub fn fingerprint(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }

    pub fn to_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }
}

impl FromStr for Manifest {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let file: ManifestFile =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("manifest: {e}")))?;
        Manifest::new(file.sources, file.downsample_factor)
    }
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<Manifest> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.parse()
}

pub fn save_manifest(manifest: &Manifest, path: impl AsRef<Path>) -> Result<()> {
    manifest.to_file(path)
}

/// Free-function form of [`Manifest::downsample`].
pub fn downsample(manifest: &Manifest, factor: &Ratio) -> Result<Manifest> {
    manifest.downsample(factor)
}

/// Reference manifest with the token counts of the studied corpus: web crawl
/// split into its five quality buckets and downsampled by 1/15.
pub fn reference_manifest() -> Manifest {
    REFERENCE_MANIFEST.parse().expect("bundled manifest is valid")
}

pub const REFERENCE_MANIFEST: &str = include_str!("../data/table1_manifest.json");

impl Default for Manifest {
    fn default() -> Self {
        Manifest {
            sources: Vec::new(),
            downsample_factor: Ratio::one(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratio::ratio;

    fn source(id: &str, cat: Category, sub: &str, tokens: u64) -> DataSource {
        DataSource::new(id, cat, sub, QualityLabel::Unlabeled, tokens)
    }

    #[test]
    fn minimal_manifest() {
        let m = Manifest::new(
            vec![source("a", Category::HighQuality, "Math", 1).with_shards(vec![Shard {
                id: "s0".into(),
                tokens: 1,
            }])],
            Ratio::one(),
        )
        .unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m.available_tokens(0), 1);
    }

    #[test]
    fn shard_sum_mismatch_rejected() {
        let err = Manifest::new(
            vec![source("a", Category::HighQuality, "Math", 10).with_shards(vec![
                Shard { id: "0".into(), tokens: 4 },
                Shard { id: "1".into(), tokens: 5 },
            ])],
            Ratio::one(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "{err}");
    }

    #[test]
    fn duplicate_ids_and_zero_tokens_rejected() {
        let err = Manifest::new(
            vec![
                source("a", Category::HighQuality, "Math", 10),
                source("a", Category::HighQuality, "Code", 0),
            ],
            Ratio::one(),
        )
        .unwrap_err();
        let Error::Validation(problems) = err else { panic!() };
        assert_eq!(problems.len(), 2, "{problems:?}");
    }

    #[test]
    fn unlabeled_crawl_and_wrong_category_rejected() {
        let err = Manifest::new(
            vec![
                source("cc", Category::WebCrawl, "CC", 10),
                source("m", Category::MediumQuality, "Math", 10),
            ],
            Ratio::one(),
        )
        .unwrap_err();
        let Error::Validation(problems) = err else { panic!() };
        assert_eq!(problems.len(), 2, "{problems:?}");
    }

    #[test]
    fn downsample_floors() {
        let m = Manifest::new(
            vec![
                source("math", Category::HighQuality, "Math", 161_500_000_000),
                source("tiny", Category::HighQuality, "Wiki", 15),
            ],
            Ratio::one(),
        )
        .unwrap();
        let d = m.downsample(&ratio(1, 15)).unwrap();
        assert_eq!(d.available_tokens(0), 10_766_666_666);
        assert_eq!(d.available_tokens(1), 1);
        assert_eq!(d.sources()[0].raw_tokens, 161_500_000_000);
        let same = m.downsample(&Ratio::one()).unwrap();
        assert_eq!(same.available_tokens(0), 161_500_000_000);
        assert!(m.downsample(&ratio(0, 1)).is_err());
        assert!(m.downsample(&ratio(3, 2)).is_err());
    }

    #[test]
    fn prefix_truncation_of_shards() {
        let m = Manifest::new(
            vec![source("a", Category::HighQuality, "Code", 30).with_shards(vec![
                Shard { id: "x".into(), tokens: 10 },
                Shard { id: "y".into(), tokens: 10 },
                Shard { id: "z".into(), tokens: 10 },
            ])],
            ratio(1, 2),
        )
        .unwrap();
        let shards = m.available_shards(0);
        assert_eq!(shards.len(), 2);
        assert_eq!(shards[1], Shard { id: "y".into(), tokens: 5 });
    }

    #[test]
    fn key_selection() {
        let m = reference_manifest();
        assert_eq!(m.select("crawl").unwrap().len(), 5);
        assert_eq!(m.select("crawl/high").unwrap().len(), 1);
        assert_eq!(m.select("crawl/medium+medium-low").unwrap().len(), 2);
        assert_eq!(m.select("math").unwrap().len(), 1);
        assert_eq!(m.select("Math").unwrap().len(), 1);
        assert_eq!(m.select("task").unwrap().len(), 2);
        assert_eq!(m.select("task/flan").unwrap().len(), 1);
        assert!(m.select("crawl/great").is_none());
        assert!(m.select("nonsense").is_none());
        assert!(m.is_crawl_key("crawl/high"));
        assert!(!m.is_crawl_key("math"));
    }

    #[test]
    fn reference_counts() {
        let m = reference_manifest();
        assert_eq!(m.source("math").unwrap().raw_tokens, 161_500_000_000);
        assert_eq!(m.source("wiki").unwrap().raw_tokens, 16_700_000_000);
        assert_eq!(m.source("code").unwrap().raw_tokens, 760_300_000_000);
        assert_eq!(m.key_available("task"), Some(440_000_000));
        let crawl: u64 = m
            .select("crawl")
            .unwrap()
            .iter()
            .map(|&i| m.sources()[i].raw_tokens)
            .sum();
        assert_eq!(crawl, 6_244_300_000_000);
        assert_eq!(m.downsample_factor(), &ratio(1, 15));
    }
}
