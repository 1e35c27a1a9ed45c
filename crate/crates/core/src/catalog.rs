//! The preset catalog: named blends and crawl blends, stored as percent strings
//! exactly as published so the file round-trips byte for byte.

use std::env;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::blend::BlendSpec;
use crate::crawl::{CrawlBlend, CrawlPart};
use crate::error::{Error, Result};
use crate::manifest::QualityLabel;
use crate::ratio::{parse_percent, Ratio};

pub const BUILTIN_CATALOG: &str = include_str!("../data/catalog.json");

/// Environment variable naming a catalog file that replaces the built-in one.
pub const CATALOG_ENV: &str = "BLEND_CATALOG";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlendEntry {
    pub name: String,
    pub table: String,
    pub weights: std::collections::BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartEntry {
    pub labels: Vec<QualityLabel>,
    pub weight: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrawlEntry {
    pub name: String,
    pub table: String,
    pub parts: Vec<PartEntry>,
    /// Published column total when it is not 100; weights are divided by it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub column_total: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Catalog {
    pub blends: Vec<BlendEntry>,
    pub crawl_blends: Vec<CrawlEntry>,
}

impl Catalog {
    pub fn builtin() -> Catalog {
        BUILTIN_CATALOG.parse().expect("bundled catalog parses")
    }

    /// The catalog named by `BLEND_CATALOG`, else the built-in one.
    pub fn from_env() -> Result<Catalog> {
        match env::var_os(CATALOG_ENV) {
            Some(path) if !path.is_empty() => Catalog::load(path),
            _ => Ok(Catalog::builtin()),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Catalog> {
        let path = path.as_ref();
        fs::read_to_string(path)
            .map_err(|e| Error::io(path, e))?
            .parse()
    }

    pub fn blend_names(&self) -> impl Iterator<Item = &str> {
        self.blends.iter().map(|b| b.name.as_str())
    }

    pub fn crawl_names(&self) -> impl Iterator<Item = &str> {
        self.crawl_blends.iter().map(|b| b.name.as_str())
    }

    pub fn blend(&self, name: &str) -> Result<BlendSpec> {
        let entry = self
            .blends
            .iter()
            .find(|b| b.name == name)
            .ok_or_else(|| Error::UnknownPreset(name.to_string()))?;
        let pairs: Vec<(&str, &str)> = entry
            .weights
            .iter()
            .map(|(k, v)| (k.as_str(), v.as_str()))
            .collect();
        BlendSpec::from_percents(&entry.name, &pairs)
    }

    pub fn crawl_blend(&self, name: &str) -> Result<CrawlBlend> {
        let entry = self
            .crawl_blends
            .iter()
            .find(|b| b.name == name)
            .ok_or_else(|| Error::UnknownPreset(name.to_string()))?;
        let scale = match &entry.column_total {
            Some(total) => parse_percent(total)?,
            None => Ratio::from_integer(1.into()),
        };
        if scale.is_zero() {
            return Err(Error::Parse(format!("crawl blend `{name}` has a zero column total")));
        }
        let parts = entry
            .parts
            .iter()
            .map(|p| {
                Ok(CrawlPart {
                    labels: p.labels.clone(),
                    weight: parse_percent(&p.weight)? / &scale,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        CrawlBlend::new(&entry.name, parts)
    }

    /// Table name each preset was transcribed from.
    pub fn source_table(&self, name: &str) -> Option<&str> {
        self.blends
            .iter()
            .map(|b| (&b.name, &b.table))
            .chain(self.crawl_blends.iter().map(|b| (&b.name, &b.table)))
            .find(|(n, _)| *n == name)
            .map(|(_, t)| t.as_str())
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("catalog serializes");
        text.push('\n');
        text
    }
}

impl FromStr for Catalog {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("catalog: {e}")))
    }
}
