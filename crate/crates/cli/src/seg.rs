//! `seg-v1`: per-trajectory segmentations.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

pub const SEG_SCHEMA: &str = "seg-v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Segment {
    pub id: String,
    /// Agent id per window; empty for methods without labels.
    pub labels: Vec<usize>,
    /// Interior point indices.
    pub boundaries: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loglik: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Skipped {
    pub id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegFile {
    pub schema: String,
    pub method: String,
    pub segments: Vec<Segment>,
    #[serde(default)]
    pub skipped: Vec<Skipped>,
}

impl SegFile {
    pub fn new(method: impl Into<String>) -> Self {
        Self {
            schema: SEG_SCHEMA.into(),
            method: method.into(),
            segments: Vec::new(),
            skipped: Vec::new(),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let seg: SegFile = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        if seg.schema != SEG_SCHEMA {
            bail!("{}: schema `{}` is not `{SEG_SCHEMA}`", path.display(), seg.schema);
        }
        for s in &seg.segments {
            if s.boundaries.windows(2).any(|w| w[1] <= w[0]) {
                bail!("{}: boundaries of `{}` not strictly increasing", path.display(), s.id);
            }
        }
        Ok(seg)
    }
}
