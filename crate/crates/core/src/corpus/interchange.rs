//! Detection interchange: a JSON array of
//! `{page_id, label, confidence, box: [x_min, y_min, x_max, y_max]}`.
//!
//! Every detector, including ones running outside this crate, feeds the
//! pipeline through this format.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Detection, LayoutClass};
use crate::error::{Error, Result};
use crate::geometry::BoundingBox;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionRecord {
    pub page_id: String,
    pub label: LayoutClass,
    pub confidence: f64,
    #[serde(rename = "box")]
    pub bbox: [f64; 4],
}

impl DetectionRecord {
    pub fn from_detection(page_id: &str, d: &Detection) -> Self {
        DetectionRecord {
            page_id: page_id.to_string(),
            label: d.label,
            confidence: d.confidence,
            bbox: d.bbox.to_array(),
        }
    }

    pub fn to_detection(&self) -> Result<Detection> {
        let bbox = BoundingBox::from_array(self.bbox)?;
        Detection::new(bbox, self.label, self.confidence)
    }
}

/// Parses and schema-checks an interchange document.
pub fn parse_interchange(json: &str) -> Result<Vec<DetectionRecord>> {
    let value: serde_json::Value =
        serde_json::from_str(json).map_err(|e| Error::Interchange(e.to_string()))?;
    let items = value
        .as_array()
        .ok_or_else(|| Error::Interchange("top level must be a JSON array".into()))?;
    let mut out = Vec::with_capacity(items.len());
    for (i, item) in items.iter().enumerate() {
        let rec: DetectionRecord = serde_json::from_value(item.clone())
            .map_err(|e| Error::Interchange(format!("record {i}: {e}")))?;
        if rec.page_id.is_empty() {
            return Err(Error::Interchange(format!("record {i}: empty page_id")));
        }
        if !(0.0..=1.0).contains(&rec.confidence) {
            return Err(Error::Interchange(format!(
                "record {i}: confidence {} outside [0, 1]",
                rec.confidence
            )));
        }
        BoundingBox::from_array(rec.bbox)
            .map_err(|e| Error::Interchange(format!("record {i}: {e}")))?;
        out.push(rec);
    }
    Ok(out)
}

/// Checks that every record refers to a known page and stays inside it.
pub fn validate_against_pages(
    records: &[DetectionRecord],
    pages: &BTreeMap<String, (u32, u32)>,
) -> Result<()> {
    for (i, r) in records.iter().enumerate() {
        let &(w, h) = pages.get(&r.page_id).ok_or_else(|| {
            Error::Interchange(format!("record {i}: unknown page '{}'", r.page_id))
        })?;
        let b = BoundingBox::from_array(r.bbox)?;
        if !b.within_page(w as f64, h as f64) {
            return Err(Error::Interchange(format!(
                "record {i}: box outside the {w}x{h} page '{}'",
                r.page_id
            )));
        }
    }
    Ok(())
}

pub fn group_by_page(records: &[DetectionRecord]) -> Result<BTreeMap<String, Vec<Detection>>> {
    let mut out: BTreeMap<String, Vec<Detection>> = BTreeMap::new();
    for r in records {
        out.entry(r.page_id.clone())
            .or_default()
            .push(r.to_detection()?);
    }
    Ok(out)
}

pub fn write_interchange(records: &[DetectionRecord]) -> Result<String> {
    Ok(serde_json::to_string_pretty(records)?)
}

pub fn read_interchange(path: &Path) -> Result<Vec<DetectionRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_interchange(&text)
}
