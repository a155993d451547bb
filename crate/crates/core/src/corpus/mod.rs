//! Layout vocabulary, annotations, detections and dataset persistence.

mod interchange;
mod manifest;
mod split;
mod stats;
mod voc;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::BoundingBox;

pub use interchange::{
    group_by_page, parse_interchange, read_interchange, validate_against_pages, write_interchange,
    DetectionRecord,
};
pub use manifest::{DatasetManifest, ManifestEntry, SplitTag};
pub use split::stratified_split;
pub use stats::{bbox_stats, bbox_stats_from_manifest, BBoxStats, Summary};
pub use voc::{read_voc, read_voc_detections, write_voc, write_voc_detections};

/// The eight structural roles of a page element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LayoutClass {
    Paragraph,
    BigParagraph,
    H1,
    H2,
    H3,
    H4,
    NameEntry,
    Curly,
}

impl LayoutClass {
    pub const ALL: [LayoutClass; 8] = [
        LayoutClass::Paragraph,
        LayoutClass::BigParagraph,
        LayoutClass::H1,
        LayoutClass::H2,
        LayoutClass::H3,
        LayoutClass::H4,
        LayoutClass::NameEntry,
        LayoutClass::Curly,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LayoutClass::Paragraph => "Paragraph",
            LayoutClass::BigParagraph => "BigParagraph",
            LayoutClass::H1 => "H1",
            LayoutClass::H2 => "H2",
            LayoutClass::H3 => "H3",
            LayoutClass::H4 => "H4",
            LayoutClass::NameEntry => "NameEntry",
            LayoutClass::Curly => "Curly",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Elements spanning the whole text width rather than sitting in a column.
    pub fn is_full_width(self) -> bool {
        matches!(self, LayoutClass::H1 | LayoutClass::BigParagraph)
    }
}

impl fmt::Display for LayoutClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LayoutClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LayoutClass::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::UnknownClass(s.to_string()))
    }
}

/// A predicted element.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    #[serde(rename = "box")]
    pub bbox: BoundingBox,
    pub label: LayoutClass,
    pub confidence: f64,
}

impl Detection {
    pub fn new(bbox: BoundingBox, label: LayoutClass, confidence: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&confidence) {
            return Err(Error::InvalidParameter(format!(
                "confidence {confidence} outside [0, 1]"
            )));
        }
        Ok(Detection {
            bbox,
            label,
            confidence,
        })
    }
}

/// A ground-truth element.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Element {
    #[serde(rename = "box")]
    pub bbox: BoundingBox,
    pub label: LayoutClass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageAnnotation {
    pub page_id: String,
    pub width: u32,
    pub height: u32,
    pub elements: Vec<Element>,
}

impl PageAnnotation {
    pub fn new(page_id: impl Into<String>, width: u32, height: u32) -> Self {
        PageAnnotation {
            page_id: page_id.into(),
            width,
            height,
            elements: Vec::new(),
        }
    }

    /// Checks box validity and page containment.
    pub fn validate(&self) -> Result<()> {
        for (index, e) in self.elements.iter().enumerate() {
            if !e.bbox.is_valid() {
                let b = e.bbox;
                return Err(Error::InvalidBox(b.x_min, b.y_min, b.x_max, b.y_max));
            }
            if !e.bbox.within_page(self.width as f64, self.height as f64) {
                return Err(Error::BoxOutsidePage {
                    index,
                    width: self.width,
                    height: self.height,
                });
            }
        }
        Ok(())
    }

    pub fn class_histogram(&self) -> std::collections::BTreeMap<LayoutClass, usize> {
        let mut h = std::collections::BTreeMap::new();
        for e in &self.elements {
            *h.entry(e.label).or_insert(0) += 1;
        }
        h
    }
}
