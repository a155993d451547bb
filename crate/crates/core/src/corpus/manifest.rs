//! JSON Lines dataset manifest, one entry per page.

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{read_voc, LayoutClass, PageAnnotation};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitTag {
    Train,
    Val,
    Test,
    #[default]
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub page_id: String,
    /// Relative to the manifest's directory.
    pub image_path: PathBuf,
    pub annotation_path: PathBuf,
    #[serde(rename = "split_tag", default)]
    pub split: SplitTag,
    pub class_histogram: BTreeMap<LayoutClass, usize>,
}

impl ManifestEntry {
    pub fn element_count(&self) -> usize {
        self.class_histogram.values().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn new(entries: Vec<ManifestEntry>) -> Result<Self> {
        let m = DatasetManifest { entries };
        m.check_unique_ids()?;
        Ok(m)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, page_id: &str) -> Option<&ManifestEntry> {
        self.entries.iter().find(|e| e.page_id == page_id)
    }

    fn check_unique_ids(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for e in &self.entries {
            if !seen.insert(e.page_id.as_str()) {
                return Err(Error::Manifest(format!(
                    "duplicate page_id '{}'",
                    e.page_id
                )));
            }
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&serde_json::to_string(e)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        let entries = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                serde_json::from_str(l).map_err(|e| Error::Manifest(format!("line {}: {e}", i + 1)))
            })
            .collect::<Result<Vec<ManifestEntry>>>()?;
        DatasetManifest::new(entries)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_jsonl()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_jsonl(&text)
    }

    /// Loads an entry's annotation, resolving paths against `base_dir`.
    pub fn load_annotation(
        &self,
        entry: &ManifestEntry,
        base_dir: &Path,
    ) -> Result<PageAnnotation> {
        let path = base_dir.join(&entry.annotation_path);
        let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
        read_voc(&bytes)
    }

    /// Checks each histogram against its annotation file.
    pub fn verify_histograms(&self, base_dir: &Path) -> Result<()> {
        for e in &self.entries {
            let ann = self.load_annotation(e, base_dir)?;
            if ann.class_histogram() != e.class_histogram {
                return Err(Error::Manifest(format!(
                    "histogram of '{}' disagrees with its annotation",
                    e.page_id
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(id: &str) -> ManifestEntry {
        ManifestEntry {
            page_id: id.into(),
            image_path: format!("images/{id}.png").into(),
            annotation_path: format!("annotations/{id}.xml").into(),
            split: SplitTag::None,
            class_histogram: BTreeMap::from([(LayoutClass::Paragraph, 3), (LayoutClass::H1, 1)]),
        }
    }

    #[test]
    fn jsonl_round_trip() {
        let m = DatasetManifest::new(vec![entry("a"), entry("b")]).unwrap();
        let text = m.to_jsonl().unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.contains("\"split_tag\":\"none\""));
        assert!(text.contains("\"Paragraph\":3"));
        assert_eq!(DatasetManifest::from_jsonl(&text).unwrap(), m);
    }

    #[test]
    fn rejects_duplicate_ids() {
        assert!(matches!(
            DatasetManifest::new(vec![entry("a"), entry("a")]),
            Err(Error::Manifest(_))
        ));
    }
}
