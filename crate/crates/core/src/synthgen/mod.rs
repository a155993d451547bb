//! Synthetic page generator with pixel-exact ground truth.

mod config;
mod glyphs;
mod layout;
mod text;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{
    write_voc, DatasetManifest, LayoutClass, ManifestEntry, PageAnnotation, SplitTag,
};
use crate::error::{Error, Result};
use crate::geometry::BoundingBox;
use crate::raster::PageImage;

pub use config::SynthConfig;
pub use glyphs::{FontMetrics, FontStyle, Glyph, GlyphAtlas, SymbolMap};
pub use layout::{Generator, PageLayout, PlacedElement, TextLine};
pub use text::{sample_entry, sample_text, StyledText, TextPools, TextRun, MAX_FRAGMENTS};

/// Ground-truth text of one annotated element, aligned by index with the
/// page annotation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptElement {
    pub label: LayoutClass,
    #[serde(rename = "box")]
    pub bbox: BoundingBox,
    pub text: String,
    pub lines: Vec<TextLine>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub page_id: String,
    pub elements: Vec<TranscriptElement>,
}

impl Transcript {
    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Transcript> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Texts of the elements that carry text, in reading order.
    pub fn texts(&self) -> impl Iterator<Item = &TranscriptElement> {
        self.elements
            .iter()
            .filter(|e| e.label != LayoutClass::Curly)
    }
}

impl PageLayout {
    pub fn transcript(&self) -> Transcript {
        Transcript {
            page_id: self.page_id.clone(),
            elements: self
                .elements
                .iter()
                .map(|e| TranscriptElement {
                    label: e.label,
                    bbox: e.bbox,
                    text: e.text.clone(),
                    lines: e.lines.clone(),
                    parent: e.parent,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticPage {
    pub image: PageImage,
    pub annotation: PageAnnotation,
    pub transcript: Transcript,
}

impl Generator {
    pub fn generate(&self, page_id: &str, seed: u64) -> Result<SyntheticPage> {
        let layout = self.layout(page_id, seed)?;
        Ok(SyntheticPage {
            image: layout.render(),
            annotation: layout.annotation(),
            transcript: layout.transcript(),
        })
    }
}

/// Renders a single page from `cfg.seed`.
pub fn generate_page(cfg: &SynthConfig) -> Result<(PageImage, PageAnnotation)> {
    let page = Generator::new(cfg.clone())?.generate("page_00000", cfg.seed)?;
    Ok((page.image, page.annotation))
}

pub fn page_id(i: usize) -> String {
    format!("page_{i:05}")
}

pub fn page_seed(base: u64, i: usize) -> u64 {
    base.wrapping_add(i as u64)
}

/// Output layout of a generated dataset under its root directory.
pub struct DatasetPaths;

impl DatasetPaths {
    pub const MANIFEST: &'static str = "manifest.jsonl";
    pub const CONFIG: &'static str = "synth_config.toml";

    pub fn image(page_id: &str) -> PathBuf {
        PathBuf::from("images").join(format!("{page_id}.png"))
    }

    pub fn annotation(page_id: &str) -> PathBuf {
        PathBuf::from("annotations").join(format!("{page_id}.xml"))
    }

    pub fn transcript(page_id: &str) -> PathBuf {
        PathBuf::from("transcripts").join(format!("{page_id}.json"))
    }
}

/// Writes `n` pages (PNG, VOC XML, transcript JSON) and a JSONL manifest.
/// Page `i` uses seed `cfg.seed + i`.
pub fn generate_dataset(cfg: &SynthConfig, n: usize, out_dir: &Path) -> Result<DatasetManifest> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "page count must be at least 1".into(),
        ));
    }
    let generator = Generator::new(cfg.clone())?;
    for sub in ["images", "annotations", "transcripts"] {
        let d = out_dir.join(sub);
        fs::create_dir_all(&d).map_err(|e| Error::io(&d, e))?;
    }
    let entries = (0..n)
        .into_par_iter()
        .map(|i| {
            let id = page_id(i);
            let page = generator.generate(&id, page_seed(cfg.seed, i))?;
            let image_path = DatasetPaths::image(&id);
            let annotation_path = DatasetPaths::annotation(&id);
            page.image.save_png(&out_dir.join(&image_path))?;
            let xml_path = out_dir.join(&annotation_path);
            fs::write(&xml_path, write_voc(&page.annotation)?)
                .map_err(|e| Error::io(&xml_path, e))?;
            page.transcript
                .save(&out_dir.join(DatasetPaths::transcript(&id)))?;
            Ok(ManifestEntry {
                page_id: id,
                image_path,
                annotation_path,
                split: SplitTag::None,
                class_histogram: page.annotation.class_histogram(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let manifest = DatasetManifest::new(entries)?;
    manifest.save(&out_dir.join(DatasetPaths::MANIFEST))?;
    let cfg_path = out_dir.join(DatasetPaths::CONFIG);
    fs::write(&cfg_path, cfg.to_toml()).map_err(|e| Error::io(&cfg_path, e))?;
    Ok(manifest)
}

/// Class counts of top-level elements (brace members excluded).
pub fn top_level_histogram(t: &Transcript) -> BTreeMap<LayoutClass, usize> {
    let mut h = BTreeMap::new();
    for e in t.elements.iter().filter(|e| e.parent.is_none()) {
        *h.entry(e.label).or_insert(0) += 1;
    }
    h
}
