//! OCR engine abstraction: an external-process adapter and a seeded mock
//! engine that replays (and optionally corrupts) ground-truth text.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use rand::seq::IndexedRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::LayoutClass;
use crate::error::{Error, Result};
use crate::geometry::BoundingBox;
use crate::raster::PageImage;
use crate::seed::{derive_seed, rng_for};
use crate::snippets::Snippet;
use crate::synthgen::Transcript;

/// Environment variable holding the external engine command template.
pub const OCR_CMD_ENV: &str = "SCHEMATIK_OCR_CMD";

/// Characters used for substitutions and insertions.
pub const ALPHABET: &str =
    "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZäöüÄÖÜß0123456789.,;:-()'";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OcrResult {
    pub page_id: String,
    pub order_index: usize,
    pub label: LayoutClass,
    pub text: String,
    pub engine_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorruptionModel {
    pub substitution_rate: f64,
    pub insertion_rate: f64,
    pub deletion_rate: f64,
    /// Full-page runs read lines row by row across columns.
    pub scramble_full_pages: bool,
    pub seed: u64,
}

impl Default for CorruptionModel {
    fn default() -> Self {
        CorruptionModel {
            substitution_rate: 0.0,
            insertion_rate: 0.0,
            deletion_rate: 0.0,
            scramble_full_pages: true,
            seed: 0,
        }
    }
}

impl CorruptionModel {
    pub fn clean() -> Self {
        CorruptionModel::default()
    }

    pub fn validate(&self) -> Result<()> {
        for r in [
            self.substitution_rate,
            self.insertion_rate,
            self.deletion_rate,
        ] {
            // a deletion rate of exactly 1 is allowed to model a blank engine
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::InvalidParameter(format!(
                    "corruption rate {r} outside [0, 1)"
                )));
            }
        }
        if self.substitution_rate >= 1.0 || self.insertion_rate >= 1.0 {
            return Err(Error::InvalidParameter(
                "substitution and insertion rates must be below 1".into(),
            ));
        }
        Ok(())
    }
}

fn alphabet() -> Vec<char> {
    ALPHABET.chars().collect()
}

/// Per character: delete with `p_d`, otherwise substitute with `p_s` by a
/// different alphabet character; then insert a random character with
/// `p_i`.
pub fn mock_ocr_with<R: Rng>(text: &str, model: &CorruptionModel, rng: &mut R) -> String {
    let alpha = alphabet();
    let mut out = String::with_capacity(text.len());
    for ch in text.chars() {
        if model.deletion_rate > 0.0 && rng.random_bool(model.deletion_rate) {
            // dropped
        } else if model.substitution_rate > 0.0 && rng.random_bool(model.substitution_rate) {
            let others: Vec<char> = alpha.iter().copied().filter(|&c| c != ch).collect();
            out.push(*others.choose(rng).expect("alphabet"));
        } else {
            out.push(ch);
        }
        if model.insertion_rate > 0.0 && rng.random_bool(model.insertion_rate) {
            out.push(*alpha.choose(rng).expect("alphabet"));
        }
    }
    out
}

/// [`mock_ocr_with`] seeded from `model.seed`.
pub fn mock_ocr(text: &str, model: &CorruptionModel) -> String {
    mock_ocr_with(text, model, &mut rng_for(model.seed, "mock_ocr", ""))
}

/// Simulated whole-page OCR. With scrambling on, lines are read row-major
/// (by baseline, then left to right) across all columns instead of in
/// reading order. Corruption follows.
pub fn full_page_mock(t: &Transcript, model: &CorruptionModel) -> String {
    let mut lines: Vec<(f64, f64, &str)> = t
        .texts()
        .flat_map(|e| e.lines.iter().map(|l| (l.y, l.x, l.text.as_str())))
        .collect();
    if model.scramble_full_pages {
        lines.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    }
    let text = lines.iter().map(|l| l.2).collect::<Vec<_>>().join(" ");
    mock_ocr_with(
        &text,
        model,
        &mut rng_for(model.seed, "full_page", &t.page_id),
    )
}

pub trait OcrEngine: Send + Sync {
    fn id(&self) -> String;

    fn recognize(&self, snippet: &Snippet) -> Result<String>;

    /// Whole-page recognition for the unsegmented baseline. The default
    /// feeds the full page through [`OcrEngine::recognize`].
    fn recognize_page(&self, page: &PageImage, page_id: &str) -> Result<String> {
        let full = BoundingBox::new(0.0, 0.0, page.width() as f64, page.height() as f64)?;
        self.recognize(&Snippet {
            image: page.clone(),
            source_box: full,
            label: LayoutClass::BigParagraph,
            order_index: 0,
            page_id: page_id.to_string(),
        })
    }
}

/// Looks up the ground-truth text of the element that best overlaps the
/// snippet's source box and runs it through the corruption model.
#[derive(Debug, Clone)]
pub struct MockEngine {
    truth: BTreeMap<String, Vec<(BoundingBox, String)>>,
    pages: BTreeMap<String, Transcript>,
    pub model: CorruptionModel,
}

/// Minimum overlap for a snippet to pick up a ground-truth text.
const MOCK_MIN_IOU: f64 = 0.25;

impl MockEngine {
    pub fn new(transcripts: impl IntoIterator<Item = Transcript>, model: CorruptionModel) -> Self {
        let pages: BTreeMap<String, Transcript> = transcripts
            .into_iter()
            .map(|t| (t.page_id.clone(), t))
            .collect();
        let truth = pages
            .iter()
            .map(|(id, t)| {
                (
                    id.clone(),
                    t.texts().map(|e| (e.bbox, e.text.clone())).collect(),
                )
            })
            .collect();
        MockEngine {
            truth,
            pages,
            model,
        }
    }

    pub fn truth_text(&self, page_id: &str, b: &BoundingBox) -> Option<&str> {
        self.truth
            .get(page_id)?
            .iter()
            .map(|(tb, text)| (tb.iou(b), text))
            .filter(|(iou, _)| *iou >= MOCK_MIN_IOU)
            .max_by(|a, b| a.0.total_cmp(&b.0))
            .map(|(_, t)| t.as_str())
    }
}

impl OcrEngine for MockEngine {
    fn id(&self) -> String {
        "mock".into()
    }

    fn recognize(&self, s: &Snippet) -> Result<String> {
        let truth = self.truth_text(&s.page_id, &s.source_box).unwrap_or("");
        let key = format!("{}/{}", s.page_id, s.order_index);
        let mut rng = rng_for(
            derive_seed(self.model.seed, "mock_engine", ""),
            "snippet",
            &key,
        );
        Ok(mock_ocr_with(truth, &self.model, &mut rng))
    }

    fn recognize_page(&self, _page: &PageImage, page_id: &str) -> Result<String> {
        let t = self.pages.get(page_id).ok_or_else(|| {
            Error::Engine(format!("mock engine has no transcript for '{page_id}'"))
        })?;
        Ok(full_page_mock(t, &self.model))
    }
}

/// Runs a shell command per snippet. The template's `{input}` is replaced
/// by the snippet PNG path and `{output}` by the text file the engine must
/// write. Extra flags are appended verbatim.
#[derive(Debug, Clone)]
pub struct ExternalEngine {
    pub template: String,
    pub flags: Vec<String>,
    pub work_dir: PathBuf,
    pub engine_id: String,
}

impl ExternalEngine {
    pub fn new(template: impl Into<String>, work_dir: impl Into<PathBuf>) -> Result<Self> {
        let template = template.into();
        if !template.contains("{input}") || !template.contains("{output}") {
            return Err(Error::InvalidParameter(
                "OCR command template needs {input} and {output} placeholders".into(),
            ));
        }
        Ok(ExternalEngine {
            engine_id: format!("external:{template}"),
            template,
            flags: Vec::new(),
            work_dir: work_dir.into(),
        })
    }

    /// Engine configured from [`OCR_CMD_ENV`].
    pub fn from_env(work_dir: impl Into<PathBuf>) -> Result<Self> {
        let t = std::env::var(OCR_CMD_ENV)
            .map_err(|_| Error::InvalidParameter(format!("{OCR_CMD_ENV} is not set")))?;
        Self::new(t, work_dir)
    }

    pub fn command_line(&self, input: &Path, output: &Path) -> String {
        let mut cmd = self
            .template
            .replace("{input}", &input.display().to_string())
            .replace("{output}", &output.display().to_string());
        for f in &self.flags {
            cmd.push(' ');
            cmd.push_str(f);
        }
        cmd
    }
}

impl OcrEngine for ExternalEngine {
    fn id(&self) -> String {
        self.engine_id.clone()
    }

    fn recognize(&self, s: &Snippet) -> Result<String> {
        fs::create_dir_all(&self.work_dir).map_err(|e| Error::io(&self.work_dir, e))?;
        let input = s.save(&self.work_dir)?;
        let output = input.with_extension("txt");
        let cmd = self.command_line(&input, &output);
        let status = Command::new("sh")
            .arg("-c")
            .arg(&cmd)
            .output()
            .map_err(|e| Error::Engine(format!("cannot launch '{cmd}': {e}")))?;
        if !status.status.success() {
            return Err(Error::Engine(format!(
                "'{cmd}' exited with {}: {}",
                status.status,
                String::from_utf8_lossy(&status.stderr).trim()
            )));
        }
        let bytes = fs::read(&output).map_err(|e| Error::io(&output, e))?;
        let text = String::from_utf8(bytes)
            .map_err(|_| Error::Engine(format!("{} is not UTF-8", output.display())))?;
        Ok(text.trim_end_matches(['\n', '\r']).to_string())
    }
}

/// Recognizes snippets on up to `workers` threads (inline for one). Results keep the input
/// order; a failing snippet yields an empty text with the error recorded.
pub fn ocr(snippets: &[Snippet], engine: &dyn OcrEngine, workers: usize) -> Result<Vec<OcrResult>> {
    let id = engine.id();
    let run = |s: &Snippet| {
        let (text, error) = match engine.recognize(s) {
            Ok(t) => (t, None),
            Err(e) => (String::new(), Some(e.to_string())),
        };
        OcrResult {
            page_id: s.page_id.clone(),
            order_index: s.order_index,
            label: s.label,
            text,
            engine_id: id.clone(),
            error,
        }
    };
    if workers <= 1 {
        return Ok(snippets.iter().map(run).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Engine(e.to_string()))?;
    Ok(pool.install(|| snippets.par_iter().map(run).collect()))
}

pub fn write_results_jsonl(results: &[OcrResult], path: &Path) -> Result<()> {
    let mut out = String::new();
    for r in results {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_results_jsonl(path: &Path) -> Result<Vec<OcrResult>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| Ok(serde_json::from_str(l)?))
        .collect()
}
