//! End-to-end runs over a dataset: detect, post-process, order, snip, OCR
//! and score; padding/scale sweeps; scenario comparison tables.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{
    group_by_page, read_interchange, validate_against_pages, write_interchange, DatasetManifest,
    Detection, DetectionRecord, LayoutClass, PageAnnotation,
};
use crate::detectors::{Detector, DetectorOutput, OracleDetector, Perturbation, RlsaDetector};
use crate::error::{Error, Result};
use crate::metrics::{cer, improvement, wer, EvalReport, Evaluator};
use crate::ocr_bridge::{
    ocr, write_results_jsonl, CorruptionModel, ExternalEngine, MockEngine, OcrEngine, OcrResult,
};
use crate::postprocess::{filter_confidence, merge_overlapping};
use crate::raster::PageImage;
use crate::snippets::{extract_snippet, order_detections, Snippet};
use crate::synthgen::{DatasetPaths, Transcript};

/// One page with its ground truth.
#[derive(Debug, Clone)]
pub struct PageInput {
    pub page_id: String,
    pub image: PageImage,
    pub annotation: PageAnnotation,
    pub transcript: Option<Transcript>,
}

/// Loads every page listed in `dir/manifest.jsonl`. Transcripts are
/// optional.
pub fn load_dataset(dir: &Path) -> Result<Vec<PageInput>> {
    let manifest = DatasetManifest::load(&dir.join(DatasetPaths::MANIFEST))?;
    let mut pages = manifest
        .entries
        .par_iter()
        .map(|e| {
            let image = PageImage::load(&dir.join(&e.image_path))?;
            let annotation = manifest.load_annotation(e, dir)?;
            let tp = dir.join(DatasetPaths::transcript(&e.page_id));
            let transcript = if tp.exists() {
                Some(Transcript::load(&tp)?)
            } else {
                None
            };
            Ok(PageInput {
                page_id: e.page_id.clone(),
                image,
                annotation,
                transcript,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    pages.sort_by(|a, b| a.page_id.cmp(&b.page_id));
    Ok(pages)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorSpec {
    Oracle,
    Rlsa,
    /// Detections read from an interchange JSON file.
    External(PathBuf),
}

impl FromStr for DetectorSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "oracle" => Ok(DetectorSpec::Oracle),
            "rlsa" => Ok(DetectorSpec::Rlsa),
            _ => match s.strip_prefix("external:") {
                Some(p) if !p.is_empty() => Ok(DetectorSpec::External(PathBuf::from(p))),
                _ => Err(Error::InvalidParameter(format!(
                    "unknown detector '{s}' (expected oracle, rlsa or external:FILE)"
                ))),
            },
        }
    }
}

/// Replays detections from an interchange file.
#[derive(Debug, Clone)]
pub struct InterchangeDetector {
    by_page: BTreeMap<String, Vec<Detection>>,
}

impl InterchangeDetector {
    /// Reads and validates the file against the given pages.
    pub fn load(path: &Path, pages: &[PageInput]) -> Result<Self> {
        let records = read_interchange(path)?;
        Self::from_records(&records, pages)
    }

    pub fn from_records(records: &[DetectionRecord], pages: &[PageInput]) -> Result<Self> {
        let dims = pages
            .iter()
            .map(|p| (p.page_id.clone(), (p.image.width(), p.image.height())))
            .collect();
        validate_against_pages(records, &dims)?;
        Ok(InterchangeDetector {
            by_page: group_by_page(records)?,
        })
    }
}

impl Detector for InterchangeDetector {
    fn name(&self) -> &str {
        "external"
    }

    fn detect(&self, _page: &PageImage, page_id: &str) -> Result<DetectorOutput> {
        Ok(DetectorOutput {
            page_id: page_id.to_string(),
            detections: self.by_page.get(page_id).cloned().unwrap_or_default(),
        })
    }
}

pub fn build_detector(
    spec: &DetectorSpec,
    pages: &[PageInput],
    perturbation: Perturbation,
    seed: u64,
) -> Result<Box<dyn Detector>> {
    Ok(match spec {
        DetectorSpec::Oracle => Box::new(OracleDetector::new(
            pages.iter().map(|p| p.annotation.clone()),
            perturbation,
            seed,
        )),
        DetectorSpec::Rlsa => Box::new(RlsaDetector::default()),
        DetectorSpec::External(path) => Box::new(InterchangeDetector::load(path, pages)?),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EngineSpec {
    Mock,
    /// Command template; `None` reads it from the environment.
    External(Option<String>),
}

impl FromStr for EngineSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mock" => Ok(EngineSpec::Mock),
            "external" => Ok(EngineSpec::External(None)),
            _ => match s.strip_prefix("external:") {
                Some(t) if !t.is_empty() => Ok(EngineSpec::External(Some(t.to_string()))),
                _ => Err(Error::InvalidParameter(format!(
                    "unknown engine '{s}' (expected mock, external or external:TEMPLATE)"
                ))),
            },
        }
    }
}

pub fn build_engine(
    spec: &EngineSpec,
    pages: &[PageInput],
    corruption: CorruptionModel,
    flags: &[String],
    work_dir: &Path,
) -> Result<Box<dyn OcrEngine>> {
    Ok(match spec {
        EngineSpec::Mock => {
            corruption.validate()?;
            Box::new(MockEngine::new(
                pages.iter().filter_map(|p| p.transcript.clone()),
                corruption,
            ))
        }
        EngineSpec::External(t) => {
            let mut e = match t {
                Some(t) => ExternalEngine::new(t.clone(), work_dir)?,
                None => ExternalEngine::from_env(work_dir)?,
            };
            e.flags = flags.to_vec();
            Box::new(e)
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineParams {
    pub padding: f64,
    pub scale: f64,
    pub min_confidence: f64,
    pub merge_iou: f64,
    /// Page-level workers; 0 uses all cores.
    pub workers: usize,
    pub full_page_baseline: bool,
    pub save_snippets: bool,
}

impl Default for PipelineParams {
    fn default() -> Self {
        PipelineParams {
            padding: crate::snippets::DEFAULT_PADDING,
            scale: crate::snippets::DEFAULT_SCALE,
            min_confidence: crate::postprocess::DEFAULT_MIN_CONFIDENCE,
            merge_iou: crate::postprocess::DEFAULT_MERGE_IOU,
            workers: 0,
            full_page_baseline: true,
            save_snippets: false,
        }
    }
}

impl PipelineParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.padding >= 0.0 && self.padding.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "padding {} must be non-negative",
                self.padding
            )));
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "scale {} must be positive",
                self.scale
            )));
        }
        if !(0.0..=1.0).contains(&self.min_confidence) || !(0.0..=1.0).contains(&self.merge_iou) {
            return Err(Error::InvalidParameter(
                "thresholds must lie in [0, 1]".into(),
            ));
        }
        Ok(())
    }
}

/// Everything needed to repeat a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub detector: String,
    pub engine_id: String,
    pub seed: u64,
    pub params: PipelineParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<Perturbation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corruption: Option<CorruptionModel>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub engine_flags: Vec<String>,
    pub pages: Vec<String>,
}

impl RunManifest {
    pub fn new(
        detector: &dyn Detector,
        engine: &dyn OcrEngine,
        seed: u64,
        params: &PipelineParams,
        pages: &[PageInput],
    ) -> Self {
        RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            detector: detector.name().to_string(),
            engine_id: engine.id(),
            seed,
            params: params.clone(),
            perturbation: None,
            corruption: None,
            engine_flags: Vec::new(),
            pages: pages.iter().map(|p| p.page_id.clone()).collect(),
        }
    }
}

/// Detections of one page before and after post-processing. `ordered` is
/// the post-processed list in reading order.
#[derive(Debug, Clone, PartialEq)]
pub struct PageDetections {
    pub page_id: String,
    pub raw: Vec<Detection>,
    pub ordered: Vec<Detection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextScore {
    pub page_id: String,
    pub text: String,
    pub cer: f64,
    pub wer: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PageOutcome {
    pub detections: PageDetections,
    pub ocr: Vec<OcrResult>,
    pub full_page: Option<TextScore>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSummary {
    pub cer: f64,
    pub wer: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub run: RunManifest,
    pub evaluation: EvalReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub full_page: Option<RateSummary>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub full_page_pages: Vec<TextScore>,
}

#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub pages: Vec<PageOutcome>,
    pub report: PipelineReport,
}

fn with_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Engine(e.to_string()))?;
    Ok(pool.install(f))
}

/// Detect, filter, merge and order one page.
pub fn detect_page(
    page: &PageInput,
    detector: &dyn Detector,
    params: &PipelineParams,
) -> Result<PageDetections> {
    let out = detector.detect(&page.image, &page.page_id)?;
    out.validate(page.image.width(), page.image.height())?;
    let merged = merge_overlapping(
        &filter_confidence(&out.detections, params.min_confidence),
        params.merge_iou,
    );
    let order = order_detections(&merged, page.image.width() as f64);
    Ok(PageDetections {
        page_id: page.page_id.clone(),
        raw: out.detections,
        ordered: order.into_iter().map(|i| merged[i]).collect(),
    })
}

/// Snippets for every non-Curly detection; order indices count all
/// detections.
pub fn page_snippets(
    page: &PageInput,
    ordered: &[Detection],
    padding: f64,
    scale: f64,
) -> Result<Vec<Snippet>> {
    ordered
        .iter()
        .enumerate()
        .filter(|(_, d)| d.label != LayoutClass::Curly)
        .map(|(k, d)| extract_snippet(&page.image, &page.page_id, d, k, padding, scale))
        .collect()
}

/// Ground-truth text of a page in reading order.
pub fn reference_text(t: &Transcript) -> String {
    t.texts()
        .map(|e| e.text.as_str())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Concatenated OCR output in order-index order.
pub fn hypothesis_text(results: &[OcrResult]) -> String {
    let mut r: Vec<&OcrResult> = results.iter().collect();
    r.sort_by_key(|x| x.order_index);
    r.iter()
        .map(|x| x.text.as_str())
        .collect::<Vec<_>>()
        .join(" ")
}

fn text_rates(reference: &str, hyp: &str) -> Option<(f64, f64)> {
    Some((cer(reference, hyp).ok()?, wer(reference, hyp).ok()?))
}

fn page_text_stage(
    page: &PageInput,
    ordered: &[Detection],
    engine: &dyn OcrEngine,
    padding: f64,
    scale: f64,
) -> Result<(Vec<Snippet>, Vec<OcrResult>)> {
    let snippets = page_snippets(page, ordered, padding, scale)?;
    let results = ocr(&snippets, engine, 1)?;
    Ok((snippets, results))
}

/// Runs the full chain over `pages`. With `out_dir` every stage output is
/// written there.
pub fn run_pipeline(
    pages: &[PageInput],
    detector: &dyn Detector,
    engine: &dyn OcrEngine,
    params: &PipelineParams,
    manifest: RunManifest,
    out_dir: Option<&Path>,
) -> Result<PipelineRun> {
    params.validate()?;
    let snippet_dir = out_dir
        .filter(|_| params.save_snippets)
        .map(|d| d.join("snippets"));
    if let Some(d) = &snippet_dir {
        fs::create_dir_all(d).map_err(|e| Error::io(d, e))?;
    }
    let work = |page: &PageInput| -> Result<PageOutcome> {
        let detections = detect_page(page, detector, params)?;
        let (snippets, results) = page_text_stage(
            page,
            &detections.ordered,
            engine,
            params.padding,
            params.scale,
        )?;
        if let Some(d) = &snippet_dir {
            for s in &snippets {
                s.save(d)?;
            }
        }
        let full_page = match (&page.transcript, params.full_page_baseline) {
            (Some(t), true) => {
                let text = engine.recognize_page(&page.image, &page.page_id)?;
                text_rates(&reference_text(t), &text).map(|(c, w)| TextScore {
                    page_id: page.page_id.clone(),
                    text,
                    cer: c,
                    wer: w,
                })
            }
            _ => None,
        };
        Ok(PageOutcome {
            detections,
            ocr: results,
            full_page,
        })
    };
    let mut outcomes = with_pool(params.workers, || {
        pages.par_iter().map(work).collect::<Result<Vec<_>>>()
    })??;
    outcomes.sort_by(|a, b| a.detections.page_id.cmp(&b.detections.page_id));

    let by_id: BTreeMap<&str, &PageInput> = pages.iter().map(|p| (p.page_id.as_str(), p)).collect();
    let mut ev = Evaluator::new();
    for o in &outcomes {
        let page = by_id[o.detections.page_id.as_str()];
        let scores = ev.add_page(
            &page.page_id,
            &page.annotation.elements,
            &o.detections.ordered,
        )?;
        if let Some(t) = &page.transcript {
            if let Some((c, w)) = text_rates(&reference_text(t), &hypothesis_text(&o.ocr)) {
                scores.cer = Some(c);
                scores.wer = Some(w);
            }
        }
    }
    let evaluation = ev.finish();
    let full_page_pages: Vec<TextScore> = outcomes
        .iter()
        .filter_map(|o| o.full_page.clone())
        .collect();
    let full_page = (!full_page_pages.is_empty()).then(|| {
        let n = full_page_pages.len() as f64;
        RateSummary {
            cer: full_page_pages.iter().map(|s| s.cer).sum::<f64>() / n,
            wer: full_page_pages.iter().map(|s| s.wer).sum::<f64>() / n,
        }
    });
    let run = PipelineRun {
        report: PipelineReport {
            run: manifest,
            evaluation,
            full_page,
            full_page_pages,
        },
        pages: outcomes,
    };
    if let Some(dir) = out_dir {
        save_run(&run, dir)?;
    }
    Ok(run)
}

fn write_file(path: &Path, body: &str) -> Result<()> {
    fs::write(path, body).map_err(|e| Error::io(path, e))
}

fn save_run(run: &PipelineRun, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let records = |f: fn(&PageDetections) -> &Vec<Detection>| -> Vec<DetectionRecord> {
        run.pages
            .iter()
            .flat_map(|o| {
                f(&o.detections)
                    .iter()
                    .map(|d| DetectionRecord::from_detection(&o.detections.page_id, d))
            })
            .collect()
    };
    write_file(
        &dir.join("run.json"),
        &serde_json::to_string_pretty(&run.report.run)?,
    )?;
    write_file(
        &dir.join("detections_raw.json"),
        &write_interchange(&records(|p| &p.raw))?,
    )?;
    write_file(
        &dir.join("detections.json"),
        &write_interchange(&records(|p| &p.ordered))?,
    )?;
    let results: Vec<OcrResult> = run
        .pages
        .iter()
        .flat_map(|o| o.ocr.iter().cloned())
        .collect();
    write_results_jsonl(&results, &dir.join("ocr.jsonl"))?;
    write_file(
        &dir.join("report.json"),
        &serde_json::to_string_pretty(&run.report)?,
    )?;
    run.report.evaluation.save(&dir.join("evaluation"))?;
    Ok(())
}

pub fn load_report(dir_or_file: &Path) -> Result<PipelineReport> {
    let path = if dir_or_file.is_dir() {
        dir_or_file.join("report.json")
    } else {
        dir_or_file.to_path_buf()
    };
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Mean CER and WER for each padding (rows) and scale (columns).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub paddings: Vec<f64>,
    pub scales: Vec<f64>,
    pub cer: Vec<Vec<f64>>,
    pub wer: Vec<Vec<f64>>,
}

/// Detects once, then re-snips and re-reads every page for each
/// (padding, scale) cell. Pages without a transcript are skipped.
pub fn sweep(
    pages: &[PageInput],
    detector: &dyn Detector,
    engine: &dyn OcrEngine,
    params: &PipelineParams,
    paddings: &[f64],
    scales: &[f64],
) -> Result<SweepResult> {
    if paddings.is_empty() || scales.is_empty() {
        return Err(Error::InvalidParameter(
            "sweep needs at least one padding and one scale".into(),
        ));
    }
    for &p in paddings {
        PipelineParams {
            padding: p,
            ..params.clone()
        }
        .validate()?;
    }
    for &s in scales {
        PipelineParams {
            scale: s,
            ..params.clone()
        }
        .validate()?;
    }
    let scored: Vec<&PageInput> = pages.iter().filter(|p| p.transcript.is_some()).collect();
    if scored.is_empty() {
        return Err(Error::InvalidParameter(
            "sweep needs pages with transcripts".into(),
        ));
    }
    let detections = with_pool(params.workers, || {
        scored
            .par_iter()
            .map(|p| detect_page(p, detector, params))
            .collect::<Result<Vec<_>>>()
    })??;
    let mut cer_m = vec![vec![0.0; scales.len()]; paddings.len()];
    let mut wer_m = cer_m.clone();
    for (i, &pad) in paddings.iter().enumerate() {
        for (j, &scale) in scales.iter().enumerate() {
            let rates = with_pool(params.workers, || {
                scored
                    .par_iter()
                    .zip(&detections)
                    .map(|(p, d)| {
                        let (_, results) = page_text_stage(p, &d.ordered, engine, pad, scale)?;
                        let reference = reference_text(p.transcript.as_ref().expect("filtered"));
                        text_rates(&reference, &hypothesis_text(&results))
                            .ok_or_else(|| Error::EmptyReference)
                    })
                    .collect::<Result<Vec<_>>>()
            })??;
            let n = rates.len() as f64;
            cer_m[i][j] = rates.iter().map(|r| r.0).sum::<f64>() / n;
            wer_m[i][j] = rates.iter().map(|r| r.1).sum::<f64>() / n;
        }
    }
    Ok(SweepResult {
        paddings: paddings.to_vec(),
        scales: scales.to_vec(),
        cer: cer_m,
        wer: wer_m,
    })
}

const HEATMAP_CELL: u32 = 48;

impl SweepResult {
    pub fn matrix_csv(&self, m: &[Vec<f64>]) -> String {
        let mut s = String::from("padding\\scale");
        for sc in &self.scales {
            let _ = write!(s, ",{sc}");
        }
        s.push('\n');
        for (p, row) in self.paddings.iter().zip(m) {
            let _ = write!(s, "{p}");
            for v in row {
                let _ = write!(s, ",{v:.6}");
            }
            s.push('\n');
        }
        s
    }

    /// Grey-level heatmap, darker for higher error, one square per cell.
    pub fn heatmap(m: &[Vec<f64>]) -> PageImage {
        let rows = m.len() as u32;
        let cols = m.first().map_or(0, |r| r.len()) as u32;
        let (lo, hi) = m
            .iter()
            .flatten()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
                (a.min(v), b.max(v))
            });
        let mut img = PageImage::filled(
            cols * HEATMAP_CELL + 1,
            rows * HEATMAP_CELL + 1,
            crate::raster::BLACK,
        );
        for (r, row) in m.iter().enumerate() {
            for (c, &v) in row.iter().enumerate() {
                let t = if hi > lo { (v - lo) / (hi - lo) } else { 0.5 };
                let level = (235.0 - 215.0 * t).round() as u8;
                let (x0, y0) = (
                    c as i64 * HEATMAP_CELL as i64 + 1,
                    r as i64 * HEATMAP_CELL as i64 + 1,
                );
                img.fill_rect(
                    x0,
                    y0,
                    x0 + HEATMAP_CELL as i64 - 1,
                    y0 + HEATMAP_CELL as i64 - 1,
                    level,
                );
            }
        }
        img
    }

    /// Writes `cer_matrix.csv`, `wer_matrix.csv`, matching heatmap PNGs and
    /// `sweep.json`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_file(&dir.join("cer_matrix.csv"), &self.matrix_csv(&self.cer))?;
        write_file(&dir.join("wer_matrix.csv"), &self.matrix_csv(&self.wer))?;
        Self::heatmap(&self.cer).save_png(&dir.join("cer_heatmap.png"))?;
        Self::heatmap(&self.wer).save_png(&dir.join("wer_heatmap.png"))?;
        write_file(
            &dir.join("sweep.json"),
            &serde_json::to_string_pretty(self)?,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageRates {
    pub page_id: String,
    pub cer: f64,
    pub wer: f64,
}

/// A named result: either per-page rates or aggregate values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pages: Vec<PageRates>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cer: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wer: Option<f64>,
}

impl Scenario {
    pub fn aggregate(name: &str, cer: f64, wer: f64) -> Self {
        Scenario {
            name: name.to_string(),
            pages: Vec::new(),
            cer: Some(cer),
            wer: Some(wer),
        }
    }

    fn rates(&self) -> Result<(f64, f64)> {
        if !self.pages.is_empty() {
            let n = self.pages.len() as f64;
            return Ok((
                self.pages.iter().map(|p| p.cer).sum::<f64>() / n,
                self.pages.iter().map(|p| p.wer).sum::<f64>() / n,
            ));
        }
        match (self.cer, self.wer) {
            (Some(c), Some(w)) => Ok((c, w)),
            _ => Err(Error::Scenario(format!(
                "scenario '{}' has neither pages nor cer/wer",
                self.name
            ))),
        }
    }
}

/// Full-page and segmented scenarios of a pipeline report.
pub fn scenarios_from_report(r: &PipelineReport) -> Vec<Scenario> {
    let tag = format!("{}+{}", r.run.detector, r.run.engine_id);
    let mut out = Vec::new();
    if !r.full_page_pages.is_empty() {
        out.push(Scenario {
            name: format!("{} full page", r.run.engine_id),
            pages: r
                .full_page_pages
                .iter()
                .map(|s| PageRates {
                    page_id: s.page_id.clone(),
                    cer: s.cer,
                    wer: s.wer,
                })
                .collect(),
            cer: None,
            wer: None,
        });
    }
    let pages: Vec<PageRates> = r
        .evaluation
        .pages
        .iter()
        .filter_map(|p| {
            Some(PageRates {
                page_id: p.page_id.clone(),
                cer: p.cer?,
                wer: p.wer?,
            })
        })
        .collect();
    if !pages.is_empty() {
        out.push(Scenario {
            name: format!("{tag} segmented"),
            pages,
            cer: None,
            wer: None,
        });
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioRow {
    pub name: String,
    pub cer: f64,
    pub wer: f64,
}

/// Improvement of `scenario` over the earlier `baseline`, in percent;
/// `None` when the baseline rate is zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Improvement {
    pub baseline: String,
    pub scenario: String,
    pub cer_pct: Option<f64>,
    pub wer_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub rows: Vec<ScenarioRow>,
    pub improvements: Vec<Improvement>,
}

/// Rows in input order plus the improvement of every scenario over each
/// one listed before it. Scenarios with per-page rates must cover the
/// same pages.
pub fn compare_scenarios(scenarios: &[Scenario]) -> Result<Comparison> {
    if scenarios.is_empty() {
        return Err(Error::Scenario("no scenarios given".into()));
    }
    let names: BTreeSet<&str> = scenarios.iter().map(|s| s.name.as_str()).collect();
    if names.len() != scenarios.len() {
        return Err(Error::Scenario("scenario names must be unique".into()));
    }
    let with_pages: Vec<&Scenario> = scenarios.iter().filter(|s| !s.pages.is_empty()).collect();
    if !with_pages.is_empty() && with_pages.len() != scenarios.len() {
        return Err(Error::Scenario(
            "either all scenarios carry per-page rates or none do".into(),
        ));
    }
    let ids = |s: &Scenario| -> Result<BTreeSet<String>> {
        let set: BTreeSet<String> = s.pages.iter().map(|p| p.page_id.clone()).collect();
        if set.len() != s.pages.len() {
            return Err(Error::Scenario(format!(
                "scenario '{}' lists a page twice",
                s.name
            )));
        }
        Ok(set)
    };
    if let Some(first) = with_pages.first() {
        let reference = ids(first)?;
        for s in &with_pages[1..] {
            if ids(s)? != reference {
                return Err(Error::Scenario(format!(
                    "scenario '{}' covers different pages than '{}'",
                    s.name, first.name
                )));
            }
        }
    }
    let rows = scenarios
        .iter()
        .map(|s| {
            let (cer, wer) = s.rates()?;
            Ok(ScenarioRow {
                name: s.name.clone(),
                cer,
                wer,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut improvements = Vec::new();
    for j in 1..rows.len() {
        for i in 0..j {
            improvements.push(Improvement {
                baseline: rows[i].name.clone(),
                scenario: rows[j].name.clone(),
                cer_pct: improvement(rows[i].cer, rows[j].cer).ok(),
                wer_pct: improvement(rows[i].wer, rows[j].wer).ok(),
            });
        }
    }
    Ok(Comparison { rows, improvements })
}

impl Comparison {
    pub fn to_markdown(&self) -> String {
        let pct = |v: Option<f64>| {
            v.map(|x| format!("{x:.2}%"))
                .unwrap_or_else(|| "n/a".into())
        };
        let mut s = String::from("| scenario | CER | WER |\n|---|---|---|\n");
        for r in &self.rows {
            let _ = writeln!(s, "| {} | {:.4} | {:.4} |", r.name, r.cer, r.wer);
        }
        if !self.improvements.is_empty() {
            s.push_str("\n| baseline | scenario | CER improvement | WER improvement |\n|---|---|---|---|\n");
            for i in &self.improvements {
                let _ = writeln!(
                    s,
                    "| {} | {} | {} | {} |",
                    i.baseline,
                    i.scenario,
                    pct(i.cer_pct),
                    pct(i.wer_pct)
                );
            }
        }
        s
    }

    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_default();
        let mut s = String::from("baseline,scenario,cer_improvement_pct,wer_improvement_pct\n");
        for i in &self.improvements {
            let _ = writeln!(
                s,
                "{},{},{},{}",
                i.baseline,
                i.scenario,
                opt(i.cer_pct),
                opt(i.wer_pct)
            );
        }
        s
    }
}

/// Reads scenarios from a JSON file holding one scenario or a list, or
/// from a pipeline output (directory or `report.json`).
pub fn load_scenarios(path: &Path) -> Result<Vec<Scenario>> {
    if path.is_dir() {
        return Ok(scenarios_from_report(&load_report(path)?));
    }
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let v: serde_json::Value = serde_json::from_str(&text)?;
    if v.get("run").is_some() && v.get("evaluation").is_some() {
        return Ok(scenarios_from_report(&serde_json::from_value(v)?));
    }
    if v.is_array() {
        return Ok(serde_json::from_value(v)?);
    }
    Ok(vec![serde_json::from_value(v)?])
}
