use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use schematik::augment::{augment, AugmentParams};
use schematik::corpus::{
    bbox_stats_from_manifest, stratified_split, write_interchange, write_voc, DatasetManifest,
    DetectionRecord, ManifestEntry, PageAnnotation, SplitTag,
};
use schematik::detectors::{ConfidenceModel, Perturbation};
use schematik::ocr_bridge::{CorruptionModel, OCR_CMD_ENV};
use schematik::pipeline::{
    build_detector, build_engine, compare_scenarios, detect_page, load_dataset, load_scenarios,
    run_pipeline, sweep, DetectorSpec, EngineSpec, PageInput, PipelineParams, RunManifest,
};
use schematik::raster::PageImage;
use schematik::synthgen::{generate_dataset, DatasetPaths, SynthConfig};

#[derive(Parser)]
#[command(
    name = "schematik",
    version,
    about = "Synthetic layout corpora, segmentation and OCR evaluation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset (PNG pages, VOC XML, transcripts, manifest).
    Generate(GenerateArgs),
    /// Tag the manifest entries of a dataset train or val.
    Split(SplitArgs),
    /// Bounding-box ratio and scale statistics of a dataset.
    Stats(StatsArgs),
    /// Write an augmented copy of a dataset.
    Augment(AugmentArgs),
    /// Run a detector and write interchange JSON.
    Detect(DetectArgs),
    /// Detect, post-process, order, snip, OCR and evaluate.
    Pipeline(PipelineArgs),
    /// CER/WER over a grid of snippet paddings and scales.
    Sweep(SweepArgs),
    /// Compare scenarios and compute relative improvements.
    Report(ReportArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Number of pages.
    #[arg(short = 'n', long, value_parser = clap::value_parser!(u64).range(1..))]
    pages: u64,
    /// Generator configuration (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the configured column count.
    #[arg(long)]
    columns: Option<u32>,
}

#[derive(Args)]
struct SplitArgs {
    /// Dataset directory holding manifest.jsonl.
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, default_value_t = 0.8)]
    fraction: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the tagged manifest here instead of updating it in place.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// Print JSON instead of a table.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct AugmentArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Augmentation parameters (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct PerturbArgs {
    /// Oracle box jitter, standard deviation in pixels.
    #[arg(long, default_value_t = 0.0)]
    jitter: f64,
    /// Oracle label flip probability.
    #[arg(long, default_value_t = 0.0)]
    flip_prob: f64,
}

impl PerturbArgs {
    fn perturbation(&self) -> Result<Perturbation> {
        let p = Perturbation {
            jitter_sigma: self.jitter,
            label_flip_prob: self.flip_prob,
            confidence: ConfidenceModel::Fixed { value: 1.0 },
        };
        p.validate()?;
        Ok(p)
    }

    fn is_none(&self) -> bool {
        self.jitter == 0.0 && self.flip_prob == 0.0
    }
}

#[derive(Args)]
struct PagesArgs {
    /// Dataset directory holding manifest.jsonl.
    #[arg(long, conflicts_with = "images")]
    dataset: Option<PathBuf>,
    /// Loose page images; the file stem becomes the page id.
    #[arg(long, num_args = 1..)]
    images: Vec<PathBuf>,
}

impl PagesArgs {
    fn load(&self) -> Result<Vec<PageInput>> {
        if let Some(d) = &self.dataset {
            return load_dataset(d).with_context(|| format!("loading dataset {}", d.display()));
        }
        if self.images.is_empty() {
            bail!("give --dataset DIR or --images FILE...");
        }
        let mut pages = Vec::new();
        for p in &self.images {
            let image = PageImage::load(p)?;
            let id = p
                .file_stem()
                .and_then(|s| s.to_str())
                .with_context(|| format!("no usable file name in {}", p.display()))?
                .to_string();
            pages.push(PageInput {
                annotation: PageAnnotation::new(id.clone(), image.width(), image.height()),
                page_id: id,
                image,
                transcript: None,
            });
        }
        pages.sort_by(|a, b| a.page_id.cmp(&b.page_id));
        Ok(pages)
    }
}

#[derive(Args)]
struct DetectArgs {
    #[command(flatten)]
    pages: PagesArgs,
    /// oracle, rlsa or external:FILE
    #[arg(long, default_value = "oracle")]
    detector: DetectorSpec,
    #[command(flatten)]
    perturb: PerturbArgs,
    /// Filter, merge and order the detections.
    #[arg(long)]
    postprocess: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EngineArgs {
    /// mock, external (template from the environment) or external:TEMPLATE
    #[arg(long, default_value = "mock")]
    engine: EngineSpec,
    /// Extra flag appended to external engine commands (repeatable).
    #[arg(long = "engine-flag", allow_hyphen_values = true)]
    engine_flags: Vec<String>,
    /// Mock substitution rate per character.
    #[arg(long, default_value_t = 0.0)]
    sub_rate: f64,
    #[arg(long, default_value_t = 0.0)]
    ins_rate: f64,
    #[arg(long, default_value_t = 0.0)]
    del_rate: f64,
    /// Read full pages in column order instead of across columns.
    #[arg(long)]
    no_scramble: bool,
}

impl EngineArgs {
    fn corruption(&self, seed: u64) -> CorruptionModel {
        CorruptionModel {
            substitution_rate: self.sub_rate,
            insertion_rate: self.ins_rate,
            deletion_rate: self.del_rate,
            scramble_full_pages: !self.no_scramble,
            seed,
        }
    }
}

#[derive(Args)]
struct StageArgs {
    #[arg(long, default_value_t = 4.0)]
    padding: f64,
    #[arg(long, default_value_t = 1.6)]
    scale: f64,
    #[arg(long, default_value_t = 0.1)]
    min_confidence: f64,
    #[arg(long, default_value_t = 0.3)]
    merge_iou: f64,
    /// Page workers; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

impl StageArgs {
    fn params(&self) -> PipelineParams {
        PipelineParams {
            padding: self.padding,
            scale: self.scale,
            min_confidence: self.min_confidence,
            merge_iou: self.merge_iou,
            workers: self.workers,
            ..PipelineParams::default()
        }
    }
}

#[derive(Args)]
struct PipelineArgs {
    #[command(flatten)]
    pages: PagesArgs,
    #[arg(long, default_value = "oracle")]
    detector: DetectorSpec,
    #[command(flatten)]
    perturb: PerturbArgs,
    #[command(flatten)]
    engine: EngineArgs,
    #[command(flatten)]
    stage: StageArgs,
    /// Skip the whole-page OCR baseline.
    #[arg(long)]
    no_full_page: bool,
    /// Keep the snippet PNGs.
    #[arg(long)]
    save_snippets: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    pages: PagesArgs,
    #[arg(long, default_value = "oracle")]
    detector: DetectorSpec,
    #[command(flatten)]
    perturb: PerturbArgs,
    #[command(flatten)]
    engine: EngineArgs,
    #[arg(long, value_delimiter = ',', default_value = "0,2,4,6,8")]
    paddings: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "1.0,1.2,1.4,1.6,1.8,2.0")]
    scales: Vec<f64>,
    #[arg(long, default_value_t = 0.1)]
    min_confidence: f64,
    #[arg(long, default_value_t = 0.3)]
    merge_iou: f64,
    #[arg(long, default_value_t = 0)]
    workers: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// Scenario files, pipeline output directories or report.json files,
    /// in table order.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// Also write comparison.md, comparison.csv and comparison.json here.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn write(path: &Path, body: impl AsRef<[u8]>) -> Result<()> {
    if let Some(d) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(d).with_context(|| format!("creating {}", d.display()))?;
    }
    fs::write(path, body).with_context(|| format!("writing {}", path.display()))
}

fn cmd_generate(a: GenerateArgs) -> Result<()> {
    let mut cfg = match &a.config {
        Some(p) => SynthConfig::load(p)?,
        None => SynthConfig::default(),
    };
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(c) = a.columns {
        cfg.column_count = c;
    }
    let m = generate_dataset(&cfg, a.pages as usize, &a.out)?;
    eprintln!("wrote {} pages to {}", m.len(), a.out.display());
    Ok(())
}

fn cmd_split(a: SplitArgs) -> Result<()> {
    let path = a.dataset.join(DatasetPaths::MANIFEST);
    let m = DatasetManifest::load(&path)?;
    let s = stratified_split(&m, a.fraction, a.seed)?;
    let train = s
        .entries
        .iter()
        .filter(|e| e.split == SplitTag::Train)
        .count();
    s.save(a.out.as_deref().unwrap_or(&path))?;
    println!("train {train}, val {}", s.len() - train);
    Ok(())
}

fn cmd_stats(a: StatsArgs) -> Result<()> {
    let m = DatasetManifest::load(&a.dataset.join(DatasetPaths::MANIFEST))?;
    let s = bbox_stats_from_manifest(&m, &a.dataset)?;
    if a.json {
        println!("{}", serde_json::to_string_pretty(&s)?);
    } else {
        println!("boxes {}", s.count);
        println!(
            "ratio min {:.4} max {:.4} mean {:.4}",
            s.ratio.min, s.ratio.max, s.ratio.mean
        );
        println!(
            "scale min {:.4} max {:.4} mean {:.4}",
            s.scale.min, s.scale.max, s.scale.mean
        );
    }
    Ok(())
}

fn cmd_augment(a: AugmentArgs) -> Result<()> {
    let mut params = match &a.config {
        Some(p) => AugmentParams::load(p)?,
        None => AugmentParams::default(),
    };
    if let Some(s) = a.seed {
        params.seed = s;
    }
    let src = DatasetManifest::load(&a.dataset.join(DatasetPaths::MANIFEST))?;
    let mut entries = Vec::with_capacity(src.len());
    for e in &src.entries {
        let image = PageImage::load(&a.dataset.join(&e.image_path))?;
        let ann = src.load_annotation(e, &a.dataset)?;
        let (img, ann) = augment(&image, &ann, &params)?;
        let image_path = DatasetPaths::image(&e.page_id);
        let annotation_path = DatasetPaths::annotation(&e.page_id);
        let full = a.out.join(&image_path);
        if let Some(d) = full.parent() {
            fs::create_dir_all(d)?;
        }
        img.save_png(&full)?;
        write(&a.out.join(&annotation_path), write_voc(&ann)?)?;
        entries.push(ManifestEntry {
            page_id: e.page_id.clone(),
            image_path,
            annotation_path,
            split: e.split,
            class_histogram: ann.class_histogram(),
        });
    }
    DatasetManifest::new(entries)?.save(&a.out.join(DatasetPaths::MANIFEST))?;
    eprintln!("augmented {} pages into {}", src.len(), a.out.display());
    Ok(())
}

fn cmd_detect(a: DetectArgs) -> Result<()> {
    let pages = a.pages.load()?;
    if a.detector == DetectorSpec::Oracle && a.pages.dataset.is_none() {
        bail!("the oracle detector needs --dataset with annotations");
    }
    let detector = build_detector(&a.detector, &pages, a.perturb.perturbation()?, a.seed)?;
    let params = PipelineParams::default();
    let mut records: Vec<DetectionRecord> = Vec::new();
    for p in &pages {
        let d = detect_page(p, detector.as_ref(), &params)?;
        let dets = if a.postprocess { &d.ordered } else { &d.raw };
        records.extend(
            dets.iter()
                .map(|x| DetectionRecord::from_detection(&p.page_id, x)),
        );
    }
    let json = write_interchange(&records)?;
    match &a.out {
        Some(p) => write(p, json)?,
        None => println!("{json}"),
    }
    Ok(())
}

fn cmd_pipeline(a: PipelineArgs) -> Result<()> {
    let pages = a.pages.load()?;
    let perturbation = a.perturb.perturbation()?;
    let corruption = a.engine.corruption(a.seed);
    let detector = build_detector(&a.detector, &pages, perturbation, a.seed)?;
    let work = a.out.join("ocr_work");
    let engine = build_engine(
        &a.engine.engine,
        &pages,
        corruption,
        &a.engine.engine_flags,
        &work,
    )?;
    let params = PipelineParams {
        full_page_baseline: !a.no_full_page,
        save_snippets: a.save_snippets,
        ..a.stage.params()
    };
    let mut manifest =
        RunManifest::new(detector.as_ref(), engine.as_ref(), a.seed, &params, &pages);
    if a.detector == DetectorSpec::Oracle && !a.perturb.is_none() {
        manifest.perturbation = Some(perturbation);
    }
    if a.engine.engine == EngineSpec::Mock {
        manifest.corruption = Some(corruption);
    }
    manifest.engine_flags = a.engine.engine_flags.clone();
    let run = run_pipeline(
        &pages,
        detector.as_ref(),
        engine.as_ref(),
        &params,
        manifest,
        Some(&a.out),
    )?;
    let s = &run.report.evaluation.summary;
    println!(
        "pages {} accuracy {:.4} precision {:.4} recall {:.4} f1 {:.4} bbox {:.4}",
        run.pages.len(),
        s.accuracy,
        s.precision,
        s.recall,
        s.f1,
        s.bbox_accuracy
    );
    if let (Some(c), Some(w)) = (s.cer, s.wer) {
        println!("segmented cer {c:.4} wer {w:.4}");
    }
    if let Some(f) = &run.report.full_page {
        println!("full page cer {:.4} wer {:.4}", f.cer, f.wer);
    }
    Ok(())
}

fn cmd_sweep(a: SweepArgs) -> Result<()> {
    let pages = a.pages.load()?;
    let detector = build_detector(&a.detector, &pages, a.perturb.perturbation()?, a.seed)?;
    let work = a.out.join("ocr_work");
    let engine = build_engine(
        &a.engine.engine,
        &pages,
        a.engine.corruption(a.seed),
        &a.engine.engine_flags,
        &work,
    )?;
    let params = PipelineParams {
        min_confidence: a.min_confidence,
        merge_iou: a.merge_iou,
        workers: a.workers,
        ..PipelineParams::default()
    };
    let r = sweep(
        &pages,
        detector.as_ref(),
        engine.as_ref(),
        &params,
        &a.paddings,
        &a.scales,
    )?;
    r.save(&a.out)?;
    print!("CER\n{}", r.matrix_csv(&r.cer));
    print!("WER\n{}", r.matrix_csv(&r.wer));
    Ok(())
}

fn cmd_report(a: ReportArgs) -> Result<()> {
    let mut scenarios = Vec::new();
    for p in &a.inputs {
        scenarios.extend(load_scenarios(p).with_context(|| format!("reading {}", p.display()))?);
    }
    let cmp = compare_scenarios(&scenarios)?;
    let md = cmp.to_markdown();
    print!("{md}");
    if let Some(dir) = &a.out {
        write(&dir.join("comparison.md"), &md)?;
        write(&dir.join("comparison.csv"), cmp.to_csv())?;
        write(
            &dir.join("comparison.json"),
            serde_json::to_string_pretty(&cmp)?,
        )?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Split(a) => cmd_split(a),
        Command::Stats(a) => cmd_stats(a),
        Command::Augment(a) => cmd_augment(a),
        Command::Detect(a) => cmd_detect(a),
        Command::Pipeline(a) => cmd_pipeline(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Report(a) => cmd_report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.to_string().contains(OCR_CMD_ENV) {
                eprintln!("set {OCR_CMD_ENV} to a command with {{input}} and {{output}}, or pass --engine external:TEMPLATE");
            }
            ExitCode::FAILURE
        }
    }
}
