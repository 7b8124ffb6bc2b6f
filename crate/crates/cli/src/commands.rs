//! Subcommand implementations. Each returns the report it produced and does
//! its own file output, so tests can drive them without spawning a process.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use refine_core::metrics::{
    aggregate, evaluate, split_dataset, AggregateReport, GroundTruthMask, MetricsReport,
};
use refine_core::morphology::{erode, StructuringElement};
use refine_core::pipeline::{refine, RegionSummary};
use refine_core::raster::{
    load_image, load_mask_with_threshold, render_overlay, save_image, save_mask, BinaryMask,
    OverlaySpec, RgbImage, ZoneKind,
};
use refine_core::region::{extract_regions, partition_region};
use refine_core::synth::{degrade_mask, synth_generate, DegradeSpec, SynthSpec};
use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::error::{CliError, Result};
use crate::json::to_stable_json;

pub const MANIFEST_NAME: &str = "manifest.json";

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = to_stable_json(value).map_err(|e| CliError::io("serialize", e))?;
    fs::write(path, text).map_err(|e| CliError::io(path.display(), e))
}

fn file_name(path: &Path) -> String {
    path.file_name().map_or_else(
        || path.display().to_string(),
        |n| n.to_string_lossy().into_owned(),
    )
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1000.0
}

fn ensure_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| CliError::io(path.display(), e))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportConfig {
    pub erosion_radius: usize,
    pub dilation_radius: usize,
    pub smooth_gradient: bool,
    pub mask_threshold: u8,
    pub seed: u64,
}

impl From<&PipelineConfig> for ReportConfig {
    fn from(c: &PipelineConfig) -> Self {
        Self {
            erosion_radius: c.erosion_radius,
            dilation_radius: c.dilation_radius,
            smooth_gradient: c.smooth_gradient,
            mask_threshold: c.mask_threshold,
            seed: c.seed,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct TimingsMs {
    pub load: f64,
    pub extract: f64,
    pub partition: f64,
    pub watershed: f64,
    pub projection: f64,
    pub refine_total: f64,
    pub write: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ImageReport {
    pub name: String,
    pub width: usize,
    pub height: usize,
    /// `N`, the number of detected regions.
    pub regions: usize,
    pub region_details: Vec<RegionSummary>,
    pub degenerate_regions: usize,
    pub coarse_pixels: usize,
    pub refined_pixels: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub before: Option<MetricsReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub after: Option<MetricsReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings_ms: Option<TimingsMs>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BeforeAfter {
    pub before: AggregateReport,
    pub after: AggregateReport,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub config: ReportConfig,
    pub images: Vec<ImageReport>,
    pub failures: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub aggregate: Option<BeforeAfter>,
}

impl RunReport {
    fn new(cfg: &PipelineConfig, images: Vec<ImageReport>) -> Result<Self> {
        let failures = images.iter().filter(|i| i.error.is_some()).count();
        let scored: Vec<&ImageReport> = images
            .iter()
            .filter(|i| i.before.is_some() && i.after.is_some())
            .collect();
        let aggregate = if scored.is_empty() {
            None
        } else {
            let before: Vec<MetricsReport> = scored.iter().filter_map(|i| i.before).collect();
            let after: Vec<MetricsReport> = scored.iter().filter_map(|i| i.after).collect();
            Some(BeforeAfter {
                before: aggregate(&before)?,
                after: aggregate(&after)?,
            })
        };
        Ok(Self {
            config: cfg.into(),
            images,
            failures,
            aggregate,
        })
    }
}

/// What `refine` should process.
#[derive(Clone, Debug)]
pub enum RefineInput {
    Single {
        image: PathBuf,
        mask: PathBuf,
        truth: Option<PathBuf>,
    },
    /// Two directories whose PNGs are paired by identical file name.
    Directories {
        images: PathBuf,
        masks: PathBuf,
        truths: Option<PathBuf>,
    },
    /// A corpus written by `synth`.
    Corpus { dir: PathBuf },
}

struct Job {
    name: String,
    image: PathBuf,
    mask: PathBuf,
    truth: Option<PathBuf>,
    output: PathBuf,
    overlay: Option<PathBuf>,
}

fn list_pngs(dir: &Path) -> Result<Vec<String>> {
    let mut names = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| CliError::io(dir.display(), e))? {
        let entry = entry.map_err(|e| CliError::io(dir.display(), e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if name.to_ascii_lowercase().ends_with(".png") && entry.path().is_file() {
            names.push(name);
        }
    }
    names.sort();
    Ok(names)
}

fn plan_jobs(input: &RefineInput, cfg: &PipelineConfig) -> Result<Vec<Job>> {
    let output = cfg
        .output
        .clone()
        .ok_or_else(|| CliError::Usage("an output path (--out) is required".into()))?;
    match input {
        RefineInput::Single { image, mask, truth } => Ok(vec![Job {
            name: file_name(image),
            image: image.clone(),
            mask: mask.clone(),
            truth: truth.clone(),
            output,
            overlay: cfg.overlay.clone(),
        }]),
        RefineInput::Directories {
            images,
            masks,
            truths,
        } => {
            ensure_dir(&output)?;
            if let Some(o) = &cfg.overlay {
                ensure_dir(o)?;
            }
            Ok(list_pngs(images)?
                .into_iter()
                .map(|name| Job {
                    image: images.join(&name),
                    mask: masks.join(&name),
                    truth: truths.as_ref().map(|t| t.join(&name)),
                    output: output.join(&name),
                    overlay: cfg.overlay.as_ref().map(|o| o.join(&name)),
                    name,
                })
                .collect())
        }
        RefineInput::Corpus { dir } => {
            let manifest = read_manifest(&dir.join(MANIFEST_NAME))?;
            ensure_dir(&output)?;
            if let Some(o) = &cfg.overlay {
                ensure_dir(o)?;
            }
            Ok(manifest
                .items
                .iter()
                .map(|item| {
                    let out_name = format!("refined_{:04}.png", item.index);
                    Job {
                        name: item.scene.clone(),
                        image: dir.join(&item.scene),
                        mask: dir.join(&item.coarse),
                        truth: Some(dir.join(&item.truth)),
                        overlay: cfg
                            .overlay
                            .as_ref()
                            .map(|o| o.join(format!("overlay_{:04}.png", item.index))),
                        output: output.join(out_name),
                    }
                })
                .collect())
        }
    }
}

/// Frame-wide `R^T` and `R^{F+}` zones, for rendering.
pub fn confidence_zones(coarse: &BinaryMask, cfg: &PipelineConfig) -> (BinaryMask, BinaryMask) {
    let (w, h) = coarse.dims();
    let mut true_fg = BinaryMask::new(w, h);
    let mut fuzzy = BinaryMask::new(w, h);
    for region in &extract_regions(coarse).regions {
        let p = partition_region(region, cfg.erosion_radius, cfg.dilation_radius);
        true_fg.or_patch(&p.true_fg, p.window.x0, p.window.y0);
        fuzzy.or_patch(&p.extended_fuzzy, p.window.x0, p.window.y0);
    }
    (true_fg, fuzzy)
}

/// Fuzzy band in yellow, core in green, refined contour in blue on top.
pub fn render_refinement(
    image: &RgbImage,
    coarse: &BinaryMask,
    refined: &BinaryMask,
    cfg: &PipelineConfig,
) -> Result<RgbImage> {
    let (true_fg, fuzzy) = confidence_zones(coarse, cfg);
    let contour = refined.difference(&erode(refined, &StructuringElement::square(1)));
    Ok(render_overlay(
        image,
        &[
            (&fuzzy, ZoneKind::Fuzzy),
            (&true_fg, ZoneKind::TrueForeground),
            (&contour, ZoneKind::RefinedContour),
        ],
        &OverlaySpec::default(),
    )?)
}

fn run_job(job: &Job, cfg: &PipelineConfig, timings: bool) -> Result<ImageReport> {
    let t = Instant::now();
    let image = load_image(&job.image)?;
    let coarse = load_mask_with_threshold(&job.mask, cfg.mask_threshold)?;
    let truth = match &job.truth {
        Some(p) => Some(GroundTruthMask::new(load_mask_with_threshold(
            p,
            cfg.mask_threshold,
        )?)),
        None => None,
    };
    let load = t.elapsed();

    let out = refine(&image, &coarse, &cfg.params())?;
    for r in out.regions.iter().filter(|r| r.degenerate) {
        log::info!(
            "{}: region {} ({} px) kept unrefined",
            job.name,
            r.id,
            r.pixels
        );
    }

    let t = Instant::now();
    save_mask(&out.mask, &job.output)?;
    if let Some(path) = &job.overlay {
        save_image(&render_refinement(&image, &coarse, &out.mask, cfg)?, path)?;
    }
    let write = t.elapsed();

    let (before, after) = match &truth {
        Some(t) => (Some(evaluate(&coarse, t)?), Some(evaluate(&out.mask, t)?)),
        None => (None, None),
    };
    let st = out.timings;
    Ok(ImageReport {
        name: job.name.clone(),
        width: image.width(),
        height: image.height(),
        regions: out.region_count(),
        degenerate_regions: out.regions.iter().filter(|r| r.degenerate).count(),
        coarse_pixels: coarse.count(),
        refined_pixels: out.mask.count(),
        region_details: out.regions,
        before,
        after,
        timings_ms: timings.then(|| TimingsMs {
            load: ms(load),
            extract: ms(st.extract),
            partition: ms(st.partition),
            watershed: ms(st.watershed),
            projection: ms(st.projection),
            refine_total: ms(st.total),
            write: ms(write),
        }),
        error: None,
    })
}

/// Refines one image or a batch. A single image fails hard; batch entries
/// that fail are recorded in the report and skipped.
pub fn cmd_refine(input: &RefineInput, cfg: &PipelineConfig, timings: bool) -> Result<RunReport> {
    let jobs = plan_jobs(input, cfg)?;
    let single = matches!(input, RefineInput::Single { .. });
    let mut images = Vec::with_capacity(jobs.len());
    for job in &jobs {
        match run_job(job, cfg, timings) {
            Ok(r) => images.push(r),
            Err(e) if !single => {
                log::warn!("{}: {e}", job.name);
                images.push(ImageReport {
                    name: job.name.clone(),
                    error: Some(e.to_string()),
                    ..Default::default()
                });
            }
            Err(e) => return Err(e),
        }
    }
    let report = RunReport::new(cfg, images)?;
    if let Some(path) = &cfg.report {
        write_json(&report, path)?;
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvaluatedImage {
    pub pred: String,
    pub truth: String,
    pub metrics: MetricsReport,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub images: Vec<EvaluatedImage>,
    pub aggregate: AggregateReport,
}

pub fn cmd_evaluate(
    preds: &[PathBuf],
    truths: &[PathBuf],
    threshold: u8,
) -> Result<EvaluationReport> {
    if preds.len() != truths.len() {
        return Err(CliError::Usage(format!(
            "{} prediction paths but {} truth paths",
            preds.len(),
            truths.len()
        )));
    }
    if preds.is_empty() {
        return Err(CliError::Usage("nothing to evaluate".into()));
    }
    let mut images = Vec::with_capacity(preds.len());
    for (p, t) in preds.iter().zip(truths) {
        let pred = load_mask_with_threshold(p, threshold)?;
        let truth = GroundTruthMask::new(load_mask_with_threshold(t, threshold)?);
        let metrics = evaluate(&pred, &truth)?;
        images.push(EvaluatedImage {
            pred: file_name(p),
            truth: file_name(t),
            metrics,
        });
    }
    let all: Vec<MetricsReport> = images.iter().map(|i| i.metrics).collect();
    Ok(EvaluationReport {
        aggregate: aggregate(&all)?,
        images,
    })
}

/// Generator settings for a corpus; the per-item seeds are derived from the
/// corpus seed and override the `seed` fields.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorpusSpec {
    pub synth: SynthSpec,
    pub degrade: DegradeSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestItem {
    pub index: usize,
    pub scene: String,
    pub truth: String,
    pub coarse: String,
    pub synth_seed: u64,
    pub degrade_seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub count: usize,
    pub synth: SynthSpec,
    pub degrade: DegradeSpec,
    pub items: Vec<ManifestItem>,
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path.display(), e))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("{}: invalid manifest: {e}", path.display())))
}

pub fn load_corpus_spec(path: &Path) -> Result<CorpusSpec> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path.display(), e))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("{}: invalid spec: {e}", path.display())))
}

/// Item `i` uses seed `seed + i` for both the scene and its degradation;
/// the generators draw from separate PCG streams.
pub fn corpus_item(
    spec: &CorpusSpec,
    seed: u64,
    index: usize,
) -> Result<(RgbImage, GroundTruthMask, BinaryMask)> {
    let item_seed = seed.wrapping_add(index as u64);
    let synth = SynthSpec {
        seed: item_seed,
        ..spec.synth.clone()
    };
    let degrade = DegradeSpec {
        seed: item_seed,
        ..spec.degrade.clone()
    };
    let (image, truth) = synth_generate(&synth)?;
    let coarse = degrade_mask(&truth, &degrade)?;
    Ok((image, truth, coarse))
}

pub fn cmd_synth(spec: &CorpusSpec, count: usize, seed: u64, out: &Path) -> Result<Manifest> {
    spec.synth.validate()?;
    spec.degrade.validate()?;
    ensure_dir(out)?;
    let mut items = Vec::with_capacity(count);
    for index in 0..count {
        let (image, truth, coarse) = corpus_item(spec, seed, index)?;
        let item = ManifestItem {
            index,
            scene: format!("scene_{index:04}.png"),
            truth: format!("truth_{index:04}.png"),
            coarse: format!("coarse_{index:04}.png"),
            synth_seed: seed.wrapping_add(index as u64),
            degrade_seed: seed.wrapping_add(index as u64),
        };
        save_image(&image, out.join(&item.scene))?;
        save_mask(&truth, out.join(&item.truth))?;
        save_mask(&coarse, out.join(&item.coarse))?;
        items.push(item);
    }
    let manifest = Manifest {
        seed,
        count,
        synth: spec.synth.clone(),
        degrade: spec.degrade.clone(),
        items,
    };
    write_json(&manifest, &out.join(MANIFEST_NAME))?;
    Ok(manifest)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SplitCounts {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SplitReport {
    pub seed: u64,
    pub counts: SplitCounts,
    pub train: Vec<String>,
    pub val: Vec<String>,
    pub test: Vec<String>,
}

/// Splits the manifest's scenes into train/val/test.
pub fn cmd_split(manifest: &Path, seed: u64) -> Result<SplitReport> {
    let m = read_manifest(manifest)?;
    let names: Vec<String> = m.items.iter().map(|i| i.scene.clone()).collect();
    let split = split_dataset(&names, seed)?;
    Ok(SplitReport {
        seed,
        counts: SplitCounts {
            train: split.train.len(),
            val: split.val.len(),
            test: split.test.len(),
        },
        train: split.train,
        val: split.val,
        test: split.test,
    })
}

/// Refines `mask` and renders the confidence zones and the refined contour.
pub fn cmd_overlay(image: &Path, mask: &Path, cfg: &PipelineConfig, out: &Path) -> Result<()> {
    let img = load_image(image)?;
    let coarse = load_mask_with_threshold(mask, cfg.mask_threshold)?;
    let refined = refine(&img, &coarse, &cfg.params())?;
    save_image(&render_refinement(&img, &coarse, &refined.mask, cfg)?, out)?;
    Ok(())
}
