//! Subcommand implementations. Each returns structured results; printing is
//! left to the binary.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde_json::json;
use umbra_core::detect::detect_shadows;
use umbra_core::imagecore::{load_mask, load_png, save_mask, save_png};
use umbra_core::metrics::{cd, sri, ConfusionCounts, DetectionMetrics, RegionPairAnnotation};
use umbra_core::relight::RelightReport;
use umbra_core::{remove_shadows, ImageBuffer, ShadowMask};

use crate::{CliError, PipelineConfig};

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn ensure_parent(path: &Path) -> Result<(), CliError> {
    match path.parent().filter(|p| !p.as_os_str().is_empty()) {
        Some(parent) => std::fs::create_dir_all(parent).map_err(io_err(parent)),
        None => Ok(()),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    ensure_parent(path)?;
    File::create(path).map(BufWriter::new).map_err(io_err(path))
}

/// PNG files of a directory as `(stem, path)`, sorted by stem.
pub fn list_pngs(dir: &Path) -> Result<Vec<(String, PathBuf)>, CliError> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(io_err(dir))? {
        let path = entry.map_err(io_err(dir))?.path();
        let is_png = path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("png"));
        if is_png {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                out.push((stem.to_string(), path.clone()));
            }
        }
    }
    out.sort();
    Ok(out)
}

/// Files of `primary` matched by stem with files of `secondary`.
pub fn pair_dirs(
    primary: &Path,
    secondary: &Path,
) -> Result<Vec<(String, PathBuf, PathBuf)>, CliError> {
    let files = list_pngs(primary)?;
    if files.is_empty() {
        return Err(CliError::Usage(format!(
            "no PNG files in {}",
            primary.display()
        )));
    }
    files
        .into_iter()
        .map(|(name, a)| {
            let b = secondary.join(format!("{name}.png"));
            if b.is_file() {
                Ok((name, a, b))
            } else {
                Err(CliError::Io {
                    path: b,
                    source: std::io::Error::new(std::io::ErrorKind::NotFound, "no matching file"),
                })
            }
        })
        .collect()
}

pub fn detect(image: &Path, output: &Path, cfg: &PipelineConfig) -> Result<ShadowMask, CliError> {
    cfg.validate()?;
    let mask = detect_shadows(&load_png(image)?, &cfg.detect)?;
    ensure_parent(output)?;
    save_mask(&mask, output)?;
    Ok(mask)
}

#[derive(Debug, Clone, Default)]
pub struct RemoveOptions {
    pub image: PathBuf,
    pub mask: Option<PathBuf>,
    pub auto_detect: bool,
    pub output: PathBuf,
    pub report: Option<PathBuf>,
    pub side_by_side: Option<PathBuf>,
}

#[derive(Debug)]
pub struct RemoveOutcome {
    pub output: PathBuf,
    pub duration: Duration,
    pub report: RelightReport,
}

fn obtain_mask(
    img: &ImageBuffer,
    mask: Option<&Path>,
    auto: bool,
    cfg: &PipelineConfig,
) -> Result<ShadowMask, CliError> {
    match (mask, auto) {
        (Some(path), false) => Ok(load_mask(path)?),
        (None, true) => Ok(detect_shadows(img, &cfg.detect)?),
        (Some(_), true) => Err(CliError::Usage(
            "--mask and --auto-detect are mutually exclusive".into(),
        )),
        (None, false) => Err(CliError::Usage(
            "either --mask or --auto-detect is required".into(),
        )),
    }
}

/// Removes shadows from one image. Timing covers mask acquisition, removal
/// and smoothing, but not file I/O.
pub fn remove(opts: &RemoveOptions, cfg: &PipelineConfig) -> Result<RemoveOutcome, CliError> {
    cfg.validate()?;
    let img = load_png(&opts.image)?;
    let mask_img = opts.mask.as_deref();
    let start = Instant::now();
    let mask = obtain_mask(&img, mask_img, opts.auto_detect, cfg)?;
    let (out, report) = remove_shadows(&img, &mask, &cfg.relight)?;
    let duration = start.elapsed();
    ensure_parent(&opts.output)?;
    save_png(&out, &opts.output)?;
    if let Some(path) = &opts.report {
        let mut w = create(path)?;
        report
            .write_text(&mut w)
            .and_then(|_| w.flush())
            .map_err(io_err(path))?;
    }
    if let Some(path) = &opts.side_by_side {
        ensure_parent(path)?;
        save_png(&img.hconcat(&out)?, path)?;
    }
    Ok(RemoveOutcome {
        output: opts.output.clone(),
        duration,
        report,
    })
}

/// Processes every PNG of `image_dir` in parallel, writing results with the
/// same file names into `output_dir`.
pub fn remove_batch(
    image_dir: &Path,
    mask_dir: Option<&Path>,
    auto_detect: bool,
    output_dir: &Path,
    report_dir: Option<&Path>,
    cfg: &PipelineConfig,
) -> Result<Vec<RemoveOutcome>, CliError> {
    let jobs: Vec<RemoveOptions> = match mask_dir {
        Some(masks) => pair_dirs(image_dir, masks)?
            .into_iter()
            .map(|(name, image, mask)| RemoveOptions {
                image,
                mask: Some(mask),
                auto_detect,
                output: output_dir.join(format!("{name}.png")),
                report: report_dir.map(|d| d.join(format!("{name}.txt"))),
                side_by_side: None,
            })
            .collect(),
        None => list_pngs(image_dir)?
            .into_iter()
            .map(|(name, image)| RemoveOptions {
                image,
                mask: None,
                auto_detect,
                output: output_dir.join(format!("{name}.png")),
                report: report_dir.map(|d| d.join(format!("{name}.txt"))),
                side_by_side: None,
            })
            .collect(),
    };
    std::fs::create_dir_all(output_dir).map_err(io_err(output_dir))?;
    jobs.par_iter().map(|job| remove(job, cfg)).collect()
}

#[derive(Debug, Clone)]
pub struct MaskRow {
    pub name: String,
    pub counts: ConfusionCounts,
    pub metrics: DetectionMetrics,
}

#[derive(Debug, Clone)]
pub struct MaskEvaluation {
    pub rows: Vec<MaskRow>,
    /// Scores of the pooled pixel counts.
    pub aggregate: DetectionMetrics,
}

pub fn eval_mask(pred_dir: &Path, gt_dir: &Path) -> Result<MaskEvaluation, CliError> {
    let rows = pair_dirs(pred_dir, gt_dir)?
        .into_par_iter()
        .map(|(name, pred, gt)| {
            let counts = ConfusionCounts::from_masks(&load_mask(&pred)?, &load_mask(&gt)?)?;
            Ok(MaskRow {
                name,
                metrics: DetectionMetrics::from_counts(&counts),
                counts,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut total = ConfusionCounts::default();
    rows.iter().for_each(|r| total.add(&r.counts));
    Ok(MaskEvaluation {
        aggregate: DetectionMetrics::from_counts(&total),
        rows,
    })
}

impl MaskEvaluation {
    pub fn table(&self) -> String {
        let mut s = format!(
            "{:<24} {:>8} {:>8} {:>9} {:>8} {:>8} {:>8}\n",
            "image", "acc", "recall", "precision", "f1", "ber", "iou"
        );
        let line = |s: &mut String, name: &str, m: &DetectionMetrics| {
            let _ = writeln!(
                s,
                "{:<24} {:>8.2} {:>8.2} {:>9.2} {:>8.2} {:>8.2} {:>8.2}",
                name, m.accuracy, m.recall, m.precision, m.f1, m.ber, m.iou
            );
        };
        for row in &self.rows {
            line(&mut s, &row.name, &row.metrics);
        }
        line(&mut s, "ALL", &self.aggregate);
        s
    }

    pub fn json_lines(&self) -> String {
        let record = |name: &str, m: &DetectionMetrics| {
            json!({
                "image": name,
                "accuracy": m.accuracy,
                "recall": m.recall,
                "precision": m.precision,
                "f1": m.f1,
                "ber": m.ber,
                "iou": m.iou,
            })
            .to_string()
        };
        self.rows
            .iter()
            .map(|r| record(&r.name, &r.metrics))
            .chain(std::iter::once(record("ALL", &self.aggregate)))
            .map(|l| l + "\n")
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RemovalRow {
    pub name: String,
    pub sri: f64,
    pub cd: f64,
}

#[derive(Debug, Clone)]
pub struct RemovalEvaluation {
    pub rows: Vec<RemovalRow>,
    pub mean_sri: f64,
    pub mean_cd: f64,
}

impl RemovalEvaluation {
    fn from_rows(rows: Vec<RemovalRow>) -> Self {
        let n = rows.len().max(1) as f64;
        Self {
            mean_sri: rows.iter().map(|r| r.sri).sum::<f64>() / n,
            mean_cd: rows.iter().map(|r| r.cd).sum::<f64>() / n,
            rows,
        }
    }

    pub fn table(&self) -> String {
        let mut s = format!("{:<24} {:>8} {:>8}\n", "image", "sri", "cd");
        for r in &self.rows {
            let _ = writeln!(s, "{:<24} {:>8.4} {:>8.3}", r.name, r.sri, r.cd);
        }
        let _ = writeln!(
            s,
            "{:<24} {:>8.4} {:>8.3}",
            "MEAN", self.mean_sri, self.mean_cd
        );
        s
    }

    pub fn json_lines(&self) -> String {
        self.rows
            .iter()
            .map(|r| json!({"image": r.name, "sri": r.sri, "cd": r.cd}).to_string() + "\n")
            .chain(std::iter::once(
                json!({"image": "MEAN", "sri": self.mean_sri, "cd": self.mean_cd}).to_string()
                    + "\n",
            ))
            .collect()
    }
}

pub fn eval_removal(
    result_dir: &Path,
    annotation_dir: &Path,
) -> Result<RemovalEvaluation, CliError> {
    let rows = pair_dirs(result_dir, annotation_dir)?
        .into_par_iter()
        .map(|(name, result, ann)| {
            let img = load_png(&result)?;
            let ann = RegionPairAnnotation::load(&ann)?;
            Ok(RemovalRow {
                name,
                sri: sri(&img, &ann)?,
                cd: cd(&img, &ann)?,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(RemovalEvaluation::from_rows(rows))
}

#[derive(Debug, Clone)]
pub struct BenchOptions {
    pub image_dir: PathBuf,
    pub mask_dir: PathBuf,
    pub annotation_dir: Option<PathBuf>,
    pub repeats: usize,
    /// Neighbor counts to sweep; empty runs the configured count only.
    pub neighbors: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct BenchRow {
    pub neighbors: usize,
    /// Median wall-clock seconds per image, over the repeats.
    pub seconds: Vec<(String, f64)>,
    pub scores: Option<RemovalEvaluation>,
}

impl BenchRow {
    pub fn mean_seconds(&self) -> f64 {
        self.seconds.iter().map(|s| s.1).sum::<f64>() / self.seconds.len().max(1) as f64
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Times removal on every image (sequentially, so timings do not compete)
/// and scores results against annotations when given.
pub fn bench(opts: &BenchOptions, cfg: &PipelineConfig) -> Result<Vec<BenchRow>, CliError> {
    cfg.validate()?;
    if opts.repeats == 0 {
        return Err(CliError::Usage("repeats must be at least 1".into()));
    }
    let mut inputs = Vec::new();
    for (name, image, mask) in pair_dirs(&opts.image_dir, &opts.mask_dir)? {
        let ann = match &opts.annotation_dir {
            Some(dir) => Some(RegionPairAnnotation::load(
                &dir.join(format!("{name}.png")),
            )?),
            None => None,
        };
        inputs.push((name, load_png(&image)?, load_mask(&mask)?, ann));
    }
    let sweep = if opts.neighbors.is_empty() {
        vec![cfg.relight.n_neighbors]
    } else {
        opts.neighbors.clone()
    };
    let mut rows = Vec::new();
    for n in sweep {
        let mut relight = cfg.relight.clone();
        relight.n_neighbors = n;
        relight.validate()?;
        let mut seconds = Vec::new();
        let mut scored = Vec::new();
        for (name, img, mask, ann) in &inputs {
            let mut times = Vec::new();
            let mut last = None;
            for _ in 0..opts.repeats {
                let start = Instant::now();
                let (out, _) = remove_shadows(img, mask, &relight)?;
                times.push(start.elapsed().as_secs_f64());
                last = Some(out);
            }
            seconds.push((name.clone(), median(times)));
            if let (Some(ann), Some(out)) = (ann, last) {
                scored.push(RemovalRow {
                    name: name.clone(),
                    sri: sri(&out, ann)?,
                    cd: cd(&out, ann)?,
                });
            }
        }
        rows.push(BenchRow {
            neighbors: n,
            seconds,
            scores: opts
                .annotation_dir
                .is_some()
                .then(|| RemovalEvaluation::from_rows(scored)),
        });
    }
    Ok(rows)
}

pub fn bench_table(rows: &[BenchRow]) -> String {
    let mut s = format!(
        "{:>9} {:>10} {:>8} {:>8}\n",
        "neighbors", "seconds", "sri", "cd"
    );
    for r in rows {
        let (sri, cd) = match &r.scores {
            Some(e) => (format!("{:.4}", e.mean_sri), format!("{:.3}", e.mean_cd)),
            None => ("-".into(), "-".into()),
        };
        let _ = writeln!(
            s,
            "{:>9} {:>10.4} {:>8} {:>8}",
            r.neighbors,
            r.mean_seconds(),
            sri,
            cd
        );
    }
    s
}

pub fn bench_json_lines(rows: &[BenchRow]) -> String {
    let mut s = String::new();
    for r in rows {
        let per_image: Vec<_> = r
            .seconds
            .iter()
            .map(|(n, t)| json!({"image": n, "seconds": t}))
            .collect();
        let rec = json!({
            "neighbors": r.neighbors,
            "mean_seconds": r.mean_seconds(),
            "sri": r.scores.as_ref().map(|e| e.mean_sri),
            "cd": r.scores.as_ref().map(|e| e.mean_cd),
            "images": per_image,
        });
        s += &(rec.to_string() + "\n");
    }
    s
}

/// Writes `text` to `path`, creating parent directories.
pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    let mut w = create(path)?;
    w.write_all(text.as_bytes())
        .and_then(|_| w.flush())
        .map_err(io_err(path))
}
