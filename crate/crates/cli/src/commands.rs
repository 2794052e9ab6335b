//! Implementations of the CLI subcommands, kept as library functions so
//! integration tests can drive them directly.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use seamtrace_core::{
    ced, curve_to_landmarks, dme, extract_contour, gen_synthetic, interocular, landmarks_to_curve,
    nearest_distances, parabola_fit_study, parse_annotation, sme, Annotation, Config, Curve, Error,
    ImageGrid, MetricsReport, Point, Result, ScoreVariant, SynthSpec,
};

use crate::overlay::{Canvas, PALETTE, SEAM_COLOR};
use crate::textio;

/// Output schema of `extract`: the contour polyline plus the resolved
/// configuration that produced it.
#[derive(Debug, Serialize, Deserialize)]
pub struct ContourFile {
    pub contour: Vec<Point>,
    #[serde(default)]
    pub config: Config,
}

/// Optional side output of `extract`: every local seam polyline.
#[derive(Debug, Serialize, Deserialize)]
pub struct SeamsFile {
    pub seams: Vec<Vec<Point>>,
    #[serde(default)]
    pub config: Config,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn ms_since(t0: Instant) -> f64 {
    t0.elapsed().as_secs_f64() * 1e3
}

/// Normalizer resolution: explicit config override, else the truth
/// annotation's inter-ocular distance.
fn resolve_normalizer(cfg: &Config, ann: &Annotation) -> Result<f64> {
    match cfg.normalizer {
        Some(n) => Ok(n),
        None => interocular(ann),
    }
}

fn build_report(
    contour: &Curve,
    ann: &Annotation,
    cfg: &Config,
    runtime_ms: f64,
) -> Result<Option<MetricsReport>> {
    let Some(truth_pts) = &ann.contour else {
        return Ok(None);
    };
    let truth = Curve::new(truth_pts.clone())?;
    let normalizer = resolve_normalizer(cfg, ann)?;
    let distances = nearest_distances(contour, &truth);
    let dme_value = dme(contour, &truth, normalizer)?;
    let est_landmarks = curve_to_landmarks(contour, ann.landmarks.len())?;
    let sme_value = sme(&est_landmarks, &ann.landmarks, normalizer)?;
    Ok(Some(MetricsReport {
        dme: dme_value,
        sme: sme_value,
        normalizer,
        point_distances: distances,
        runtime_ms,
        config: cfg.clone(),
    }))
}

/// Run the pipeline on one image and write the contour file, the metrics
/// report (when ground truth is present), and optionally all local seams.
pub fn cmd_extract(
    image: &Path,
    annotation: &Path,
    cfg: &Config,
    out: &Path,
    seams_out: Option<&Path>,
    report_out: Option<&Path>,
) -> Result<()> {
    let img = ImageGrid::load(image)?;
    let ann = parse_annotation(annotation)?;
    let t0 = Instant::now();
    let result = extract_contour(&img, &ann, cfg)?;
    let runtime_ms = ms_since(t0);

    write_json(
        out,
        &ContourFile {
            contour: result.contour.points().to_vec(),
            config: cfg.clone(),
        },
    )?;
    if let Some(path) = seams_out {
        let seams: Vec<Vec<Point>> = result
            .seams
            .iter()
            .map(|s| s.global_points.clone())
            .collect();
        write_json(
            path,
            &SeamsFile {
                seams,
                config: cfg.clone(),
            },
        )?;
    }
    if let Some(report) = build_report(&result.contour, &ann, cfg, runtime_ms)? {
        let path = report_out
            .map(PathBuf::from)
            .unwrap_or_else(|| out.with_extension("report.json"));
        write_json(&path, &report)?;
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct EvalRow {
    pub image: String,
    pub dme: f64,
    pub sme: f64,
    pub runtime_ms: f64,
}

fn eval_one(name: &str, pred: &Path, truth: &Path, cfg: &Config) -> Result<EvalRow> {
    let ann = parse_annotation(truth)?;
    let truth_curve = Curve::new(ann.contour.clone().ok_or_else(|| {
        Error::Metrics(format!(
            "truth annotation {} has no contour",
            truth.display()
        ))
    })?)?;
    let normalizer = resolve_normalizer(cfg, &ann)?;
    let t0 = Instant::now();
    let (est_curve, est_landmarks) = match pred.extension().and_then(|e| e.to_str()) {
        Some("txt") => {
            let lms = textio::read_landmarks(pred)?;
            let curve = landmarks_to_curve(&lms)?;
            (curve, lms)
        }
        _ => {
            let text = fs::read_to_string(pred)?;
            let file: ContourFile = serde_json::from_str(&text)
                .map_err(|e| Error::Metrics(format!("{}: {e}", pred.display())))?;
            let curve = Curve::new(file.contour)?;
            let lms = curve_to_landmarks(&curve, ann.landmarks.len())?;
            (curve, lms)
        }
    };
    let dme_value = dme(&est_curve, &truth_curve, normalizer)?;
    let sme_value = sme(&est_landmarks, &ann.landmarks, normalizer)?;
    Ok(EvalRow {
        image: name.to_string(),
        dme: dme_value,
        sme: sme_value,
        runtime_ms: ms_since(t0),
    })
}

/// Collect `(name, pred, truth)` file pairs: a prediction file or every
/// prediction in a directory, each matched by stem to `<truth>/<stem>.json`.
fn collect_pairs(pred: &Path, truth_dir: &Path) -> Result<Vec<(String, PathBuf, PathBuf)>> {
    let preds: Vec<PathBuf> = if pred.is_dir() {
        let mut v: Vec<PathBuf> = fs::read_dir(pred)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                matches!(
                    p.extension().and_then(|e| e.to_str()),
                    Some("json") | Some("txt")
                ) && !p
                    .file_name()
                    .and_then(|n| n.to_str())
                    .is_some_and(|n| n == "manifest.json" || n.ends_with(".report.json"))
            })
            .collect();
        v.sort();
        v
    } else {
        vec![pred.to_path_buf()]
    };
    if preds.is_empty() {
        return Err(Error::Metrics("no prediction files found".into()));
    }
    preds
        .into_iter()
        .map(|p| {
            let stem = p
                .file_stem()
                .and_then(|s| s.to_str())
                .ok_or_else(|| Error::Metrics(format!("bad prediction path {}", p.display())))?
                .to_string();
            let truth = truth_dir.join(format!("{stem}.json"));
            if !truth.exists() {
                return Err(Error::Metrics(format!(
                    "no matching truth annotation for {stem} (expected {})",
                    truth.display()
                )));
            }
            Ok((stem, p, truth))
        })
        .collect()
}

fn fmt_row(image: &str, dme: f64, sme: f64, runtime_ms: f64) -> String {
    format!("{image},{dme},{sme},{runtime_ms}\n")
}

/// Evaluate predictions against truth annotations and write a CSV of
/// per-image rows plus a summary mean row. Optionally writes a cumulative
/// error distribution over the per-image DME values.
pub fn cmd_eval(
    pred: &Path,
    truth_dir: &Path,
    cfg: &Config,
    out: &Path,
    ced_out: Option<&Path>,
) -> Result<()> {
    let pairs = collect_pairs(pred, truth_dir)?;
    let rows: Vec<EvalRow> = pairs
        .par_iter()
        .map(|(name, p, t)| eval_one(name, p, t, cfg))
        .collect::<Result<Vec<_>>>()?;

    let mut csv = format!("# config: {}\n", serde_json::to_string(cfg)?);
    csv.push_str("image,dme,sme,runtime_ms\n");
    for r in &rows {
        csv.push_str(&fmt_row(&r.image, r.dme, r.sme, r.runtime_ms));
    }
    let n = rows.len() as f64;
    let mean_dme = rows.iter().map(|r| r.dme).sum::<f64>() / n;
    let mean_sme = rows.iter().map(|r| r.sme).sum::<f64>() / n;
    let mean_rt = rows.iter().map(|r| r.runtime_ms).sum::<f64>() / n;
    csv.push_str(&fmt_row("mean", mean_dme, mean_sme, mean_rt));
    fs::write(out, csv)?;

    if let Some(path) = ced_out {
        let errors: Vec<f64> = rows.iter().map(|r| r.dme).collect();
        let max = errors.iter().cloned().fold(0.0, f64::max);
        let thresholds: Vec<f64> = (0..=100).map(|k| max * 1.02 * k as f64 / 100.0).collect();
        let table = ced(&errors, &thresholds)?;
        let mut text = format!("# config: {}\n", serde_json::to_string(cfg)?);
        text.push_str("threshold,proportion\n");
        for (t, frac) in table {
            text.push_str(&format!("{t},{frac}\n"));
        }
        fs::write(path, text)?;
    }
    Ok(())
}

/// Render contours (and optionally local seams) over the image as P6.
pub fn cmd_overlay(
    image: &Path,
    contours: &[PathBuf],
    seams: Option<&Path>,
    out: &Path,
) -> Result<()> {
    let img = ImageGrid::load(image)?;
    let mut canvas = Canvas::from_image(&img);
    let mut comments = Vec::new();
    if let Some(path) = seams {
        let file: SeamsFile = serde_json::from_str(&fs::read_to_string(path)?)?;
        comments.push(format!("seams: {}", serde_json::to_string(&file.config)?));
        for seam in &file.seams {
            canvas.draw_polyline(seam, SEAM_COLOR);
        }
    }
    for (idx, path) in contours.iter().enumerate() {
        let file: ContourFile = serde_json::from_str(&fs::read_to_string(path)?)?;
        comments.push(format!(
            "contour[{idx}]: {}",
            serde_json::to_string(&file.config)?
        ));
        let clipped = canvas.draw_polyline(&file.contour, PALETTE[idx % PALETTE.len()]);
        if clipped > 0 {
            eprintln!(
                "warning: contour {} has {clipped} pixel(s) outside the image (clipped)",
                path.display()
            );
        }
    }
    fs::write(out, canvas.to_ppm_bytes(&comments))?;
    Ok(())
}

/// Images of a corpus directory: sorted `(stem, pgm, json)` triples.
fn corpus_images(dir: &Path) -> Result<Vec<(String, PathBuf, PathBuf)>> {
    let mut imgs: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().and_then(|e| e.to_str()) == Some("pgm"))
        .collect();
    imgs.sort();
    if imgs.is_empty() {
        return Err(Error::Metrics(format!(
            "no .pgm images in {}",
            dir.display()
        )));
    }
    imgs.into_iter()
        .map(|p| {
            let stem = p
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("")
                .to_string();
            let ann = p.with_extension("json");
            if !ann.exists() {
                return Err(Error::Metrics(format!(
                    "missing annotation for {}",
                    p.display()
                )));
            }
            Ok((stem, p, ann))
        })
        .collect()
}

fn apply_param(cfg: &Config, param: &str, value: &str) -> Result<Config> {
    let mut cfg = cfg.clone();
    let bad = |what: &str| Error::Config(format!("invalid value {value:?} for {what}"));
    match param {
        "square_count" | "squares" => cfg.square_count = value.parse().map_err(|_| bad(param))?,
        "square_size_factor" | "size-factor" => {
            cfg.square_size_factor = value.parse().map_err(|_| bad(param))?
        }
        "alpha" => cfg.alpha = value.parse().map_err(|_| bad(param))?,
        "window" => cfg.window = value.parse().map_err(|_| bad(param))?,
        "d_norm" => cfg.d_norm = value.parse().map_err(|_| bad(param))?,
        "h" => cfg.h = value.parse().map_err(|_| bad(param))?,
        "K" | "knn" => cfg.knn = value.parse().map_err(|_| bad(param))?,
        "score_variant" => {
            cfg.score_variant = match value {
                "corrected" => ScoreVariant::Corrected,
                "literal" => ScoreVariant::Literal,
                _ => return Err(bad(param)),
            }
        }
        "alpha_weighting" => {
            cfg.alpha_weighting = match value {
                "weighted" => seamtrace_core::AlphaWeighting::Weighted,
                "unweighted" => seamtrace_core::AlphaWeighting::Unweighted,
                _ => return Err(bad(param)),
            }
        }
        "exact_distance" => cfg.exact_distance = value.parse().map_err(|_| bad(param))?,
        other => return Err(Error::Config(format!("unknown sweep parameter {other:?}"))),
    }
    cfg.validate()?;
    Ok(cfg)
}

/// One extraction per (image, grid value); per grid value the corpus means
/// of DME, SME and runtime are reported as one CSV row.
pub fn cmd_sweep(corpus: &Path, param: &str, values: &str, cfg: &Config, out: &Path) -> Result<()> {
    let values: Vec<&str> = values.split(',').filter(|v| !v.is_empty()).collect();
    if values.is_empty() {
        return Err(Error::Config("empty sweep grid".into()));
    }
    let images = corpus_images(corpus)?;
    let mut csv = format!("# config: {}\n", serde_json::to_string(cfg)?);
    csv.push_str("param,value,mean_dme,mean_sme,mean_runtime_ms\n");
    for value in values {
        let grid_cfg = apply_param(cfg, param, value)?;
        let rows: Vec<(f64, f64, f64)> = images
            .par_iter()
            .map(|(_, img_path, ann_path)| -> Result<(f64, f64, f64)> {
                let img = ImageGrid::load(img_path)?;
                let ann = parse_annotation(ann_path)?;
                let t0 = Instant::now();
                let result = extract_contour(&img, &ann, &grid_cfg)?;
                let runtime_ms = ms_since(t0);
                let report = build_report(&result.contour, &ann, &grid_cfg, runtime_ms)?
                    .ok_or_else(|| {
                        Error::Metrics(format!("{} has no ground truth", ann_path.display()))
                    })?;
                Ok((report.dme, report.sme, runtime_ms))
            })
            .collect::<Result<Vec<_>>>()?;
        let n = rows.len() as f64;
        let mean_dme = rows.iter().map(|r| r.0).sum::<f64>() / n;
        let mean_sme = rows.iter().map(|r| r.1).sum::<f64>() / n;
        let mean_rt = rows.iter().map(|r| r.2).sum::<f64>() / n;
        csv.push_str(&format!(
            "{param},{value},{mean_dme},{mean_sme},{mean_rt}\n"
        ));
    }
    fs::write(out, csv)?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestEntry {
    image: String,
    annotation: String,
    seed: u64,
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    spec: SynthSpec,
    count: usize,
    images: Vec<ManifestEntry>,
}

/// Generate a corpus: `NNN.pgm` + `NNN.json` per image plus a manifest
/// with the base spec and every derived seed.
pub fn cmd_synth(
    spec_path: &Path,
    count: usize,
    seed_override: Option<u64>,
    out_dir: &Path,
) -> Result<()> {
    let mut spec: SynthSpec = serde_json::from_str(&fs::read_to_string(spec_path)?)
        .map_err(|e| Error::Synth(format!("bad spec file: {e}")))?;
    if let Some(s) = seed_override {
        spec.seed = s;
    }
    spec.validate()?;
    fs::create_dir_all(out_dir)?;
    let entries: Vec<ManifestEntry> = (0..count)
        .into_par_iter()
        .map(|i| -> Result<ManifestEntry> {
            let mut image_spec = spec.clone();
            image_spec.seed = seamtrace_core::derive_seed(spec.seed, i as u64);
            let (img, ann) = gen_synthetic(&image_spec)?;
            let image = format!("{i:03}.pgm");
            let annotation = format!("{i:03}.json");
            img.save_pgm(out_dir.join(&image))?;
            ann.save(out_dir.join(&annotation))?;
            Ok(ManifestEntry {
                image,
                annotation,
                seed: image_spec.seed,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    write_json(
        &out_dir.join("manifest.json"),
        &Manifest {
            spec,
            count,
            images: entries,
        },
    )?;
    Ok(())
}

/// Parabola-fit study over every annotated contour in a directory; writes
/// a histogram/cumulative CSV and prints the fraction of segments within
/// 0.05 of the fitted parabola.
pub fn cmd_study(corpus: &Path, cfg: &Config, out: &Path) -> Result<()> {
    let mut files: Vec<PathBuf> = fs::read_dir(corpus)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension().and_then(|e| e.to_str()) == Some("json")
                && p.file_name().and_then(|n| n.to_str()) != Some("manifest.json")
                && !p
                    .file_name()
                    .and_then(|n| n.to_str())
                    .is_some_and(|n| n.ends_with(".report.json"))
        })
        .collect();
    files.sort();
    let mut items = Vec::new();
    for path in &files {
        let ann = parse_annotation(path)?;
        if let Some(contour) = ann.contour.clone() {
            items.push((Curve::new(contour)?, ann.bbox_or_default()));
        }
    }
    if items.is_empty() {
        return Err(Error::Metrics(format!(
            "no annotations with contours in {}",
            corpus.display()
        )));
    }
    let study = parabola_fit_study(&items, cfg.square_count, cfg.square_size_factor)?;
    let bins = study.histogram(0.005, 0.25);
    let mut csv = format!("# config: {}\n", serde_json::to_string(cfg)?);
    csv.push_str("bin_lo,bin_hi,count,fraction,cumulative\n");
    let mut cum = 0.0;
    for (lo, hi, count, fraction) in bins {
        cum += fraction;
        let hi_str = if hi.is_finite() {
            format!("{hi}")
        } else {
            "inf".to_string()
        };
        csv.push_str(&format!("{lo},{hi_str},{count},{fraction},{cum}\n"));
    }
    fs::write(out, csv)?;
    println!(
        "segments: {} skipped: {} fraction_within_0.05: {}",
        study.errors.len(),
        study.segments_skipped,
        study.fraction_within(0.05)
    );
    Ok(())
}

/// Load a config file and apply flag overrides.
pub fn resolve_config(file: Option<&Path>, overrides: impl FnOnce(&mut Config)) -> Result<Config> {
    let mut cfg = match file {
        Some(path) => serde_json::from_str(&fs::read_to_string(path)?)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?,
        None => Config::default(),
    };
    overrides(&mut cfg);
    cfg.validate()?;
    Ok(cfg)
}
