//! Evaluation metrics: dense mean error against a ground-truth curve,
//! sparse mean error against landmarks, inter-ocular normalization,
//! curve/landmark conversions, cumulative error distributions, and the
//! parabola-fit study over ground-truth segments.

use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::curve::{fit_initial_curve, sample_squares, Annotation, BBox, Curve};
use crate::error::{Error, Result};
use crate::geom::{point_segment_distance, Point};
use crate::image::PatchFrame;
use crate::seam::fit_parabola;

/// Per-image evaluation record.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsReport {
    pub dme: f64,
    pub sme: f64,
    pub normalizer: f64,
    pub point_distances: Vec<f64>,
    pub runtime_ms: f64,
    pub config: Config,
}

/// Euclidean distance between the annotated eye centers.
pub fn interocular(ann: &Annotation) -> Result<f64> {
    match (ann.left_eye, ann.right_eye) {
        (Some(l), Some(r)) => {
            let d = l.dist(r);
            if d > 0.0 {
                Ok(d)
            } else {
                Err(Error::Metrics("inter-ocular distance is zero".into()))
            }
        }
        _ => Err(Error::Metrics(
            "missing eye annotations; supply an explicit normalizer".into(),
        )),
    }
}

/// Nearest distance from each estimated point to the truth polyline
/// (exact point-to-segment, not point-to-vertex).
pub fn nearest_distances(estimated: &Curve, truth: &Curve) -> Vec<f64> {
    let tp = truth.points();
    estimated
        .points()
        .iter()
        .map(|&p| {
            let mut best = f64::INFINITY;
            for w in tp.windows(2) {
                best = best.min(point_segment_distance(p, w[0], w[1]));
            }
            best
        })
        .collect()
}

/// Dense mean error: mean nearest distance to the truth curve, divided by
/// the normalizer.
pub fn dme(estimated: &Curve, truth: &Curve, normalizer: f64) -> Result<f64> {
    if !(normalizer > 0.0) {
        return Err(Error::Metrics("normalizer must be positive".into()));
    }
    let d = nearest_distances(estimated, truth);
    Ok(d.iter().sum::<f64>() / d.len() as f64 / normalizer)
}

/// Sparse mean error: mean distance between corresponding landmark pairs,
/// divided by the normalizer. Correspondence is by index order.
pub fn sme(estimated: &[Point], truth: &[Point], normalizer: f64) -> Result<f64> {
    if estimated.len() != truth.len() {
        return Err(Error::Metrics(format!(
            "landmark count mismatch: {} vs {}",
            estimated.len(),
            truth.len()
        )));
    }
    if estimated.is_empty() {
        return Err(Error::Metrics("empty landmark sets".into()));
    }
    if !(normalizer > 0.0) {
        return Err(Error::Metrics("normalizer must be positive".into()));
    }
    let total: f64 = estimated.iter().zip(truth).map(|(a, b)| a.dist(*b)).sum();
    Ok(total / estimated.len() as f64 / normalizer)
}

/// Sample `n` points from the curve at uniform arc-length fractions.
pub fn curve_to_landmarks(curve: &Curve, n: usize) -> Result<Vec<Point>> {
    if n < 2 {
        return Err(Error::Metrics("need at least 2 landmarks".into()));
    }
    Ok(curve.sample_uniform(n))
}

/// Spline a landmark set into a dense curve (shared with the initial-curve
/// construction).
pub fn landmarks_to_curve(landmarks: &[Point]) -> Result<Curve> {
    fit_initial_curve(landmarks)
}

/// Cumulative error distribution: for each threshold, the fraction of
/// errors at or below it.
pub fn ced(errors: &[f64], thresholds: &[f64]) -> Result<Vec<(f64, f64)>> {
    if errors.is_empty() {
        return Err(Error::Metrics("no errors to accumulate".into()));
    }
    let n = errors.len() as f64;
    Ok(thresholds
        .iter()
        .map(|&t| {
            let cnt = errors.iter().filter(|&&e| e <= t).count();
            (t, cnt as f64 / n)
        })
        .collect())
}

/// Result of the parabola-fit study: per-segment RMS residuals normalized
/// by the patch side.
#[derive(Debug, Clone)]
pub struct FitStudy {
    pub errors: Vec<f64>,
    pub segments_skipped: usize,
}

impl FitStudy {
    pub fn fraction_within(&self, threshold: f64) -> f64 {
        if self.errors.is_empty() {
            return 0.0;
        }
        self.errors.iter().filter(|&&e| e <= threshold).count() as f64 / self.errors.len() as f64
    }

    /// Fixed-width histogram over `[0, max]` with an overflow bin.
    /// Returns `(bin_lo, bin_hi, count, fraction)` rows.
    pub fn histogram(&self, bin_width: f64, max: f64) -> Vec<(f64, f64, usize, f64)> {
        assert!(bin_width > 0.0 && max > 0.0);
        let bins = (max / bin_width).ceil() as usize;
        let mut counts = vec![0usize; bins + 1];
        for &e in &self.errors {
            let idx = if e >= max {
                bins
            } else {
                (e / bin_width) as usize
            };
            counts[idx.min(bins)] += 1;
        }
        let total = self.errors.len().max(1) as f64;
        counts
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let lo = i as f64 * bin_width;
                let hi = if i == bins {
                    f64::INFINITY
                } else {
                    lo + bin_width
                };
                (lo, hi, c, c as f64 / total)
            })
            .collect()
    }
}

/// For each tangent-aligned square sampled along each truth curve, clip
/// the curve to the patch frame, least-squares fit a parabola in patch
/// coordinates, and record the RMS residual divided by the patch side.
/// Squares whose clipped segment is too short to fit are skipped.
pub fn parabola_fit_study(
    items: &[(Curve, BBox)],
    square_count: usize,
    size_factor: f64,
) -> Result<FitStudy> {
    let mut errors = Vec::new();
    let mut skipped = 0usize;
    for (curve, bbox) in items {
        let squares = sample_squares(curve, square_count, size_factor, bbox)?;
        for spec in &squares {
            let frame = PatchFrame {
                center: spec.center,
                angle: spec.tangent_angle - std::f64::consts::FRAC_PI_2,
                side: spec.side,
            };
            let hi = (spec.side - 1) as f64;
            let pts: Vec<(f64, f64)> = curve
                .points()
                .iter()
                .filter_map(|&p| {
                    let (i, j) = frame.to_patch(p);
                    ((0.0..=hi).contains(&i) && (0.0..=hi).contains(&j)).then_some((i, j))
                })
                .collect();
            let spread = pts
                .iter()
                .map(|p| p.0)
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                    (lo.min(v), hi.max(v))
                });
            if pts.len() < 3 || spread.1 - spread.0 < 1e-6 {
                skipped += 1;
                continue;
            }
            match fit_parabola(&pts) {
                Ok(par) => {
                    let ss: f64 = pts.iter().map(|&(i, j)| (j - par.eval(i)).powi(2)).sum();
                    let rms = (ss / pts.len() as f64).sqrt();
                    errors.push(rms / spec.side as f64);
                }
                Err(_) => skipped += 1,
            }
        }
    }
    Ok(FitStudy {
        errors,
        segments_skipped: skipped,
    })
}
