//! Whole-pipeline glue: initial curve from landmarks, tangent-aligned
//! square sampling, per-square seam cutting (data-parallel when the
//! `parallel` feature is enabled), directionality, and the global walk.

use crate::config::Config;
use crate::curve::{fit_initial_curve, sample_squares, Annotation, Curve, SquareSpec};
use crate::error::Result;
use crate::image::{extract_patch, gradient_magnitude, GradField, ImageGrid};
use crate::integrate::{integrate_walk, SeamCloud};
use crate::seam::{guided_seam, SeamParams, SeamPath};

/// Everything the extraction produces, including intermediates useful for
/// overlays and diagnostics.
#[derive(Debug, Clone)]
pub struct ExtractOutput {
    pub contour: Curve,
    pub initial: Curve,
    pub squares: Vec<SquareSpec>,
    pub seams: Vec<SeamPath>,
    pub cloud: SeamCloud,
}

fn seam_for_spec(
    img: &ImageGrid,
    grads: &GradField,
    spec: &SquareSpec,
    params: &SeamParams,
) -> SeamPath {
    // Rows of the patch run along the curve tangent, so the tracked
    // segment crosses the patch top to bottom.
    let patch = extract_patch(
        img,
        grads,
        spec.center,
        spec.tangent_angle - std::f64::consts::FRAC_PI_2,
        spec.side,
    );
    let mut seam = guided_seam(&patch, params);
    seam.segment_id = spec.order_index;
    seam
}

/// Cut one seam per square. Squares are independent; this is the hot
/// per-image loop.
#[cfg(feature = "parallel")]
pub fn extract_seams(
    img: &ImageGrid,
    grads: &GradField,
    specs: &[SquareSpec],
    params: &SeamParams,
) -> Vec<SeamPath> {
    use rayon::prelude::*;
    specs
        .par_iter()
        .map(|spec| seam_for_spec(img, grads, spec, params))
        .collect()
}

#[cfg(not(feature = "parallel"))]
pub fn extract_seams(
    img: &ImageGrid,
    grads: &GradField,
    specs: &[SquareSpec],
    params: &SeamParams,
) -> Vec<SeamPath> {
    extract_seams_seq(img, grads, specs, params)
}

/// Sequential variant, always available.
pub fn extract_seams_seq(
    img: &ImageGrid,
    grads: &GradField,
    specs: &[SquareSpec],
    params: &SeamParams,
) -> Vec<SeamPath> {
    specs
        .iter()
        .map(|spec| seam_for_spec(img, grads, spec, params))
        .collect()
}

/// Run the full extraction pipeline on one image.
pub fn extract_contour(img: &ImageGrid, ann: &Annotation, cfg: &Config) -> Result<ExtractOutput> {
    cfg.validate()?;
    ann.validate()?;
    let initial = fit_initial_curve(&ann.landmarks)?;
    let bbox = ann.bbox_or_default();
    let squares = sample_squares(&initial, cfg.square_count, cfg.square_size_factor, &bbox)?;
    let grads = gradient_magnitude(img);
    let params = cfg.seam_params();
    let seams = extract_seams(img, &grads, &squares, &params);
    let mut cloud = SeamCloud::from_seams(&seams)?;
    cloud.compute_directionality(cfg.h);
    let contour = integrate_walk(&cloud, cfg.knn, cfg.score_variant)?;
    Ok(ExtractOutput {
        contour,
        initial,
        squares,
        seams,
        cloud,
    })
}
