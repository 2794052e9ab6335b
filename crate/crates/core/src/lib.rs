//! seamtrace-core: pixel-continuous contour extraction from images.
//!
//! Given an image and a rough initial polyline (splined from sparse
//! landmarks), the pipeline samples small overlapped squares along the
//! curve, rotates each so the target crosses it top to bottom, cuts one
//! locally optimal seam per square by dynamic programming over gradient
//! magnitude plus a parabola-smoothness prior, and finally connects the
//! redundant local seams into one loop-free global contour by a greedy
//! walk scored with weighted-PCA directionality.
//!
//! The crate also ships the evaluation metrics (dense/sparse mean error
//! with inter-ocular normalization, cumulative error distributions, a
//! parabola-fit study over ground-truth segments), a seeded synthetic
//! image generator with analytically known contours, and brute-force
//! oracles that verify the DP exactly on tiny patches.
//!
//! With the default `parallel` feature the per-square seam loop and the
//! per-point directionality pass run on rayon; `*_seq` variants are
//! always available and `--no-default-features` builds a fully
//! sequential crate.

pub mod config;
pub mod curve;
pub mod error;
pub mod geom;
pub mod image;
pub mod integrate;
pub mod metrics;
pub mod pipeline;
pub mod seam;
pub mod synth;

pub use config::{AlphaWeighting, Config, ScoreVariant};
pub use curve::{fit_initial_curve, parse_annotation, sample_squares, Annotation, BBox, Curve};
pub use error::{Error, Result};
pub use geom::Point;
pub use image::{extract_patch, gradient_magnitude, GradField, ImageGrid, PatchFrame, SquarePatch};
pub use integrate::{
    directionality, integrate_walk, weighted_covariance, CloudPoint, CovMatrix2, SeamCloud,
};
pub use metrics::{
    ced, curve_to_landmarks, dme, interocular, landmarks_to_curve, nearest_distances,
    parabola_fit_study, sme, FitStudy, MetricsReport,
};
pub use pipeline::{extract_contour, extract_seams, extract_seams_seq, ExtractOutput};
pub use seam::{
    fit_parabola, gradient_seam, guided_seam, parabola_error, path_objective, seam_to_global,
    Parabola, SeamParams, SeamPath,
};
pub use synth::{
    brute_force_guided_objective, brute_force_seam, derive_seed, gen_synthetic, ContourFamily,
    Distractor, Occluder, SynthSpec,
};
