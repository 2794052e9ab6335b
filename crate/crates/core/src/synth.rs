//! Synthetic benchmark images with analytically known contours, plus
//! brute-force seam oracles for verifying the DP on tiny patches.
//!
//! Generated images are split into two regions by a single-valued contour
//! `x(y)`, rendered with exact-coverage antialiasing, optionally blurred,
//! decorated with distractors and an occluder band, perturbed by seeded
//! Gaussian noise, and quantized to 8 bits before being returned — so a
//! saved corpus is bit-identical to the in-memory one.

use serde::{Deserialize, Serialize};

use crate::curve::{Annotation, Curve};
use crate::error::{Error, Result};
use crate::geom::Point;
use crate::image::{ImageGrid, SquarePatch};
use crate::seam::{fit_parabola, parabola_error, seam_to_global, SeamParams, SeamPath};

pub mod rng {
    //! Self-contained xorshift64* generator (shift constants 12, 25, 27,
    //! multiplier 0x2545F4914F6CDD1D), seeded through one splitmix64 mixing
    //! step so that any u64 — including 0 — is a valid seed. Fixing the
    //! generator keeps corpora reproducible across platforms and
    //! implementations.

    #[derive(Debug, Clone)]
    pub struct Rng {
        state: u64,
    }

    impl Rng {
        pub fn new(seed: u64) -> Self {
            // One splitmix64 step.
            let mut z = seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
            z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
            z ^= z >> 31;
            if z == 0 {
                z = 0x9E37_79B9_7F4A_7C15;
            }
            Self { state: z }
        }

        pub fn next_u64(&mut self) -> u64 {
            let mut x = self.state;
            x ^= x >> 12;
            x ^= x << 25;
            x ^= x >> 27;
            self.state = x;
            x.wrapping_mul(0x2545_F491_4F6C_DD1D)
        }

        /// Uniform in `[0, 1)` with 53 random bits.
        pub fn uniform(&mut self) -> f64 {
            (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
        }

        pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
            lo + (hi - lo) * self.uniform()
        }

        /// Standard normal via Box-Muller.
        pub fn gaussian(&mut self) -> f64 {
            let u1 = 1.0 - self.uniform();
            let u2 = self.uniform();
            (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
        }
    }
}

use rng::Rng;

/// Derive the seed of corpus image `i` from a base seed.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    base.wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Contour family. Unset parameters are drawn from the image seed within
/// ranges that keep the contour inside the safe margin.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum ContourFamily {
    /// `x(y) = apex_x + tilt * (y - h/2) + curvature * (y - h/2)^2`.
    Parabola {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        apex_x: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        curvature: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tilt: Option<f64>,
    },
    /// Right half of an ellipse tall enough to cover every row.
    EllipseArc {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center_x: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rx: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ry: Option<f64>,
    },
    /// Natural cubic spline `x(y)` through five control stations spanning
    /// the image height; offsets are relative to the image center line.
    Spline {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        offsets: Option<Vec<f64>>,
    },
}

impl Default for ContourFamily {
    fn default() -> Self {
        ContourFamily::Parabola {
            apex_x: None,
            curvature: None,
            tilt: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Distractor {
    /// Band through `(x, y)` at `angle`, `thickness` px wide. With a
    /// `length` it becomes a finite capsule centered on `(x, y)`;
    /// otherwise it spans the whole image.
    Stripe {
        x: f64,
        y: f64,
        angle: f64,
        thickness: f64,
        intensity: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        length: Option<f64>,
    },
    Blob {
        x: f64,
        y: f64,
        radius: f64,
        intensity: f64,
    },
}

/// Flat-intensity band painted over a fraction of the contour.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Occluder {
    pub start_frac: f64,
    pub end_frac: f64,
    pub thickness: f64,
    pub intensity: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub width: usize,
    pub height: usize,
    pub contour: ContourFamily,
    /// Intensity step across the contour, in `[0, 1]`.
    pub contrast: f64,
    /// Gaussian blur sigma in pixels; 0 disables blurring.
    pub softness: f64,
    /// Additive Gaussian noise sigma; 0 disables noise.
    pub noise: f64,
    pub distractors: Vec<Distractor>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub occluder: Option<Occluder>,
    pub seed: u64,
    /// Number of sparse landmarks sampled from the interior of the truth.
    pub landmarks: usize,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            width: 256,
            height: 256,
            contour: ContourFamily::default(),
            contrast: 0.6,
            softness: 1.0,
            noise: 0.0,
            distractors: Vec::new(),
            occluder: None,
            seed: 1,
            landmarks: 9,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.width < 48 || self.height < 48 {
            return Err(Error::Synth("image must be at least 48x48".into()));
        }
        if !(0.0..=1.0).contains(&self.contrast) {
            return Err(Error::Synth("contrast must be in [0, 1]".into()));
        }
        if self.softness < 0.0 || self.noise < 0.0 {
            return Err(Error::Synth(
                "softness and noise must be non-negative".into(),
            ));
        }
        if self.landmarks < 2 {
            return Err(Error::Synth("need at least 2 landmarks".into()));
        }
        if let Some(o) = &self.occluder {
            if !(0.0..=1.0).contains(&o.start_frac)
                || !(o.start_frac < o.end_frac && o.end_frac <= 1.0)
                || o.thickness <= 0.0
            {
                return Err(Error::Synth("invalid occluder".into()));
            }
        }
        Ok(())
    }
}

/// Resolved analytic contour `x(y)`.
enum ResolvedContour {
    Quadratic {
        apex_x: f64,
        tilt: f64,
        curvature: f64,
        cy: f64,
    },
    EllipseArc {
        cx: f64,
        cy: f64,
        rx: f64,
        ry: f64,
    },
    Spline {
        ys: Vec<f64>,
        xs: Vec<f64>,
        second: Vec<f64>,
    },
}

impl ResolvedContour {
    fn x_at(&self, y: f64) -> f64 {
        match self {
            Self::Quadratic {
                apex_x,
                tilt,
                curvature,
                cy,
            } => {
                let dy = y - cy;
                apex_x + tilt * dy + curvature * dy * dy
            }
            Self::EllipseArc { cx, cy, rx, ry } => {
                let t = ((y - cy) / ry).clamp(-1.0, 1.0);
                cx + rx * (1.0 - t * t).sqrt()
            }
            Self::Spline { ys, xs, second } => {
                let n = ys.len();
                let y = y.clamp(ys[0], ys[n - 1]);
                let seg = ys.partition_point(|&v| v <= y).saturating_sub(1).min(n - 2);
                crate::curve::spline_eval(ys, xs, second, seg, y)
            }
        }
    }
}

fn resolve_contour(spec: &SynthSpec, rng: &mut Rng) -> ResolvedContour {
    let w = spec.width as f64;
    let h = spec.height as f64;
    match &spec.contour {
        ContourFamily::Parabola {
            apex_x,
            curvature,
            tilt,
        } => {
            let apex = apex_x.unwrap_or_else(|| rng.range(0.45 * w, 0.55 * w));
            let curv = curvature.unwrap_or_else(|| rng.range(-0.5 / h, 0.5 / h));
            let tl = tilt.unwrap_or_else(|| rng.range(-0.2, 0.2));
            ResolvedContour::Quadratic {
                apex_x: apex,
                tilt: tl,
                curvature: curv,
                cy: h / 2.0,
            }
        }
        ContourFamily::EllipseArc { center_x, rx, ry } => {
            let cx = center_x.unwrap_or_else(|| rng.range(0.35 * w, 0.45 * w));
            let rxx = rx.unwrap_or_else(|| rng.range(0.08 * w, 0.18 * w));
            let ryy = ry.unwrap_or_else(|| rng.range(0.65 * h, 0.95 * h));
            ResolvedContour::EllipseArc {
                cx,
                cy: h / 2.0,
                rx: rxx,
                ry: ryy,
            }
        }
        ContourFamily::Spline { offsets } => {
            let offs: Vec<f64> = match offsets {
                Some(v) => v.clone(),
                None => (0..5).map(|_| rng.range(-0.1 * w, 0.1 * w)).collect(),
            };
            let n = offs.len().max(2);
            let ys: Vec<f64> = (0..n)
                .map(|k| -0.1 * h + 1.2 * h * k as f64 / (n - 1) as f64)
                .collect();
            let xs: Vec<f64> = offs.iter().map(|o| w / 2.0 + o).collect();
            let second = crate::curve::natural_spline_second_derivs(&ys, &xs);
            ResolvedContour::Spline { ys, xs, second }
        }
    }
}

fn gaussian_blur(data: &mut [f64], w: usize, h: usize, sigma: f64) {
    if sigma <= 0.0 {
        return;
    }
    let radius = (3.0 * sigma).ceil() as isize;
    let kernel: Vec<f64> = (-radius..=radius)
        .map(|k| (-(k * k) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let norm: f64 = kernel.iter().sum();
    let kernel: Vec<f64> = kernel.iter().map(|v| v / norm).collect();
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (ki, kv) in kernel.iter().enumerate() {
                let sx = (x as isize + ki as isize - radius).clamp(0, w as isize - 1) as usize;
                acc += kv * data[y * w + sx];
            }
            tmp[y * w + x] = acc;
        }
    }
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (ki, kv) in kernel.iter().enumerate() {
                let sy = (y as isize + ki as isize - radius).clamp(0, h as isize - 1) as usize;
                acc += kv * tmp[sy * w + x];
            }
            data[y * w + x] = acc;
        }
    }
}

/// Blend `value` into pixels within `thickness / 2` of the stripe axis,
/// with one pixel of edge antialiasing. A finite `length` restricts the
/// stripe to a capsule centered on the anchor point.
#[allow(clippy::too_many_arguments)]
fn paint_stripe(
    data: &mut [f64],
    w: usize,
    h: usize,
    x0: f64,
    y0: f64,
    angle: f64,
    thickness: f64,
    value: f64,
    length: Option<f64>,
) {
    let axis = Point::new(angle.cos(), angle.sin());
    let normal = Point::new(-angle.sin(), angle.cos());
    let origin = Point::new(x0, y0);
    let half_len = length.map(|l| l / 2.0);
    for y in 0..h {
        for x in 0..w {
            let offset = Point::new(x as f64, y as f64) - origin;
            let d_perp = offset.dot(normal).abs();
            let d = match half_len {
                None => d_perp,
                Some(hl) => {
                    let along = offset.dot(axis).abs();
                    let d_par = (along - hl).max(0.0);
                    (d_perp * d_perp + d_par * d_par).sqrt()
                }
            };
            let cov = (thickness / 2.0 - d + 0.5).clamp(0.0, 1.0);
            if cov > 0.0 {
                let v = &mut data[y * w + x];
                *v = *v * (1.0 - cov) + value * cov;
            }
        }
    }
}

fn paint_blob(data: &mut [f64], w: usize, h: usize, cx: f64, cy: f64, radius: f64, value: f64) {
    for y in 0..h {
        for x in 0..w {
            let d = Point::new(x as f64, y as f64).dist(Point::new(cx, cy));
            let cov = (radius - d + 0.5).clamp(0.0, 1.0);
            if cov > 0.0 {
                let v = &mut data[y * w + x];
                *v = *v * (1.0 - cov) + value * cov;
            }
        }
    }
}

fn paint_capsule(data: &mut [f64], w: usize, h: usize, path: &Curve, thickness: f64, value: f64) {
    let pts = path.points();
    let pad = thickness / 2.0 + 1.0;
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, 0.0f64, f64::INFINITY, 0.0f64);
    for p in pts {
        x0 = x0.min(p.x - pad);
        x1 = x1.max(p.x + pad);
        y0 = y0.min(p.y - pad);
        y1 = y1.max(p.y + pad);
    }
    let xr = (x0.max(0.0) as usize)..=(x1.min(w as f64 - 1.0) as usize);
    let yr = (y0.max(0.0) as usize)..=(y1.min(h as f64 - 1.0) as usize);
    for y in yr {
        for x in xr.clone() {
            let p = Point::new(x as f64, y as f64);
            let mut d = f64::INFINITY;
            for seg in pts.windows(2) {
                d = d.min(crate::geom::point_segment_distance(p, seg[0], seg[1]));
            }
            let cov = (thickness / 2.0 - d + 0.5).clamp(0.0, 1.0);
            if cov > 0.0 {
                let v = &mut data[y * w + x];
                *v = *v * (1.0 - cov) + value * cov;
            }
        }
    }
}

/// Generate one synthetic image plus its annotation: dense ground-truth
/// contour, sparse landmarks from the contour interior (inset so local
/// seams can overhang the initial curve without leaving annotated truth),
/// fixed synthetic eye points (inter-ocular distance = width / 4), and the
/// landmark bounding box expanded by 10% per side.
pub fn gen_synthetic(spec: &SynthSpec) -> Result<(ImageGrid, Annotation)> {
    spec.validate()?;
    let mut rng = Rng::new(spec.seed);
    let contour = resolve_contour(spec, &mut rng);
    let (w, h) = (spec.width, spec.height);
    let (wf, hf) = (w as f64, h as f64);

    let margin_y = 0.16 * hf;
    let y_lo = margin_y;
    let y_hi = hf - 1.0 - margin_y;

    // Two regions split by the contour, exact-coverage antialiased.
    let lo = (0.5 - spec.contrast / 2.0).clamp(0.0, 1.0);
    let hi = (0.5 + spec.contrast / 2.0).clamp(0.0, 1.0);
    let mut data = vec![0.0; w * h];
    for y in 0..h {
        let xc = contour.x_at(y as f64);
        for x in 0..w {
            let cov = (x as f64 + 0.5 - xc).clamp(0.0, 1.0);
            data[y * w + x] = lo + (hi - lo) * cov;
        }
    }
    gaussian_blur(&mut data, w, h, spec.softness);
    for d in &spec.distractors {
        match *d {
            Distractor::Stripe {
                x,
                y,
                angle,
                thickness,
                intensity,
                length,
            } => paint_stripe(&mut data, w, h, x, y, angle, thickness, intensity, length),
            Distractor::Blob {
                x,
                y,
                radius,
                intensity,
            } => paint_blob(&mut data, w, h, x, y, radius, intensity),
        }
    }

    // Dense ground truth at 1 px vertical spacing.
    let mut truth_pts = Vec::new();
    let mut y = y_lo;
    while y <= y_hi + 1e-9 {
        truth_pts.push(Point::new(contour.x_at(y), y));
        y += 1.0;
    }
    let truth = Curve::new(truth_pts)?;

    if let Some(occ) = &spec.occluder {
        let total = truth.total_length();
        let band = truth.clipped(occ.start_frac * total, occ.end_frac * total)?;
        paint_capsule(&mut data, w, h, &band, occ.thickness, occ.intensity);
    }

    if spec.noise > 0.0 {
        for v in data.iter_mut() {
            *v += spec.noise * rng.gaussian();
        }
    }
    let img = ImageGrid::new(
        w,
        h,
        data.iter()
            .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() / 255.0)
            .collect(),
    )?;

    // Landmarks from the contour interior.
    let pad = 0.12 * hf;
    let inner: Vec<Point> = truth
        .points()
        .iter()
        .copied()
        .filter(|p| p.y >= y_lo + pad && p.y <= y_hi - pad)
        .collect();
    let inner_curve = Curve::new(inner)?;
    let landmarks = inner_curve.sample_uniform(spec.landmarks);

    let mut ann = Annotation {
        landmarks,
        contour: Some(truth.points().to_vec()),
        left_eye: Some(Point::new(0.375 * wf, 0.1 * hf)),
        right_eye: Some(Point::new(0.625 * wf, 0.1 * hf)),
        bbox: None,
    };
    ann.bbox = Some(ann.bbox_or_default());
    ann.validate()?;

    // Safe-margin check against the default square sizing.
    let side = ((0.2 * ann.bbox.unwrap().max_side()).round()).max(8.0);
    let x_ok = truth
        .points()
        .iter()
        .all(|p| p.x >= side && p.x <= wf - 1.0 - side);
    if !x_ok || y_lo < side || hf - 1.0 - y_hi < side {
        return Err(Error::Synth("contour leaves the safe margin".into()));
    }

    Ok((img, ann))
}

// ---------------------------------------------------------------------------
// Brute-force oracles
// ---------------------------------------------------------------------------

const MAX_ORACLE_SIDE: usize = 12;

fn delta_rank(delta: isize) -> u8 {
    match delta {
        0 => 0,
        -1 => 1,
        _ => 2,
    }
}

/// Total order used to pick among enumerated paths: higher score first,
/// then smaller final column, then the backtracking preference (straight,
/// left, right) applied from the last row upwards. This reproduces exactly
/// the path the DP's tie-breaking selects.
fn path_better(score_a: f64, cols_a: &[usize], score_b: f64, cols_b: &[usize]) -> bool {
    if score_a != score_b {
        return score_a > score_b;
    }
    let last = cols_a.len() - 1;
    if cols_a[last] != cols_b[last] {
        return cols_a[last] < cols_b[last];
    }
    for t in (1..=last).rev() {
        let da = delta_rank(cols_a[t - 1] as isize - cols_a[t] as isize);
        let db = delta_rank(cols_b[t - 1] as isize - cols_b[t] as isize);
        if da != db {
            return da < db;
        }
    }
    false
}

struct Enumerator<'a> {
    patch: &'a SquarePatch,
    n: usize,
    w_g: f64,
    w_e: f64,
    window: usize,
    d_norm: f64,
    cols: Vec<usize>,
    window_buf: Vec<(f64, f64)>,
    best_cols: Option<Vec<usize>>,
    best_score: f64,
}

impl<'a> Enumerator<'a> {
    fn gain(&mut self, row: usize, col: usize) -> f64 {
        let mut gain = self.w_g * self.patch.grad(row, col);
        if self.w_e != 0.0 && row >= self.window {
            self.window_buf.clear();
            for r in row - self.window..row {
                self.window_buf.push((r as f64, self.cols[r] as f64));
            }
            let par = fit_parabola(&self.window_buf).expect("distinct rows");
            gain += self.w_e * parabola_error(row as f64, col as f64, &par, self.d_norm, false);
        }
        gain
    }

    fn dfs(&mut self, row: usize, score: f64) {
        if row == self.n {
            let better = match &self.best_cols {
                None => true,
                Some(best) => path_better(score, &self.cols, self.best_score, best),
            };
            if better {
                self.best_score = score;
                self.best_cols = Some(self.cols.clone());
            }
            return;
        }
        let prev = self.cols[row - 1] as isize;
        for delta in [-1isize, 0, 1] {
            let col = prev + delta;
            if col < 0 || col >= self.n as isize {
                continue;
            }
            let col = col as usize;
            self.cols.push(col);
            let g = self.gain(row, col);
            self.dfs(row + 1, score + g);
            self.cols.pop();
        }
    }

    fn run(mut self) -> (Vec<usize>, f64) {
        for j0 in 0..self.n {
            self.cols.clear();
            self.cols.push(j0);
            let g = self.gain(0, j0);
            self.dfs(1, g);
        }
        (self.best_cols.expect("at least one path"), self.best_score)
    }
}

/// Exhaustive enumeration of all monotone seams, maximizing the summed
/// gradient magnitude with the same tie-break order as the DP.
pub fn brute_force_seam(patch: &SquarePatch) -> Result<SeamPath> {
    let n = patch.side();
    if n > MAX_ORACLE_SIDE {
        return Err(Error::Synth(format!(
            "patch side {n} too large for exhaustive enumeration (max {MAX_ORACLE_SIDE})"
        )));
    }
    let (cols, score) = Enumerator {
        patch,
        n,
        w_g: 1.0,
        w_e: 0.0,
        window: usize::MAX,
        d_norm: 1.0,
        cols: Vec::with_capacity(n),
        window_buf: Vec::new(),
        best_cols: None,
        best_score: f64::NEG_INFINITY,
    }
    .run();
    Ok(seam_to_global(patch, cols, score))
}

/// Exhaustive argmax of the full guided objective, with prior windows
/// taken from the actual path (no backtracking approximation). Used to
/// measure the greedy DP's gap; its score upper-bounds any path's
/// objective, including the DP's.
pub fn brute_force_guided_objective(
    patch: &SquarePatch,
    params: &SeamParams,
) -> Result<(SeamPath, f64)> {
    let n = patch.side();
    if n > MAX_ORACLE_SIDE {
        return Err(Error::Synth(format!(
            "patch side {n} too large for exhaustive enumeration (max {MAX_ORACLE_SIDE})"
        )));
    }
    let (w_g, w_e) = match params.weighting {
        crate::config::AlphaWeighting::Weighted => (params.alpha, 1.0 - params.alpha),
        crate::config::AlphaWeighting::Unweighted => (1.0, 1.0),
    };
    let (cols, score) = Enumerator {
        patch,
        n,
        w_g,
        w_e,
        window: params.window,
        d_norm: params.d_norm,
        cols: Vec::with_capacity(n),
        window_buf: Vec::with_capacity(params.window),
        best_cols: None,
        best_score: f64::NEG_INFINITY,
    }
    .run();
    Ok((seam_to_global(patch, cols, score), score))
}
