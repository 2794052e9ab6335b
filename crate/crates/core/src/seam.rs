//! Local seam cutting: one monotone top-to-bottom path per patch, found by
//! dynamic programming over a gradient term plus a parabola-prior term.
//!
//! A seam picks one column per row with adjacent columns differing by at
//! most 1. The plain DP maximizes the summed gradient magnitude. The guided
//! DP additionally rewards each cell for staying close to a parabola fitted
//! to the path history: for rows past the window length, the candidate cell
//! `(i, j)` reached from `(i-1, j+d)` scores
//! `alpha * g(i,j) + (1 - alpha) * e(i,j)` where `e = 1 - (d_i/d_norm)^2`
//! and `d_i` is the residual of `(i, j)` against a parabola fitted to the
//! last `window` points of the best path ending at `(i-1, j+d)`. Earlier
//! rows score `alpha * g` only.
//!
//! Because the prior depends on path history the guided recurrence is a
//! greedy approximation of the full objective, not an exact optimizer; the
//! brute-force oracle in `synth` measures the gap on tiny patches.

use crate::config::AlphaWeighting;
use crate::error::{Error, Result};
use crate::geom::Point;
use crate::image::SquarePatch;

/// Order in which predecessor offsets are tried; the first candidate with
/// the maximal score wins, so ties prefer straight, then left, then right.
const DELTA_ORDER: [isize; 3] = [0, -1, 1];

/// Parameters of the guided seam DP.
#[derive(Debug, Clone, Copy)]
pub struct SeamParams {
    /// Gradient weight in `[0, 1]`; the prior weight is `1 - alpha`.
    pub alpha: f64,
    /// History length used for the parabola fit.
    pub window: usize,
    /// Residuals are scored as `1 - (d / d_norm)^2`, unclamped.
    pub d_norm: f64,
    /// Whether the alpha weights are applied or the raw recurrence is run.
    pub weighting: AlphaWeighting,
    /// Score against the exact point-to-parabola distance instead of the
    /// vertical residual.
    pub exact_distance: bool,
}

impl Default for SeamParams {
    fn default() -> Self {
        Self {
            alpha: 0.7,
            window: 20,
            d_norm: 3.0,
            weighting: AlphaWeighting::Weighted,
            exact_distance: false,
        }
    }
}

impl SeamParams {
    fn weights(&self) -> (f64, f64) {
        match self.weighting {
            AlphaWeighting::Weighted => (self.alpha, 1.0 - self.alpha),
            AlphaWeighting::Unweighted => (1.0, 1.0),
        }
    }
}

/// One extracted seam: per-row columns in patch coordinates plus the
/// corresponding global points and unit tangents.
#[derive(Debug, Clone)]
pub struct SeamPath {
    pub segment_id: usize,
    pub cols: Vec<usize>,
    pub score: f64,
    pub global_points: Vec<Point>,
    pub tangents: Vec<Point>,
}

/// `j = a*i^2 + b*i + c` in patch coordinates.
#[derive(Debug, Clone, Copy)]
pub struct Parabola {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Parabola {
    pub fn eval(&self, i: f64) -> f64 {
        (self.a * i + self.b) * i + self.c
    }

    /// Vertical residual `|j - j_hat(i)|`.
    pub fn vertical_distance(&self, i: f64, j: f64) -> f64 {
        (j - self.eval(i)).abs()
    }

    /// Exact Euclidean distance from `(i, j)` to the parabola, found by
    /// solving the cubic stationarity condition of the squared distance.
    pub fn nearest_distance(&self, i: f64, j: f64) -> f64 {
        let (a, b, c) = (self.a, self.b, self.c);
        // d/dt [ (t-i)^2 + (p(t)-j)^2 ] / 2 =
        //   2a^2 t^3 + 3ab t^2 + (b^2 + 2a(c-j) + 1) t + (b(c-j) - i)
        let c3 = 2.0 * a * a;
        let c2 = 3.0 * a * b;
        let c1 = b * b + 2.0 * a * (c - j) + 1.0;
        let c0 = b * (c - j) - i;
        let mut best = f64::INFINITY;
        for t in cubic_real_roots(c3, c2, c1, c0) {
            let dx = t - i;
            let dy = self.eval(t) - j;
            best = best.min((dx * dx + dy * dy).sqrt());
        }
        best
    }
}

/// Real roots of `c3 t^3 + c2 t^2 + c1 t + c0` (at least one is returned
/// whenever the polynomial has odd effective degree or real solutions).
fn cubic_real_roots(c3: f64, c2: f64, c1: f64, c0: f64) -> Vec<f64> {
    let scale = c3.abs().max(c2.abs()).max(c1.abs()).max(c0.abs());
    if scale == 0.0 {
        return vec![0.0];
    }
    if c3.abs() < 1e-14 * scale {
        // Quadratic (or linear) case.
        if c2.abs() < 1e-14 * scale {
            if c1.abs() < 1e-14 * scale {
                return vec![0.0];
            }
            return vec![-c0 / c1];
        }
        let disc = c1 * c1 - 4.0 * c2 * c0;
        if disc < 0.0 {
            return vec![];
        }
        let sq = disc.sqrt();
        return vec![(-c1 + sq) / (2.0 * c2), (-c1 - sq) / (2.0 * c2)];
    }
    // Normalize and depress: t = s - p/3.
    let p = c2 / c3;
    let q = c1 / c3;
    let r = c0 / c3;
    let m = q - p * p / 3.0;
    let n = 2.0 * p * p * p / 27.0 - p * q / 3.0 + r;
    let shift = -p / 3.0;
    let disc = n * n / 4.0 + m * m * m / 27.0;
    if disc > 0.0 {
        let sq = disc.sqrt();
        let u = (-n / 2.0 + sq).cbrt();
        let v = (-n / 2.0 - sq).cbrt();
        vec![u + v + shift]
    } else if m.abs() < 1e-300 {
        vec![shift]
    } else {
        // Three real roots (trigonometric form).
        let rho = (-m * m * m / 27.0).sqrt();
        let theta = ((-n / 2.0) / rho).clamp(-1.0, 1.0).acos();
        let mag = 2.0 * (-m / 3.0).sqrt();
        (0..3)
            .map(|k| mag * ((theta + 2.0 * std::f64::consts::PI * k as f64) / 3.0).cos() + shift)
            .collect()
    }
}

/// Least-squares fit of `j` as a quadratic in `i`, solved via the 3x3
/// normal equations (centered in `i` for conditioning).
pub fn fit_parabola(points: &[(f64, f64)]) -> Result<Parabola> {
    if points.len() < 3 {
        return Err(Error::Seam(format!(
            "parabola fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    let n = points.len() as f64;
    let mean_i = points.iter().map(|p| p.0).sum::<f64>() / n;
    let (mut s1, mut s2, mut s3, mut s4) = (0.0, 0.0, 0.0, 0.0);
    let (mut t0, mut t1, mut t2) = (0.0, 0.0, 0.0);
    for &(i, j) in points {
        let u = i - mean_i;
        let u2 = u * u;
        s1 += u;
        s2 += u2;
        s3 += u2 * u;
        s4 += u2 * u2;
        t0 += j;
        t1 += u * j;
        t2 += u2 * j;
    }
    let mat = [[s4, s3, s2], [s3, s2, s1], [s2, s1, n]];
    let rhs = [t2, t1, t0];
    let sol = solve3(mat, rhs).ok_or_else(|| {
        Error::Seam("singular normal matrix in parabola fit (degenerate abscissae)".into())
    })?;
    let (a, bp, cp) = (sol[0], sol[1], sol[2]);
    Ok(Parabola {
        a,
        b: bp - 2.0 * a * mean_i,
        c: cp + a * mean_i * mean_i - bp * mean_i,
    })
}

/// 3x3 linear solve with partial pivoting; `None` if singular.
fn solve3(mut m: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    let scale = m.iter().flatten().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    for col in 0..3 {
        let pivot =
            (col..3).max_by(|&r, &s| m[r][col].abs().partial_cmp(&m[s][col].abs()).unwrap())?;
        if m[pivot][col].abs() <= 1e-12 * scale.max(1e-300) {
            return None;
        }
        m.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            for k in col..3 {
                m[row][k] -= f * m[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let mut acc = b[row];
        for k in row + 1..3 {
            acc -= m[row][k] * x[k];
        }
        x[row] = acc / m[row][row];
    }
    Some(x)
}

/// Prior score of a point against a fitted parabola: `1 - (d/d_norm)^2`,
/// deliberately unclamped so large deviations act as hard penalties.
pub fn parabola_error(i: f64, j: f64, parabola: &Parabola, d_norm: f64, exact: bool) -> f64 {
    let d = if exact {
        parabola.nearest_distance(i, j)
    } else {
        parabola.vertical_distance(i, j)
    };
    let t = d / d_norm;
    1.0 - t * t
}

enum DpKind<'a> {
    Gradient,
    Guided(&'a SeamParams),
}

/// Shared DP core. Returns per-row columns and the accumulated score.
fn run_dp(patch: &SquarePatch, kind: &DpKind) -> (Vec<usize>, f64) {
    let n = patch.side();
    assert!(n >= 2, "seam DP requires side >= 2");
    let (w_g, w_e, window) = match kind {
        DpKind::Gradient => (1.0, 0.0, usize::MAX),
        DpKind::Guided(p) => {
            assert!((0.0..=1.0).contains(&p.alpha), "alpha must be in [0, 1]");
            assert!(p.window >= 3, "window must be at least 3");
            assert!(p.d_norm > 0.0, "d_norm must be positive");
            let (wg, we) = p.weights();
            (wg, we, p.window)
        }
    };
    let use_prior = w_e != 0.0 && window < n;
    let exact = matches!(kind, DpKind::Guided(p) if p.exact_distance);
    let d_norm = match kind {
        DpKind::Guided(p) => p.d_norm,
        DpKind::Gradient => 1.0,
    };

    let mut back = vec![0u32; n * n];
    let mut prev_score: Vec<f64> = (0..n).map(|j| w_g * patch.grad(0, j)).collect();
    let mut prev_parab: Vec<Option<Parabola>> = vec![None; n];
    let mut history = Vec::with_capacity(window.min(n));

    for i in 1..n {
        let guided_row = use_prior && i >= window;
        let mut row_score = vec![0.0; n];
        for j in 0..n {
            let g = patch.grad(i, j);
            let mut best = f64::NEG_INFINITY;
            let mut best_pred = j;
            for delta in DELTA_ORDER {
                let pj = j as isize + delta;
                if pj < 0 || pj >= n as isize {
                    continue;
                }
                let pj = pj as usize;
                let mut gain = w_g * g;
                if guided_row {
                    let par = prev_parab[pj]
                        .as_ref()
                        .expect("parabola cache missing for guided row");
                    gain += w_e * parabola_error(i as f64, j as f64, par, d_norm, exact);
                }
                let cand = prev_score[pj] + gain;
                if cand > best {
                    best = cand;
                    best_pred = pj;
                }
            }
            row_score[j] = best;
            back[i * n + j] = best_pred as u32;
        }
        // Cache the parabola of the best path ending at each cell of this
        // row, for use by the next row. The window is recovered by walking
        // backpointers.
        if use_prior && i + 1 >= window && i + 1 < n {
            let mut parabs = vec![None; n];
            for j in 0..n {
                history.clear();
                let mut col = j;
                let mut row = i;
                history.push((row as f64, col as f64));
                while row > 0 && history.len() < window {
                    col = back[row * n + col] as usize;
                    row -= 1;
                    history.push((row as f64, col as f64));
                }
                // Ascending row order, so the fit accumulates its sums in
                // the same order as a fit over the path itself.
                history.reverse();
                parabs[j] = fit_parabola(&history).ok();
            }
            prev_parab = parabs;
        }
        prev_score = row_score;
    }

    let mut best_j = 0;
    let mut best = prev_score[0];
    for (j, &s) in prev_score.iter().enumerate().skip(1) {
        if s > best {
            best = s;
            best_j = j;
        }
    }
    let mut cols = vec![0usize; n];
    cols[n - 1] = best_j;
    for i in (1..n).rev() {
        cols[i - 1] = back[i * n + cols[i]] as usize;
    }
    (cols, best)
}

/// The exact argmax of summed gradient magnitude over all monotone seams.
pub fn gradient_seam(patch: &SquarePatch) -> SeamPath {
    let (cols, score) = run_dp(patch, &DpKind::Gradient);
    seam_to_global(patch, cols, score)
}

/// Gradient-and-parabola guided seam. With `alpha = 1` (weighted mode)
/// this reproduces `gradient_seam` exactly; for patches no taller than the
/// window the prior never activates.
pub fn guided_seam(patch: &SquarePatch, params: &SeamParams) -> SeamPath {
    let (cols, score) = run_dp(patch, &DpKind::Guided(params));
    seam_to_global(patch, cols, score)
}

/// Evaluate the guided objective along a full path, with each prior window
/// taken from the path itself. For a path returned by `guided_seam` this
/// reproduces the stored score.
pub fn path_objective(patch: &SquarePatch, cols: &[usize], params: &SeamParams) -> f64 {
    let n = patch.side();
    assert_eq!(cols.len(), n);
    let (w_g, w_e) = params.weights();
    let mut window_pts: Vec<(f64, f64)> = Vec::with_capacity(params.window);
    let mut total = 0.0;
    for (i, &j) in cols.iter().enumerate() {
        let mut gain = w_g * patch.grad(i, j);
        if w_e != 0.0 && i >= params.window {
            window_pts.clear();
            for r in i - params.window..i {
                window_pts.push((r as f64, cols[r] as f64));
            }
            let par = fit_parabola(&window_pts).expect("window has distinct rows");
            gain += w_e
                * parabola_error(
                    i as f64,
                    j as f64,
                    &par,
                    params.d_norm,
                    params.exact_distance,
                );
        }
        total += gain;
    }
    total
}

/// Lift patch-space columns to global points and tangents. Tangents come
/// from central differences of the global points, one-sided at the ends.
pub fn seam_to_global(patch: &SquarePatch, cols: Vec<usize>, score: f64) -> SeamPath {
    let n = patch.side();
    assert_eq!(cols.len(), n);
    let pts: Vec<Point> = cols
        .iter()
        .enumerate()
        .map(|(i, &j)| patch.patch_to_global(i, j))
        .collect();
    let tangents: Vec<Point> = (0..n)
        .map(|i| {
            let (a, b) = if i == 0 {
                (0, 1)
            } else if i == n - 1 {
                (n - 2, n - 1)
            } else {
                (i - 1, i + 1)
            };
            (pts[b] - pts[a]).normalized()
        })
        .collect();
    SeamPath {
        segment_id: 0,
        cols,
        score,
        global_points: pts,
        tangents,
    }
}
