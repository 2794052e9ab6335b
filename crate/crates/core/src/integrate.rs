//! Global seam integration: pool all local seams into one point cloud,
//! score every point by how consistently its neighborhood is aligned
//! (weighted-PCA directionality), then greedily walk a single loop-free
//! contour through the cloud.

use crate::config::ScoreVariant;
use crate::curve::Curve;
use crate::error::{Error, Result};
use crate::geom::Point;
use crate::seam::SeamPath;

/// One pooled seam point: segment id `k`, index `i` within the segment,
/// position, unit tangent of its seam, and directionality `sigma`.
#[derive(Debug, Clone, Copy)]
pub struct CloudPoint {
    pub segment: usize,
    pub index: usize,
    pub pos: Point,
    pub tangent: Point,
    pub sigma: f64,
}

/// All seam points, flattened as `segment * segment_len + index`.
#[derive(Debug, Clone)]
pub struct SeamCloud {
    pub points: Vec<CloudPoint>,
    pub segment_count: usize,
    pub segment_len: usize,
}

/// Symmetric 2x2 covariance accumulator.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CovMatrix2 {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl CovMatrix2 {
    /// Eigenvalues `(lambda0, lambda1)` with `lambda0 <= lambda1`,
    /// via the closed-form 2x2 solution.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let mean = 0.5 * (self.xx + self.yy);
        let half_diff = 0.5 * (self.xx - self.yy);
        let r = (half_diff * half_diff + self.xy * self.xy).sqrt();
        (mean - r, mean + r)
    }
}

/// Weighted covariance of the offsets from `p` to every other cloud point,
/// with kernel `theta(r) = exp(-r^2 / (h/2)^2)`. Contributions with
/// `theta < 1e-12` are skipped.
pub fn weighted_covariance(p: Point, cloud: &SeamCloud, h: f64) -> CovMatrix2 {
    weighted_covariance_of_points(p, cloud.points.iter().map(|c| c.pos), h)
}

fn weighted_covariance_of_points(
    p: Point,
    positions: impl Iterator<Item = Point>,
    h: f64,
) -> CovMatrix2 {
    assert!(h > 0.0, "support radius must be positive");
    let inv_s2 = 1.0 / (h * h / 4.0);
    // Far contributions are negligible and may be dropped. The cutoff is
    // set at theta < 1e-16 rather than the permissible 1e-12 so that the
    // skipped matrix mass (theta * r^2 per term) stays far below the
    // 1e-9 tolerance the covariance is verified to.
    let cutoff = (1e16_f64).ln() / inv_s2;
    let mut cov = CovMatrix2::default();
    for q in positions {
        let d = q - p;
        let r2 = d.dot(d);
        if r2 == 0.0 || r2 > cutoff {
            continue;
        }
        let w = (-r2 * inv_s2).exp();
        cov.xx += w * d.x * d.x;
        cov.xy += w * d.x * d.y;
        cov.yy += w * d.y * d.y;
    }
    cov
}

/// Directionality degree `sigma = lambda1 / (lambda0 + lambda1)` in
/// `[0.5, 1]`; an isolated point (zero matrix) scores 0.5 by convention.
pub fn directionality(cov: &CovMatrix2) -> f64 {
    let (l0, l1) = cov.eigenvalues();
    let l0 = l0.max(0.0);
    let denom = l0 + l1;
    if denom <= 0.0 {
        0.5
    } else {
        l1 / denom
    }
}

impl SeamCloud {
    /// Pool ordered seams into a cloud. Every seam must have the same
    /// length and `segment_id` equal to its position.
    pub fn from_seams(seams: &[SeamPath]) -> Result<Self> {
        if seams.is_empty() {
            return Err(Error::Integrate("no seams to integrate".into()));
        }
        let segment_len = seams[0].global_points.len();
        if segment_len < 2 {
            return Err(Error::Integrate("seams too short".into()));
        }
        let mut points = Vec::with_capacity(seams.len() * segment_len);
        for (k, seam) in seams.iter().enumerate() {
            if seam.segment_id != k {
                return Err(Error::Integrate(format!(
                    "seam segment ids must be contiguous: got {} at position {k}",
                    seam.segment_id
                )));
            }
            if seam.global_points.len() != segment_len || seam.tangents.len() != segment_len {
                return Err(Error::Integrate("seams have mismatched lengths".into()));
            }
            for i in 0..segment_len {
                points.push(CloudPoint {
                    segment: k,
                    index: i,
                    pos: seam.global_points[i],
                    tangent: seam.tangents[i],
                    sigma: 0.5,
                });
            }
        }
        Ok(Self {
            points,
            segment_count: seams.len(),
            segment_len,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn flat_index(&self, segment: usize, index: usize) -> usize {
        segment * self.segment_len + index
    }

    /// Precompute `sigma` for every point. Independent per point, so this
    /// runs data-parallel when the `parallel` feature is enabled.
    #[cfg(feature = "parallel")]
    pub fn compute_directionality(&mut self, h: f64) {
        use rayon::prelude::*;
        let positions: Vec<Point> = self.points.iter().map(|p| p.pos).collect();
        let sigmas: Vec<f64> = positions
            .par_iter()
            .map(|&p| {
                let cov = weighted_covariance_of_points(p, positions.iter().copied(), h);
                directionality(&cov)
            })
            .collect();
        for (pt, s) in self.points.iter_mut().zip(sigmas) {
            pt.sigma = s;
        }
    }

    #[cfg(not(feature = "parallel"))]
    pub fn compute_directionality(&mut self, h: f64) {
        self.compute_directionality_seq(h);
    }

    /// Sequential variant, always available.
    pub fn compute_directionality_seq(&mut self, h: f64) {
        let positions: Vec<Point> = self.points.iter().map(|p| p.pos).collect();
        let sigmas: Vec<f64> = positions
            .iter()
            .map(|&p| {
                let cov = weighted_covariance_of_points(p, positions.iter().copied(), h);
                directionality(&cov)
            })
            .collect();
        for (pt, s) in self.points.iter_mut().zip(sigmas) {
            pt.sigma = s;
        }
    }

    /// Indices of the `k` nearest points to `points[query]`, excluding the
    /// query itself. Distance ties break by `(segment, index)` order.
    pub fn knn(&self, query: usize, k: usize) -> Result<Vec<usize>> {
        assert!(k >= 1);
        if self.points.len() < k + 1 {
            return Err(Error::Integrate(format!(
                "cloud of {} points cannot answer {k}-NN queries",
                self.points.len()
            )));
        }
        let q = self.points[query].pos;
        let mut entries: Vec<(f64, usize, usize, usize)> = self
            .points
            .iter()
            .enumerate()
            .filter(|(idx, _)| *idx != query)
            .map(|(idx, p)| (q.dist(p.pos), p.segment, p.index, idx))
            .collect();
        let cmp = |a: &(f64, usize, usize, usize), b: &(f64, usize, usize, usize)| {
            a.0.partial_cmp(&b.0)
                .unwrap()
                .then(a.1.cmp(&b.1))
                .then(a.2.cmp(&b.2))
        };
        entries.select_nth_unstable_by(k - 1, cmp);
        entries.truncate(k);
        entries.sort_unstable_by(cmp);
        Ok(entries.into_iter().map(|e| e.3).collect())
    }
}

/// Greedy contour walk. Starts at the first point of the first segment.
/// If the whole K-neighborhood of the current point comes from the same
/// segment the walk advances to the next point of that segment; otherwise
/// it scores the unvisited neighbors that either belong to another segment
/// or are the in-segment successor, and takes the argmax. The walk stops
/// at the last point of the last segment, when no candidate remains, or at
/// the cloud-size step cap. Visited points are never revisited.
pub fn integrate_walk(cloud: &SeamCloud, k: usize, variant: ScoreVariant) -> Result<Curve> {
    if cloud.is_empty() {
        return Err(Error::Integrate("empty cloud".into()));
    }
    let n = cloud.segment_len;
    let m = cloud.segment_count;
    let cap = m * n;
    let mut visited = vec![false; cloud.len()];
    let mut order = Vec::with_capacity(cap.min(4096));
    visited[0] = true;
    order.push(0usize);

    while order.len() < cap {
        let cur_idx = *order.last().unwrap();
        let cur = cloud.points[cur_idx];
        if cur.segment == m - 1 && cur.index == n - 1 {
            break;
        }
        let neighbors = cloud.knn(cur_idx, k)?;
        let all_same_segment = neighbors
            .iter()
            .all(|&q| cloud.points[q].segment == cur.segment);
        let next = if all_same_segment {
            if cur.index + 1 == n {
                break;
            }
            let succ = cloud.flat_index(cur.segment, cur.index + 1);
            if visited[succ] {
                break;
            }
            succ
        } else {
            let mut best: Option<(f64, usize, usize, usize)> = None;
            for &q in &neighbors {
                if visited[q] {
                    continue;
                }
                let cand = cloud.points[q];
                let eligible = cand.segment != cur.segment || cand.index == cur.index + 1;
                if !eligible {
                    continue;
                }
                let offset = cand.pos - cur.pos;
                let len = offset.norm();
                if len <= 1e-12 {
                    continue;
                }
                let dir = offset / len;
                let score = match variant {
                    ScoreVariant::Corrected => cand.sigma + cur.tangent.dot(dir),
                    ScoreVariant::Literal => cur.sigma - cur.tangent.dot(dir),
                };
                let key = (score, cand.segment, cand.index);
                let better = match best {
                    None => true,
                    Some((bs, bseg, bidx, _)) => {
                        score > bs || (score == bs && (cand.segment, cand.index) < (bseg, bidx))
                    }
                };
                if better {
                    best = Some((key.0, key.1, key.2, q));
                }
            }
            match best {
                Some((_, _, _, q)) => q,
                None => break,
            }
        };
        visited[next] = true;
        order.push(next);
    }

    let pts: Vec<Point> = order.iter().map(|&i| cloud.points[i].pos).collect();
    Curve::new(pts)
}
