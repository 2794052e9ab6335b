//! Grayscale image grid with netpbm IO, Sobel gradient magnitudes, bilinear
//! sampling, and rotated square patch extraction.
//!
//! Patches are the unit of work for local seam cutting: an N×N window
//! resampled from the image so that its rows run along a chosen direction.
//! `PatchFrame` owns the isometry between patch indices and global subpixel
//! coordinates; `extract_patch` fills intensities and per-patch-normalized
//! gradient magnitudes through that map.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geom::Point;

/// Grayscale image, row-major, intensities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageGrid {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl ImageGrid {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Image("dimensions must be at least 1x1".into()));
        }
        if data.len() != width * height {
            return Err(Error::Image(format!(
                "expected {} samples, got {}",
                width * height,
                data.len()
            )));
        }
        if data.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Image("intensity outside [0, 1]".into()));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y).clamp(0.0, 1.0));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Load a binary netpbm image: P5 (gray) or P6 (color, converted to
    /// luma via `(0.299 R + 0.587 G + 0.114 B) / 255`). Maxval must be 255.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let bytes = fs::read(path.as_ref())?;
        Self::from_pnm_bytes(&bytes)
    }

    pub fn from_pnm_bytes(bytes: &[u8]) -> Result<Self> {
        let mut scan = PnmScanner::new(bytes);
        let magic = scan.token()?;
        let color = match magic {
            "P5" => false,
            "P6" => true,
            other => {
                return Err(Error::Image(format!(
                    "malformed header: unsupported magic {other:?}"
                )))
            }
        };
        let width: usize = scan.number()?;
        let height: usize = scan.number()?;
        let maxval: usize = scan.number()?;
        if maxval != 255 {
            return Err(Error::Image(format!("unsupported maxval {maxval}")));
        }
        if width == 0 || height == 0 {
            return Err(Error::Image("malformed header: zero dimension".into()));
        }
        let payload = scan.payload()?;
        let needed = width * height * if color { 3 } else { 1 };
        if payload.len() < needed {
            return Err(Error::Image(format!(
                "truncated payload: need {needed} bytes, got {}",
                payload.len()
            )));
        }
        let data = if color {
            payload[..needed]
                .chunks_exact(3)
                .map(|px| {
                    (0.299 * f64::from(px[0]) + 0.587 * f64::from(px[1]) + 0.114 * f64::from(px[2]))
                        / 255.0
                })
                .collect()
        } else {
            payload[..needed]
                .iter()
                .map(|&b| f64::from(b) / 255.0)
                .collect()
        };
        ImageGrid::new(width, height, data)
    }

    /// Quantized 8-bit view of the intensities.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.data
            .iter()
            .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
            .collect()
    }

    pub fn save_pgm(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path.as_ref(), self.to_pgm_bytes())?;
        Ok(())
    }

    pub fn to_pgm_bytes(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend(self.to_bytes());
        out
    }

    /// Bilinear sample at subpixel coordinates; out-of-bounds coordinates
    /// clamp to the nearest edge pixel.
    pub fn sample_bilinear(&self, x: f64, y: f64) -> f64 {
        sample_bilinear(self.width, self.height, &self.data, x, y)
    }
}

fn sample_bilinear(width: usize, height: usize, data: &[f64], x: f64, y: f64) -> f64 {
    let x = x.clamp(0.0, (width - 1) as f64);
    let y = y.clamp(0.0, (height - 1) as f64);
    let x0 = x.floor() as usize;
    let y0 = y.floor() as usize;
    let x1 = (x0 + 1).min(width - 1);
    let y1 = (y0 + 1).min(height - 1);
    let tx = x - x0 as f64;
    let ty = y - y0 as f64;
    let at = |xx: usize, yy: usize| data[yy * width + xx];
    let top = at(x0, y0) * (1.0 - tx) + at(x1, y0) * tx;
    let bot = at(x0, y1) * (1.0 - tx) + at(x1, y1) * tx;
    top * (1.0 - ty) + bot * ty
}

/// Gradient magnitude field, same dimensions as its source image,
/// normalized so the maximum entry is 1 (identity for a constant image).
#[derive(Debug, Clone)]
pub struct GradField {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl GradField {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn sample_bilinear(&self, x: f64, y: f64) -> f64 {
        sample_bilinear(self.width, self.height, &self.data, x, y)
    }
}

/// 3x3 Sobel with replicated borders, L2 magnitude, scaled by the field
/// maximum. `gx` responds to increase along +x, `gy` along +y.
pub fn gradient_magnitude(img: &ImageGrid) -> GradField {
    let (w, h) = (img.width, img.height);
    let mut data = vec![0.0; w * h];
    let clamp_get = |x: isize, y: isize| {
        let xc = x.clamp(0, w as isize - 1) as usize;
        let yc = y.clamp(0, h as isize - 1) as usize;
        img.get(xc, yc)
    };
    for y in 0..h as isize {
        for x in 0..w as isize {
            let p00 = clamp_get(x - 1, y - 1);
            let p10 = clamp_get(x, y - 1);
            let p20 = clamp_get(x + 1, y - 1);
            let p01 = clamp_get(x - 1, y);
            let p21 = clamp_get(x + 1, y);
            let p02 = clamp_get(x - 1, y + 1);
            let p12 = clamp_get(x, y + 1);
            let p22 = clamp_get(x + 1, y + 1);
            // Grouped as differences so constant regions cancel exactly.
            let gx = (p20 - p00) + 2.0 * (p21 - p01) + (p22 - p02);
            let gy = (p02 - p00) + 2.0 * (p12 - p10) + (p22 - p20);
            data[y as usize * w + x as usize] = (gx * gx + gy * gy).sqrt();
        }
    }
    let max = data.iter().cloned().fold(0.0, f64::max);
    if max > 0.0 {
        for v in &mut data {
            *v /= max;
        }
    }
    GradField {
        width: w,
        height: h,
        data,
    }
}

/// Pose of a square patch: the isometry between patch indices and global
/// coordinates. Patch cell `(i, j)` (row, column) maps to
/// `center + R(angle) * (j - c, i - c)` with `c = (side - 1) / 2`.
#[derive(Debug, Clone, Copy)]
pub struct PatchFrame {
    pub center: Point,
    pub angle: f64,
    pub side: usize,
}

impl PatchFrame {
    fn half(&self) -> f64 {
        (self.side - 1) as f64 / 2.0
    }

    /// Global point sampled for fractional patch coordinates `(i, j)`.
    pub fn to_global(&self, i: f64, j: f64) -> Point {
        let c = self.half();
        self.center + Point::new(j - c, i - c).rotated(self.angle)
    }

    /// Inverse map: global point to fractional `(i, j)` patch coordinates.
    pub fn to_patch(&self, p: Point) -> (f64, f64) {
        let c = self.half();
        let d = (p - self.center).rotated(-self.angle);
        (d.y + c, d.x + c)
    }
}

/// A rotated, resampled N×N window over the image. `pixels` and `grads`
/// are row-major N×N; `grads` is re-normalized to `[0, 1]` per patch.
#[derive(Debug, Clone)]
pub struct SquarePatch {
    pub frame: PatchFrame,
    pub pixels: Vec<f64>,
    pub grads: Vec<f64>,
}

impl SquarePatch {
    /// Assemble a patch from raw parts. No renormalization is applied;
    /// test and oracle code may build patches of any side ≥ 2 this way.
    pub fn from_parts(frame: PatchFrame, pixels: Vec<f64>, grads: Vec<f64>) -> Self {
        let n = frame.side;
        assert!(n >= 2, "patch side must be at least 2");
        assert_eq!(pixels.len(), n * n);
        assert_eq!(grads.len(), n * n);
        Self {
            frame,
            pixels,
            grads,
        }
    }

    pub fn side(&self) -> usize {
        self.frame.side
    }

    pub fn pixel(&self, i: usize, j: usize) -> f64 {
        self.pixels[i * self.frame.side + j]
    }

    pub fn grad(&self, i: usize, j: usize) -> f64 {
        self.grads[i * self.frame.side + j]
    }

    /// Global subpixel point sampled for patch cell `(i, j)`.
    pub fn patch_to_global(&self, i: usize, j: usize) -> Point {
        self.frame.to_global(i as f64, j as f64)
    }
}

/// Resample a rotated square window of the image and gradient field.
///
/// Rows of the patch run along the direction `angle + 90°`; the caller
/// passes `angle = tangent - 90°` to make rows follow a curve tangent so
/// the tracked segment crosses the patch top to bottom.
pub fn extract_patch(
    img: &ImageGrid,
    grads: &GradField,
    center: Point,
    angle: f64,
    side: usize,
) -> SquarePatch {
    assert!(side >= 8, "extract_patch requires side >= 8");
    let frame = PatchFrame {
        center,
        angle,
        side,
    };
    let mut pixels = Vec::with_capacity(side * side);
    let mut gvals = Vec::with_capacity(side * side);
    for i in 0..side {
        for j in 0..side {
            let p = frame.to_global(i as f64, j as f64);
            pixels.push(img.sample_bilinear(p.x, p.y));
            gvals.push(grads.sample_bilinear(p.x, p.y));
        }
    }
    let max = gvals.iter().cloned().fold(0.0, f64::max);
    if max > 0.0 {
        for v in &mut gvals {
            *v /= max;
        }
    }
    SquarePatch {
        frame,
        pixels,
        grads: gvals,
    }
}

/// Minimal whitespace/comment-aware scanner for binary netpbm headers.
struct PnmScanner<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> PnmScanner<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    fn skip_ws_and_comments(&mut self) {
        while self.pos < self.buf.len() {
            let b = self.buf[self.pos];
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else if b == b'#' {
                while self.pos < self.buf.len() && self.buf[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else {
                break;
            }
        }
    }

    fn token(&mut self) -> Result<&'a str> {
        self.skip_ws_and_comments();
        let start = self.pos;
        while self.pos < self.buf.len() && !self.buf[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::Image(
                "malformed header: unexpected end of file".into(),
            ));
        }
        std::str::from_utf8(&self.buf[start..self.pos])
            .map_err(|_| Error::Image("malformed header: non-ASCII token".into()))
    }

    fn number(&mut self) -> Result<usize> {
        let tok = self.token()?;
        tok.parse()
            .map_err(|_| Error::Image(format!("malformed header: bad number {tok:?}")))
    }

    /// Consume the single whitespace byte after the maxval and return the
    /// remaining binary payload.
    fn payload(&mut self) -> Result<&'a [u8]> {
        if self.pos >= self.buf.len() || !self.buf[self.pos].is_ascii_whitespace() {
            return Err(Error::Image(
                "malformed header: missing payload separator".into(),
            ));
        }
        self.pos += 1;
        Ok(&self.buf[self.pos..])
    }
}
