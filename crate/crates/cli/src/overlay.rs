//! RGB overlay rendering: convert the grayscale image to P6 and draw
//! 1-px-wide polylines with Bresenham lines, clipping anything outside
//! the canvas.

use seamtrace_core::{ImageGrid, Point};

/// Fixed palette cycled per contour.
pub const PALETTE: [[u8; 3]; 6] = [
    [255, 0, 0],
    [0, 200, 0],
    [0, 96, 255],
    [255, 220, 0],
    [255, 0, 255],
    [0, 220, 220],
];

/// Color used for local seam polylines.
pub const SEAM_COLOR: [u8; 3] = [255, 150, 0];

pub struct Canvas {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

impl Canvas {
    pub fn from_image(img: &ImageGrid) -> Self {
        let bytes = img.to_bytes();
        let mut data = Vec::with_capacity(bytes.len() * 3);
        for b in bytes {
            data.extend_from_slice(&[b, b, b]);
        }
        Self {
            width: img.width(),
            height: img.height(),
            data,
        }
    }

    fn put(&mut self, x: i64, y: i64, color: [u8; 3]) -> bool {
        if x < 0 || y < 0 || x >= self.width as i64 || y >= self.height as i64 {
            return false;
        }
        let idx = (y as usize * self.width + x as usize) * 3;
        self.data[idx..idx + 3].copy_from_slice(&color);
        true
    }

    /// Draw a polyline, rounding points to the pixel grid. Returns the
    /// number of clipped (out-of-canvas) pixels.
    pub fn draw_polyline(&mut self, pts: &[Point], color: [u8; 3]) -> usize {
        let mut clipped = 0;
        if pts.is_empty() {
            return 0;
        }
        if pts.len() == 1 {
            let p = pts[0];
            if !self.put(p.x.round() as i64, p.y.round() as i64, color) {
                clipped += 1;
            }
            return clipped;
        }
        for w in pts.windows(2) {
            clipped += self.draw_line(w[0], w[1], color);
        }
        clipped
    }

    fn draw_line(&mut self, a: Point, b: Point, color: [u8; 3]) -> usize {
        let mut clipped = 0;
        for (x, y) in bresenham(
            a.x.round() as i64,
            a.y.round() as i64,
            b.x.round() as i64,
            b.y.round() as i64,
        ) {
            if !self.put(x, y, color) {
                clipped += 1;
            }
        }
        clipped
    }

    /// Encode as binary P6 with optional header comment lines.
    pub fn to_ppm_bytes(&self, comments: &[String]) -> Vec<u8> {
        let mut out = b"P6\n".to_vec();
        for c in comments {
            out.extend_from_slice(format!("# {c}\n").as_bytes());
        }
        out.extend_from_slice(format!("{} {}\n255\n", self.width, self.height).as_bytes());
        out.extend_from_slice(&self.data);
        out
    }
}

/// Integer Bresenham line covering both endpoints.
pub fn bresenham(x0: i64, y0: i64, x1: i64, y1: i64) -> Vec<(i64, i64)> {
    let dx = (x1 - x0).abs();
    let dy = -(y1 - y0).abs();
    let sx = if x0 < x1 { 1 } else { -1 };
    let sy = if y0 < y1 { 1 } else { -1 };
    let mut err = dx + dy;
    let (mut x, mut y) = (x0, y0);
    let mut pts = Vec::new();
    loop {
        pts.push((x, y));
        if x == x1 && y == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
    pts
}
