//! Parametric shape masks with an area of approximately `n x n` pixels.
//!
//! Square and Rectangle hit `n^2` exactly. The curved and slanted shapes are
//! rasterized by pixel-center inclusion; their scale is searched so that the
//! popcount lands as close to `n^2` as the pixel grid allows (within 2% for
//! `n >= 20`).

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::mask::BinaryMask;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ShapeKind {
    Square,
    Circle,
    /// 2:1 (wide) rectangle.
    Rectangle,
    /// L1 ball.
    Diamond,
    /// Isoceles, apex up, equilateral proportions.
    Triangle,
    /// 2:1 (wide) ellipse.
    Ellipse,
}

impl ShapeKind {
    pub const ALL: [ShapeKind; 6] = [
        ShapeKind::Square,
        ShapeKind::Circle,
        ShapeKind::Rectangle,
        ShapeKind::Diamond,
        ShapeKind::Triangle,
        ShapeKind::Ellipse,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ShapeKind::Square => "square",
            ShapeKind::Circle => "circle",
            ShapeKind::Rectangle => "rectangle",
            ShapeKind::Diamond => "diamond",
            ShapeKind::Triangle => "triangle",
            ShapeKind::Ellipse => "ellipse",
        }
    }

    /// Whether pixel center `(y, x)`, relative to the shape's reference
    /// point, lies inside the shape at the given scale.
    fn inside(self, scale: f64, y: f64, x: f64) -> bool {
        match self {
            ShapeKind::Circle => y * y + x * x <= scale * scale,
            ShapeKind::Ellipse => {
                let a = 2.0 * scale;
                (x / a).powi(2) + (y / scale).powi(2) <= 1.0
            }
            ShapeKind::Diamond => y.abs() + x.abs() <= scale,
            // apex at y = 0; half-width grows by tan(30deg) per row
            ShapeKind::Triangle => y >= 0.0 && y <= scale && x.abs() <= y * TRIANGLE_SLOPE,
            ShapeKind::Square | ShapeKind::Rectangle => unreachable!("axis-aligned shapes are built directly"),
        }
    }

    fn reach(self, scale: f64) -> i64 {
        let r = match self {
            ShapeKind::Ellipse => 2.0 * scale,
            _ => scale,
        };
        r.ceil() as i64 + 1
    }
}

const TRIANGLE_SLOPE: f64 = 0.577_350_269_189_625_8;

impl fmt::Display for ShapeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ShapeKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        ShapeKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                format!("unknown shape '{s}' (expected one of square, circle, rectangle, diamond, triangle, ellipse)")
            })
    }
}

/// The shape cropped to its bounding box.
pub fn shape_footprint(kind: ShapeKind, n: usize) -> Result<BinaryMask> {
    if n == 0 {
        return Err(Error::ZeroSize);
    }
    match kind {
        ShapeKind::Square => BinaryMask::ones(n, n),
        ShapeKind::Rectangle => rectangle_footprint(n),
        _ => raster_footprint(kind, n),
    }
}

/// Places `kind` with bounding-box top-left at `anchor` on an `canvas`-sized
/// zero mask.
pub fn generate_shape_mask(
    kind: ShapeKind,
    n: usize,
    anchor: (usize, usize),
    canvas: (usize, usize),
) -> Result<BinaryMask> {
    let (height, width) = canvas;
    let mut out = BinaryMask::zeros(height, width)?;
    let fp = shape_footprint(kind, n)?;
    let (row, col) = anchor;
    if row + fp.height() > height || col + fp.width() > width {
        return Err(Error::ShapeDoesNotFit {
            n,
            row,
            col,
            needed_height: fp.height(),
            needed_width: fp.width(),
            height,
            width,
        });
    }
    for i in 0..fp.height() {
        for j in 0..fp.width() {
            if fp.get(i, j) {
                out.set(row + i, col + j, true);
            }
        }
    }
    Ok(out)
}

/// Anchor that centers the shape's bounding box on the canvas, if it fits.
pub fn centered_anchor(kind: ShapeKind, n: usize, canvas: (usize, usize)) -> Result<(usize, usize)> {
    let fp = shape_footprint(kind, n)?;
    let (h, w) = canvas;
    if fp.height() > h || fp.width() > w {
        return Err(Error::ShapeDoesNotFit {
            n,
            row: 0,
            col: 0,
            needed_height: fp.height(),
            needed_width: fp.width(),
            height: h,
            width: w,
        });
    }
    Ok(((h - fp.height()) / 2, (w - fp.width()) / 2))
}

/// `rows x cols` with `cols ~ 2 rows`; the `n^2 - rows*cols` leftover pixels
/// form a partial trailing column so the area is exactly `n^2`.
fn rectangle_footprint(n: usize) -> Result<BinaryMask> {
    let area = n * n;
    let rows = ((n as f64) / std::f64::consts::SQRT_2).round().max(1.0) as usize;
    let cols = area / rows;
    let rem = area - rows * cols;
    let width = cols + usize::from(rem > 0);
    BinaryMask::from_fn(rows, width, |i, j| j < cols || i < rem)
}

fn raster_footprint(kind: ShapeKind, n: usize) -> Result<BinaryMask> {
    let target = (n * n) as i64;
    let mut best: Option<(i64, f64, (f64, f64))> = None;
    for offset in [(0.0, 0.0), (0.5, 0.0), (0.0, 0.5), (0.5, 0.5)] {
        // smallest scale reaching the target, and the largest scale below it
        let (mut lo, mut hi) = (0.0f64, 2.0 * n as f64 + 2.0);
        for _ in 0..64 {
            let mid = 0.5 * (lo + hi);
            if count_inside(kind, mid, offset) >= target {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        for scale in [lo, hi] {
            let err = (count_inside(kind, scale, offset) - target).abs();
            if best.is_none_or(|(e, _, _)| err < e) {
                best = Some((err, scale, offset));
            }
        }
    }
    let (_, scale, offset) = best.expect("at least one candidate scale");
    let reach = kind.reach(scale);
    let mut pixels = Vec::new();
    for dy in -reach..=reach {
        for dx in -reach..=reach {
            if kind.inside(scale, dy as f64 + offset.0, dx as f64 + offset.1) {
                pixels.push((dy, dx));
            }
        }
    }
    let min_y = pixels.iter().map(|p| p.0).min().unwrap_or(0);
    let max_y = pixels.iter().map(|p| p.0).max().unwrap_or(0);
    let min_x = pixels.iter().map(|p| p.1).min().unwrap_or(0);
    let max_x = pixels.iter().map(|p| p.1).max().unwrap_or(0);
    let mut fp = BinaryMask::zeros((max_y - min_y + 1) as usize, (max_x - min_x + 1) as usize)?;
    for (dy, dx) in pixels {
        fp.set((dy - min_y) as usize, (dx - min_x) as usize, true);
    }
    Ok(fp)
}

fn count_inside(kind: ShapeKind, scale: f64, offset: (f64, f64)) -> i64 {
    let reach = kind.reach(scale);
    let mut count = 0;
    for dy in -reach..=reach {
        for dx in -reach..=reach {
            count += kind.inside(scale, dy as f64 + offset.0, dx as f64 + offset.1) as i64;
        }
    }
    count
}
