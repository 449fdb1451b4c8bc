//! Normalized-coordinate primitives.
//!
//! Every coordinate in this module is a fraction of the image width or
//! height, so the whole image is the unit square `[0, 1]²` with the origin at
//! the top-left corner.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default lower bound on the area of a usable box.
pub const DEFAULT_AREA_MIN: f64 = 0.005;
/// Default upper bound on the area of a usable box.
pub const DEFAULT_AREA_MAX: f64 = 0.95;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("malformed box [{x1}, {y1}, {x2}, {y2}]: corners are out of order")]
    Malformed { x1: f64, y1: f64, x2: f64, y2: f64 },
    #[error("box [{x1}, {y1}, {x2}, {y2}] leaves the unit square")]
    OutOfRange { x1: f64, y1: f64, x2: f64, y2: f64 },
    #[error("grid dimensions must be positive, got {rows}x{cols}")]
    EmptyGrid { rows: usize, cols: usize },
}

/// A point `(x, y)` in normalized image space. `x` runs along columns, `y`
/// along rows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

/// An axis-aligned box `[x1, y1, x2, y2]` with top-left corner `(x1, y1)` and
/// bottom-right corner `(x2, y2)`.
///
/// Construction checks that the corners are ordered and that the box lies in
/// the unit square, so every value of this type is well formed. Boxes are
/// never repaired: reversed corners are an error, not a swap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormalizedBBox {
    x1: f64,
    y1: f64,
    x2: f64,
    y2: f64,
}

impl NormalizedBBox {
    pub fn new(x1: f64, y1: f64, x2: f64, y2: f64) -> Result<Self, GeometryError> {
        // NaN fails every comparison below, so it lands in one of the two arms.
        if !(x1 <= x2 && y1 <= y2) {
            return Err(GeometryError::Malformed { x1, y1, x2, y2 });
        }
        let in_unit = |v: f64| (0.0..=1.0).contains(&v);
        if !(in_unit(x1) && in_unit(y1) && in_unit(x2) && in_unit(y2)) {
            return Err(GeometryError::OutOfRange { x1, y1, x2, y2 });
        }
        Ok(Self { x1, y1, x2, y2 })
    }

    /// The whole image.
    pub const fn full() -> Self {
        Self {
            x1: 0.0,
            y1: 0.0,
            x2: 1.0,
            y2: 1.0,
        }
    }

    pub fn x1(&self) -> f64 {
        self.x1
    }

    pub fn y1(&self) -> f64 {
        self.y1
    }

    pub fn x2(&self) -> f64 {
        self.x2
    }

    pub fn y2(&self) -> f64 {
        self.y2
    }

    pub fn width(&self) -> f64 {
        self.x2 - self.x1
    }

    pub fn height(&self) -> f64 {
        self.y2 - self.y1
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.x1, self.y1, self.x2, self.y2]
    }

    /// True when `p` lies inside or on the boundary of the box.
    pub fn contains(&self, p: Point) -> bool {
        self.x1 <= p.x && p.x <= self.x2 && self.y1 <= p.y && p.y <= self.y2
    }
}

impl TryFrom<[f64; 4]> for NormalizedBBox {
    type Error = GeometryError;

    fn try_from(c: [f64; 4]) -> Result<Self, Self::Error> {
        Self::new(c[0], c[1], c[2], c[3])
    }
}

impl<'de> Deserialize<'de> for NormalizedBBox {
    fn deserialize<D>(deserializer: D) -> Result<Self, D::Error>
    where
        D: serde::Deserializer<'de>,
    {
        let raw = <[f64; 4]>::deserialize(deserializer)?;
        Self::try_from(raw).map_err(serde::de::Error::custom)
    }
}

/// Euclidean distance from `p` to the nearest edge of `b`; zero on the closed
/// box.
pub fn edge_distance(p: Point, b: &NormalizedBBox) -> f64 {
    edge_distance_sq(p, b).sqrt()
}

/// Squared edge distance. The bias field only ever needs `D²`, and taking it
/// directly avoids a square root followed by a square.
pub fn edge_distance_sq(p: Point, b: &NormalizedBBox) -> f64 {
    let dx = (b.x1 - p.x).max(p.x - b.x2).max(0.0);
    let dy = (b.y1 - p.y).max(p.y - b.y2).max(0.0);
    dx * dx + dy * dy
}

/// Intersection over union. Two zero-area boxes have IoU 0.
pub fn iou(a: &NormalizedBBox, b: &NormalizedBBox) -> f64 {
    let w = (a.x2.min(b.x2) - a.x1.max(b.x1)).max(0.0);
    let h = (a.y2.min(b.y2) - a.y1.max(b.y1)).max(0.0);
    let inter = w * h;
    let union = a.area() + b.area() - inter;
    if union > 0.0 {
        inter / union
    } else {
        0.0
    }
}

/// Area bounds used to decide whether an emitted box is usable for grounding.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AreaBounds {
    pub min: f64,
    pub max: f64,
}

impl Default for AreaBounds {
    fn default() -> Self {
        Self {
            min: DEFAULT_AREA_MIN,
            max: DEFAULT_AREA_MAX,
        }
    }
}

/// Validity check on raw emitted coordinates with the default area bounds.
pub fn is_geometrically_valid(raw: [f64; 4]) -> bool {
    is_geometrically_valid_within(raw, AreaBounds::default())
}

/// Validity check on raw coordinates: well formed, inside the unit square and
/// with area in `[bounds.min, bounds.max]`.
pub fn is_geometrically_valid_within(raw: [f64; 4], bounds: AreaBounds) -> bool {
    match NormalizedBBox::try_from(raw) {
        Ok(b) => {
            let area = b.area();
            bounds.min <= area && area <= bounds.max
        }
        Err(_) => false,
    }
}

/// Layout of visual tokens on a regular patch grid, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenGrid {
    rows: usize,
    cols: usize,
    positions: Vec<Point>,
}

impl TokenGrid {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[Point] {
        &self.positions
    }

    /// Position of the token at grid cell `(row, col)`.
    pub fn position(&self, row: usize, col: usize) -> Option<Point> {
        if row < self.rows && col < self.cols {
            Some(self.positions[row * self.cols + col])
        } else {
            None
        }
    }
}

/// Builds a `rows × cols` grid whose tokens sit at patch centers
/// `((c + 0.5) / cols, (r + 0.5) / rows)`.
pub fn make_grid(rows: usize, cols: usize) -> Result<TokenGrid, GeometryError> {
    if rows == 0 || cols == 0 {
        return Err(GeometryError::EmptyGrid { rows, cols });
    }
    let positions = (0..rows)
        .flat_map(|r| {
            (0..cols).map(move |c| {
                Point::new(
                    (c as f64 + 0.5) / cols as f64,
                    (r as f64 + 0.5) / rows as f64,
                )
            })
        })
        .collect();
    Ok(TokenGrid {
        rows,
        cols,
        positions,
    })
}
