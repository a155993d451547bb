//! Axis-aligned rectangle arithmetic.
//!
//! Coordinates are real-valued pixels with the origin at the top-left corner
//! and `y` growing downward. For pixel operations a box is closed on its
//! minimum edges and open on its maximum edges, so a box `(0, 0, 10, 10)`
//! covers exactly the pixels `0..10 x 0..10`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl BoundingBox {
    /// Builds a box, rejecting non-finite coordinates and empty extents.
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Result<Self> {
        let b = BoundingBox {
            x_min,
            y_min,
            x_max,
            y_max,
        };
        if b.is_valid() {
            Ok(b)
        } else {
            Err(Error::InvalidBox(x_min, y_min, x_max, y_max))
        }
    }

    pub fn from_array(c: [f64; 4]) -> Result<Self> {
        Self::new(c[0], c[1], c[2], c[3])
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.x_min, self.y_min, self.x_max, self.y_max]
    }

    pub fn is_valid(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
            && self.x_min < self.x_max
            && self.y_min < self.y_max
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> (f64, f64) {
        (
            0.5 * (self.x_min + self.x_max),
            0.5 * (self.y_min + self.y_max),
        )
    }

    pub fn intersection_area(&self, other: &BoundingBox) -> f64 {
        let w = self.x_max.min(other.x_max) - self.x_min.max(other.x_min);
        let h = self.y_max.min(other.y_max) - self.y_min.max(other.y_min);
        if w <= 0.0 || h <= 0.0 {
            0.0
        } else {
            w * h
        }
    }

    /// Intersection over union; 0 for disjoint boxes.
    pub fn iou(&self, other: &BoundingBox) -> f64 {
        let inter = self.intersection_area(other);
        if inter == 0.0 {
            return 0.0;
        }
        let union = self.area() + other.area() - inter;
        (inter / union).clamp(0.0, 1.0)
    }

    pub fn contains(&self, other: &BoundingBox) -> bool {
        self.contains_with_tolerance(other, 0.0)
    }

    pub fn contains_with_tolerance(&self, other: &BoundingBox, tol: f64) -> bool {
        other.x_min >= self.x_min - tol
            && other.y_min >= self.y_min - tol
            && other.x_max <= self.x_max + tol
            && other.y_max <= self.y_max + tol
    }

    pub fn translate(&self, dx: f64, dy: f64) -> BoundingBox {
        BoundingBox {
            x_min: self.x_min + dx,
            y_min: self.y_min + dy,
            x_max: self.x_max + dx,
            y_max: self.y_max + dy,
        }
    }

    /// Smallest box enclosing both.
    pub fn hull(&self, other: &BoundingBox) -> BoundingBox {
        BoundingBox {
            x_min: self.x_min.min(other.x_min),
            y_min: self.y_min.min(other.y_min),
            x_max: self.x_max.max(other.x_max),
            y_max: self.y_max.max(other.y_max),
        }
    }

    pub fn within_page(&self, width: f64, height: f64) -> bool {
        self.x_min >= 0.0 && self.y_min >= 0.0 && self.x_max <= width && self.y_max <= height
    }

    /// Clips to `[0, width] x [0, height]`; `None` if nothing remains.
    pub fn clip(&self, width: f64, height: f64) -> Option<BoundingBox> {
        let b = BoundingBox {
            x_min: self.x_min.max(0.0),
            y_min: self.y_min.max(0.0),
            x_max: self.x_max.min(width),
            y_max: self.y_max.min(height),
        };
        b.is_valid().then_some(b)
    }

    /// Integer pixel rectangle `(x0, y0, x1, y1)` with coordinates rounded
    /// half away from zero and clamped to the page.
    pub fn pixel_rect(&self, width: u32, height: u32) -> (u32, u32, u32, u32) {
        let clamp = |v: f64, hi: u32| v.round().clamp(0.0, hi as f64) as u32;
        (
            clamp(self.x_min, width),
            clamp(self.y_min, height),
            clamp(self.x_max, width),
            clamp(self.y_max, height),
        )
    }
}

pub fn area(b: &BoundingBox) -> f64 {
    b.area()
}

pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    a.iou(b)
}

/// Componentwise min of minima and max of maxima.
pub fn union_box(boxes: &[BoundingBox]) -> Result<BoundingBox> {
    let (first, rest) = boxes.split_first().ok_or(Error::EmptyBoxList)?;
    Ok(rest.iter().fold(*first, |acc, b| acc.hull(b)))
}

/// Grows every side by `padding` and clips the result to the page.
pub fn pad_and_clip(
    b: &BoundingBox,
    padding: f64,
    page_w: f64,
    page_h: f64,
) -> Result<BoundingBox> {
    if !padding.is_finite() || padding < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "padding must be a non-negative finite number, got {padding}"
        )));
    }
    let grown = BoundingBox {
        x_min: b.x_min - padding,
        y_min: b.y_min - padding,
        x_max: b.x_max + padding,
        y_max: b.y_max + padding,
    };
    grown.clip(page_w, page_h).ok_or(Error::DegenerateBox)
}
