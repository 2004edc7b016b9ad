//! Integer geometry: database units, rectangles and flat cells.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

/// Database unit. One unit is one nanometer.
pub type DbUnit = i64;

/// GDSII-compatible layer number.
pub type LayerId = i16;

/// Database units per micron.
pub const DBU_PER_MICRON: DbUnit = 1000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeomError {
    #[error("degenerate rectangle ({0}, {1}, {2}, {3})")]
    Degenerate(DbUnit, DbUnit, DbUnit, DbUnit),
    #[error("shape {shape} on layer {layer} escapes cell bbox {bbox}")]
    OutsideBbox { layer: LayerId, shape: Rect, bbox: Rect },
    #[error("`{0}` is not a micron value representable in whole nanometers")]
    InexactMicrons(String),
}

/// Converts a decimal micron literal (as written in a config file) into
/// nanometers, rejecting anything finer than 1nm.
pub fn microns_to_dbu(text: &str) -> Result<DbUnit, GeomError> {
    let bad = || GeomError::InexactMicrons(text.to_string());
    let s = text.trim();
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(pos) => (&s[..pos], s[pos + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = match digits.split_once('.') {
        Some((i, f)) => (i, f),
        None => (digits, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return Err(bad());
    }
    // value = all_digits * 10^(exp - frac_len), in microns; nm = value * 10^3
    let all: String = int_part.chars().chain(frac_part.chars()).collect();
    let all = all.trim_start_matches('0');
    let mut scale = exp + 3 - frac_part.len() as i32;
    let mut digits = all.to_string();
    while scale < 0 {
        match digits.pop() {
            Some('0') => scale += 1,
            Some(_) => return Err(bad()),
            None => {
                scale = 0;
            }
        }
    }
    if digits.is_empty() {
        return Ok(0);
    }
    if digits.len() as i32 + scale > 18 {
        return Err(bad());
    }
    let mut value: DbUnit = digits.parse().map_err(|_| bad())?;
    for _ in 0..scale {
        value = value.checked_mul(10).ok_or_else(bad)?;
    }
    Ok(if negative { -value } else { value })
}

/// Formats nanometers as a micron literal, the inverse of [`microns_to_dbu`].
pub fn dbu_to_microns(v: DbUnit) -> f64 {
    v as f64 / DBU_PER_MICRON as f64
}

/// Axis-aligned, non-degenerate rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Rect {
    x_ll: DbUnit,
    y_ll: DbUnit,
    x_ur: DbUnit,
    y_ur: DbUnit,
}

impl Rect {
    pub fn new(x_ll: DbUnit, y_ll: DbUnit, x_ur: DbUnit, y_ur: DbUnit) -> Result<Self, GeomError> {
        if x_ll < x_ur && y_ll < y_ur {
            Ok(Self { x_ll, y_ll, x_ur, y_ur })
        } else {
            Err(GeomError::Degenerate(x_ll, y_ll, x_ur, y_ur))
        }
    }

    pub fn x_ll(&self) -> DbUnit {
        self.x_ll
    }
    pub fn y_ll(&self) -> DbUnit {
        self.y_ll
    }
    pub fn x_ur(&self) -> DbUnit {
        self.x_ur
    }
    pub fn y_ur(&self) -> DbUnit {
        self.y_ur
    }
    pub fn width(&self) -> DbUnit {
        self.x_ur - self.x_ll
    }
    pub fn height(&self) -> DbUnit {
        self.y_ur - self.y_ll
    }
    pub fn area(&self) -> i128 {
        self.width() as i128 * self.height() as i128
    }

    /// Twice the center, so odd extents stay integral.
    pub fn center2(&self) -> (DbUnit, DbUnit) {
        (self.x_ll + self.x_ur, self.y_ll + self.y_ur)
    }

    /// Maximal common rectangle; edge or corner contact is not an intersection.
    pub fn intersect(&self, other: &Rect) -> Option<Rect> {
        Rect::new(
            self.x_ll.max(other.x_ll),
            self.y_ll.max(other.y_ll),
            self.x_ur.min(other.x_ur),
            self.y_ur.min(other.y_ur),
        )
        .ok()
    }

    pub fn contains(&self, other: &Rect) -> bool {
        self.x_ll <= other.x_ll && self.y_ll <= other.y_ll && self.x_ur >= other.x_ur && self.y_ur >= other.y_ur
    }

    pub fn translate(&self, dx: DbUnit, dy: DbUnit) -> Rect {
        Rect { x_ll: self.x_ll + dx, y_ll: self.y_ll + dy, x_ur: self.x_ur + dx, y_ur: self.y_ur + dy }
    }

    /// Swaps the x and y axes.
    pub fn transpose(&self) -> Rect {
        Rect { x_ll: self.y_ll, y_ll: self.x_ll, x_ur: self.y_ur, y_ur: self.x_ur }
    }

    pub fn coords(&self) -> [DbUnit; 4] {
        [self.x_ll, self.y_ll, self.x_ur, self.y_ur]
    }
}

impl fmt::Display for Rect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {}, {})", self.x_ll, self.y_ll, self.x_ur, self.y_ur)
    }
}

/// Free function form of [`Rect::intersect`].
pub fn rect_intersect(a: &Rect, b: &Rect) -> Option<Rect> {
    a.intersect(b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Shape {
    pub layer: LayerId,
    pub rect: Rect,
}

impl Shape {
    fn sort_key(&self) -> (LayerId, DbUnit, DbUnit, DbUnit, DbUnit) {
        (self.layer, self.rect.y_ll, self.rect.x_ll, self.rect.y_ur, self.rect.x_ur)
    }
}

/// A flat cell. Shapes are kept sorted by (layer, y_ll, x_ll) and always lie
/// inside the bounding box.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cell {
    name: String,
    shapes: Vec<Shape>,
    bbox: Rect,
}

impl Cell {
    pub fn new(name: impl Into<String>, bbox: Rect, shapes: Vec<Shape>) -> Result<Self, GeomError> {
        if let Some(s) = shapes.iter().find(|s| !bbox.contains(&s.rect)) {
            return Err(GeomError::OutsideBbox { layer: s.layer, shape: s.rect, bbox });
        }
        let mut shapes = shapes;
        shapes.sort_unstable_by_key(Shape::sort_key);
        Ok(Self { name: name.into(), shapes, bbox })
    }

    pub fn empty(name: impl Into<String>, bbox: Rect) -> Self {
        Self { name: name.into(), shapes: Vec::new(), bbox }
    }

    /// Builds a cell without the containment check. Used when rules
    /// checking must be able to see out-of-bounds geometry.
    pub fn new_unchecked(name: impl Into<String>, bbox: Rect, mut shapes: Vec<Shape>) -> Self {
        shapes.sort_unstable_by_key(Shape::sort_key);
        Self { name: name.into(), shapes, bbox }
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn bbox(&self) -> Rect {
        self.bbox
    }
    pub fn shapes(&self) -> &[Shape] {
        &self.shapes
    }
    pub fn into_shapes(self) -> Vec<Shape> {
        self.shapes
    }

    pub fn rects_on(&self, layer: LayerId) -> impl Iterator<Item = &Rect> + '_ {
        self.shapes.iter().filter(move |s| s.layer == layer).map(|s| &s.rect)
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Merges the shapes of several cells sharing one bbox.
    pub fn merge(name: impl Into<String>, bbox: Rect, cells: &[&Cell]) -> Result<Self, GeomError> {
        let shapes = cells.iter().flat_map(|c| c.shapes.iter().copied()).collect();
        Cell::new(name, bbox, shapes)
    }
}
