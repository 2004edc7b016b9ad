//! Unidirectional metal grating generation.
//!
//! A cell is filled track by track. Each track walks from the cell edge,
//! alternating a random wire length and a random tip-to-tip gap, until no
//! further minimum-length wire fits. Tracks draw from private PRNG streams,
//! so the fill order (serial or parallel) never changes the result.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{Cell, DbUnit, LayerId, Rect, Shape};
use crate::rng::{Prng, RandomSource};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    /// Tracks run along x; wire_cd is the y extent.
    #[default]
    Horizontal,
    /// Tracks run along y; wire_cd is the x extent.
    Vertical,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpecError {
    #[error("invalid rule: {0}")]
    Rule(String),
}

fn rule(msg: impl Into<String>) -> SpecError {
    SpecError::Rule(msg.into())
}

/// Metal design rules plus cell placement. All distances in nm.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetalSpec {
    pub wire_cd: DbUnit,
    pub track_pitch: DbUnit,
    pub min_t2t: DbUnit,
    pub max_t2t: DbUnit,
    pub min_length: DbUnit,
    pub max_length: DbUnit,
    pub t2t_grid: DbUnit,
    pub total_x: DbUnit,
    pub total_y: DbUnit,
    pub origin: (DbUnit, DbUnit),
    pub orientation: Orientation,
    pub layer: LayerId,
    pub seed: u64,
}

impl MetalSpec {
    pub fn validate(&self) -> Result<(), SpecError> {
        if self.wire_cd <= 0 {
            return Err(rule(format!("wire_cd must be positive (got {})", self.wire_cd)));
        }
        if self.track_pitch < self.wire_cd {
            return Err(rule(format!(
                "track_pitch {} is smaller than wire_cd {}",
                self.track_pitch, self.wire_cd
            )));
        }
        if self.min_t2t < 0 {
            return Err(rule(format!("min_t2t must be non-negative (got {})", self.min_t2t)));
        }
        if self.min_t2t > self.max_t2t {
            return Err(rule(format!("min_t2t {} exceeds max_t2t {}", self.min_t2t, self.max_t2t)));
        }
        if self.min_length < 1 {
            return Err(rule(format!("min_length must be at least 1nm (got {})", self.min_length)));
        }
        if self.min_length > self.max_length {
            return Err(rule(format!(
                "min_length {} exceeds max_length {}",
                self.min_length, self.max_length
            )));
        }
        if self.t2t_grid <= 0 {
            return Err(rule(format!("t2t_grid must be positive (got {})", self.t2t_grid)));
        }
        if self.total_x <= 0 || self.total_y <= 0 {
            return Err(rule(format!(
                "cell size must be positive (got {} x {})",
                self.total_x, self.total_y
            )));
        }
        Ok(())
    }

    pub fn bbox(&self) -> Rect {
        let (xo, yo) = self.origin;
        Rect::new(xo, yo, xo + self.total_x, yo + self.total_y).expect("validated cell size")
    }

    /// Extent along the tracks.
    pub fn along(&self) -> DbUnit {
        match self.orientation {
            Orientation::Horizontal => self.total_x,
            Orientation::Vertical => self.total_y,
        }
    }

    /// Extent across the tracks.
    pub fn across(&self) -> DbUnit {
        match self.orientation {
            Orientation::Horizontal => self.total_y,
            Orientation::Vertical => self.total_x,
        }
    }

    /// Number of tracks whose full wire_cd fits in the cell.
    pub fn track_count(&self) -> usize {
        if self.across() < self.wire_cd {
            0
        } else {
            ((self.across() - self.wire_cd) / self.track_pitch + 1) as usize
        }
    }

    /// Rectangle of a wire given track-local coordinates.
    pub fn wire_rect(&self, track_offset: DbUnit, start: DbUnit, length: DbUnit) -> Rect {
        let (xo, yo) = self.origin;
        let local = Rect::new(start, track_offset, start + length, track_offset + self.wire_cd)
            .expect("positive wire length and cd");
        match self.orientation {
            Orientation::Horizontal => local.translate(xo, yo),
            Orientation::Vertical => local.transpose().translate(xo, yo),
        }
    }
}

/// Wires placed on one track, as (start, length) pairs measured from the
/// cell edge along the track.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrackFill {
    pub track_index: usize,
    pub wires: Vec<(DbUnit, DbUnit)>,
}

/// Fills one track. `track_offset` is the track's lower edge relative to the
/// cell origin (across the track direction).
pub fn draw_wire_track<R: RandomSource>(
    spec: &MetalSpec,
    rng: &mut R,
    track_index: usize,
) -> TrackFill {
    let total = spec.along();
    let mut wires = Vec::new();
    let mut x: DbUnit = 0;
    while total - x >= spec.min_length {
        let len = rng
            .rand_int(spec.min_length, spec.max_length.min(total - x))
            .expect("remaining space admits min_length");
        wires.push((x, len));
        let end = x + len;
        let gap_hi = spec.max_t2t.min(total - end);
        let Ok(gap) = rng.rand_grid(spec.min_t2t, gap_hi, spec.t2t_grid) else {
            // no legal spacing fits before the cell edge
            break;
        };
        x = end + gap;
    }
    TrackFill { track_index, wires }
}

/// How tracks are scheduled. The generated cell is identical either way.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Serial,
    #[default]
    Parallel,
}

fn track_shapes(spec: &MetalSpec, k: usize) -> Vec<Shape> {
    let mut rng = Prng::stream(spec.seed, k as u64);
    let fill = draw_wire_track(spec, &mut rng, k);
    let offset = k as DbUnit * spec.track_pitch;
    fill.wires
        .iter()
        .map(|&(start, len)| Shape { layer: spec.layer, rect: spec.wire_rect(offset, start, len) })
        .collect()
}

pub fn draw_wire_cell_with(spec: &MetalSpec, exec: Execution) -> Result<Cell, SpecError> {
    spec.validate()?;
    let n = spec.track_count();
    let shapes: Vec<Shape> = match exec {
        Execution::Serial => (0..n).flat_map(|k| track_shapes(spec, k)).collect(),
        Execution::Parallel => (0..n)
            .into_par_iter()
            .map(|k| track_shapes(spec, k))
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .collect(),
    };
    Ok(Cell::new(format!("M{}", spec.layer), spec.bbox(), shapes).expect("wires stay inside the cell"))
}

/// Generates a full metal cell, filling tracks in parallel.
pub fn draw_wire_cell(spec: &MetalSpec) -> Result<Cell, SpecError> {
    draw_wire_cell_with(spec, Execution::Parallel)
}
