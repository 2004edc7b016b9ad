//! Single-shape fault injection, used to measure how reliably the rule
//! checker notices a broken layout.

use serde::Serialize;

use crate::drc::{check_metal, check_via, ViolationKind};
use crate::geom::{Cell, Rect, Shape};
use crate::metal::{MetalSpec, Orientation};
use crate::rng::{Prng, RandomSource};
use crate::via::{ViaLayout, ViaSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum FaultKind {
    /// Critical dimension one nm too wide.
    Grow,
    /// Critical dimension one nm too narrow.
    Shrink,
    /// Moved half a track pitch across the tracks.
    Shift,
    /// A second copy on top of the original.
    Duplicate,
}

impl FaultKind {
    pub const ALL: [FaultKind; 4] = [Self::Grow, Self::Shrink, Self::Shift, Self::Duplicate];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum FaultTarget {
    Metal,
    Via,
}

/// Kinds of which at least one must be reported for the fault to count as
/// detected.
pub fn expected_kinds(target: FaultTarget, kind: FaultKind) -> &'static [ViolationKind] {
    use ViolationKind::*;
    match (target, kind) {
        (FaultTarget::Metal, FaultKind::Grow | FaultKind::Shrink) => &[WidthCD],
        (FaultTarget::Metal, FaultKind::Shift) => &[OffTrack],
        (FaultTarget::Metal, FaultKind::Duplicate) => &[SameTrackOverlap],
        (FaultTarget::Via, FaultKind::Grow | FaultKind::Shrink) => &[ViaSize],
        (FaultTarget::Via, FaultKind::Shift) => &[ViaUncovered],
        (FaultTarget::Via, FaultKind::Duplicate) => &[ViaPitchX, ViaPitchY],
    }
}

/// Applies `kind` to the shape at `index`. `vertical` selects which axis
/// carries the critical dimension and `pitch` is the track pitch.
fn mutate(cell: &Cell, index: usize, kind: FaultKind, vertical: bool, pitch: i64) -> Cell {
    let mut shapes: Vec<Shape> = cell.shapes().to_vec();
    let s = shapes[index];
    let [a, b, c, d] = s.rect.coords();
    let rect = |a, b, c, d| Rect::new(a, b, c, d).expect("fault keeps the shape non-degenerate");
    match kind {
        FaultKind::Grow | FaultKind::Shrink => {
            let delta = if kind == FaultKind::Grow { 1 } else { -1 };
            shapes[index].rect = if vertical { rect(a, b, c + delta, d) } else { rect(a, b, c, d + delta) };
        }
        FaultKind::Shift => {
            let shift = pitch / 2;
            shapes[index].rect = if vertical { s.rect.translate(shift, 0) } else { s.rect.translate(0, shift) };
        }
        FaultKind::Duplicate => shapes.push(s),
    }
    Cell::new_unchecked(cell.name(), cell.bbox(), shapes)
}

pub fn inject_metal(cell: &Cell, spec: &MetalSpec, index: usize, kind: FaultKind) -> Cell {
    mutate(cell, index, kind, spec.orientation == Orientation::Vertical, spec.track_pitch)
}

/// Via faults resize along x and shift along y by half the M1 pitch.
pub fn inject_via(via: &Cell, spec: &ViaSpec, index: usize, kind: FaultKind) -> Cell {
    match kind {
        FaultKind::Grow | FaultKind::Shrink => mutate(via, index, kind, true, 0),
        _ => mutate(via, index, kind, false, spec.m1.track_pitch),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Injection {
    pub target: FaultTarget,
    pub kind: FaultKind,
    pub shape_index: usize,
    pub detected: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Campaign {
    pub injections: Vec<Injection>,
}

impl Campaign {
    pub fn detected(&self) -> usize {
        self.injections.iter().filter(|i| i.detected).count()
    }

    pub fn detection_rate(&self) -> f64 {
        if self.injections.is_empty() {
            0.0
        } else {
            self.detected() as f64 / self.injections.len() as f64
        }
    }
}

/// Runs `count` injections, cycling through the four fault kinds and
/// alternating metal and via targets. Shape indices are drawn from `seed`.
/// Both inputs must be clean and non-empty.
pub fn run_campaign(
    metal: &Cell,
    metal_spec: &MetalSpec,
    vias: &ViaLayout,
    via_spec: &ViaSpec,
    count: usize,
    seed: u64,
) -> Campaign {
    assert!(!metal.shapes().is_empty() && !vias.via.shapes().is_empty(), "fault campaign needs shapes to mutate");
    let mut rng = Prng::new(seed);
    let injections = (0..count)
        .map(|i| {
            let kind = FaultKind::ALL[i % 4];
            let target = if (i / 4) % 2 == 0 { FaultTarget::Metal } else { FaultTarget::Via };
            let expected = expected_kinds(target, kind);
            let (shape_index, report) = match target {
                FaultTarget::Metal => {
                    let idx = rng.rand_index(metal.shapes().len());
                    (idx, check_metal(&inject_metal(metal, metal_spec, idx, kind), metal_spec))
                }
                FaultTarget::Via => {
                    let idx = rng.rand_index(vias.via.shapes().len());
                    let broken = inject_via(&vias.via, via_spec, idx, kind);
                    (idx, check_via(&vias.m1, &vias.m2, &broken, via_spec))
                }
            };
            let detected = report.violations.iter().any(|v| expected.contains(&v.kind));
            Injection { target, kind, shape_index, detected }
        })
        .collect();
    Campaign { injections }
}
