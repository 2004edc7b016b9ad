//! Geometry-only rule checking for metal gratings and via layers.
//!
//! The checker reads nothing but rectangles and rule values. It does not
//! call into the generators and never sees their matrices or PRNG state,
//! so a clean report is independent evidence that a layout obeys the rules.
//! All limits are inclusive: a measurement equal to its limit is legal.

use std::collections::{BTreeMap, HashSet};
use std::fmt::{self, Write as _};

use serde::Serialize;

use crate::geom::{Cell, DbUnit, LayerId, Rect};
use crate::metal::{MetalSpec, Orientation};
use crate::via::ViaSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum ViolationKind {
    WidthCD,
    OffTrack,
    T2TBelowMin,
    T2TAboveMax,
    T2TOffGrid,
    LengthBelowMin,
    LengthAboveMax,
    OutOfBounds,
    SameTrackOverlap,
    ViaSize,
    ViaEnclosureX,
    ViaEnclosureY,
    ViaPitchX,
    ViaPitchY,
    ViaUncovered,
}

impl ViolationKind {
    pub const ALL: [ViolationKind; 15] = [
        Self::WidthCD,
        Self::OffTrack,
        Self::T2TBelowMin,
        Self::T2TAboveMax,
        Self::T2TOffGrid,
        Self::LengthBelowMin,
        Self::LengthAboveMax,
        Self::OutOfBounds,
        Self::SameTrackOverlap,
        Self::ViaSize,
        Self::ViaEnclosureX,
        Self::ViaEnclosureY,
        Self::ViaPitchX,
        Self::ViaPitchY,
        Self::ViaUncovered,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::WidthCD => "WidthCD",
            Self::OffTrack => "OffTrack",
            Self::T2TBelowMin => "T2TBelowMin",
            Self::T2TAboveMax => "T2TAboveMax",
            Self::T2TOffGrid => "T2TOffGrid",
            Self::LengthBelowMin => "LengthBelowMin",
            Self::LengthAboveMax => "LengthAboveMax",
            Self::OutOfBounds => "OutOfBounds",
            Self::SameTrackOverlap => "SameTrackOverlap",
            Self::ViaSize => "ViaSize",
            Self::ViaEnclosureX => "ViaEnclosureX",
            Self::ViaEnclosureY => "ViaEnclosureY",
            Self::ViaPitchX => "ViaPitchX",
            Self::ViaPitchY => "ViaPitchY",
            Self::ViaUncovered => "ViaUncovered",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One rule failure. `measured` and `limit` share the nm unit; kinds
/// without a natural distance report the offending amount against 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub location: Rect,
    pub measured: DbUnit,
    pub limit: DbUnit,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct DrcReport {
    pub violations: Vec<Violation>,
    pub shapes_checked: usize,
    pub clean: bool,
}

impl DrcReport {
    fn from_parts(mut violations: Vec<Violation>, shapes_checked: usize) -> Self {
        violations.sort_by_key(|v| (v.kind, v.location, v.measured));
        let clean = violations.is_empty();
        Self { violations, shapes_checked, clean }
    }

    pub fn merge(self, other: DrcReport) -> DrcReport {
        let mut v = self.violations;
        v.extend(other.violations);
        Self::from_parts(v, self.shapes_checked + other.shapes_checked)
    }

    pub fn count(&self, kind: ViolationKind) -> usize {
        self.violations.iter().filter(|v| v.kind == kind).count()
    }

    /// Line format: `KIND x_ll y_ll x_ur y_ur measured limit` per violation,
    /// then a `# shapes=N violations=M clean|dirty` summary.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for v in &self.violations {
            let [a, b, c, d] = v.location.coords();
            let _ = writeln!(out, "{} {a} {b} {c} {d} {} {}", v.kind, v.measured, v.limit);
        }
        let _ = writeln!(
            out,
            "# shapes={} violations={} {}",
            self.shapes_checked,
            self.violations.len(),
            if self.clean { "clean" } else { "dirty" }
        );
        out
    }

    /// Parses the violation lines of [`DrcReport::to_text`].
    pub fn parse_violations(text: &str) -> Result<Vec<Violation>, String> {
        text.lines()
            .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
            .map(|line| {
                let f: Vec<&str> = line.split_whitespace().collect();
                if f.len() != 7 {
                    return Err(format!("expected 7 fields: `{line}`"));
                }
                let kind = ViolationKind::from_name(f[0]).ok_or_else(|| format!("unknown kind `{}`", f[0]))?;
                let n: Vec<DbUnit> = f[1..]
                    .iter()
                    .map(|s| s.parse().map_err(|_| format!("bad integer `{s}`")))
                    .collect::<Result<_, _>>()?;
                let location = Rect::new(n[0], n[1], n[2], n[3]).map_err(|e| e.to_string())?;
                Ok(Violation { kind, location, measured: n[4], limit: n[5] })
            })
            .collect()
    }
}

fn bounding(a: &Rect, b: &Rect) -> Rect {
    Rect::new(a.x_ll().min(b.x_ll()), a.y_ll().min(b.y_ll()), a.x_ur().max(b.x_ur()), a.y_ur().max(b.y_ur()))
        .expect("union of rects is non-degenerate")
}

/// Checks one metal layer of `cell` against `spec`. Shapes on other layers
/// are ignored.
pub fn check_metal(cell: &Cell, spec: &MetalSpec) -> DrcReport {
    // Work in track-local coordinates: tracks always run along x.
    let vertical = spec.orientation == Orientation::Vertical;
    let local = |r: &Rect| if vertical { r.transpose() } else { *r };
    let bbox = local(&spec.bbox());
    let across_origin = if vertical { spec.origin.0 } else { spec.origin.1 };

    let mut out = Vec::new();
    let mut push = |kind, loc: Rect, measured, limit| {
        let location = if vertical { loc.transpose() } else { loc };
        out.push(Violation { kind, location, measured, limit });
    };

    let mut tracks: BTreeMap<DbUnit, Vec<Rect>> = BTreeMap::new();
    let mut checked = 0;
    for r in cell.rects_on(spec.layer) {
        checked += 1;
        let r = local(r);
        if r.height() != spec.wire_cd {
            push(ViolationKind::WidthCD, r, r.height(), spec.wire_cd);
        }
        let offset = (r.y_ll() - across_origin).rem_euclid(spec.track_pitch);
        if offset != 0 {
            push(ViolationKind::OffTrack, r, offset, 0);
        }
        if r.width() < spec.min_length {
            push(ViolationKind::LengthBelowMin, r, r.width(), spec.min_length);
        }
        if r.width() > spec.max_length {
            push(ViolationKind::LengthAboveMax, r, r.width(), spec.max_length);
        }
        if !bbox.contains(&r) {
            let escape = (bbox.x_ll() - r.x_ll())
                .max(bbox.y_ll() - r.y_ll())
                .max(r.x_ur() - bbox.x_ur())
                .max(r.y_ur() - bbox.y_ur());
            push(ViolationKind::OutOfBounds, r, escape, 0);
        }
        tracks.entry(r.y_ll()).or_default().push(r);
    }

    for wires in tracks.values_mut() {
        wires.sort_by_key(|r| (r.x_ll(), r.x_ur()));
        let mut reach = wires[0];
        for w in &wires[1..] {
            let gap = w.x_ll() - reach.x_ur();
            let loc = bounding(&reach, w);
            if gap < 0 {
                push(ViolationKind::SameTrackOverlap, loc, -gap, 0);
            } else if gap < spec.min_t2t {
                push(ViolationKind::T2TBelowMin, loc, gap, spec.min_t2t);
            } else {
                if gap > spec.max_t2t {
                    push(ViolationKind::T2TAboveMax, loc, gap, spec.max_t2t);
                }
                let off = (gap - spec.min_t2t) % spec.t2t_grid;
                if off != 0 {
                    push(ViolationKind::T2TOffGrid, loc, gap, spec.min_t2t);
                }
            }
            if w.x_ur() > reach.x_ur() {
                reach = *w;
            }
        }
    }
    DrcReport::from_parts(out, checked)
}

/// Wires of one layer grouped by lower edge (across the track direction),
/// each group sorted along the track, with prefix maxima of the far end so
/// a containment query can stop early.
struct WireIndex {
    groups: BTreeMap<DbUnit, (Vec<Rect>, Vec<DbUnit>)>,
    max_cross: DbUnit,
    vertical: bool,
}

impl WireIndex {
    fn new<'a>(rects: impl Iterator<Item = &'a Rect>, vertical: bool) -> Self {
        let mut groups: BTreeMap<DbUnit, (Vec<Rect>, Vec<DbUnit>)> = BTreeMap::new();
        let mut max_cross = 0;
        for r in rects {
            let r = if vertical { r.transpose() } else { *r };
            max_cross = max_cross.max(r.height());
            groups.entry(r.y_ll()).or_default().0.push(r);
        }
        for (wires, reach) in groups.values_mut() {
            wires.sort_by_key(|r| (r.x_ll(), r.x_ur()));
            let mut m = DbUnit::MIN;
            *reach = wires
                .iter()
                .map(|r| {
                    m = m.max(r.x_ur());
                    m
                })
                .collect();
        }
        Self { groups, max_cross, vertical }
    }

    /// Wire containing `target` with the largest line-end margin, and that
    /// margin. Coordinates of the result are in the original frame.
    fn best_cover(&self, target: &Rect) -> Option<(Rect, DbUnit)> {
        let t = if self.vertical { target.transpose() } else { *target };
        if t.height() > self.max_cross {
            return None;
        }
        let mut best: Option<(Rect, DbUnit)> = None;
        for (_, (wires, reach)) in self.groups.range(t.y_ur() - self.max_cross..=t.y_ll()) {
            let end = wires.partition_point(|w| w.x_ll() <= t.x_ll());
            for k in (0..end).rev() {
                if reach[k] < t.x_ur() {
                    break;
                }
                let w = wires[k];
                if w.contains(&t) {
                    let margin = (t.x_ll() - w.x_ll()).min(w.x_ur() - t.x_ur());
                    if best.is_none_or(|(_, m)| margin > m) {
                        best = Some((w, margin));
                    }
                }
            }
        }
        best.map(|(w, m)| (if self.vertical { w.transpose() } else { w }, m))
    }
}

fn check_via_pitch(vias: &[Rect], pitch: DbUnit, along_x: bool, out: &mut Vec<Violation>) {
    if pitch <= 0 {
        return;
    }
    // Doubled centers keep odd sizes exact.
    let key = |r: &Rect| if along_x { r.center2().0 } else { r.center2().1 };
    let mut sorted: Vec<&Rect> = vias.iter().collect();
    sorted.sort_by_key(|r| (key(r), r.coords()));
    let kind = if along_x { ViolationKind::ViaPitchX } else { ViolationKind::ViaPitchY };
    for (a_idx, a) in sorted.iter().enumerate() {
        for b in &sorted[a_idx + 1..] {
            let d2 = key(b) - key(a);
            if d2 >= 2 * pitch {
                break;
            }
            let same_line = if along_x {
                a.y_ll() < b.y_ur() && b.y_ll() < a.y_ur()
            } else {
                a.x_ll() < b.x_ur() && b.x_ll() < a.x_ur()
            };
            if same_line {
                out.push(Violation { kind, location: bounding(a, b), measured: d2 / 2, limit: pitch });
            }
        }
    }
}

/// Checks the via layer against both metal layers.
pub fn check_via(m1: &Cell, m2: &Cell, via: &Cell, spec: &ViaSpec) -> DrcReport {
    let m1_index = WireIndex::new(m1.rects_on(spec.m1.layer), false);
    let m2_index = WireIndex::new(m2.rects_on(spec.m2.layer), true);
    let vias: Vec<Rect> = via.rects_on(spec.via_layer).copied().collect();
    let mut out = Vec::new();
    for v in &vias {
        if v.width() != spec.via_x {
            out.push(Violation { kind: ViolationKind::ViaSize, location: *v, measured: v.width(), limit: spec.via_x });
        } else if v.height() != spec.via_y {
            out.push(Violation { kind: ViolationKind::ViaSize, location: *v, measured: v.height(), limit: spec.via_y });
        }
        let c1 = m1_index.best_cover(v);
        let c2 = m2_index.best_cover(v);
        if c1.is_none() || c2.is_none() {
            out.push(Violation { kind: ViolationKind::ViaUncovered, location: *v, measured: 0, limit: 0 });
        }
        if let Some((_, margin)) = c1 {
            if margin < spec.enclosure_x {
                out.push(Violation {
                    kind: ViolationKind::ViaEnclosureX,
                    location: *v,
                    measured: margin,
                    limit: spec.enclosure_x,
                });
            }
        }
        if let Some((_, margin)) = c2 {
            if margin < spec.enclosure_y {
                out.push(Violation {
                    kind: ViolationKind::ViaEnclosureY,
                    location: *v,
                    measured: margin,
                    limit: spec.enclosure_y,
                });
            }
        }
    }
    check_via_pitch(&vias, spec.pitch_x, true, &mut out);
    check_via_pitch(&vias, spec.pitch_y, false, &mut out);
    DrcReport::from_parts(out, vias.len())
}

/// Checks a complete three-layer via layout: both metals and the vias.
pub fn check_via_layout(m1: &Cell, m2: &Cell, via: &Cell, spec: &ViaSpec) -> DrcReport {
    check_metal(m1, &spec.m1).merge(check_metal(m2, &spec.m2)).merge(check_via(m1, m2, via, spec))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DensityStats {
    pub candidate_count: usize,
    pub via_count: usize,
    /// `via_count / candidate_count`, zero when nothing is a candidate.
    pub realized_fraction: f64,
}

/// Recounts legal via sites from the metal geometry alone: crossings where
/// an M1 wire and an M2 wire each cover a full via with their enclosure
/// margins. Reports how many of them hold a via.
pub fn via_density_stats(m1: &Cell, m2: &Cell, via: &Cell, spec: &ViaSpec) -> DensityStats {
    // M2 wires by left edge, each column sorted bottom-up.
    let mut columns: BTreeMap<DbUnit, Vec<Rect>> = BTreeMap::new();
    for r in m2.rects_on(spec.m2.layer) {
        columns.entry(r.x_ll()).or_default().push(*r);
    }
    for c in columns.values_mut() {
        c.sort_by_key(|r| (r.y_ll(), r.y_ur()));
    }
    let mut sites: HashSet<Rect> = HashSet::new();
    for w1 in m1.rects_on(spec.m1.layer) {
        if w1.height() != spec.via_y {
            continue;
        }
        let lo = w1.x_ll() + spec.enclosure_x;
        let hi = w1.x_ur() - spec.enclosure_x - spec.via_x;
        if hi < lo {
            continue;
        }
        for (&x, col) in columns.range(lo..=hi) {
            let need_lo = w1.y_ll() - spec.enclosure_y;
            let need_hi = w1.y_ur() + spec.enclosure_y;
            let end = col.partition_point(|w| w.y_ll() <= need_lo);
            let covered = col[..end].iter().any(|w2| w2.width() == spec.via_x && w2.y_ur() >= need_hi);
            if covered {
                sites.insert(Rect::new(x, w1.y_ll(), x + spec.via_x, w1.y_ur()).expect("via size positive"));
            }
        }
    }
    let via_count = via.rects_on(spec.via_layer).count();
    let n = sites.len();
    DensityStats {
        candidate_count: n,
        via_count,
        realized_fraction: if n == 0 { 0.0 } else { via_count as f64 / n as f64 },
    }
}

/// Layers referenced by a via spec, in M1, via, M2 order.
pub fn via_layers(spec: &ViaSpec) -> [LayerId; 3] {
    [spec.m1.layer, spec.via_layer, spec.m2.layer]
}
