//! Via generation over two orthogonal metal gratings.
//!
//! Candidate sites are the crossings of M1 (horizontal) and M2 (vertical)
//! tracks. A site becomes a candidate when the assist wires of both layers
//! (wires with their line-ends pulled in by the enclosure distance) still
//! cover the full via, which enforces enclosure without a separate pass.
//! Candidates are then thinned by the target density and finally by the
//! adjacency rule: no two vias on neighbouring sites of one row or column.

use serde::Serialize;
use thiserror::Error;

use crate::geom::{Cell, DbUnit, GeomError, LayerId, Rect, Shape};
use crate::metal::{draw_wire_cell_with, Execution, MetalSpec, Orientation, SpecError};
use crate::rng::{Prng, RandomSource};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ViaError {
    #[error("invalid via rule: {0}")]
    Rule(String),
    #[error("{which}: {source}")]
    Metal { which: &'static str, source: SpecError },
    #[error(transparent)]
    Geom(#[from] GeomError),
}

fn rule(msg: impl Into<String>) -> ViaError {
    ViaError::Rule(msg.into())
}

/// Via rules plus the two metal layers the vias connect. `m1` runs
/// horizontally and `m2` vertically. A zero via pitch disables the
/// corresponding adjacency rule.
#[derive(Debug, Clone, PartialEq)]
pub struct ViaSpec {
    pub via_x: DbUnit,
    pub via_y: DbUnit,
    pub density: f64,
    /// Margin to M1 line-ends, measured along x.
    pub enclosure_x: DbUnit,
    /// Margin to M2 line-ends, measured along y.
    pub enclosure_y: DbUnit,
    pub pitch_x: DbUnit,
    pub pitch_y: DbUnit,
    pub m1: MetalSpec,
    pub m2: MetalSpec,
    pub via_layer: LayerId,
    pub seed: u64,
}

impl ViaSpec {
    pub fn validate(&self) -> Result<(), ViaError> {
        self.m1.validate().map_err(|source| ViaError::Metal { which: "m1", source })?;
        self.m2.validate().map_err(|source| ViaError::Metal { which: "m2", source })?;
        if self.via_x <= 0 || self.via_y <= 0 {
            return Err(rule(format!("via size must be positive (got {} x {})", self.via_x, self.via_y)));
        }
        if !(0.0..=1.0).contains(&self.density) {
            return Err(rule(format!("via_fraction must lie in [0, 1] (got {})", self.density)));
        }
        if self.enclosure_x < 0 || self.enclosure_y < 0 {
            return Err(rule("enclosures must be non-negative"));
        }
        if self.pitch_x < 0 || self.pitch_y < 0 {
            return Err(rule("via pitches must be non-negative"));
        }
        if self.m1.orientation != Orientation::Horizontal || self.m2.orientation != Orientation::Vertical {
            return Err(rule("m1 must be horizontal and m2 vertical"));
        }
        if self.m1.wire_cd != self.via_y {
            return Err(rule(format!("m1 wire_cd {} must equal via1_y {}", self.m1.wire_cd, self.via_y)));
        }
        if self.m2.wire_cd != self.via_x {
            return Err(rule(format!("m2 wire_cd {} must equal via1_x {}", self.m2.wire_cd, self.via_x)));
        }
        if self.pitch_y > 0 && self.m1.track_pitch != self.pitch_y {
            return Err(rule(format!(
                "m1 track_pitch {} must equal min_via1_pitch_y {}",
                self.m1.track_pitch, self.pitch_y
            )));
        }
        if self.pitch_x > 0 && self.m2.track_pitch != self.pitch_x {
            return Err(rule(format!(
                "m2 track_pitch {} must equal min_via1_pitch_x {}",
                self.m2.track_pitch, self.pitch_x
            )));
        }
        if self.m1.bbox() != self.m2.bbox() {
            return Err(rule("m1 and m2 must share one cell outline"));
        }
        if self.m1.layer == self.m2.layer || self.via_layer == self.m1.layer || self.via_layer == self.m2.layer {
            return Err(rule("m1, m2 and via layers must be distinct"));
        }
        Ok(())
    }

    pub fn grid(&self) -> SiteGrid {
        SiteGrid {
            origin: self.m1.origin,
            rows: self.m1.track_count(),
            cols: self.m2.track_count(),
            row_pitch: self.m1.track_pitch,
            col_pitch: self.m2.track_pitch,
            via_x: self.via_x,
            via_y: self.via_y,
        }
    }
}

/// Placement of crossing sites. Row `i` is M1 track `i`, column `j` is M2
/// track `j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SiteGrid {
    pub origin: (DbUnit, DbUnit),
    pub rows: usize,
    pub cols: usize,
    pub row_pitch: DbUnit,
    pub col_pitch: DbUnit,
    pub via_x: DbUnit,
    pub via_y: DbUnit,
}

impl SiteGrid {
    pub fn site(&self, i: usize, j: usize) -> Rect {
        let x = self.origin.0 + j as DbUnit * self.col_pitch;
        let y = self.origin.1 + i as DbUnit * self.row_pitch;
        Rect::new(x, y, x + self.via_x, y + self.via_y).expect("positive via size")
    }
}

/// 0/1 matrix over crossing sites, stored row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ViaCandidateMatrix {
    grid: SiteGrid,
    bits: Vec<bool>,
}

impl ViaCandidateMatrix {
    pub fn zeros(grid: SiteGrid) -> Self {
        Self { grid, bits: vec![false; grid.rows * grid.cols] }
    }

    /// Builds a matrix from literal rows on a unit grid, for tests and
    /// worked examples.
    pub fn from_rows(rows: &[Vec<u8>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let grid = SiteGrid {
            origin: (0, 0),
            rows: rows.len(),
            cols,
            row_pitch: 2,
            col_pitch: 2,
            via_x: 1,
            via_y: 1,
        };
        let bits = rows
            .iter()
            .flat_map(|r| {
                assert_eq!(r.len(), cols, "ragged matrix");
                r.iter().map(|&b| b != 0)
            })
            .collect();
        Self { grid, bits }
    }

    pub fn to_rows(&self) -> Vec<Vec<u8>> {
        self.bits.chunks(self.grid.cols.max(1)).take(self.grid.rows).map(|r| r.iter().map(|&b| b as u8).collect()).collect()
    }

    pub fn grid(&self) -> &SiteGrid {
        &self.grid
    }
    pub fn rows(&self) -> usize {
        self.grid.rows
    }
    pub fn cols(&self) -> usize {
        self.grid.cols
    }
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.grid.cols + j]
    }
    pub fn set(&mut self, i: usize, j: usize, v: bool) {
        self.bits[i * self.grid.cols + j] = v;
    }
    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Via rectangle of entry (i, j).
    pub fn site(&self, i: usize, j: usize) -> Rect {
        self.grid.site(i, j)
    }

    pub fn ones(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let cols = self.grid.cols;
        self.bits.iter().enumerate().filter(|(_, &b)| b).map(move |(k, _)| (k / cols, k % cols))
    }

    fn and(&self, other: &Self) -> Self {
        let bits = self.bits.iter().zip(&other.bits).map(|(a, b)| *a && *b).collect();
        Self { grid: self.grid, bits }
    }

    pub fn transpose(&self) -> Self {
        let g = self.grid;
        let tg = SiteGrid {
            origin: (g.origin.1, g.origin.0),
            rows: g.cols,
            cols: g.rows,
            row_pitch: g.col_pitch,
            col_pitch: g.row_pitch,
            via_x: g.via_y,
            via_y: g.via_x,
        };
        let mut t = Self::zeros(tg);
        for (i, j) in self.ones() {
            t.set(j, i, true);
        }
        t
    }
}

/// Wires with both line-ends pulled in; used to pre-filter enclosure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssistLayer {
    pub orientation: Orientation,
    pub rects: Vec<Rect>,
}

pub fn build_assist_layer(cell: &Cell, shrink: DbUnit, orientation: Orientation) -> AssistLayer {
    assert!(shrink >= 0, "negative shrink");
    let rects = cell
        .shapes()
        .iter()
        .filter_map(|s| {
            let r = s.rect;
            match orientation {
                Orientation::Horizontal => Rect::new(r.x_ll() + shrink, r.y_ll(), r.x_ur() - shrink, r.y_ur()),
                Orientation::Vertical => Rect::new(r.x_ll(), r.y_ll() + shrink, r.x_ur(), r.y_ur() - shrink),
            }
            .ok()
        })
        .collect();
    AssistLayer { orientation, rects }
}

fn div_floor(a: DbUnit, b: DbUnit) -> DbUnit {
    a.div_euclid(b)
}

fn div_ceil(a: DbUnit, b: DbUnit) -> DbUnit {
    -(-a).div_euclid(b)
}

/// How a wire must relate to a site along the track direction.
#[derive(Clone, Copy)]
enum Coverage {
    /// Positive-length overlap.
    Touch,
    /// Full containment of the site's extent.
    Contain,
}

/// Marks every site a set of wires reaches. Wires are mapped to tracks by
/// their lower edge; off-track rectangles are ignored.
fn mark_sites(rects: &[Rect], orientation: Orientation, grid: &SiteGrid, cov: Coverage) -> ViaCandidateMatrix {
    let mut m = ViaCandidateMatrix::zeros(*grid);
    // Swap into track-local terms: `track_*` is across tracks, `pos_*` along.
    let (track_origin, track_pitch, track_count, track_cd, pos_origin, pos_pitch, pos_count, site_len) = match orientation {
        Orientation::Horizontal => {
            (grid.origin.1, grid.row_pitch, grid.rows, grid.via_y, grid.origin.0, grid.col_pitch, grid.cols, grid.via_x)
        }
        Orientation::Vertical => {
            (grid.origin.0, grid.col_pitch, grid.cols, grid.via_x, grid.origin.1, grid.row_pitch, grid.rows, grid.via_y)
        }
    };
    if track_count == 0 || pos_count == 0 {
        return m;
    }
    for r in rects {
        let (t_lo, t_hi, a_lo, a_hi) = match orientation {
            Orientation::Horizontal => (r.y_ll(), r.y_ur(), r.x_ll(), r.x_ur()),
            Orientation::Vertical => (r.x_ll(), r.x_ur(), r.y_ll(), r.y_ur()),
        };
        let rel = t_lo - track_origin;
        if rel < 0 || rel % track_pitch != 0 || t_hi - t_lo != track_cd {
            continue;
        }
        let track = (rel / track_pitch) as usize;
        if track >= track_count {
            continue;
        }
        let (lo, hi) = match cov {
            // site start s overlaps (a_lo, a_hi) iff s < a_hi and s + len > a_lo
            Coverage::Touch => (
                div_floor(a_lo - pos_origin - site_len, pos_pitch) + 1,
                div_ceil(a_hi - pos_origin, pos_pitch) - 1,
            ),
            // site [s, s + len] inside [a_lo, a_hi]
            Coverage::Contain => (
                div_ceil(a_lo - pos_origin, pos_pitch),
                div_floor(a_hi - pos_origin - site_len, pos_pitch),
            ),
        };
        let lo = lo.max(0);
        let hi = hi.min(pos_count as DbUnit - 1);
        for p in lo..=hi {
            let p = p as usize;
            match orientation {
                Orientation::Horizontal => m.set(track, p, true),
                Orientation::Vertical => m.set(p, track, true),
            }
        }
    }
    m
}

fn grid_for(m1_cell: &Cell, v: &ViaSpec) -> SiteGrid {
    let mut g = v.grid();
    g.origin = (m1_cell.bbox().x_ll(), m1_cell.bbox().y_ll());
    g
}

/// Raw crossing matrix: 1 wherever an M1 wire and an M2 wire overlap at a
/// site, before any enclosure filtering.
pub fn overlap_matrix(m1_cell: &Cell, m2_cell: &Cell, v: &ViaSpec) -> ViaCandidateMatrix {
    let grid = grid_for(m1_cell, v);
    let m1: Vec<Rect> = m1_cell.rects_on(v.m1.layer).copied().collect();
    let m2: Vec<Rect> = m2_cell.rects_on(v.m2.layer).copied().collect();
    let h = mark_sites(&m1, Orientation::Horizontal, &grid, Coverage::Touch);
    let vv = mark_sites(&m2, Orientation::Vertical, &grid, Coverage::Touch);
    h.and(&vv)
}

/// Candidate matrix: sites whose full via rectangle lies inside both assist
/// layers (M1 shrunk by `enclosure_x`, M2 by `enclosure_y`).
pub fn build_candidate_matrix(m1_cell: &Cell, m2_cell: &Cell, v: &ViaSpec) -> ViaCandidateMatrix {
    let grid = grid_for(m1_cell, v);
    let m1_only = Cell::new_unchecked("", m1_cell.bbox(), m1_cell.shapes().iter().filter(|s| s.layer == v.m1.layer).copied().collect());
    let m2_only = Cell::new_unchecked("", m2_cell.bbox(), m2_cell.shapes().iter().filter(|s| s.layer == v.m2.layer).copied().collect());
    let a1 = build_assist_layer(&m1_only, v.enclosure_x, Orientation::Horizontal);
    let a2 = build_assist_layer(&m2_only, v.enclosure_y, Orientation::Vertical);
    let h = mark_sites(&a1.rects, Orientation::Horizontal, &grid, Coverage::Contain);
    let vv = mark_sites(&a2.rects, Orientation::Vertical, &grid, Coverage::Contain);
    h.and(&vv)
}

/// Keeps each 1-entry with probability `density`, one draw per entry in
/// row-major order.
pub fn apply_density<R: RandomSource>(m: &ViaCandidateMatrix, density: f64, rng: &mut R) -> ViaCandidateMatrix {
    let mut out = m.clone();
    for k in 0..out.bits.len() {
        if out.bits[k] {
            out.bits[k] = rng.rand_unit() < density;
        }
    }
    out
}

/// Two row-major passes: first clear (i, j) when (i-1, j) is set, then
/// clear (i, j) when (i, j-1) is set. Earlier sites always survive.
pub fn remove_pitch_conflicts(m: &ViaCandidateMatrix) -> ViaCandidateMatrix {
    remove_pitch_conflicts_on(m, true, true)
}

/// Like [`remove_pitch_conflicts`] with each pass switchable; a disabled
/// pass corresponds to a zero via pitch on that axis.
pub fn remove_pitch_conflicts_on(m: &ViaCandidateMatrix, column_pass: bool, row_pass: bool) -> ViaCandidateMatrix {
    let mut out = m.clone();
    let (rows, cols) = (out.rows(), out.cols());
    if column_pass {
        for i in 1..rows {
            for j in 0..cols {
                if out.get(i, j) && out.get(i - 1, j) {
                    out.set(i, j, false);
                }
            }
        }
    }
    if row_pass {
        for i in 0..rows {
            for j in 1..cols {
                if out.get(i, j) && out.get(i, j - 1) {
                    out.set(i, j, false);
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ViaStats {
    pub candidates: usize,
    pub after_density: usize,
    pub after_pitch: usize,
    /// Surviving vias over candidates; zero without candidates.
    pub realized_density: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViaLayout {
    pub m1: Cell,
    pub m2: Cell,
    pub via: Cell,
    pub stats: ViaStats,
}

pub fn generate_via_cell_with(v: &ViaSpec, exec: Execution) -> Result<ViaLayout, ViaError> {
    v.validate()?;
    let m1 = draw_wire_cell_with(&v.m1, exec).map_err(|source| ViaError::Metal { which: "m1", source })?;
    let m2 = draw_wire_cell_with(&v.m2, exec).map_err(|source| ViaError::Metal { which: "m2", source })?;
    let candidates = build_candidate_matrix(&m1, &m2, v);
    let mut rng = Prng::new(v.seed);
    let sampled = apply_density(&candidates, v.density, &mut rng);
    let kept = remove_pitch_conflicts_on(&sampled, v.pitch_y > 0, v.pitch_x > 0);
    let shapes = kept.ones().map(|(i, j)| Shape { layer: v.via_layer, rect: kept.site(i, j) }).collect();
    let via = Cell::new(format!("V{}", v.via_layer), v.m1.bbox(), shapes)?;
    let n = candidates.count_ones();
    let after_pitch = kept.count_ones();
    let stats = ViaStats {
        candidates: n,
        after_density: sampled.count_ones(),
        after_pitch,
        realized_density: if n == 0 { 0.0 } else { after_pitch as f64 / n as f64 },
    };
    Ok(ViaLayout { m1, m2, via, stats })
}

/// Full via pipeline: both gratings, candidates, density, pitch pruning.
pub fn generate_via_cell(v: &ViaSpec) -> Result<ViaLayout, ViaError> {
    generate_via_cell_with(v, Execution::Parallel)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(a: DbUnit, b: DbUnit, c: DbUnit, d: DbUnit) -> Rect {
        Rect::new(a, b, c, d).unwrap()
    }

    pub(crate) fn small_spec(total: DbUnit, density: f64) -> ViaSpec {
        let m = MetalSpec {
            wire_cd: 70,
            track_pitch: 140,
            min_t2t: 70,
            max_t2t: 600,
            min_length: 140,
            max_length: 1400,
            t2t_grid: 10,
            total_x: total,
            total_y: total,
            origin: (0, 0),
            orientation: Orientation::Horizontal,
            layer: 1,
            seed: 11,
        };
        ViaSpec {
            via_x: 70,
            via_y: 70,
            density,
            enclosure_x: 20,
            enclosure_y: 20,
            pitch_x: 140,
            pitch_y: 140,
            m1: m.clone(),
            m2: MetalSpec { orientation: Orientation::Vertical, layer: 3, seed: 12, ..m },
            via_layer: 2,
            seed: 13,
        }
    }

    #[test]
    fn assist_examples() {
        let bbox = r(0, 0, 200, 200);
        let cell = Cell::new("C", bbox, vec![Shape { layer: 1, rect: r(0, 0, 100, 16) }]).unwrap();
        assert_eq!(build_assist_layer(&cell, 20, Orientation::Horizontal).rects, vec![r(20, 0, 80, 16)]);
        assert_eq!(build_assist_layer(&cell, 0, Orientation::Horizontal).rects, vec![r(0, 0, 100, 16)]);
        let short = Cell::new("C", bbox, vec![Shape { layer: 1, rect: r(0, 0, 30, 16) }]).unwrap();
        assert!(build_assist_layer(&short, 20, Orientation::Horizontal).rects.is_empty());
        let vert = Cell::new("C", bbox, vec![Shape { layer: 1, rect: r(0, 0, 16, 100) }]).unwrap();
        assert_eq!(build_assist_layer(&vert, 20, Orientation::Vertical).rects, vec![r(0, 20, 16, 80)]);
    }

    #[test]
    fn pitch_examples() {
        let m = ViaCandidateMatrix::from_rows(&[vec![0, 1, 0], vec![0, 1, 0], vec![0, 0, 1]]);
        assert_eq!(remove_pitch_conflicts(&m).to_rows(), vec![vec![0, 1, 0], vec![0, 0, 0], vec![0, 0, 1]]);
        let row = ViaCandidateMatrix::from_rows(&[vec![1, 1, 1]]);
        assert_eq!(remove_pitch_conflicts(&row).to_rows(), vec![vec![1, 0, 1]]);
        let iso = ViaCandidateMatrix::from_rows(&[vec![1, 0, 1], vec![0, 0, 0], vec![1, 0, 1]]);
        assert_eq!(remove_pitch_conflicts(&iso), iso);
    }

    #[test]
    fn density_extremes() {
        let m = ViaCandidateMatrix::from_rows(&[vec![1, 1, 0], vec![0, 1, 1]]);
        let mut rng = Prng::new(5);
        assert_eq!(apply_density(&m, 1.0, &mut rng), m);
        assert_eq!(apply_density(&m, 0.0, &mut rng).count_ones(), 0);
    }

    #[test]
    fn density_binomial_bound() {
        let rows = vec![vec![1u8; 100]; 100];
        let m = ViaCandidateMatrix::from_rows(&rows);
        let kept = apply_density(&m, 0.3, &mut Prng::new(2024)).count_ones() as f64 / 1e4;
        let sigma = (0.3f64 * 0.7 / 1e4).sqrt();
        assert!((kept - 0.3).abs() <= 3.0 * sigma, "kept fraction {kept}");
    }

    #[test]
    fn empty_m2_gives_zero_matrix() {
        let v = small_spec(2000, 1.0);
        let m1 = draw_wire_cell_with(&v.m1, Execution::Serial).unwrap();
        let m2 = Cell::empty("M2", v.m2.bbox());
        assert_eq!(build_candidate_matrix(&m1, &m2, &v).count_ones(), 0);
        assert_eq!(overlap_matrix(&m1, &m2, &v).count_ones(), 0);
    }

    #[test]
    fn full_gratings_are_all_candidates() {
        let v = small_spec(1050, 1.0);
        let bbox = v.m1.bbox();
        let g = v.grid();
        let m1: Vec<Shape> = (0..g.rows)
            .map(|i| Shape { layer: 1, rect: r(0, i as DbUnit * 140, 1050, i as DbUnit * 140 + 70) })
            .collect();
        let m2: Vec<Shape> = (0..g.cols)
            .map(|j| Shape { layer: 3, rect: r(j as DbUnit * 140, 0, j as DbUnit * 140 + 70, 1050) })
            .collect();
        let m1c = Cell::new("M1", bbox, m1).unwrap();
        let m2c = Cell::new("M2", bbox, m2).unwrap();
        let raw = overlap_matrix(&m1c, &m2c, &v);
        assert_eq!(raw.count_ones(), g.rows * g.cols);
        let cand = build_candidate_matrix(&m1c, &m2c, &v);
        // Wires end at the outline, so only the outer ring lacks enclosure.
        for i in 0..g.rows {
            for j in 0..g.cols {
                let interior = i > 0 && j > 0 && i + 1 < g.rows && j + 1 < g.cols;
                if interior {
                    assert!(cand.get(i, j), "({i}, {j})");
                }
            }
        }
    }

    #[test]
    fn zero_density_leaves_metals() {
        let v = small_spec(3000, 0.0);
        let out = generate_via_cell(&v).unwrap();
        assert!(out.via.shapes().is_empty());
        assert_eq!(out.m1, draw_wire_cell_with(&v.m1, Execution::Serial).unwrap());
        assert_eq!(out.stats.realized_density, 0.0);
    }

    #[test]
    fn pitch_invariant_after_pipeline() {
        let v = small_spec(5000, 0.8);
        let m1 = draw_wire_cell_with(&v.m1, Execution::Serial).unwrap();
        let m2 = draw_wire_cell_with(&v.m2, Execution::Serial).unwrap();
        let c = build_candidate_matrix(&m1, &m2, &v);
        let k = remove_pitch_conflicts(&apply_density(&c, 0.8, &mut Prng::new(1)));
        for i in 0..k.rows() {
            for j in 0..k.cols() {
                if k.get(i, j) {
                    assert!(i == 0 || !k.get(i - 1, j));
                    assert!(j == 0 || !k.get(i, j - 1));
                }
            }
        }
    }

    #[test]
    fn candidates_commute_with_transpose() {
        for seed in 0..8u64 {
            let mut v = small_spec(3000, 1.0);
            v.m1.seed = seed;
            v.m2.seed = seed + 100;
            v.enclosure_x = 20;
            v.enclosure_y = 30;
            let m1 = draw_wire_cell_with(&v.m1, Execution::Serial).unwrap();
            let m2 = draw_wire_cell_with(&v.m2, Execution::Serial).unwrap();
            let c = build_candidate_matrix(&m1, &m2, &v);

            // Mirror across the diagonal: M2 becomes the horizontal layer.
            let flip = |cell: &Cell, layer| {
                let shapes = cell.shapes().iter().map(|s| Shape { layer, rect: s.rect.transpose() }).collect();
                Cell::new("T", cell.bbox().transpose(), shapes).unwrap()
            };
            let mut t = v.clone();
            t.m1 = MetalSpec { orientation: Orientation::Horizontal, ..v.m2.clone() };
            t.m1.layer = 1;
            t.m2 = MetalSpec { orientation: Orientation::Vertical, ..v.m1.clone() };
            t.m2.layer = 3;
            t.enclosure_x = v.enclosure_y;
            t.enclosure_y = v.enclosure_x;
            t.pitch_x = v.pitch_y;
            t.pitch_y = v.pitch_x;
            let ct = build_candidate_matrix(&flip(&m2, 1), &flip(&m1, 3), &t);
            assert_eq!(ct, c.transpose());
        }
    }

    #[test]
    fn invariants_enforced() {
        let v = small_spec(1000, 0.5);
        assert!(ViaSpec { density: 1.5, ..v.clone() }.validate().is_err());
        let mut bad = v.clone();
        bad.m1.wire_cd = 60;
        assert!(bad.validate().is_err());
        let mut bad = v.clone();
        bad.m2.track_pitch = 150;
        assert!(bad.validate().is_err());
        let mut ok = v;
        ok.pitch_x = 0;
        ok.m2.track_pitch = 150;
        assert!(ok.validate().is_ok());
    }
}
