//! Clip rasterization, block-DCT feature tensors and circle sampling.

pub mod ccas;
pub mod dct;

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{Cell, DbUnit, Rect};

pub use ccas::{ccas_sample, mutual_information, select_circles, CcasConfig, Direction};
pub use dct::{dct2, idct2, zigzag, zigzag_order, DctPlan};

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("window {window} is not inside the cell bbox {bbox}")]
    WindowOutside { window: Rect, bbox: Rect },
    #[error("{what} {value} is not divisible by {by}")]
    Indivisible { what: &'static str, value: DbUnit, by: DbUnit },
    #[error("{0}")]
    Config(String),
    #[error("cannot pick {n_c} circles pairwise more than {d} apart from {r_max}")]
    Infeasible { n_c: usize, d: usize, r_max: usize },
    #[error("tensor file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Hotspot,
    NonHotspot,
}

impl Label {
    pub fn as_index(self) -> usize {
        match self {
            Label::Hotspot => 1,
            Label::NonHotspot => 0,
        }
    }
    pub fn name(self) -> &'static str {
        match self {
            Label::Hotspot => "hotspot",
            Label::NonHotspot => "non-hotspot",
        }
    }
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "hotspot" | "1" => Some(Label::Hotspot),
            "non-hotspot" | "0" => Some(Label::NonHotspot),
            _ => None,
        }
    }
}

/// Binary raster, row 0 at the window's lower edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterClip {
    pub rows: usize,
    pub cols: usize,
    pub grid: Vec<u8>,
    pub pixel_size: DbUnit,
    pub origin: (DbUnit, DbUnit),
    pub label: Option<Label>,
}

impl RasterClip {
    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.grid[row * self.cols + col]
    }
}

/// Index range of pixels whose (doubled) centers fall in [lo, hi).
fn covered_span(lo: DbUnit, hi: DbUnit, origin: DbUnit, ps: DbUnit, n: usize) -> (usize, usize) {
    // center2(c) = 2 origin + (2c + 1) ps; want 2 lo <= center2 < 2 hi
    let first = |bound: DbUnit| -(-(2 * (bound - origin) - ps)).div_euclid(2 * ps);
    let (a, b) = (first(lo), first(hi));
    (a.clamp(0, n as DbUnit) as usize, b.clamp(0, n as DbUnit) as usize)
}

/// A pixel is set iff its center lies in some shape (half-open on the upper
/// and right edges). All layers of the cell are merged.
pub fn rasterize_clip(cell: &Cell, window: Rect, pixel_size: DbUnit) -> Result<RasterClip, FeatureError> {
    if pixel_size <= 0 {
        return Err(FeatureError::Config(format!("pixel size must be positive (got {pixel_size})")));
    }
    if !cell.bbox().contains(&window) {
        return Err(FeatureError::WindowOutside { window, bbox: cell.bbox() });
    }
    for (what, value) in [("window width", window.width()), ("window height", window.height())] {
        if value % pixel_size != 0 {
            return Err(FeatureError::Indivisible { what, value, by: pixel_size });
        }
    }
    let cols = (window.width() / pixel_size) as usize;
    let rows = (window.height() / pixel_size) as usize;
    let mut grid = vec![0u8; rows * cols];
    for s in cell.shapes() {
        let Some(r) = s.rect.intersect(&window) else { continue };
        let (c0, c1) = covered_span(r.x_ll(), r.x_ur(), window.x_ll(), pixel_size, cols);
        let (r0, r1) = covered_span(r.y_ll(), r.y_ur(), window.y_ll(), pixel_size, rows);
        for row in r0..r1 {
            grid[row * cols + c0..row * cols + c1].fill(1);
        }
    }
    Ok(RasterClip { rows, cols, grid, pixel_size, origin: (window.x_ll(), window.y_ll()), label: None })
}

/// Truncated zig-zag DCT coefficients per block, laid out (b_row, b_col, k).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTensor {
    pub blocks: usize,
    pub keep: usize,
    pub values: Vec<f64>,
}

impl FeatureTensor {
    pub fn at(&self, b_row: usize, b_col: usize, k: usize) -> f64 {
        self.values[(b_row * self.blocks + b_col) * self.keep + k]
    }
}

fn block_size(rows: usize, cols: usize, blocks: usize) -> Result<usize, FeatureError> {
    if blocks == 0 || !rows.is_multiple_of(blocks) || !cols.is_multiple_of(blocks) || rows != cols {
        return Err(FeatureError::Indivisible {
            what: "square clip side",
            value: rows.max(cols) as DbUnit,
            by: blocks as DbUnit,
        });
    }
    Ok(rows / blocks)
}

pub fn feature_tensor(clip: &RasterClip, blocks: usize, keep: usize) -> Result<FeatureTensor, FeatureError> {
    let bs = block_size(clip.rows, clip.cols, blocks)?;
    if keep == 0 || keep > bs * bs {
        return Err(FeatureError::Config(format!("keep {keep} must be in 1..={}", bs * bs)));
    }
    let plan = DctPlan::new(bs);
    let mut values = Vec::with_capacity(blocks * blocks * keep);
    let mut block = vec![0.0; bs * bs];
    for br in 0..blocks {
        for bc in 0..blocks {
            for r in 0..bs {
                for c in 0..bs {
                    block[r * bs + c] = clip.get(br * bs + r, bc * bs + c) as f64;
                }
            }
            let coeffs = zigzag(&plan.forward(&block), bs);
            values.extend_from_slice(&coeffs[..keep]);
        }
    }
    Ok(FeatureTensor { blocks, keep, values })
}

/// Inverse pipeline: pad each block's coefficients with zeros, undo the
/// zig-zag and the DCT. Returns real pixel values, row-major.
pub fn reconstruct(tensor: &FeatureTensor, block_size: usize) -> Vec<f64> {
    let (b, bs) = (tensor.blocks, block_size);
    let side = b * bs;
    let plan = DctPlan::new(bs);
    let mut out = vec![0.0; side * side];
    for br in 0..b {
        for bc in 0..b {
            let start = (br * b + bc) * tensor.keep;
            let block = plan.inverse(&dct::unzigzag(&tensor.values[start..start + tensor.keep], bs));
            for r in 0..bs {
                for c in 0..bs {
                    out[(br * bs + r) * side + bc * bs + c] = block[r * bs + c];
                }
            }
        }
    }
    out
}

/// Writes tensors sharing one shape: a header of three little-endian u32
/// (B, B, K) followed by every tensor's values as little-endian f64.
pub fn write_tensors<W: Write>(tensors: &[FeatureTensor], mut sink: W) -> Result<(), FeatureError> {
    let (b, k) = tensors.first().map_or((0, 0), |t| (t.blocks, t.keep));
    if tensors.iter().any(|t| t.blocks != b || t.keep != k) {
        return Err(FeatureError::Format("tensors differ in shape".into()));
    }
    for v in [b as u32, b as u32, k as u32] {
        sink.write_all(&v.to_le_bytes())?;
    }
    for t in tensors {
        for v in &t.values {
            sink.write_all(&v.to_le_bytes())?;
        }
    }
    sink.flush()?;
    Ok(())
}

pub fn read_tensors<R: Read>(mut source: R) -> Result<Vec<FeatureTensor>, FeatureError> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    if bytes.len() < 12 {
        return Err(FeatureError::Format(format!("{} bytes is shorter than the header", bytes.len())));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[4 * i..4 * i + 4].try_into().unwrap()) as usize;
    let (b0, b1, k) = (word(0), word(1), word(2));
    if b0 != b1 {
        return Err(FeatureError::Format(format!("non-square block grid {b0}x{b1}")));
    }
    let per = b0 * b1 * k * 8;
    let body = &bytes[12..];
    if per == 0 {
        return if body.is_empty() { Ok(Vec::new()) } else { Err(FeatureError::Format("data after empty header".into())) };
    }
    if body.len() % per != 0 {
        return Err(FeatureError::Format(format!("{} data bytes is not a multiple of {per}", body.len())));
    }
    Ok(body
        .chunks_exact(per)
        .map(|chunk| FeatureTensor {
            blocks: b0,
            keep: k,
            values: chunk.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect(),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Shape;

    fn r(a: DbUnit, b: DbUnit, c: DbUnit, d: DbUnit) -> Rect {
        Rect::new(a, b, c, d).unwrap()
    }

    #[test]
    fn raster_examples() {
        let bbox = r(0, 0, 100, 100);
        let empty = rasterize_clip(&Cell::empty("E", bbox), bbox, 10).unwrap();
        assert!(empty.grid.iter().all(|&p| p == 0));
        let wire = Cell::new("W", bbox, vec![Shape { layer: 1, rect: r(0, 0, 100, 100) }]).unwrap();
        assert!(rasterize_clip(&wire, r(20, 20, 60, 60), 10).unwrap().grid.iter().all(|&p| p == 1));
        let half = Cell::new("H", bbox, vec![Shape { layer: 1, rect: r(0, 0, 50, 100) }]).unwrap();
        let clip = rasterize_clip(&half, bbox, 10).unwrap();
        for row in 0..10 {
            for col in 0..10 {
                assert_eq!(clip.get(row, col), u8::from(col < 5));
            }
        }
        assert!(matches!(rasterize_clip(&half, r(0, 0, 95, 100), 10), Err(FeatureError::Indivisible { .. })));
    }

    #[test]
    fn center_sampling_odd_pixels() {
        // pixel centers at 1.5, 4.5, 7.5: a shape on [2, 5) covers only the middle one
        let bbox = r(0, 0, 9, 3);
        let cell = Cell::new("C", bbox, vec![Shape { layer: 1, rect: r(2, 0, 5, 3) }]).unwrap();
        let clip = rasterize_clip(&cell, bbox, 3).unwrap();
        assert_eq!(clip.grid, vec![0, 1, 0]);
        let edge = Cell::new("D", bbox, vec![Shape { layer: 1, rect: r(0, 0, 4, 3) }]).unwrap();
        assert_eq!(rasterize_clip(&edge, bbox, 3).unwrap().grid, vec![1, 0, 0]);
    }

    #[test]
    fn table_iii_shape() {
        let bbox = r(0, 0, 1200, 1200);
        let clip = rasterize_clip(&Cell::empty("E", bbox), bbox, 10).unwrap();
        let t = feature_tensor(&clip, 12, 32).unwrap();
        assert_eq!(t.values.len(), 12 * 12 * 32);
        assert!(t.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn tensor_file_round_trip() {
        let t = FeatureTensor { blocks: 2, keep: 3, values: (0..12).map(|i| i as f64 * 0.5 - 1.0).collect() };
        let mut buf = Vec::new();
        write_tensors(&[t.clone(), t.clone()], &mut buf).unwrap();
        assert_eq!(&buf[..12], &[2, 0, 0, 0, 2, 0, 0, 0, 3, 0, 0, 0]);
        assert_eq!(read_tensors(&buf[..]).unwrap(), vec![t.clone(), t]);
        assert!(read_tensors(&buf[..buf.len() - 8]).is_err());
    }
}
