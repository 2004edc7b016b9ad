//! Clip datasets cut from generated metal cells.
//!
//! A dataset directory holds `manifest.csv` (`clip_id,window,label`, the
//! window as four space-separated nm coordinates) and one JSON-lines shape
//! file per clip under `clips/`. Feature extraction adds `tensors.bin`
//! (clips in manifest order), `ccas.csv` and `circles.json`.
//!
//! Without a lithography simulator, labels come from a geometric proxy: a
//! clip is a hotspot when a line-end gap no wider than a threshold has its
//! center inside the clip's central core.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::config::FeaturesConfig;
use crate::features::ccas::circle_information;
use crate::features::{
    ccas_sample, feature_tensor, rasterize_clip, read_tensors, select_circles, write_tensors, FeatureError,
    FeatureTensor, Label,
};
use crate::geom::{Cell, DbUnit, Rect, Shape};
use crate::jsonl::{self, JsonlError};
use crate::metal::{MetalSpec, Orientation};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Csv { path: String, source: csv::Error },
    #[error("{path}: {source}")]
    Jsonl { path: String, source: JsonlError },
    #[error("{path}: {msg}")]
    Format { path: String, msg: String },
    #[error(transparent)]
    Feature(#[from] FeatureError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io { path: path.display().to_string(), source }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> DatasetError + '_ {
    move |source| DatasetError::Csv { path: path.display().to_string(), source }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClipRecord {
    pub id: usize,
    pub window: Rect,
    pub label: Label,
}

/// Line-end gaps no wider than `max_gap`, as rectangles spanning the wire
/// width between the two facing ends.
pub fn narrow_gaps(cell: &Cell, spec: &MetalSpec, max_gap: DbUnit) -> Vec<Rect> {
    let vertical = spec.orientation == Orientation::Vertical;
    let mut tracks: BTreeMap<DbUnit, Vec<Rect>> = BTreeMap::new();
    for r in cell.rects_on(spec.layer) {
        let local = if vertical { r.transpose() } else { *r };
        tracks.entry(local.y_ll()).or_default().push(local);
    }
    let mut gaps = Vec::new();
    for wires in tracks.values_mut() {
        wires.sort_by_key(|r| (r.x_ll(), r.x_ur()));
        for pair in wires.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let g = b.x_ll() - a.x_ur();
            if g > 0 && g <= max_gap {
                let gap = Rect::new(a.x_ur(), a.y_ll(), b.x_ll(), a.y_ur()).expect("positive gap");
                gaps.push(if vertical { gap.transpose() } else { gap });
            }
        }
    }
    gaps
}

/// Centered square of side `fraction` times the window side.
pub fn core_of(window: &Rect, fraction: f64) -> Rect {
    let side = ((window.width().min(window.height()) as f64) * fraction).round().max(1.0) as DbUnit;
    let (cx2, cy2) = window.center2();
    let x_ll = (cx2 - side) / 2;
    let y_ll = (cy2 - side) / 2;
    Rect::new(x_ll, y_ll, x_ll + side, y_ll + side).expect("positive core")
}

fn center_in(r: &Rect, area: &Rect) -> bool {
    let (x2, y2) = r.center2();
    2 * area.x_ll() <= x2 && x2 < 2 * area.x_ur() && 2 * area.y_ll() <= y2 && y2 < 2 * area.y_ur()
}

/// Tiles the region `[origin, origin + extent)²` of the cell (clamped to
/// its bbox) with clip windows and labels each one.
pub fn cut_clips(cell: &Cell, spec: &MetalSpec, cfg: &FeaturesConfig, max_gap: DbUnit) -> Vec<ClipRecord> {
    let bbox = cell.bbox();
    let (clip, stride) = (cfg.clip.0, cfg.stride.0);
    let x_end = bbox.x_ur().min(bbox.x_ll() + cfg.extent.0);
    let y_end = bbox.y_ur().min(bbox.y_ll() + cfg.extent.0);
    let gaps = narrow_gaps(cell, spec, max_gap);
    let mut out = Vec::new();
    let mut y = bbox.y_ll();
    while y + clip <= y_end {
        let mut x = bbox.x_ll();
        while x + clip <= x_end {
            let window = Rect::new(x, y, x + clip, y + clip).expect("positive clip");
            let core = core_of(&window, cfg.core);
            let hot = gaps.iter().any(|g| center_in(g, &core));
            out.push(ClipRecord { id: out.len(), window, label: if hot { Label::Hotspot } else { Label::NonHotspot } });
            x += stride;
        }
        y += stride;
    }
    out
}

/// Shapes of `cell` cut to `window`.
pub fn clip_shapes(cell: &Cell, window: &Rect) -> Vec<Shape> {
    cell.shapes()
        .iter()
        .filter_map(|s| s.rect.intersect(window).map(|rect| Shape { layer: s.layer, rect }))
        .collect()
}

fn clip_file(dir: &Path, id: usize) -> PathBuf {
    dir.join("clips").join(format!("clip_{id:05}.jsonl"))
}

pub fn write_dataset(dir: &Path, cell: &Cell, clips: &[ClipRecord]) -> Result<(), DatasetError> {
    fs::create_dir_all(dir.join("clips")).map_err(io_err(dir))?;
    let manifest = dir.join("manifest.csv");
    let mut w = csv::Writer::from_path(&manifest).map_err(csv_err(&manifest))?;
    w.write_record(["clip_id", "window", "label"]).map_err(csv_err(&manifest))?;
    for c in clips {
        let [a, b, cc, d] = c.window.coords();
        w.write_record([c.id.to_string(), format!("{a} {b} {cc} {d}"), c.label.name().to_string()])
            .map_err(csv_err(&manifest))?;
        let path = clip_file(dir, c.id);
        let f = File::create(&path).map_err(io_err(&path))?;
        jsonl::write_shapes(&clip_shapes(cell, &c.window), BufWriter::new(f)).map_err(io_err(&path))?;
    }
    w.flush().map_err(io_err(&manifest))?;
    Ok(())
}

pub fn read_manifest(dir: &Path) -> Result<Vec<ClipRecord>, DatasetError> {
    let path = dir.join("manifest.csv");
    let mut rdr = csv::Reader::from_path(&path).map_err(csv_err(&path))?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err(&path))?;
        let bad = |msg: String| DatasetError::Format { path: path.display().to_string(), msg };
        if rec.len() != 3 {
            return Err(bad(format!("expected 3 fields, got {}", rec.len())));
        }
        let id: usize = rec[0].trim().parse().map_err(|e| bad(format!("clip_id `{}`: {e}", &rec[0])))?;
        let coords: Vec<DbUnit> = rec[1]
            .split_whitespace()
            .map(|t| t.parse::<DbUnit>())
            .collect::<Result<_, _>>()
            .map_err(|e| bad(format!("window `{}`: {e}", &rec[1])))?;
        let [a, b, c, d] = coords[..] else {
            return Err(bad(format!("window `{}` needs four coordinates", &rec[1])));
        };
        let window = Rect::new(a, b, c, d).map_err(|e| bad(e.to_string()))?;
        let label = Label::parse(&rec[2]).ok_or_else(|| bad(format!("label `{}`", &rec[2])))?;
        out.push(ClipRecord { id, window, label });
    }
    Ok(out)
}

pub fn read_clip(dir: &Path, record: &ClipRecord) -> Result<Cell, DatasetError> {
    let path = clip_file(dir, record.id);
    let f = File::open(&path).map_err(io_err(&path))?;
    let shapes = jsonl::read_shapes(BufReader::new(f))
        .map_err(|source| DatasetError::Jsonl { path: path.display().to_string(), source })?;
    Cell::new(format!("CLIP_{}", record.id), record.window, shapes).map_err(|e| DatasetError::Format {
        path: path.display().to_string(),
        msg: e.to_string(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CircleSelection {
    pub mutual_information: Vec<f64>,
    pub selected: Vec<usize>,
}

pub struct ExtractedFeatures {
    pub tensors: Vec<FeatureTensor>,
    pub circles: Vec<Vec<f64>>,
    pub selection: Option<CircleSelection>,
}

/// Rasterizes every clip and computes its DCT tensor and circle densities.
/// The circle selection needs both classes and is skipped otherwise.
pub fn extract_features(dir: &Path, cfg: &FeaturesConfig) -> Result<(Vec<ClipRecord>, ExtractedFeatures), DatasetError> {
    let records = read_manifest(dir)?;
    let per_clip: Vec<(FeatureTensor, Vec<f64>)> = records
        .par_iter()
        .map(|r| {
            let cell = read_clip(dir, r)?;
            let raster = rasterize_clip(&cell, r.window, cfg.pixel.0)?;
            Ok((feature_tensor(&raster, cfg.blocks, cfg.keep)?, ccas_sample(&raster, cfg.ccas.r_max)?))
        })
        .collect::<Result<_, DatasetError>>()?;
    let (tensors, circles): (Vec<_>, Vec<_>) = per_clip.into_iter().unzip();
    let labels: Vec<usize> = records.iter().map(|r| r.label.as_index()).collect();
    let both = labels.contains(&0) && labels.contains(&1);
    let selection = if both && !circles.is_empty() {
        let mi = circle_information(&circles, &labels, cfg.ccas.bins)?;
        let selected = select_circles(&circles, &labels, &cfg.ccas, cfg.direction)?;
        Some(CircleSelection { mutual_information: mi, selected })
    } else {
        None
    };
    Ok((records, ExtractedFeatures { tensors, circles, selection }))
}

pub fn write_features(dir: &Path, records: &[ClipRecord], f: &ExtractedFeatures) -> Result<(), DatasetError> {
    let tpath = dir.join("tensors.bin");
    let file = File::create(&tpath).map_err(io_err(&tpath))?;
    write_tensors(&f.tensors, BufWriter::new(file))?;
    let cpath = dir.join("ccas.csv");
    let mut w = csv::Writer::from_path(&cpath).map_err(csv_err(&cpath))?;
    let r_max = f.circles.first().map_or(0, Vec::len);
    let mut header = vec!["clip_id".to_string(), "label".to_string()];
    header.extend((1..=r_max).map(|i| format!("c{i}")));
    w.write_record(&header).map_err(csv_err(&cpath))?;
    for (r, c) in records.iter().zip(&f.circles) {
        let mut row = vec![r.id.to_string(), r.label.name().to_string()];
        row.extend(c.iter().map(|v| v.to_string()));
        w.write_record(&row).map_err(csv_err(&cpath))?;
    }
    w.flush().map_err(io_err(&cpath))?;
    if let Some(sel) = &f.selection {
        let spath = dir.join("circles.json");
        let text = serde_json::to_string_pretty(sel).expect("plain data serializes");
        fs::write(&spath, text + "\n").map_err(io_err(&spath))?;
    }
    Ok(())
}

/// Flattened tensors paired with hotspot flags, in manifest order.
pub fn load_labeled_tensors(dir: &Path) -> Result<Vec<(bool, Vec<f64>)>, DatasetError> {
    let records = read_manifest(dir)?;
    let tpath = dir.join("tensors.bin");
    let f = File::open(&tpath).map_err(io_err(&tpath))?;
    let tensors = read_tensors(BufReader::new(f))?;
    if tensors.len() != records.len() {
        return Err(DatasetError::Format {
            path: tpath.display().to_string(),
            msg: format!("{} tensors for {} manifest rows", tensors.len(), records.len()),
        });
    }
    Ok(records.iter().zip(tensors).map(|(r, t)| (r.label == Label::Hotspot, t.values)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(a: DbUnit, b: DbUnit, c: DbUnit, d: DbUnit) -> Rect {
        Rect::new(a, b, c, d).unwrap()
    }

    #[test]
    fn gap_and_core() {
        let spec = MetalSpec {
            wire_cd: 16,
            track_pitch: 32,
            min_t2t: 12,
            max_t2t: 200,
            min_length: 44,
            max_length: 100,
            t2t_grid: 5,
            total_x: 200,
            total_y: 64,
            origin: (0, 0),
            orientation: Orientation::Horizontal,
            layer: 1,
            seed: 0,
        };
        let shapes = vec![
            Shape { layer: 1, rect: r(0, 0, 88, 16) },
            Shape { layer: 1, rect: r(100, 0, 200, 16) },
            Shape { layer: 1, rect: r(0, 32, 50, 48) },
            Shape { layer: 1, rect: r(150, 32, 200, 48) },
        ];
        let cell = Cell::new("T", spec.bbox(), shapes).unwrap();
        assert_eq!(narrow_gaps(&cell, &spec, 22), vec![r(88, 0, 100, 16)]);
        assert_eq!(narrow_gaps(&cell, &spec, 100).len(), 2);
        let core = core_of(&r(0, 0, 200, 200), 0.5);
        assert_eq!(core, r(50, 50, 150, 150));
    }
}
