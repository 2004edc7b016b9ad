use layoutforge::config::{FeaturesConfig, Microns, RunConfig};
use layoutforge::dataset::{
    clip_shapes, cut_clips, extract_features, load_labeled_tensors, read_clip, read_manifest, write_dataset,
    write_features,
};
use layoutforge::features::ccas::CcasConfig;
use layoutforge::features::Label;
use layoutforge::jsonl::{read_shapes, write_shapes};
use layoutforge::metal::draw_wire_cell;

const CONFIG: &str = r#"{
  "seed": 4,
  "metal": {
    "wire_cd": 0.016, "track_pitch": 0.032, "min_t2t": 0.012, "max_t2t": 0.2,
    "min_length": 0.044, "max_length": 0.1, "t2t_grid": 0.005, "total_x": 3, "total_y": 3
  },
  "features": {
    "pixel": 0.004, "clip": 0.48, "stride": 0.48, "extent": 2.88, "blocks": 12, "keep": 32, "core": 0.5,
    "ccas": { "r_max": 30, "n_c": 5, "d": 1, "bins": 8 }
  }
}"#;

fn small_config() -> RunConfig {
    RunConfig::from_json(CONFIG, None).unwrap()
}

#[test]
fn config_values_are_exact_nanometres() {
    let cfg = small_config();
    let m = cfg.require_metal().unwrap();
    assert_eq!((m.wire_cd, m.track_pitch, m.min_t2t, m.t2t_grid, m.total_x), (16, 32, 12, 5, 3000));
    assert_eq!(m.seed, 4);
    assert_eq!(RunConfig::from_json(CONFIG, Some(9)).unwrap().require_metal().unwrap().seed, 9);
    assert_eq!(cfg.features.pixel, Microns(4));
    assert!(cfg.require_via().is_err());
    assert!(RunConfig::from_json(&CONFIG.replace("0.016", "0.0165"), None).is_err());
    assert!(RunConfig::from_json(&CONFIG.replace("\"seed\": 4", "\"sed\": 4"), None).is_err());
}

#[test]
fn shipped_configs_load() {
    let root = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for k in 1..=6 {
        let m = RunConfig::load(&root.join(format!("metal/test{k}.json")), None).unwrap();
        assert_eq!(m.require_metal().unwrap().total_x, 100_000);
        let v = RunConfig::load(&root.join(format!("via/test{k}.json")), None).unwrap();
        assert!((v.require_via().unwrap().density - k as f64 / 10.0).abs() < 1e-12);
    }
    let h = RunConfig::load(&root.join("hotspot.json"), None).unwrap();
    assert_eq!(h.train.seeds.len(), 5);
    assert_eq!(h.train.methods().unwrap().len(), 7);
}

#[test]
fn jsonl_round_trip() {
    let cell = draw_wire_cell(small_config().require_metal().unwrap()).unwrap();
    let mut buf = Vec::new();
    write_shapes(cell.shapes(), &mut buf).unwrap();
    assert_eq!(buf.iter().filter(|&&b| b == b'\n').count(), cell.shapes().len());
    assert_eq!(read_shapes(buf.as_slice()).unwrap(), cell.shapes());
    let err = read_shapes("{\"layer\":1,\"rect\":[0,0,5,5]}\n{\"layer\":1,\"rect\":[5,0,0,5]}\n".as_bytes()).unwrap_err();
    assert!(err.to_string().contains('2'), "{err}");
}

#[test]
fn clips_cover_the_extent_and_round_trip() {
    let cfg = small_config();
    let spec = cfg.require_metal().unwrap();
    let cell = draw_wire_cell(spec).unwrap();
    let clips = cut_clips(&cell, spec, &cfg.features, cfg.hotspot_gap(spec));
    assert_eq!(clips.len(), 36);
    assert!(clips.iter().any(|c| c.label == Label::Hotspot));
    assert!(clips.iter().any(|c| c.label == Label::NonHotspot));
    for (i, c) in clips.iter().enumerate() {
        assert_eq!(c.id, i);
        assert_eq!((c.window.width(), c.window.height()), (480, 480));
    }

    let dir = tempfile::tempdir().unwrap();
    write_dataset(dir.path(), &cell, &clips).unwrap();
    assert_eq!(read_manifest(dir.path()).unwrap(), clips);
    let back = read_clip(dir.path(), &clips[7]).unwrap();
    assert_eq!(back.shapes(), clip_shapes(&cell, &clips[7].window).as_slice());

    let (records, f) = extract_features(dir.path(), &cfg.features).unwrap();
    assert_eq!(records, clips);
    assert_eq!(f.tensors.len(), 36);
    assert!(f.tensors.iter().all(|t| t.values.len() == 12 * 12 * 32));
    assert_eq!(f.circles[0].len(), 30);
    let sel = f.selection.as_ref().unwrap();
    assert_eq!(sel.selected.len(), 5);
    write_features(dir.path(), &records, &f).unwrap();
    let rows = load_labeled_tensors(dir.path()).unwrap();
    assert_eq!(rows.len(), 36);
    for ((hot, x), (rec, t)) in rows.iter().zip(records.iter().zip(&f.tensors)) {
        assert_eq!(*hot, rec.label == Label::Hotspot);
        assert_eq!(x, &t.values);
    }
    // same inputs, same bytes
    let again = tempfile::tempdir().unwrap();
    write_dataset(again.path(), &cell, &clips).unwrap();
    let (r2, f2) = extract_features(again.path(), &cfg.features).unwrap();
    write_features(again.path(), &r2, &f2).unwrap();
    for name in ["manifest.csv", "tensors.bin", "ccas.csv", "circles.json"] {
        assert_eq!(std::fs::read(dir.path().join(name)).unwrap(), std::fs::read(again.path().join(name)).unwrap(), "{name}");
    }
}

#[test]
fn missing_dataset_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let err = read_manifest(dir.path()).unwrap_err().to_string();
    assert!(err.contains("manifest.csv"), "{err}");
}

#[test]
fn infeasible_circle_selection_is_rejected() {
    let cfg = FeaturesConfig { ccas: CcasConfig { r_max: 10, n_c: 6, d: 1, bins: 4 }, ..small_config().features };
    assert!(cfg.ccas.validate().is_err());
}
