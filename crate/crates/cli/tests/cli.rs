use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use gds21::{GdsElement, GdsLibrary};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_layoutforge"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

const METAL: &str = r#"{ "seed": 3, "metal": {
  "wire_cd": 0.016, "track_pitch": 0.032, "min_t2t": 0.012, "max_t2t": 0.2,
  "min_length": 0.044, "max_length": 0.1, "t2t_grid": 0.005, "total_x": 4, "total_y": 4 } }"#;

const VIA: &str = r#"{ "seed": 3, "via": {
  "via1_x": 0.07, "via1_y": 0.07, "m1_enc": 0.02, "m2_enc": 0.02,
  "min_via1_pitch_x": 0.14, "min_via1_pitch_y": 0.14, "via_fraction": 0.4, "total_x": 5, "total_y": 5,
  "m1": { "min_t2t": 0.07, "max_t2t": 0.6, "min_length": 0.14, "max_length": 1.4, "t2t_grid": 0.01 },
  "m2": { "min_t2t": 0.07, "max_t2t": 0.6, "min_length": 0.14, "max_length": 1.4, "t2t_grid": 0.01 } } }"#;

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn metal_generate_check_and_reread() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "m.json", METAL);
    let gds = dir.path().join("out/m.gds");
    let jl = dir.path().join("m.jsonl");
    let o = run(&["gen-metal", "--config", s(&cfg), "--out", s(&gds), "--jsonl", s(&jl)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).trim_end().ends_with("violations=0 clean"));

    let lib = GdsLibrary::load(&gds).expect("independent parser reads the output");
    let boundaries = lib.structs[0].elems.iter().filter(|e| matches!(e, GdsElement::GdsBoundary(_))).count();
    let lines = fs::read_to_string(&jl).unwrap().lines().count();
    assert_eq!(boundaries, lines);

    let o = run(&["drc", "--config", s(&cfg), s(&gds)]);
    assert_eq!(code(&o), 0);

    // same seed, same bytes; another seed, other bytes
    let again = dir.path().join("again.gds");
    assert_eq!(code(&run(&["gen-metal", "--config", s(&cfg), "--out", s(&again)])), 0);
    assert_eq!(fs::read(&gds).unwrap(), fs::read(&again).unwrap());
    let other = dir.path().join("other.gds");
    assert_eq!(code(&run(&["gen-metal", "--config", s(&cfg), "--seed", "4", "--out", s(&other)])), 0);
    assert_ne!(fs::read(&gds).unwrap(), fs::read(&other).unwrap());
}

#[test]
fn drc_reports_violations_against_other_rules() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "m.json", METAL);
    let gds = dir.path().join("m.gds");
    assert_eq!(code(&run(&["gen-metal", "--config", s(&cfg), "--out", s(&gds)])), 0);
    let strict = write_config(dir.path(), "strict.json", &METAL.replace("\"min_t2t\": 0.012", "\"min_t2t\": 0.05"));
    let o = run(&["drc", "--config", s(&strict), s(&gds)]);
    assert_eq!(code(&o), 1);
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("T2TBelowMin"), "{text}");
    assert!(text.trim_end().ends_with("dirty"));
}

#[test]
fn via_generation_prints_stats() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "v.json", VIA);
    let gds = dir.path().join("v.gds");
    let o = run(&["gen-via", "--config", s(&cfg), "--out", s(&gds)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.lines().any(|l| l.starts_with("# candidates=")), "{text}");
    assert_eq!(code(&run(&["drc", "--config", s(&cfg), s(&gds)])), 0);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(&["gen-metal"])), 2);
    assert_eq!(code(&run(&["no-such-command"])), 2);
    let bad = write_config(dir.path(), "bad.json", &METAL.replace("0.016", "-0.016"));
    assert_eq!(code(&run(&["gen-metal", "--config", s(&bad)])), 2);
    let missing = dir.path().join("missing.json");
    assert_eq!(code(&run(&["gen-metal", "--config", s(&missing)])), 3);
    let cfg = write_config(dir.path(), "m.json", METAL);
    let junk = dir.path().join("junk.gds");
    fs::write(&junk, b"not a gds file").unwrap();
    assert_eq!(code(&run(&["drc", "--config", s(&cfg), s(&junk)])), 3);
}

#[test]
fn hotspot_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "h.json",
        r#"{ "seed": 2, "metal": {
  "wire_cd": 0.016, "track_pitch": 0.032, "min_t2t": 0.012, "max_t2t": 0.2,
  "min_length": 0.044, "max_length": 0.1, "t2t_grid": 0.005, "total_x": 6, "total_y": 6 },
  "features": { "extent": 5.76, "core": 0.5, "ccas": { "r_max": 30, "n_c": 4, "d": 1, "bins": 8 } },
  "train": { "losses": ["psl", "bbl"], "iterations": 200, "seeds": [1, 2] } }"#,
    );
    let data = dir.path().join("data");
    let o = run(&["clips", "--config", s(&cfg), "--out", s(&data)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("clips=144"));
    let o = run(&["features", "--config", s(&cfg), "--out", s(&data)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["tensors.bin", "ccas.csv", "circles.json", "manifest.csv"] {
        assert!(data.join(f).exists(), "{f}");
    }
    let models = dir.path().join("models");
    let o = run(&["train", "--config", s(&cfg), "--data", s(&data), "--out", s(&models)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(models.join("model_psl.json").exists() && models.join("train_log_bbl.csv").exists());
    let table = dir.path().join("eval.csv");
    let o = run(&["eval", "--config", s(&cfg), "--data", s(&data), "--out", s(&table)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&table).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "ID,psl_acc,psl_fa,bbl_acc,bbl_fa");
    assert_eq!(lines.len(), 5);
    assert!(lines[3].starts_with("Ave,") && lines[4].starts_with("Var,"));
    assert_eq!(String::from_utf8_lossy(&o.stdout), text);
}

#[test]
fn train_accepts_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "t.json", r#"{ "train": { "losses": ["phl"], "iterations": 100 } }"#);
    let mut csv = String::from("label,a,b\n");
    for i in 0..40 {
        let hot = i % 2 == 0;
        let c = if hot { 1.0 } else { -1.0 };
        csv.push_str(&format!("{},{},{}\n", u8::from(hot), c + 0.01 * i as f64, c - 0.02 * i as f64));
    }
    let data = write_config(dir.path(), "d.csv", &csv);
    let out = dir.path().join("m");
    let o = run(&["train", "--config", s(&cfg), "--data", s(&data), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let model: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("model_phl.json")).unwrap()).unwrap();
    assert_eq!(model["model"]["weights"].as_array().unwrap().len(), 2);
}
